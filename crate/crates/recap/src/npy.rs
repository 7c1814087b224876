//! Minimal NPY support: C-order integer arrays, written as version 1.0 `u1`.
//!
//! Image batches are `(n, 28, 28)` unsigned bytes (a trailing unit channel
//! axis is accepted on read). Labels live in a companion `(n,)` array.

use std::fs;
use std::path::{Path, PathBuf};

use recap_core::corruptions::{ImageBatch, Provenance};

use crate::error::{data, Error, Result};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    /// Element values widened to `i64`.
    pub values: Vec<i64>,
}

fn header_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let pat = format!("'{key}':");
    let start = header
        .find(&pat)
        .ok_or_else(|| data(format!("npy header lacks '{key}'")))?
        + pat.len();
    Ok(header[start..].trim_start())
}

fn parse_shape(header: &str) -> Result<Vec<usize>> {
    let rest = header_value(header, "shape")?;
    let open = rest.strip_prefix('(').ok_or_else(|| data("malformed npy shape"))?;
    let close = open.find(')').ok_or_else(|| data("malformed npy shape"))?;
    open[..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| data(format!("bad npy dimension '{s}'"))))
        .collect()
}

fn parse_descr(header: &str) -> Result<(bool, char, usize)> {
    let rest = header_value(header, "descr")?;
    let quote = rest.chars().next().ok_or_else(|| data("malformed npy descr"))?;
    let body = &rest[1..];
    let end = body.find(quote).ok_or_else(|| data("malformed npy descr"))?;
    let descr = &body[..end];
    let (big, t) = match descr.as_bytes().first() {
        Some(b'<') | Some(b'|') | Some(b'=') => (false, &descr[1..]),
        Some(b'>') => (true, &descr[1..]),
        _ => (false, descr),
    };
    let kind = t.chars().next().ok_or_else(|| data("empty npy descr"))?;
    let size: usize = t[1..].parse().map_err(|_| data(format!("unsupported npy dtype '{descr}'")))?;
    if !matches!(kind, 'u' | 'i') || !matches!(size, 1 | 2 | 4 | 8) {
        return Err(data(format!("unsupported npy dtype '{descr}'")));
    }
    Ok((big, kind, size))
}

pub fn parse(bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(data("not an npy file"));
    }
    let (header_len, offset) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 if bytes.len() >= 12 => (u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize, 12),
        v => return Err(data(format!("unsupported npy version {v}"))),
    };
    let header = bytes
        .get(offset..offset + header_len)
        .ok_or_else(|| data("truncated npy header"))?;
    let header = std::str::from_utf8(header).map_err(|_| data("npy header is not text"))?;
    if header_value(header, "fortran_order")?.starts_with("True") {
        return Err(data("Fortran-order npy arrays are not supported"));
    }
    let shape = parse_shape(header)?;
    let (big, kind, size) = parse_descr(header)?;
    let count: usize = shape.iter().product();
    let payload = &bytes[offset + header_len..];
    if payload.len() != count * size {
        return Err(data(format!(
            "npy payload holds {} bytes, shape {shape:?} needs {}",
            payload.len(),
            count * size
        )));
    }
    let values = payload
        .chunks_exact(size)
        .map(|c| {
            let mut buf = [0u8; 8];
            if big {
                buf[8 - size..].copy_from_slice(c);
                buf.reverse();
            } else {
                buf[..size].copy_from_slice(c);
            }
            let raw = u64::from_le_bytes(buf);
            if kind == 'i' && size < 8 {
                let shift = 64 - 8 * size as u32;
                ((raw << shift) as i64) >> shift
            } else {
                raw as i64
            }
        })
        .collect();
    Ok(NpyArray { shape, values })
}

/// Version 1.0 header for a C-order `u1` array, padded to 64 bytes.
pub fn encode_u8(shape: &[usize], values: &[u8]) -> Vec<u8> {
    let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    let shape_text = if dims.len() == 1 {
        format!("({},)", dims[0])
    } else {
        format!("({})", dims.join(", "))
    };
    let mut header = format!("{{'descr': '|u1', 'fortran_order': False, 'shape': {shape_text}, }}");
    let unpadded = MAGIC.len() + 4 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');
    let mut out = Vec::with_capacity(10 + header.len() + values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(values);
    out
}

/// `foo_images.npy` pairs with `foo_labels.npy`; any other `foo.npy` pairs
/// with `foo_labels.npy`.
pub fn labels_path(images: &Path) -> PathBuf {
    let stem = images.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let base = stem.strip_suffix("_images").unwrap_or(&stem);
    images.with_file_name(format!("{base}_labels.npy"))
}

pub fn read_file(path: &Path) -> Result<NpyArray> {
    parse(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Decodes an image array into a batch with the given labels.
pub fn images_from_array(arr: &NpyArray, labels: Vec<u8>, provenance: Provenance) -> Result<ImageBatch> {
    let (n, h, w) = match arr.shape[..] {
        [n, h, w] | [n, h, w, 1] => (n, h, w),
        _ => return Err(data(format!("image array has shape {:?}, expected (n, h, w)", arr.shape))),
    };
    if (h, w) != (28, 28) {
        return Err(data(format!("images are {h}x{w}, expected 28x28")));
    }
    if labels.len() != n {
        return Err(data(format!("{} labels for {n} images", labels.len())));
    }
    let mut bytes = Vec::with_capacity(arr.values.len());
    for &v in &arr.values {
        bytes.push(u8::try_from(v).map_err(|_| data(format!("pixel value {v} outside 0..=255")))?);
    }
    Ok(ImageBatch::from_bytes(h, w, &bytes, labels, provenance)?)
}

pub fn labels_from_array(arr: &NpyArray) -> Result<Vec<u8>> {
    if arr.shape.len() != 1 {
        return Err(data(format!("label array has shape {:?}, expected (n,)", arr.shape)));
    }
    arr.values
        .iter()
        .map(|&v| u8::try_from(v).map_err(|_| data(format!("label {v} outside 0..=255"))))
        .collect()
}

/// Loads an image batch and its companion label file.
pub fn load_batch(path: &Path, provenance: Provenance) -> Result<ImageBatch> {
    let labels = labels_from_array(&read_file(&labels_path(path))?)?;
    images_from_array(&read_file(path)?, labels, provenance)
}

/// Writes `batch` to `path` and its labels to the companion file.
pub fn save_batch(path: &Path, batch: &ImageBatch) -> Result<()> {
    let images = encode_u8(&[batch.len(), batch.height(), batch.width()], &batch.to_bytes());
    fs::write(path, images).map_err(|e| Error::io(path, e))?;
    let lp = labels_path(path);
    fs::write(&lp, encode_u8(&[batch.len()], batch.labels())).map_err(|e| Error::io(&lp, e))
}
