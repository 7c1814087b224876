//! Directories of corrupted batches named `<kind>_<severity>.npy`, each with
//! a `<kind>_<severity>_labels.npy` companion.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use recap_core::corruptions::{CorruptionKind, ImageBatch, Provenance};

use crate::dataset::digest64;
use crate::error::{data, Error, Result};
use crate::npy;

pub type BatchMap = BTreeMap<(CorruptionKind, u8), ImageBatch>;

pub fn batch_path(dir: &Path, kind: CorruptionKind, severity: u8) -> PathBuf {
    dir.join(format!("{kind}_{severity}.npy"))
}

/// Splits `gaussian_noise_3` into its kind and severity.
pub fn parse_name(stem: &str) -> Option<(CorruptionKind, u8)> {
    let (kind, sev) = stem.rsplit_once('_')?;
    let severity: u8 = sev.parse().ok()?;
    if !(1..=5).contains(&severity) {
        return None;
    }
    Some((CorruptionKind::from_name(kind)?, severity))
}

/// Reads one external batch, checking its labels against `clean_labels`.
pub fn load_one(path: &Path, clean_labels: Option<&[u8]>) -> Result<ImageBatch> {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let (kind, severity) = parse_name(&stem).map_or((None, None), |(k, s)| (Some(k), Some(s)));
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let arr = npy::parse(&bytes)?;
    let labels = npy::labels_from_array(&npy::read_file(&npy::labels_path(path))?)?;
    let provenance = Provenance::External {
        kind,
        severity,
        digest: digest64(&bytes),
    };
    let batch = npy::images_from_array(&arr, labels, provenance)?;
    if let Some(clean) = clean_labels {
        if batch.labels() != clean {
            return Err(data(format!("{}: labels do not match the clean test set", path.display())));
        }
    }
    Ok(batch)
}

/// Every recognised batch in `dir`. Files that do not follow the naming
/// scheme are ignored.
pub fn load_external(dir: &Path, clean_labels: Option<&[u8]>) -> Result<BatchMap> {
    let mut out = BatchMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "npy"))
        .collect();
    paths.sort();
    for path in paths {
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        if stem.ends_with("_labels") {
            continue;
        }
        let Some(key) = parse_name(&stem) else {
            log::debug!("skipping {}", path.display());
            continue;
        };
        out.insert(key, load_one(&path, clean_labels)?);
    }
    Ok(out)
}
