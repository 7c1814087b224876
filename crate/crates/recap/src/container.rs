//! Model files.
//!
//! Little-endian layout:
//!
//! ```text
//! "RCAP" | version u16 | kind u8 | flags u8
//! generator id (u16 length + bytes)
//! reservoir spec: n_units u32, input_dim u32, radius f64, leak f64,
//!                 sparsity f64, steps u32, washout u32, seed u64
//! levels u16
//! kind 1 (prototypes): potentiation f64, decay f64, classes u32, p f64,
//!     per class: threshold f32, packed rows (n * ceil(n/64) u64)
//!     if flags & 1, per class: update count u64, n*n f32 states
//! kind 2 (ridge): regularization f64, bias u8, classes u32,
//!     weights (classes * (n + bias) f64)
//! config digest u64 | dataset digest u64 | build time u64
//! checksum u64 (first 8 bytes of SHA-256 over everything above)
//! ```
//!
//! Reservoir weights are not stored: they are rebuilt from the spec and seed,
//! which is why the generator id must match on load.

use std::fs;
use std::path::Path;

use recap_core::encoding::{BitMatrix, QuantizerSpec};
use recap_core::prototype::{HebbSpec, PrototypeState, PrototypeTemplate, RecapModel};
use recap_core::reservoir::{build_reservoir, ReservoirSpec, ReservoirWeights};
use recap_core::ridge::{RidgeModel, RidgeReadout, RidgeSpec};
use recap_core::rng::GENERATOR_ID;

use crate::dataset::digest64;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RCAP";
pub const FORMAT_VERSION: u16 = 1;
const KIND_RECAP: u8 = 1;
const KIND_RIDGE: u8 = 2;
const FLAG_STATES: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Recap(RecapModel),
    Ridge(RidgeModel),
}

impl Model {
    pub fn reservoir(&self) -> &ReservoirWeights {
        match self {
            Model::Recap(m) => m.reservoir(),
            Model::Ridge(m) => m.reservoir(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Recap(_) => "recap",
            Model::Ridge(_) => "ridge",
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            Model::Recap(m) => m.hebb().classes,
            Model::Ridge(m) => m.readout().classes(),
        }
    }

    /// Predicted class and the per-class scores as reals.
    pub fn predict(&self, input: &[f32]) -> Result<(usize, Vec<f64>)> {
        match self {
            Model::Recap(m) => {
                let p = m.predict(input)?;
                Ok((p.class, p.scores.iter().map(|&s| s as f64).collect()))
            }
            Model::Ridge(m) => {
                let out = m.outputs(input)?;
                let class = recap_core::prototype::argmax_first(&out).ok_or(recap_core::Error::Empty)?;
                Ok((class, out))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub config_digest: u64,
    pub dataset_digest: u64,
    /// Seconds since the epoch; 0 unless a caller sets it, so that repeated
    /// builds are byte-identical.
    pub build_time: u64,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let out = self
            .bytes
            .get(self.at..self.at + n)
            .ok_or_else(|| Error::Format("truncated".into()))?;
        self.at += n;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn write_spec(w: &mut Writer, s: &ReservoirSpec) {
    w.u32(s.n_units);
    w.u32(s.input_dim);
    w.f64(s.spectral_radius);
    w.f64(s.leak_rate);
    w.f64(s.sparsity);
    w.u32(s.steps);
    w.u32(s.washout);
    w.u64(s.seed);
}

fn read_spec(r: &mut Reader) -> Result<ReservoirSpec> {
    Ok(ReservoirSpec {
        n_units: r.u32()?,
        input_dim: r.u32()?,
        spectral_radius: r.f64()?,
        leak_rate: r.f64()?,
        sparsity: r.f64()?,
        steps: r.u32()?,
        washout: r.u32()?,
        seed: r.u64()?,
    })
}

pub fn encode(file: &ModelFile) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u16(FORMAT_VERSION);
    let (kind, flags) = match &file.model {
        Model::Recap(m) => (KIND_RECAP, if m.states().is_some() { FLAG_STATES } else { 0 }),
        Model::Ridge(_) => (KIND_RIDGE, 0),
    };
    w.u8(kind);
    w.u8(flags);
    w.u16(GENERATOR_ID.len() as u16);
    w.0.extend_from_slice(GENERATOR_ID.as_bytes());
    write_spec(&mut w, file.model.reservoir().spec());
    match &file.model {
        Model::Recap(m) => {
            w.u16(m.quantizer().levels() as u16);
            let h = m.hebb();
            w.f64(h.potentiation);
            w.f64(h.decay);
            w.u32(h.classes);
            w.f64(h.sparsity_fraction);
            for t in m.templates() {
                w.f32(t.threshold());
                for &word in t.matrix().words() {
                    w.u64(word);
                }
            }
            if let Some(states) = m.states() {
                for s in states {
                    w.u64(s.update_count());
                    for &v in s.values() {
                        w.f32(v);
                    }
                }
            }
        }
        Model::Ridge(m) => {
            w.u16(0);
            w.f64(m.spec().regularization);
            w.u8(m.spec().include_bias as u8);
            w.u32(m.readout().classes());
            for &v in m.readout().weights() {
                w.f64(v);
            }
        }
    }
    w.u64(file.config_digest);
    w.u64(file.dataset_digest);
    w.u64(file.build_time);
    let sum = digest64(&w.0);
    w.u64(sum);
    w.0
}

/// Parses and validates a model file, rebuilding the reservoir from its seed.
pub fn decode(bytes: &[u8]) -> Result<ModelFile> {
    if bytes.len() < 4 + 2 + 8 || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a model file".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    if digest64(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
        return Err(Error::Format("checksum mismatch".into()));
    }
    let mut r = Reader { bytes: body, at: 4 };
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let kind = r.u8()?;
    let flags = r.u8()?;
    let id_len = r.u16()? as usize;
    let id = r.take(id_len)?;
    if id != GENERATOR_ID.as_bytes() {
        return Err(Error::Format(format!(
            "model built with generator '{}', this build uses '{GENERATOR_ID}'",
            String::from_utf8_lossy(id)
        )));
    }
    let spec = read_spec(&mut r)?;
    let reservoir = build_reservoir(&spec)?;
    let n = spec.n_units;
    let levels = r.u16()? as usize;
    let model = match kind {
        KIND_RECAP => {
            let quantizer = QuantizerSpec::new(levels)?;
            let hebb = HebbSpec {
                potentiation: r.f64()?,
                decay: r.f64()?,
                classes: r.u32()?,
                sparsity_fraction: r.f64()?,
            };
            hebb.validate()?;
            let words = n * n.div_ceil(64);
            let mut templates = Vec::with_capacity(hebb.classes);
            for c in 0..hebb.classes {
                let threshold = r.f32()?;
                let bits = (0..words).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
                templates.push(PrototypeTemplate::from_parts(c, BitMatrix::from_words(n, bits)?, threshold)?);
            }
            let mut model = RecapModel::new(reservoir, quantizer, hebb, templates)?;
            if flags & FLAG_STATES != 0 {
                let mut states = Vec::with_capacity(hebb.classes);
                for c in 0..hebb.classes {
                    let count = r.u64()?;
                    let values = (0..n * n).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
                    states.push(PrototypeState::from_values(c, n, values, count)?);
                }
                model = model.with_states(Some(states))?;
            }
            Model::Recap(model)
        }
        KIND_RIDGE => {
            let spec = RidgeSpec {
                regularization: r.f64()?,
                include_bias: r.u8()? != 0,
            };
            let classes = r.u32()?;
            let d = n + spec.include_bias as usize;
            let weights = (0..classes * d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let readout = RidgeReadout::from_parts(n, classes, spec.include_bias, weights)?;
            Model::Ridge(RidgeModel::new(reservoir, spec, readout)?)
        }
        other => return Err(Error::Format(format!("unknown model kind {other}"))),
    };
    let file = ModelFile {
        model,
        config_digest: r.u64()?,
        dataset_digest: r.u64()?,
        build_time: r.u64()?,
    };
    if r.at != body.len() {
        return Err(Error::Format("trailing bytes before checksum".into()));
    }
    Ok(file)
}

/// Checksum stored in the last 8 bytes.
pub fn checksum(bytes: &[u8]) -> Option<u64> {
    bytes.len().checked_sub(8).map(|at| u64::from_le_bytes(bytes[at..].try_into().unwrap()))
}

pub fn save(path: &Path, file: &ModelFile) -> Result<Vec<u8>> {
    let bytes = encode(file);
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

pub fn load(path: &Path) -> Result<ModelFile> {
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
