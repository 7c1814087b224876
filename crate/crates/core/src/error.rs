use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(&'static str),
    #[error("label {label} does not match prototype class {expected}")]
    LabelMismatch { expected: usize, label: usize },
    #[error("class {label} is outside 0..{classes}")]
    UnknownClass { label: usize, classes: usize },
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
    #[error("corruption `{0}` is only available from externally generated files")]
    ExternalOnly(&'static str),
    #[error("severity {0} is outside 1..=5")]
    InvalidSeverity(u8),
    #[error("reference denominator is zero for `{0}`")]
    ZeroDenominator(&'static str),
    #[error("error table is missing `{0}`")]
    MissingEntry(&'static str),
    #[error("empty input")]
    Empty,
}

pub(crate) fn ensure(cond: bool, name: &'static str, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason })
    }
}
