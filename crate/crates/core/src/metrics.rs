//! Corruption error tables and the CE / relative CE / relative mCE scores.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corruptions::{CorruptionKind, SEVERITIES};
use crate::error::{Error, Result};

/// Error rates (fractions) of one model on the clean set and on each
/// `(kind, severity)` cell. Partial tables are allowed; scores check what
/// they need.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorTable {
    pub name: String,
    clean: Option<f64>,
    errors: BTreeMap<(CorruptionKind, u8), f64>,
}

fn check_rate(e: f64) -> Result<()> {
    if (0.0..=1.0).contains(&e) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "error",
            reason: "must lie in [0, 1]",
        })
    }
}

impl ErrorTable {
    pub fn new(name: impl Into<String>) -> Self {
        ErrorTable {
            name: name.into(),
            clean: None,
            errors: BTreeMap::new(),
        }
    }

    pub fn set_clean(&mut self, error: f64) -> Result<()> {
        check_rate(error)?;
        self.clean = Some(error);
        Ok(())
    }

    pub fn insert(&mut self, kind: CorruptionKind, severity: u8, error: f64) -> Result<()> {
        if !SEVERITIES.contains(&severity) {
            return Err(Error::InvalidSeverity(severity));
        }
        check_rate(error)?;
        self.errors.insert((kind, severity), error);
        Ok(())
    }

    pub fn clean(&self) -> Option<f64> {
        self.clean
    }

    pub fn get(&self, kind: CorruptionKind, severity: u8) -> Option<f64> {
        self.errors.get(&(kind, severity)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (CorruptionKind, u8, f64)> + '_ {
        self.errors.iter().map(|(&(k, s), &e)| (k, s, e))
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    /// Kinds with all five severities present.
    pub fn complete_kinds(&self) -> Vec<CorruptionKind> {
        CorruptionKind::ALL
            .into_iter()
            .filter(|&k| self.has_kind(k))
            .collect()
    }

    pub fn has_kind(&self, kind: CorruptionKind) -> bool {
        SEVERITIES.iter().all(|&s| self.errors.contains_key(&(kind, s)))
    }

    /// All 15 kinds at all severities, plus the clean error.
    pub fn is_complete(&self) -> bool {
        self.clean.is_some() && CorruptionKind::ALL.iter().all(|&k| self.has_kind(k))
    }

    fn severities(&self, kind: CorruptionKind) -> Result<[f64; 5]> {
        let mut out = [0.0; 5];
        for (o, s) in out.iter_mut().zip(SEVERITIES) {
            *o = self.get(kind, s).ok_or(Error::MissingEntry(kind.name()))?;
        }
        Ok(out)
    }
}

/// `Σ_s E_{c,s} / Σ_s E^ref_{c,s}`.
pub fn corruption_error(table: &ErrorTable, reference: &ErrorTable, kind: CorruptionKind) -> Result<f64> {
    let num: f64 = table.severities(kind)?.iter().sum();
    let den: f64 = reference.severities(kind)?.iter().sum();
    if den == 0.0 {
        return Err(Error::ZeroDenominator(kind.name()));
    }
    Ok(num / den)
}

/// `Σ_s (E_{c,s} - E_clean) / Σ_s (E^ref_{c,s} - E^ref_clean)`; negative when
/// the corrupted error falls below the clean error.
pub fn relative_ce(table: &ErrorTable, reference: &ErrorTable, kind: CorruptionKind) -> Result<f64> {
    let clean = table.clean.ok_or(Error::MissingEntry("clean"))?;
    let ref_clean = reference.clean.ok_or(Error::MissingEntry("clean"))?;
    let num: f64 = table.severities(kind)?.iter().map(|e| e - clean).sum();
    let den: f64 = reference.severities(kind)?.iter().map(|e| e - ref_clean).sum();
    if den == 0.0 {
        return Err(Error::ZeroDenominator(kind.name()));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KindScore {
    pub kind: CorruptionKind,
    /// `None` when the reference denominator is zero.
    pub ce: Option<f64>,
    pub relative_ce: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MceSummary {
    pub per_kind: Vec<KindScore>,
    /// Mean CE over kinds where it is defined, as a fraction.
    pub mce: Option<f64>,
    /// Mean relative CE over kinds where it is defined, as a fraction.
    pub relative_mce: Option<f64>,
    /// Kinds left out of the relative mean because of a zero denominator.
    pub undefined: Vec<CorruptionKind>,
}

fn defined_or_flag(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::ZeroDenominator(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Scores over the given kinds. Every listed kind must be complete in both
/// tables; kinds with a zero reference denominator are reported as undefined
/// and left out of the means.
pub fn summarize(table: &ErrorTable, reference: &ErrorTable, kinds: &[CorruptionKind]) -> Result<MceSummary> {
    let mut per_kind = Vec::with_capacity(kinds.len());
    let mut undefined = Vec::new();
    for &kind in kinds {
        let ce = defined_or_flag(corruption_error(table, reference, kind))?;
        let rel = defined_or_flag(relative_ce(table, reference, kind))?;
        if rel.is_none() {
            undefined.push(kind);
        }
        per_kind.push(KindScore {
            kind,
            ce,
            relative_ce: rel,
        });
    }
    Ok(MceSummary {
        mce: mean(per_kind.iter().filter_map(|k| k.ce)),
        relative_mce: mean(per_kind.iter().filter_map(|k| k.relative_ce)),
        per_kind,
        undefined,
    })
}

/// Mean relative CE over all 15 kinds, as a fraction (multiply by 100 for
/// percent).
pub fn relative_mce(table: &ErrorTable, reference: &ErrorTable) -> Result<f64> {
    summarize(table, reference, &CorruptionKind::ALL)?
        .relative_mce
        .ok_or(Error::ZeroDenominator("all kinds"))
}

/// Percent with one decimal.
pub fn percent(fraction: f64) -> String {
    alloc::format!("{:.1}", fraction * 100.0)
}
