//! Run reports as text, CSV and JSON. Reports carry no timestamps so that
//! reruns with the same inputs produce identical files.

use std::fmt::Write;

use recap_core::corruptions::{self, CorruptionKind, SEVERITIES, TABLE_VERSION};
use recap_core::metrics::{self, percent, ErrorTable, MceSummary};
use serde::Serialize;

use crate::pipeline::{Evaluation, TrainSummary};

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub model: String,
    pub samples: usize,
    pub epochs: usize,
    pub config_digest: String,
    pub dataset_digest: String,
    pub classes: Vec<ClassLine>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassLine {
    pub class: usize,
    pub updates: u64,
    pub density: f64,
    pub threshold: f32,
    pub tie_slack: f64,
}

pub fn hex(d: u64) -> String {
    format!("{d:016x}")
}

impl TrainReport {
    pub fn new(model: &str, summary: Option<&TrainSummary>, samples: usize, config_digest: u64, dataset_digest: u64) -> Self {
        let classes = summary
            .map(|s| {
                s.classes
                    .iter()
                    .map(|c| ClassLine {
                        class: c.class,
                        updates: c.updates,
                        density: c.density,
                        threshold: c.threshold,
                        tie_slack: c.stats.tie_slack(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        TrainReport {
            model: model.into(),
            samples,
            epochs: summary.map_or(1, |s| s.epochs),
            config_digest: hex(config_digest),
            dataset_digest: hex(dataset_digest),
            classes,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "model      {}", self.model).unwrap();
        writeln!(out, "samples    {} x {} epoch(s)", self.samples, self.epochs).unwrap();
        writeln!(out, "config     {}", self.config_digest).unwrap();
        writeln!(out, "dataset    {}", self.dataset_digest).unwrap();
        if !self.classes.is_empty() {
            writeln!(out, "class  updates  density  threshold  tie-slack").unwrap();
            for c in &self.classes {
                writeln!(
                    out,
                    "{:>5}  {:>7}  {:>7.4}  {:>9.4}  {:>9.4}",
                    c.class, c.updates, c.density, c.threshold, c.tie_slack
                )
                .unwrap();
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub samples: usize,
    pub errors: usize,
    pub error: f64,
    pub accuracy: f64,
    pub confusion: Vec<Vec<u64>>,
}

impl From<&Evaluation> for EvalReport {
    fn from(e: &Evaluation) -> Self {
        EvalReport {
            samples: e.len(),
            errors: e.errors(),
            error: e.error_rate(),
            accuracy: e.accuracy(),
            confusion: e.confusion.clone(),
        }
    }
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "samples {}  errors {}  error {}%  accuracy {}%",
            self.samples,
            self.errors,
            percent(self.error),
            percent(self.accuracy)
        )
        .unwrap();
        writeln!(out, "confusion (rows true, columns predicted):").unwrap();
        for row in &self.confusion {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
            writeln!(out, "{}", cells.join("")).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KindLine {
    pub kind: String,
    pub ce: Option<f64>,
    pub relative_ce: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Scores {
    pub kinds: Vec<KindLine>,
    pub mce: Option<f64>,
    pub relative_mce: Option<f64>,
    pub undefined: Vec<String>,
    pub over_all_kinds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellLine {
    pub kind: String,
    pub severity: u8,
    pub error: f64,
    pub source: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorruptionReport {
    pub model: String,
    pub clean_error: f64,
    pub cells: Vec<CellLine>,
    pub missing: Vec<String>,
    pub scores: Option<Scores>,
    pub config_digest: String,
    pub dataset_digest: String,
    pub corruption_seed: u64,
    pub severity_table: String,
    pub severities: Vec<(String, Vec<String>)>,
    pub note: String,
}

const NOTE: &str = "Natively synthesized corruptions use this tool's own severity table \
and random streams. CE and relative mCE are comparable with published figures only \
when evaluated on the original corrupted images against the original reference table.";

impl CorruptionReport {
    /// `sources` says where each cell's batch came from ("native" or "external").
    pub fn new(
        model: &str,
        table: &ErrorTable,
        sources: &dyn Fn(CorruptionKind, u8) -> &'static str,
        reference: Option<&ErrorTable>,
        config_digest: u64,
        dataset_digest: u64,
        corruption_seed: u64,
    ) -> recap_core::Result<Self> {
        let cells = table
            .iter()
            .map(|(k, s, e)| CellLine {
                kind: k.name().into(),
                severity: s,
                error: e,
                source: sources(k, s).into(),
            })
            .collect();
        let mut missing = Vec::new();
        for k in CorruptionKind::ALL {
            for s in SEVERITIES {
                if table.get(k, s).is_none() {
                    missing.push(format!("{k}_{s}"));
                }
            }
        }
        let scores = match reference {
            Some(r) => {
                let kinds: Vec<CorruptionKind> = table
                    .complete_kinds()
                    .into_iter()
                    .filter(|&k| r.has_kind(k))
                    .collect();
                let summary = metrics::summarize(table, r, &kinds)?;
                Some(scores_from(&summary, kinds.len() == CorruptionKind::ALL.len()))
            }
            None => None,
        };
        let severities = CorruptionKind::NATIVE
            .iter()
            .map(|&k| {
                let d = SEVERITIES
                    .iter()
                    .map(|&s| corruptions::describe(k, s).unwrap_or_default())
                    .collect();
                (k.name().to_string(), d)
            })
            .collect();
        Ok(CorruptionReport {
            model: model.into(),
            clean_error: table.clean().unwrap_or(f64::NAN),
            cells,
            missing,
            scores,
            config_digest: hex(config_digest),
            dataset_digest: hex(dataset_digest),
            corruption_seed,
            severity_table: TABLE_VERSION.into(),
            severities,
            note: NOTE.into(),
        })
    }

    /// The raw error table, loadable as a reference table.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# model {} config {} dataset {}", self.model, self.config_digest, self.dataset_digest).unwrap();
        writeln!(out, "# severity table {} corruption seed {}", self.severity_table, self.corruption_seed).unwrap();
        writeln!(out, "clean,,{}", self.clean_error).unwrap();
        for c in &self.cells {
            writeln!(out, "{},{},{}", c.kind, c.severity, c.error).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "clean error {}%", percent(self.clean_error)).unwrap();
        let mut kinds: Vec<&str> = self.cells.iter().map(|c| c.kind.as_str()).collect();
        kinds.dedup();
        writeln!(out, "{:<18}{:>7}{:>7}{:>7}{:>7}{:>7}  source", "kind", "s1", "s2", "s3", "s4", "s5").unwrap();
        for k in kinds {
            let row: Vec<&CellLine> = self.cells.iter().filter(|c| c.kind == k).collect();
            write!(out, "{k:<18}").unwrap();
            for s in SEVERITIES {
                match row.iter().find(|c| c.severity == s) {
                    Some(c) => write!(out, "{:>7}", percent(c.error)).unwrap(),
                    None => write!(out, "{:>7}", "-").unwrap(),
                }
            }
            writeln!(out, "  {}", row[0].source).unwrap();
        }
        if let Some(s) = &self.scores {
            writeln!(out).unwrap();
            writeln!(out, "{:<18}{:>9}{:>9}", "kind", "CE", "RelCE").unwrap();
            let fmt = |v: Option<f64>| v.map_or("undef".to_string(), percent);
            for k in &s.kinds {
                writeln!(out, "{:<18}{:>9}{:>9}", k.kind, fmt(k.ce), fmt(k.relative_ce)).unwrap();
            }
            let scope = if s.over_all_kinds { "all kinds" } else { "partial: kinds present in both tables" };
            writeln!(out, "mCE {}  relative mCE {}  ({scope})", fmt(s.mce), fmt(s.relative_mce)).unwrap();
            if !s.undefined.is_empty() {
                writeln!(out, "relative CE undefined for: {}", s.undefined.join(", ")).unwrap();
            }
        }
        if !self.missing.is_empty() {
            writeln!(out, "missing batches: {}", self.missing.len()).unwrap();
        }
        writeln!(out, "severity table {}, corruption seed {}", self.severity_table, self.corruption_seed).unwrap();
        writeln!(out, "{}", self.note).unwrap();
        out
    }
}

fn scores_from(summary: &MceSummary, over_all_kinds: bool) -> Scores {
    Scores {
        kinds: summary
            .per_kind
            .iter()
            .map(|k| KindLine {
                kind: k.kind.name().into(),
                ce: k.ce,
                relative_ce: k.relative_ce,
            })
            .collect(),
        mce: summary.mce,
        relative_mce: summary.relative_mce,
        undefined: summary.undefined.iter().map(|k| k.name().to_string()).collect(),
        over_all_kinds,
    }
}
