//! Error tables as text: one `kind,severity,error` record per line plus a
//! `clean,,error` line. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write;
use std::fs;
use std::path::Path;

use recap_core::corruptions::CorruptionKind;
use recap_core::metrics::ErrorTable;

use crate::error::{data, Error, Result};

pub fn format_table(table: &ErrorTable) -> String {
    let mut out = String::new();
    if let Some(c) = table.clean() {
        writeln!(out, "clean,,{c}").unwrap();
    }
    for (k, s, e) in table.iter() {
        writeln!(out, "{k},{s},{e}").unwrap();
    }
    out
}

pub fn parse_table(text: &str, name: &str) -> Result<ErrorTable> {
    let mut table = ErrorTable::new(name);
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| data(format!("line {}: {what}: '{line}'", no + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [kind, severity, error] = fields[..] else {
            return Err(bad("expected three fields"));
        };
        let error: f64 = error.parse().map_err(|_| bad("bad error value"))?;
        if kind == "clean" {
            if !severity.is_empty() {
                return Err(bad("clean record takes no severity"));
            }
            table.set_clean(error).map_err(|_| bad("error outside [0, 1]"))?;
            continue;
        }
        let kind = CorruptionKind::from_name(kind).ok_or_else(|| bad("unknown corruption kind"))?;
        let severity: u8 = severity.parse().map_err(|_| bad("bad severity"))?;
        table
            .insert(kind, severity, error)
            .map_err(|_| bad("severity must be 1..=5 and error in [0, 1]"))?;
    }
    Ok(table)
}

pub fn load_table(path: &Path) -> Result<ErrorTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_table(&text, &name)
}
