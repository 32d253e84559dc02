//! Run artifacts: one CSV table, one JSON report and the manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{LabError, LabResult};

pub const TOOL: &str = "dyadlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> LabResult<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| LabError::io(path, e))
    }
}

/// Shortest round-trip decimal form; `inf`/`nan` spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON has no infinities; they become `null`.
pub fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// What a subcommand produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub summary: String,
    pub table: Table,
    pub data: Value,
    pub checks: Vec<Check>,
    /// Set when the input fails a hypothesis; artifacts are still written
    /// and the run exits with code 2.
    pub hypothesis: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<'a> {
    pub subcommand: &'a str,
    pub seed: u64,
    pub summary: &'a str,
    pub data: &'a Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
    pub exit_code: i32,
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> LabResult<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| LabError::io(&path, e))?;
        Ok(path)
    }
}

/// Write `<sub>.csv` and `<sub>.json`; returns their paths.
pub fn write_artifacts(
    dir: &Path,
    subcommand: &str,
    seed: u64,
    outcome: &Outcome,
) -> LabResult<Vec<PathBuf>> {
    let csv_path = dir.join(format!("{subcommand}.csv"));
    outcome.table.write(&csv_path)?;
    let json_path = dir.join(format!("{subcommand}.json"));
    let report = Report {
        subcommand,
        seed,
        summary: &outcome.summary,
        data: &outcome.data,
    };
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(&json_path, text + "\n").map_err(|e| LabError::io(&json_path, e))?;
    Ok(vec![csv_path, json_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [1.0, 0.1, -2.5e-300, 1.0 / 3.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(json_num(f64::NAN), Value::Null);
    }
}
