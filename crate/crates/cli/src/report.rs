//! Output directory layout:
//!
//! * `report.json`   full report (schema below), pretty-printed
//! * `summary.json`  pass/fail of each check
//! * `<table>.csv`   one file per time series or sweep
//! * `fields/`       optional field snapshots, CSV or raw `f64`
//!
//! Only structs and ordered containers are serialized, and no timing or
//! host information is recorded, so a rerun with the same seed reproduces
//! every byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use rslab_core::Field;

use crate::config::{FieldFormat, Scenario};

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub detail: String,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(name: &str, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            value: Some(value),
            limit: Some(limit),
            detail: detail.into(),
        }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value: None,
            limit: None,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

/// Shortest round-trip decimal form; `NaN` and infinities as text.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub generator: String,
    pub name: String,
    pub experiment: String,
    pub passed: bool,
    pub scenario: Scenario,
    pub checks: Vec<Check>,
    pub results: Value,
    pub tables: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckStatus {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub experiment: String,
    pub passed: bool,
    pub checks: Vec<CheckStatus>,
}

impl Report {
    pub fn new(scenario: &Scenario, checks: Vec<Check>, results: Value, tables: &[Table]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            generator: format!("rslab {}", env!("CARGO_PKG_VERSION")),
            name: scenario.name.clone(),
            experiment: scenario.experiment.tag().into(),
            passed: checks.iter().all(|c| c.passed),
            scenario: scenario.clone(),
            checks,
            results,
            tables: tables.iter().map(Table::file_name).collect(),
        }
    }

    pub fn summary(&self) -> Summary {
        Summary {
            schema_version: self.schema_version,
            name: self.name.clone(),
            experiment: self.experiment.clone(),
            passed: self.passed,
            checks: self
                .checks
                .iter()
                .map(|c| CheckStatus {
                    name: c.name.clone(),
                    passed: c.passed,
                })
                .collect(),
        }
    }
}

#[derive(Debug)]
pub struct IoError {
    pub path: PathBuf,
    pub message: String,
}

impl std::fmt::Display for IoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.message)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> IoError {
    IoError {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_csv(path: &Path, table: &Table) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(&table.header).map_err(|e| io_err(path, e))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_field(dir: &Path, name: &str, field: &Field, format: FieldFormat) -> Result<(), IoError> {
    let grid = field.grid();
    match format {
        FieldFormat::None => Ok(()),
        FieldFormat::Csv => {
            let mut t = if grid.dim() == 1 {
                Table::new(name, &["x", "value"])
            } else {
                Table::new(name, &["x", "y", "value"])
            };
            for (i, &v) in field.values().iter().enumerate() {
                let [x, y] = grid.point(i);
                let mut row = vec![num(x)];
                if grid.dim() == 2 {
                    row.push(num(y));
                }
                row.push(num(v));
                t.push(row);
            }
            write_csv(&dir.join(t.file_name()), &t)
        }
        FieldFormat::Binary => {
            let path = dir.join(format!("{name}.bin"));
            let bytes: Vec<u8> = field.values().iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(&path, bytes).map_err(|e| io_err(&path, e))
        }
    }
}

pub fn emit(
    dir: &Path,
    report: &Report,
    tables: &[Table],
    fields: &[(String, Field)],
    format: FieldFormat,
) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for t in tables {
        write_csv(&dir.join(t.file_name()), t)?;
    }
    if format != FieldFormat::None && !fields.is_empty() {
        let sub = dir.join("fields");
        fs::create_dir_all(&sub).map_err(|e| io_err(&sub, e))?;
        for (name, f) in fields {
            write_field(&sub, name, f, format)?;
        }
    }
    write_json(&dir.join(REPORT_FILE), report)?;
    write_json(&dir.join(SUMMARY_FILE), &report.summary())
}

pub fn load(dir: &Path) -> Result<Report, IoError> {
    let path = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let report: Report = serde_json::from_str(&text).map_err(|e| io_err(&path, e))?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(io_err(
            &path,
            format!("schema version {} (expected {SCHEMA_VERSION})", report.schema_version),
        ));
    }
    Ok(report)
}

/// Plain-text rendering for `rslab report`.
pub fn render(report: &Report) -> String {
    let mut out = format!(
        "{} [{}] schema v{}: {}\n",
        report.name,
        report.experiment,
        report.schema_version,
        if report.passed { "PASS" } else { "FAIL" }
    );
    for c in &report.checks {
        let bound = match (c.value, c.limit) {
            (Some(v), Some(l)) => format!(" ({v:.3e} vs {l:.3e})"),
            (Some(v), None) => format!(" ({v:.3e})"),
            _ => String::new(),
        };
        out.push_str(&format!(
            "  {} {}{}: {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            bound,
            c.detail
        ));
    }
    for t in &report.tables {
        out.push_str(&format!("  table {t}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_through_text() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1");
    }
}
