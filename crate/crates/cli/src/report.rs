//! Report bundles: the JSON report, CSV tables and their atomic write-out.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::spec::{Stage, SCHEMA_VERSION};
use crate::{exit, InputError};

pub const SCHEMA: &str = "entropy-engine/report";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Violations,
    /// The stage could not be evaluated on these inputs.
    Error,
    /// Not run because an earlier stage failed.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub status: StageStatus,
    pub violations: usize,
    /// Seed of the stage's randomized probes, if it has any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub result: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub schema_version: u32,
    pub seed: u64,
    pub stages: Vec<StageReport>,
    /// Total over all stages.
    pub violations: usize,
    pub errors: usize,
    /// CSV files written next to the report.
    pub tables: Vec<String>,
}

impl Report {
    pub fn new(seed: u64) -> Self {
        Self {
            schema: SCHEMA,
            schema_version: SCHEMA_VERSION,
            seed,
            stages: Vec::new(),
            violations: 0,
            errors: 0,
            tables: Vec::new(),
        }
    }
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for r in &self.rows {
            w.write_record(r).expect("writing to memory");
        }
        w.into_inner().expect("writing to memory")
    }
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub report: Report,
    /// File name → table.
    pub tables: BTreeMap<String, CsvTable>,
}

impl Bundle {
    pub fn new(seed: u64) -> Self {
        Self {
            report: Report::new(seed),
            tables: BTreeMap::new(),
        }
    }

    /// 0 without violations or stage errors, 1 with violations only, 2 if any
    /// stage could not be evaluated.
    pub fn exit_code(&self) -> i32 {
        if self.report.errors > 0 {
            exit::INPUT_ERROR
        } else if self.report.violations > 0 {
            exit::VIOLATIONS
        } else {
            exit::OK
        }
    }

    pub fn report_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.report).expect("reports always serialize");
        text.push('\n');
        text
    }
}

fn io_err(e: impl std::fmt::Display) -> InputError {
    InputError::Output(e.to_string())
}

/// Writes the bundle into `dir`: files go to a fresh sibling directory that
/// is then renamed into place, so readers see either the old or the new
/// bundle, never a partial one.
pub fn emit_report(bundle: &Bundle, dir: &Path) -> Result<(), InputError> {
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::env::current_dir().map_err(io_err)?,
    };
    fs::create_dir_all(&parent).map_err(|e| io_err(format!("{}: {e}", parent.display())))?;
    let staging = tempfile::Builder::new()
        .prefix(".entropy-engine-")
        .tempdir_in(&parent)
        .map_err(|e| io_err(format!("{}: {e}", parent.display())))?;
    fs::write(staging.path().join(REPORT_FILE), bundle.report_json()).map_err(io_err)?;
    for (name, table) in &bundle.tables {
        fs::write(staging.path().join(name), table.to_bytes()).map_err(io_err)?;
    }
    let staged = staging.keep();
    let result = swap_into_place(&staged, dir, &parent);
    if result.is_err() {
        let _ = fs::remove_dir_all(&staged);
    }
    result
}

fn swap_into_place(staged: &Path, dir: &Path, parent: &Path) -> Result<(), InputError> {
    if !dir.exists() {
        return fs::rename(staged, dir).map_err(|e| io_err(format!("{}: {e}", dir.display())));
    }
    if !dir.is_dir() {
        return Err(io_err(format!("{} exists and is not a directory", dir.display())));
    }
    let old = tempfile::Builder::new()
        .prefix(".entropy-engine-old-")
        .tempdir_in(parent)
        .map_err(io_err)?
        .keep();
    fs::remove_dir(&old).map_err(io_err)?;
    fs::rename(dir, &old).map_err(|e| io_err(format!("{}: {e}", dir.display())))?;
    if let Err(e) = fs::rename(staged, dir) {
        let _ = fs::rename(&old, dir);
        return Err(io_err(format!("{}: {e}", dir.display())));
    }
    fs::remove_dir_all(&old).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_bundle_is_valid_json_with_schema() {
        let b = Bundle::new(0);
        let v: serde_json::Value = serde_json::from_str(&b.report_json()).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["stages"], serde_json::json!([]));
        assert_eq!(b.exit_code(), exit::OK);
    }

    #[test]
    fn csv_quotes_fields_and_keeps_header() {
        let mut t = CsvTable::new(&["space", "state", "S", "resolution"]);
        t.push(vec!["G".into(), "a,b".into(), "0.5".into(), "0.0078125".into()]);
        let text = String::from_utf8(t.to_bytes()).unwrap();
        assert_eq!(text, "space,state,S,resolution\nG,\"a,b\",0.5,0.0078125\n");
    }

    #[test]
    fn rewriting_replaces_the_previous_bundle() {
        let root = tempfile::tempdir().unwrap();
        let out = root.path().join("out");
        let mut b = Bundle::new(1);
        b.tables.insert("old.csv".into(), CsvTable::new(&["x"]));
        emit_report(&b, &out).unwrap();
        assert!(out.join("old.csv").exists());
        let b2 = Bundle::new(2);
        emit_report(&b2, &out).unwrap();
        assert!(!out.join("old.csv").exists());
        assert!(out.join(REPORT_FILE).exists());
        let leftovers: Vec<_> = fs::read_dir(root.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn unwritable_destination_is_an_output_error() {
        let root = tempfile::tempdir().unwrap();
        let file = root.path().join("plain");
        fs::write(&file, "x").unwrap();
        let err = emit_report(&Bundle::new(0), &file).unwrap_err();
        assert!(matches!(err, InputError::Output(_)));
    }
}
