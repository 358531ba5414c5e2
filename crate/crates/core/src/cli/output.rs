//! Result tables, their CSV/JSON rendering and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::{ExperimentConfig, Format};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Missing,
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(v.to_string()),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-5, 1e16)` so tiny tail probabilities stay readable.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<u8> for Cell {
    fn from(v: u8) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Table {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "table {}: row width", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.to_json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Everything a subcommand produced: tables (the first is primary) plus
/// bookkeeping for the manifest.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub degenerate_counts: BTreeMap<String, u64>,
    pub notes: Vec<String>,
}

/// `results.csv` + `clt` -> `results.clt.csv`.
pub fn secondary_path(out: &Path, table: &str, ext: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{table}.{ext}"))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes the result files and returns their paths, primary first.
pub fn write_results(cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Vec<PathBuf>> {
    let out = cfg.out();
    match cfg.format() {
        Format::Csv => {
            let mut paths = Vec::new();
            for (i, t) in outcome.tables.iter().enumerate() {
                let path = if i == 0 {
                    out.clone()
                } else {
                    secondary_path(&out, t.name, "csv")
                };
                write_file(&path, &t.to_csv()?)?;
                paths.push(path);
            }
            Ok(paths)
        }
        Format::Json => {
            let tables: Map<String, Value> = outcome
                .tables
                .iter()
                .map(|t| (t.name.to_string(), t.to_json()))
                .collect();
            let doc = json!({ "command": cfg.command.as_str(), "tables": tables });
            let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Invariant(e.to_string()))?;
            text.push('\n');
            write_file(&out, &text)?;
            Ok(vec![out])
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    /// The resolved config exactly as `from_toml` accepts it.
    pub config: String,
    pub outputs: Vec<String>,
    pub degenerate_counts: BTreeMap<String, u64>,
    pub notes: Vec<String>,
}

pub fn write_manifest(cfg: &ExperimentConfig, manifest: &RunManifest) -> Result<PathBuf> {
    let path = manifest_path(&cfg.out());
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Invariant(e.to_string()))?;
    text.push('\n');
    write_file(&path, &text)?;
    Ok(path)
}
