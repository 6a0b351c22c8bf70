//! Result tables and atomic JSON / CSV writers.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    /// Column has no value for this row.
    Empty,
}

impl Cell {
    fn to_json(&self) -> Option<Value> {
        match *self {
            Cell::Float(x) => Some(json!(x)),
            Cell::Int(i) => Some(json!(i)),
            Cell::Bool(b) => Some(json!(b)),
            Cell::Empty => None,
        }
    }

    fn to_field(&self) -> String {
        match *self {
            Cell::Float(x) => x.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Rows with a fixed column order.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// Objects in column order; empty cells are left out.
    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    for (c, v) in self.columns.iter().zip(row) {
                        if let Some(v) = v.to_json() {
                            m.insert(c.clone(), v);
                        }
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

/// Output of one mode: the row table plus mode-level scalars.
pub struct Report {
    pub mode: &'static str,
    pub table: Table,
    pub summary: Map<String, Value>,
    /// One-line human summary for stdout.
    pub headline: String,
}

pub fn document(config: &RunConfig, report: &Report, wall_time_ms: Option<f64>) -> Result<Value> {
    let mut doc = Map::new();
    doc.insert("config_echo".into(), serde_json::to_value(config)?);
    doc.insert("mode".into(), json!(report.mode));
    doc.insert("results".into(), report.table.to_json());
    doc.insert("summary".into(), Value::Object(report.summary.clone()));
    doc.insert(
        "versions".into(),
        json!({ "iqae": env!("CARGO_PKG_VERSION"), "schema": SCHEMA_VERSION }),
    );
    if let Some(ms) = wall_time_ms {
        doc.insert("wall_time_ms".into(), json!(ms));
    }
    Ok(Value::Object(doc))
}

fn csv_bytes(table: &Table) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::to_field))?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Writes next to the target and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn emit(config: &RunConfig, report: &Report, wall_time_ms: Option<f64>) -> Result<()> {
    let bytes = match config.output.format {
        Format::Json => {
            let mut s = serde_json::to_vec_pretty(&document(config, report, wall_time_ms)?)?;
            s.push(b'\n');
            s
        }
        Format::Csv => csv_bytes(&report.table)?,
    };
    write_atomic(&config.output.path, &bytes)
}
