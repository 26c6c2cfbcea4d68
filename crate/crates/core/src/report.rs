//! Tabular experiment results and their CSV/JSON serialization.
//!
//! CSV artifacts start with `# key=value` metadata lines, followed by one
//! header row and the data rows. Numbers use the shortest round-trip
//! exponent form, so identical inputs give byte-identical files.

use std::fmt;

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v:e}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(v) => write!(f, "{v}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

/// Provenance attached to every emitted artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactMeta {
    pub config_hash: String,
    pub seed: u64,
    pub grid: String,
    pub code_version: String,
}

impl ArtifactMeta {
    fn pairs(&self) -> [(&'static str, String); 4] {
        [
            ("config_hash", self.config_hash.clone()),
            ("seed", self.seed.to_string()),
            ("grid", self.grid.clone()),
            ("code_version", self.code_version.clone()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Map<String, Value>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Map::new(),
            pass: true,
        }
    }

    /// # Panics
    /// If the row width differs from the column count.
    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn set_summary(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    /// Numeric values of one column; non-numeric cells are skipped.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(idx) = self.columns.iter().position(|c| c == name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter_map(|r| match &r[idx] {
                Cell::Num(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                _ => None,
            })
            .collect()
    }

    pub fn to_csv(&self, meta: Option<&ArtifactMeta>) -> String {
        let mut out = String::new();
        if let Some(meta) = meta {
            for (k, v) in meta.pairs() {
                out.push_str(&format!("# {k}={v}\n"));
            }
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Summary object with a `pass` flag and, when given, a `meta` block.
    pub fn summary_json(&self, meta: Option<&ArtifactMeta>) -> Value {
        let mut obj = self.summary.clone();
        obj.insert("experiment".into(), Value::String(self.name.clone()));
        obj.insert("pass".into(), Value::Bool(self.pass));
        if let Some(meta) = meta {
            obj.insert("meta".into(), serde_json::to_value(meta).expect("metadata serializes"));
        }
        Value::Object(obj)
    }
}

/// JSON number for `v`, or `null` when `v` is not finite.
pub fn json_num(v: f64) -> Value {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}
