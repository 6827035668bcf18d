use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::RunConfig;
use crate::error::Result;

/// One CSV/JSON cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Flag(bool),
    Text(String),
    Missing,
}

impl Cell {
    pub fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Flag(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    pub fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Missing => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Flag(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_flag(&self) -> Option<bool> {
        match self {
            Cell::Flag(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<Option<bool>> for Cell {
    fn from(v: Option<bool>) -> Self {
        v.map_or(Cell::Text("insufficient data".into()), Cell::Flag)
    }
}

/// A named pass/fail verdict over the rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

/// Table of rows keyed by `eps` or `h`, plus the verdicts.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub config: RunConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: Vec<Check>,
    pub wall_time: f64,
}

impl ConvergenceReport {
    pub fn new(config: &RunConfig, columns: &[&str]) -> Self {
        Self {
            config: config.clone(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            wall_time: 0.0,
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell of `row` in column `name`.
    pub fn get(&self, row: usize, name: &str) -> Option<&Cell> {
        self.column(name).and_then(|c| self.rows.get(row).map(|r| &r[c]))
    }

    pub fn values(&self, name: &str) -> Vec<Option<f64>> {
        let c = self.column(name).expect("known column");
        self.rows.iter().map(|r| r[c].as_f64()).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Exit status: 0 if every check passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let hash = self.config.hash();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.columns.clone();
        header.push("config_hash".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.iter().map(Cell::csv).collect();
            rec.push(hash.clone());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn to_json(&self) -> Value {
        let hash = self.config.hash();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, cell) in self.columns.iter().zip(row) {
                    m.insert(c.clone(), cell.json());
                }
                m.insert("config_hash".into(), json!(hash));
                Value::Object(m)
            })
            .collect();
        json!({
            "experiment": self.config.experiment.name(),
            "config_hash": hash,
            "config": self.config,
            "rows": rows,
            "checks": self.checks,
            "passed": self.passed(),
        })
    }

    pub fn meta(&self) -> String {
        let features = if cfg!(feature = "rayon") { "rayon" } else { "sequential" };
        format!(
            "config_hash = {}\ncrate = {} {}\nexecution = {}\nwall_time_seconds = {:.3}\npassed = {}\n",
            self.config.hash(),
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION"),
            features,
            self.wall_time,
            self.passed()
        )
    }

    /// Writes `report.csv`, `report.json`, `meta.txt` and `config.toml` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let files = [
            (dir.join("report.csv"), self.to_csv()?),
            (dir.join("report.json"), serde_json::to_string_pretty(&self.to_json())? + "\n"),
            (dir.join("meta.txt"), self.meta()),
            (dir.join("config.toml"), self.config.to_toml()),
        ];
        let mut out = Vec::new();
        for (path, text) in files {
            fs::write(&path, text)?;
            out.push(path);
        }
        Ok(out)
    }

    /// Plain-text summary for terminals.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.columns.join("  "));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format!("{v:.6e}"),
                    other => other.csv(),
                })
                .collect();
            s.push_str(&cells.join("  "));
            s.push('\n');
        }
        for c in &self.checks {
            s.push_str(&format!("[{}] {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        s
    }
}

/// True if the values are all present and strictly decreasing; `None` with
/// fewer than two values.
pub fn strictly_decreasing(values: &[Option<f64>]) -> Option<bool> {
    if values.len() < 2 {
        return None;
    }
    Some(values.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b < a)))
}

/// Per-row flag "smaller than the previous row"; `None` on the first row.
pub fn improved_over_previous(values: &[f64], i: usize) -> Option<bool> {
    (i > 0).then(|| values[i] < values[i - 1])
}
