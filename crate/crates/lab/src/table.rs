//! Tab-separated result tables with a JSON manifest next to them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            // Shortest representation that parses back to the same bits.
            Cell::Float(v) => write!(f, "{v:e}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
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

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn col(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn get(&self, row: usize, name: &str) -> Option<&Cell> {
        self.rows.get(row)?.get(self.col(name)?)
    }

    pub fn f64(&self, row: usize, name: &str) -> f64 {
        self.get(row, name).and_then(Cell::as_f64).unwrap_or(f64::NAN)
    }

    pub fn str(&self, row: usize, name: &str) -> &str {
        self.get(row, name).and_then(Cell::as_str).unwrap_or("")
    }

    /// Rows for which `pred` holds.
    pub fn select<'a>(&'a self, pred: impl Fn(&Table, usize) -> bool + 'a) -> impl Iterator<Item = usize> + 'a {
        (0..self.rows.len()).filter(move |&i| pred(self, i))
    }

    /// Renders the table with an extra `config_hash` column.
    pub fn to_tsv(&self, config_hash: &str) -> String {
        let mut out = self.columns.join("\t");
        out.push_str("\tconfig_hash\n");
        for row in &self.rows {
            for c in row {
                let _ = write!(out, "{c}\t");
            }
            out.push_str(config_hash);
            out.push('\n');
        }
        out
    }

    /// Parses [`Table::to_tsv`] output, dropping the hash column. Cells that
    /// parse as integers or floats come back as such.
    pub fn from_tsv(src: &str) -> Option<(Table, String)> {
        let mut lines = src.lines();
        let mut columns: Vec<String> = lines.next()?.split('\t').map(String::from).collect();
        if columns.pop()? != "config_hash" {
            return None;
        }
        let mut hash = String::new();
        let mut rows = Vec::new();
        for line in lines {
            let mut cells: Vec<&str> = line.split('\t').collect();
            hash = cells.pop()?.to_string();
            if cells.len() != columns.len() {
                return None;
            }
            rows.push(cells.into_iter().map(parse_cell).collect());
        }
        Some((Table { columns, rows }, hash))
    }
}

fn parse_cell(s: &str) -> Cell {
    if let Ok(i) = s.parse::<i64>() {
        Cell::Int(i)
    } else if let Ok(v) = s.parse::<f64>() {
        Cell::Float(v)
    } else {
        Cell::Text(s.to_string())
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| LabError::io(path, e))
}

/// Writes `<dir>/<name>.tsv` and `<dir>/<name>.json`; the manifest holds the
/// config, its hash, the column names and `extra`.
pub fn write_table<C: Serialize>(
    dir: &Path,
    name: &str,
    table: &Table,
    config: &C,
    config_hash: &str,
    extra: Value,
) -> Result<PathBuf> {
    let tsv = dir.join(format!("{name}.tsv"));
    write_file(&tsv, &table.to_tsv(config_hash))?;
    let manifest = serde_json::json!({
        "table": format!("{name}.tsv"),
        "columns": table.columns,
        "rows": table.rows.len(),
        "config_hash": config_hash,
        "config": config,
        "extra": extra,
    });
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&dir.join(format!("{name}.json")), &json)?;
    Ok(tsv)
}
