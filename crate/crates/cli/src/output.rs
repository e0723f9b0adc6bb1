//! Tabular output with a provenance header, rendered as CSV or JSON.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};

pub const TOOL: &str = "mlfrac";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// Shortest round-trip form, switching to exponent notation only where the
/// plain form would be long.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) => Value::Null,
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Header {
    pub command: String,
    pub seed: u64,
}

pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: &Header, format: Format) -> String {
        match format {
            Format::Csv => self.csv(header),
            Format::Json => self.json(header),
        }
    }

    fn csv(&self, header: &Header) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {} {}", TOOL, env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# command: {}", header.command);
        let _ = writeln!(out, "# seed: {}", header.seed);
        for (k, v) in &self.notes {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    fn json(&self, header: &Header) -> String {
        let notes: serde_json::Map<String, Value> =
            self.notes.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({
            "tool": TOOL,
            "version": env!("CARGO_PKG_VERSION"),
            "command": header.command,
            "seed": header.seed,
            "notes": notes,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}

pub fn complex_cells(z: Complex64) -> [Cell; 2] {
    [Cell::Num(z.re), Cell::Num(z.im)]
}

pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}
