//! Deterministic CSV and JSON rendering with 10 significant digits.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::{CliError, CliResult};

const SIGNIFICANT: usize = 10;

/// `x` rounded to 10 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT - 1, x).parse().unwrap_or(x)
}

/// Shortest text that reads back as `round_sig(x)`; no locale, `.` separator.
pub fn fmt_num(x: f64) -> String {
    let y = round_sig(x);
    if y.is_nan() {
        return "NaN".into();
    }
    if y == 0.0 {
        return "0".into();
    }
    let mag = y.abs();
    if (1e-4..1e15).contains(&mag) || mag.is_infinite() {
        format!("{y}")
    } else {
        format!("{y:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(round_sig(*x)).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        // writes to memory cannot fail
        w.write_record(&self.headers).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    fn row_object(&self, row: &[Cell]) -> Value {
        let map: Map<String, Value> = self.headers.iter().cloned().zip(row.iter().map(Cell::json)).collect();
        Value::Object(map)
    }

    /// Array of row objects keyed by header.
    pub fn to_json(&self) -> Value {
        Value::Array(self.rows.iter().map(|r| self.row_object(r)).collect())
    }

    /// The first row as a single object.
    pub fn first_as_json(&self) -> Value {
        self.rows.first().map_or(Value::Null, |r| self.row_object(r))
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => to_json_text(&self.to_json()),
        }
    }
}

pub fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Writes `text` to `path`, or standard output when `None`.
pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(CliError::Io),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}
