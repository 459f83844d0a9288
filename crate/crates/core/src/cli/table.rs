//! Output tables: CSV with a header row, or JSON `{columns, rows}`.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::symcore::SymMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // no negative zeros in tables
            Cell::Num(v) => if *v == 0.0 { "0".into() } else { v.to_string() },
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(if *v == 0.0 { 0.0 } else { *v }).map_or(serde_json::Value::Null, serde_json::Value::Number),
            Cell::Int(v) => (*v).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Bool(b) => (*b).into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra JSON-only payload (diagnostics that do not fit the rows).
    pub extra: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct JsonTable<'a> {
    columns: &'a [String],
    rows: Vec<Vec<serde_json::Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<&'a serde_json::Value>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new(), extra: None }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, format: OutputFormat, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.flush()
            }
            OutputFormat::Json => {
                let t = JsonTable {
                    columns: &self.columns,
                    rows: self.rows.iter().map(|r| r.iter().map(Cell::json).collect()).collect(),
                    extra: self.extra.as_ref(),
                };
                serde_json::to_writer_pretty(&mut *out, &t)?;
                writeln!(out)
            }
        }
    }
}

/// `prefix_ij` for the upper triangle, row by row.
pub fn matrix_columns(prefix: &str, d: usize) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in i..d {
            out.push(format!("{prefix}_{i}{j}"));
        }
    }
    out
}

pub fn matrix_cells(x: &SymMatrix) -> Vec<Cell> {
    let d = x.dim();
    let mut out = Vec::new();
    for i in 0..d {
        for j in i..d {
            out.push(Cell::Num(x.get(i, j)));
        }
    }
    out
}

pub fn complex_cells(z: Complex64) -> [Cell; 2] {
    [Cell::Num(z.re), Cell::Num(z.im)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json() {
        let mut t = Table::new(vec!["a".into(), "b".into(), "c".into()]);
        t.push(vec![Cell::Num(0.5), Cell::Empty, Cell::Text("x,y".into())]);
        let mut buf = Vec::new();
        t.write(OutputFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b,c\n0.5,,\"x,y\"\n");
        let mut buf = Vec::new();
        t.write(OutputFormat::Json, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["rows"][0][0], 0.5);
        assert!(v["rows"][0][1].is_null());
        assert_eq!(matrix_columns("psi_re", 2), vec!["psi_re_00", "psi_re_01", "psi_re_11"]);
    }
}
