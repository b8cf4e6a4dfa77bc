//! CSV / JSON tables with `#` metadata, and gnuplot stubs.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::Format;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Missing,
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

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            // shortest round-trip representation, so repeated runs are byte-identical
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => u8::from(*v).to_string(),
            Cell::Missing => "nan".into(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
            _ => Value::Null,
        }
    }
}

/// A named data table; `plot` gives the x column and the y columns for the gnuplot stub.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Vec<(String, String)>,
    pub plot: (usize, Vec<usize>),
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        let columns = columns.iter().map(|c| c.to_string()).collect();
        Self { name: name.into(), columns, rows: vec![], meta: vec![], plot: (0, vec![1]) }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn plot(mut self, x: usize, ys: Vec<usize>) -> Self {
        self.plot = (x, ys);
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self, format: Format) -> String {
        match format {
            Format::Csv => format!("{}.csv", self.name),
            Format::Json => format!("{}.json", self.name),
        }
    }

    fn csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::text).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn json(&self) -> String {
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let mut cols = Map::new();
        for (j, c) in self.columns.iter().enumerate() {
            cols.insert(c.clone(), Value::Array(self.rows.iter().map(|r| r[j].json()).collect()));
        }
        let v = json!({ "metadata": meta, "columns": self.columns, "data": cols });
        serde_json::to_string_pretty(&v).expect("table serializes") + "\n"
    }

    pub fn write(&self, dir: &Path, format: Format) -> Result<String> {
        let name = self.file_name(format);
        let body = match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        };
        write_file(&dir.join(&name), &body)?;
        Ok(name)
    }
}

pub fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write_file(path, &(body + "\n"))
}

/// One plot per CSV table, in a single script.
pub fn gnuplot_stub(tables: &[Table]) -> String {
    let mut s = String::from("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n");
    for t in tables {
        let (x, ys) = &t.plot;
        let _ = writeln!(s, "\nset title '{}'\nset xlabel '{}'", t.name, t.columns[*x]);
        let series: Vec<String> = ys
            .iter()
            .map(|&y| format!("'{}' using {}:{} with lines", t.file_name(Format::Csv), x + 1, y + 1))
            .collect();
        let _ = writeln!(s, "plot {}\npause -1", series.join(", \\\n     "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_metadata_above_header() {
        let mut t = Table::new("x", &["a", "b", "flag"]).meta("normalization", "unit-period");
        t.push(vec![Cell::Num(0.5), Cell::Missing, Cell::Bool(true)]);
        let s = t.csv();
        assert_eq!(s, "# normalization: unit-period\na,b,flag\n5e-1,nan,1\n");
        let j: Value = serde_json::from_str(&t.json()).unwrap();
        assert_eq!(j["data"]["a"][0], json!(0.5));
        assert!(j["data"]["b"][0].is_null());
    }
}
