use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::args::{Cli, Format};

pub enum Cell {
    Text(String),
    Num(f64),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) => format!("{x:.6}"),
            Cell::Empty => String::new(),
        }
    }
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
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Text(n.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

/// Rows for table and CSV output plus full-precision JSON results.
pub struct Report {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub results: Vec<Value>,
    /// Lines printed under the table.
    pub notes: Vec<String>,
    /// Leading columns written to CSV.
    pub csv_width: usize,
}

impl Report {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            csv_width: header.len(),
            header,
            rows: Vec::new(),
            results: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn render(&self, cli: &Cli) -> String {
        match cli.format {
            Format::Table => self.table(),
            Format::Csv => self.csv(),
            Format::Json => {
                let doc = json!({
                    "invocation": cli,
                    "seed": cli.seed,
                    "results": self.results,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }

    fn table(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
        let widths: Vec<usize> = (0..self.header.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.header[j].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let line = |row: Vec<&str>, out: &mut String| {
            let parts: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(self.header.clone(), &mut out);
        for r in &cells {
            line(r.iter().map(String::as_str).collect(), &mut out);
        }
        for n in &self.notes {
            let _ = writeln!(out, "{n}");
        }
        out
    }

    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header[..self.csv_width]).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r[..self.csv_width].iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}
