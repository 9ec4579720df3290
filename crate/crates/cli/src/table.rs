//! Generic column table for sweep and check output.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::report::Format;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn md(&self) -> String {
        match self {
            Cell::Num(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{v:.0}"),
            Cell::Num(v) if v.abs() >= 1e4 || (v.abs() < 1e-3 && *v != 0.0) => format!("{v:.4e}"),
            Cell::Num(v) => format!("{v:.4}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(title: &str, columns: &[&str]) -> Self {
        Self {
            title: title.into(),
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Md => {
                let mut s = format!("# {}\n\n", self.title);
                for n in &self.notes {
                    let _ = writeln!(s, "{n}");
                }
                if !self.notes.is_empty() {
                    s.push('\n');
                }
                let _ = writeln!(s, "| {} |", self.columns.join(" | "));
                let _ = writeln!(s, "|{}", "---|".repeat(self.columns.len()));
                for r in &self.rows {
                    let cells: Vec<String> = r.iter().map(Cell::md).collect();
                    let _ = writeln!(s, "| {} |", cells.join(" | "));
                }
                s
            }
            Format::Csv => {
                let mut s = self.columns.join(",");
                s.push('\n');
                for r in &self.rows {
                    let cells: Vec<String> = r.iter().map(Cell::csv).collect();
                    s += &cells.join(",");
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|r| {
                        self.columns
                            .iter()
                            .cloned()
                            .zip(r.iter().map(|c| serde_json::to_value(c).expect("cell serializes")))
                            .collect()
                    })
                    .collect();
                let v = serde_json::json!({
                    "title": self.title,
                    "notes": self.notes,
                    "columns": self.columns,
                    "rows": rows,
                });
                serde_json::to_string_pretty(&v).expect("value serializes") + "\n"
            }
        }
    }
}
