//! Report rendering: canonical JSON, aligned text tables and CSV.
//!
//! Canonical JSON has sorted keys, two-space indentation, a trailing newline and every float
//! rounded to six significant digits, so equal inputs always give equal bytes.

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// Version of every report schema emitted by this crate.
pub const REPORT_VERSION: u32 = 1;

/// Relative change from `base` to `value` in percent.
///
/// `0 → 0` counts as no change; any other change from a zero base is undefined.
pub fn delta_pct(base: f64, value: f64) -> f64 {
    if base == 0.0 && value == 0.0 {
        0.0
    } else {
        (value - base) / base * 100.0
    }
}

/// Optional form of [`delta_pct`]: `None` where the ratio is undefined.
pub fn delta_pct_opt(base: f64, value: f64) -> Option<f64> {
    Some(delta_pct(base, value)).filter(|d| d.is_finite())
}

/// One-decimal signed percentage, e.g. `+16.8%`.
pub fn format_pct(pct: f64) -> String {
    let s = format!("{pct:+.1}%");
    // avoid "-0.0%"
    if s == "-0.0%" {
        "+0.0%".into()
    } else {
        s
    }
}

/// Rounds to six significant digits through decimal formatting.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig6(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn canonical_json<T: Serialize + ?Sized>(report: &T) -> Result<String> {
    let mut value = serde_json::to_value(report)?;
    round_value(&mut value);
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
    Pct(Option<f64>),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{x:.2}"),
            Cell::Pct(Some(p)) => format_pct(*p),
            Cell::Pct(None) => "n/a".into(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) | Cell::Pct(Some(x)) => round_sig6(*x).to_string(),
            Cell::Pct(None) => String::new(),
        }
    }

    fn right_aligned(&self) -> bool {
        !matches!(self, Cell::Text(_))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Self {
            title: title.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        if !self.title.is_empty() {
            out.push_str(&self.title);
            out.push('\n');
        }
        let header: Vec<String> = self
            .headers
            .iter()
            .zip(&widths)
            .map(|(h, w)| format!("{h:>w$}"))
            .collect();
        out.push_str(header.join("  ").trim_end());
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.push('\n');
        for (row, raw) in cells.iter().zip(&self.rows) {
            let line: Vec<String> = row
                .iter()
                .zip(raw)
                .zip(&widths)
                .map(|((c, cell), w)| {
                    if cell.right_aligned() {
                        format!("{c:>w$}")
                    } else {
                        format!("{c:<w$}")
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    std::io::Error::other(e.to_string()).into()
}

/// A serializable experiment report with a tabular view.
pub trait Report: Serialize {
    fn table(&self) -> Table;

    fn to_json(&self) -> Result<String> {
        canonical_json(self)
    }

    fn to_text(&self) -> String {
        self.table().render()
    }

    fn to_csv(&self) -> Result<String> {
        self.table().to_csv()
    }
}
