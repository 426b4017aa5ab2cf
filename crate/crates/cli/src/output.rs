//! Tables for people, CSV for tools.
//!
//! Numbers are shown with 6 significant digits on screen and written with
//! Rust's shortest round-trip formatting (`{}`) to CSV, so a CSV value
//! parses back to the identical `f64`.

use std::io::Write;
use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// A fraction shown as a percentage on screen; stored as the fraction.
    Percent(f64),
    Int(u64),
    Text(String),
    Flag(bool),
    /// No value (e.g. payments at a no-deal point).
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn display(&self) -> String {
        match self {
            Cell::Num(x) => sig6(*x),
            Cell::Percent(x) => format!("{}%", sig6(x * 100.0)),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => if *b { "yes" } else { "no" }.to_string(),
            Cell::Empty => "-".to_string(),
        }
    }

    /// Full-precision form used in CSV.
    pub fn csv(&self) -> String {
        match self {
            Cell::Num(x) | Cell::Percent(x) => format!("{x}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn finite(&self) -> bool {
        match self {
            Cell::Num(x) | Cell::Percent(x) => x.is_finite(),
            _ => true,
        }
    }
}

/// `x` rounded to 6 significant digits; scientific notation outside
/// `[1e-4, 1e6)`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    // exponent after rounding, so 999999.7 moves to the next decade
    let exp: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-4..6).contains(&exp) {
        format!("{x:.*}", (5 - exp) as usize)
    } else {
        sci
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn check_finite(&self) -> Result<()> {
        for row in &self.rows {
            for (col, cell) in self.columns.iter().zip(row) {
                if !cell.finite() {
                    return Err(CliError::NonFinite(col.clone()));
                }
            }
        }
        Ok(())
    }

    fn render(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::display).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| cells.iter().map(|r| r[c].len()).chain([self.columns[c].len()]).max().unwrap_or(0))
            .collect();
        let line = |items: &[String]| {
            let mut s = items
                .iter()
                .zip(&widths)
                .map(|(x, w)| format!("{x:>w$}"))
                .collect::<Vec<_>>()
                .join("  ");
            s.push('\n');
            s
        };
        let mut out = line(&self.columns);
        out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
        for r in &cells {
            out.push_str(&line(r));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let err = |e: &dyn std::fmt::Display| CliError::Write { path: path.display().to_string(), message: e.to_string() };
        let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
        w.write_record(&self.columns).map_err(|e| err(&e))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(|e| err(&e))?;
        }
        w.flush().map_err(|e| err(&e))
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub title: String,
    /// Key/value lines shown above the table.
    pub summary: Vec<(String, Cell)>,
    pub table: Option<Table>,
    /// Set when the analysis ended in no deal or infeasibility.
    pub verdict: Option<String>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report { title: title.into(), ..Default::default() }
    }

    pub fn add(&mut self, key: impl Into<String>, value: Cell) -> &mut Self {
        self.summary.push((key.into(), value));
        self
    }

    pub fn check_finite(&self) -> Result<()> {
        if let Some((key, _)) = self.summary.iter().find(|(_, v)| !v.finite()) {
            return Err(CliError::NonFinite(key.clone()));
        }
        self.table.as_ref().map_or(Ok(()), Table::check_finite)
    }

    pub fn render(&self) -> String {
        let mut out = format!("{}\n", self.title);
        let width = self.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.summary {
            out.push_str(&format!("  {k:<width$}  {}\n", v.display()));
        }
        if let Some(t) = &self.table {
            out.push('\n');
            out.push_str(&t.render());
        }
        out
    }

    /// The table if there is one, otherwise the summary as a single row.
    pub fn csv_table(&self) -> Table {
        match &self.table {
            Some(t) => t.clone(),
            None => {
                let mut t = Table::new(self.summary.iter().map(|(k, _)| k.clone()));
                t.push(self.summary.iter().map(|(_, v)| v.clone()).collect());
                t
            }
        }
    }

    /// Checks finiteness, prints to `out` and writes the CSV if asked.
    pub fn emit(&self, out: &mut impl Write, csv: Option<&Path>) -> Result<()> {
        self.check_finite()?;
        out.write_all(self.render().as_bytes())
            .map_err(|e| CliError::Write { path: "<stdout>".into(), message: e.to_string() })?;
        if let Some(path) = csv {
            self.csv_table().write_csv(path)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.6476031), "0.647603");
        assert_eq!(sig6(1.4571067811), "1.45711");
        assert_eq!(sig6(123456.78), "123457");
        assert_eq!(sig6(999999.7), "1.00000e6");
        assert_eq!(sig6(-2.5), "-2.50000");
        assert_eq!(sig6(1.23456789e-7), "1.23457e-7");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn csv_is_full_precision() {
        let x = 0.1 + 0.2;
        assert_eq!(Cell::Num(x).csv().parse::<f64>().unwrap(), x);
        assert_eq!(Cell::Percent(0.246912).display(), "24.6912%");
        assert_eq!(Cell::Empty.csv(), "");
    }

    #[test]
    fn non_finite_values_are_refused() {
        let mut r = Report::new("t");
        r.add("price", Cell::Num(f64::NAN));
        let mut sink = Vec::new();
        assert!(matches!(r.emit(&mut sink, None), Err(CliError::NonFinite(k)) if k == "price"));
        assert!(sink.is_empty());
    }

    #[test]
    fn summary_becomes_one_csv_row() {
        let mut r = Report::new("t");
        r.add("a", Cell::Num(1.5)).add("b", Cell::Flag(true));
        let t = r.csv_table();
        assert_eq!(t.columns, ["a", "b"]);
        assert_eq!(t.rows, vec![vec![Cell::Num(1.5), Cell::Flag(true)]]);
    }
}
