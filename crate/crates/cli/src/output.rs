//! CSV emission with a `#` metadata preamble.

use std::io::Write;

use crate::config::ScenarioConfig;
use crate::CliError;

/// One command's output: extra metadata, a header and the data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
    /// `key=value` lines added to the preamble.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Table {
            columns,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row.iter().map(|&v| format_value(v)).collect());
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    /// Value of `column` in the first row whose first field equals `key`.
    pub fn lookup(&self, key: &str, column: &str) -> Option<&str> {
        let j = self.columns.iter().position(|c| *c == column)?;
        self.rows.iter().find(|r| r[0] == key).map(|r| r[j].as_str())
    }
}

/// Shortest round-trip representation, in exponent form for very small or
/// large magnitudes.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e9).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn write_table<W: Write>(mut out: W, cfg: &ScenarioConfig, table: &Table) -> Result<(), CliError> {
    writeln!(out, "# scenario={}", cfg.scenario)?;
    writeln!(out, "# seed={}", cfg.seed)?;
    writeln!(out, "# version={}", env!("CARGO_PKG_VERSION"))?;
    for (k, v) in &table.notes {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.columns)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn render(cfg: &ScenarioConfig, table: &Table) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_table(&mut buf, cfg, table)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}
