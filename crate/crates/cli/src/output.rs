//! Deterministic CSV and JSON emission.
//!
//! CSV floats carry 17 significant digits so files are reproducible and
//! diffable bit for bit; JSON goes through serde_json's shortest round-trip
//! formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const SCHEMA_VERSION: &str = "1";

/// 17 significant digits, locale-independent.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub struct CsvWriter {
    buf: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        CsvWriter { buf, columns: header.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "row width must match the header");
        let _ = writeln!(self.buf, "{}", fields.join(","));
    }

    pub fn write(self, path: &Path) -> Result<(), String> {
        fs::write(path, self.buf).map_err(|e| format!("cannot write {}: {e}", path.display()))
    }
}

/// Prints a JSON document to stdout followed by a newline.
pub fn emit_json(value: &serde_json::Value) {
    println!("{value}");
}
