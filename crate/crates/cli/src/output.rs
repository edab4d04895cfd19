//! JSON and CSV writers shared by the subcommands.
//!
//! All files are UTF-8 with LF line endings. JSON is pretty-printed with
//! key order preserved, so re-reading a summary and re-serializing it
//! reproduces the bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::commands::CliError;

pub fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_text(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::numeric(format!("cannot serialize {name}: {e}")))?;
    body.push('\n');
    write_text(dir, name, &body)
}

/// Multi-column numeric CSV with a fixed header.
pub struct CsvBuilder {
    buffer: String,
    columns: usize,
}

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        Self {
            buffer: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        self.buffer.push_str(&cells.join(","));
        self.buffer.push('\n');
    }

    pub fn finish(self) -> String {
        self.buffer
    }
}

pub fn fmt_float(value: f64) -> String {
    format!("{value:.10e}")
}
