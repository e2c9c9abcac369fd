//! Deterministic artifact writing: CSV trajectory tables with a fixed
//! 17-significant-digit float format and pretty JSON reports with
//! struct-ordered keys, both newline-terminated with `\n`.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Scientific notation with 17 significant digits; round-trips `f64`
/// exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A trajectory table: shared time column plus named series.
pub struct Table {
    pub time: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for (name, _) in &self.columns {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (k, t) in self.time.iter().enumerate() {
            out.push_str(&format_float(*t));
            for (_, series) in &self.columns {
                out.push(',');
                out.push_str(&format_float(series[k]));
            }
            out.push('\n');
        }
        out
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn write_table(dir: &Path, name: &str, table: &Table) -> Result<PathBuf, CliError> {
    write_file(dir, name, &table.to_csv())
}

pub fn write_report<T: Serialize>(dir: &Path, report: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Parse(format!("report serialization: {e}")))?;
    text.push('\n');
    write_file(dir, "report.json", &text)
}
