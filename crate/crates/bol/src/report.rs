//! The JSON report envelope and CSV side tables.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "bol/1";

/// A finite number, or `"inf"`, `"-inf"`, `"nan"`.
pub fn num(x: f64) -> Value {
    serde_json::to_value(bol_core::ser::Ext(x)).expect("number serializes")
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Serializes a core value; non-finite fields are expected to carry the
/// extended-real encoding already.
pub fn to_value(v: &impl Serialize) -> CliResult<Value> {
    Ok(serde_json::to_value(v)?)
}

#[derive(Debug)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub pass: bool,
    pub result: Value,
    /// Side files, relative to the output directory.
    pub files: Vec<String>,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            command: command.to_string(),
            config,
            pass: true,
            result: json!({}),
            files: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn envelope(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "pass": self.pass,
            "result": self.result,
            "files": self.files,
        })
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn cell(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        x.to_string()
    }
}

pub fn csv(columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.into_iter().map(cell).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes `name` under `dir` and records it in the report.
pub fn side_file(report: &mut Report, dir: &Path, name: &str, text: &str) -> CliResult<PathBuf> {
    let path = dir.join(name);
    write_text(&path, text)?;
    report.files.push(name.to_string());
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extended_numbers() {
        assert_eq!(num(1.5), json!(1.5));
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(csv(&["a", "b"], [vec![1.0, f64::NAN]]), "a,b\n1,nan\n");
    }
}
