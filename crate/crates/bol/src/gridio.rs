//! GridFunction files.
//!
//! CSV: an optional first line `# {"dim":…,"shape":[…],"spacing":…,"origin":[…]}`
//! then the values in row-major order, one line per run of the last axis.
//! Binary: `BOLG`, a little-endian `u32` header length, the same JSON
//! header, then little-endian `f64` values.

use std::io::Write;
use std::path::Path;

use bol_core::GridFunction;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"BOLG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub dim: usize,
    pub shape: Vec<usize>,
    pub spacing: f64,
    pub origin: Vec<f64>,
}

impl GridHeader {
    pub fn of(f: &GridFunction) -> Self {
        Self {
            dim: f.dim(),
            shape: f.shape().to_vec(),
            spacing: f.spacing(),
            origin: f.origin().to_vec(),
        }
    }

    fn build(self, values: Vec<f64>) -> CliResult<GridFunction> {
        if self.dim != self.shape.len() || self.dim != self.origin.len() {
            return Err(CliError::Invalid(format!(
                "grid header: dim {} does not match shape {:?} and origin {:?}",
                self.dim, self.shape, self.origin
            )));
        }
        Ok(GridFunction::new(
            self.shape,
            self.spacing,
            self.origin,
            values,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Binary,
}

impl Format {
    pub fn parse(s: &str) -> CliResult<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "bin" | "binary" => Ok(Format::Binary),
            _ => Err(CliError::Invalid(format!(
                "format {s:?}: expected csv or bin"
            ))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Binary => "bin",
        }
    }
}

/// How to read a CSV that has no header line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Headerless {
    pub dim: Option<usize>,
    pub spacing: f64,
}

fn bad(path: &Path, why: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{}: {why}", path.display()))
}

pub fn to_csv(f: &GridFunction) -> String {
    let header = serde_json::to_string(&GridHeader::of(f)).expect("header serializes");
    let mut out = format!("# {header}\n");
    let row = *f.shape().last().unwrap_or(&1);
    for line in f.values().chunks(row.max(1)) {
        let cells: Vec<String> = line.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn to_binary(f: &GridFunction) -> Vec<u8> {
    let header = serde_json::to_vec(&GridHeader::of(f)).expect("header serializes");
    let mut out = Vec::with_capacity(8 + header.len() + 8 * f.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_grid(path: &Path, f: &GridFunction, format: Format) -> CliResult<()> {
    let bytes = match format {
        Format::Csv => to_csv(f).into_bytes(),
        Format::Binary => to_binary(f),
    };
    let mut file = std::fs::File::create(path).map_err(|e| bad(path, e))?;
    file.write_all(&bytes).map_err(|e| bad(path, e))?;
    Ok(())
}

pub fn parse_binary(path: &Path, bytes: &[u8]) -> CliResult<GridFunction> {
    let body = bytes
        .strip_prefix(MAGIC)
        .ok_or_else(|| bad(path, "missing BOLG magic"))?;
    if body.len() < 4 {
        return Err(bad(path, "truncated header length"));
    }
    let n = u32::from_le_bytes(body[..4].try_into().unwrap()) as usize;
    let rest = &body[4..];
    if rest.len() < n {
        return Err(bad(path, "truncated header"));
    }
    let header: GridHeader =
        serde_json::from_slice(&rest[..n]).map_err(|e| bad(path, format!("header: {e}")))?;
    let data = &rest[n..];
    if data.len() % 8 != 0 {
        return Err(bad(path, "value block is not a whole number of f64s"));
    }
    let values = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    header.build(values)
}

pub fn parse_csv(path: &Path, text: &str, fallback: Headerless) -> CliResult<GridFunction> {
    let mut header = None;
    let mut values = Vec::new();
    let mut rows = 0usize;
    let mut row_len = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if i == 0 {
                header = Some(
                    serde_json::from_str::<GridHeader>(rest.trim())
                        .map_err(|e| bad(path, format!("header: {e}")))?,
                );
            }
            continue;
        }
        let before = values.len();
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| {
                bad(
                    path,
                    format!("line {}: {:?} is not a number", i + 1, cell.trim()),
                )
            })?;
            values.push(v);
        }
        let n = values.len() - before;
        if *row_len.get_or_insert(n) != n {
            return Err(bad(path, format!("line {}: ragged row", i + 1)));
        }
        rows += 1;
    }
    if let Some(h) = header {
        return h.build(values);
    }
    let cols = row_len.unwrap_or(0);
    match fallback.dim {
        None => Err(bad(path, "CSV has no header line; pass --dim")),
        Some(1) => {
            let n = values.len();
            Ok(GridFunction::new(
                vec![n],
                fallback.spacing,
                vec![0.0],
                values,
            )?)
        }
        Some(2) => Ok(GridFunction::new(
            vec![rows, cols],
            fallback.spacing,
            vec![0.0, 0.0],
            values,
        )?),
        Some(d) => Err(bad(
            path,
            format!("a headerless CSV can hold 1 or 2 dimensions, not {d}"),
        )),
    }
}

/// Reads a grid, telling binary from CSV by the magic bytes.
pub fn read_grid(path: &Path, fallback: Headerless) -> CliResult<GridFunction> {
    let bytes = std::fs::read(path).map_err(|e| bad(path, e))?;
    if bytes.starts_with(MAGIC) {
        return parse_binary(path, &bytes);
    }
    let text =
        String::from_utf8(bytes).map_err(|_| bad(path, "neither BOLG binary nor UTF-8 CSV"))?;
    parse_csv(path, &text, fallback)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridFunction {
        GridFunction::new(
            vec![2, 3],
            0.1,
            vec![-1.0, 0.5],
            vec![1.0, -2.5, 0.0, 1e-300, 3.25, 7.0],
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let f = sample();
        let g = parse_csv(
            Path::new("x"),
            &to_csv(&f),
            Headerless {
                dim: None,
                spacing: 1.0,
            },
        )
        .unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn binary_round_trip() {
        let f = sample();
        assert_eq!(parse_binary(Path::new("x"), &to_binary(&f)).unwrap(), f);
    }

    #[test]
    fn headerless_needs_dim() {
        let text = "1,2,3\n4,5,6\n";
        let e = parse_csv(
            Path::new("x"),
            text,
            Headerless {
                dim: None,
                spacing: 1.0,
            },
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 3);
        let g = parse_csv(
            Path::new("x"),
            text,
            Headerless {
                dim: Some(2),
                spacing: 0.5,
            },
        )
        .unwrap();
        assert_eq!(g.shape(), &[2, 3]);
        let g = parse_csv(
            Path::new("x"),
            text,
            Headerless {
                dim: Some(1),
                spacing: 0.5,
            },
        )
        .unwrap();
        assert_eq!(g.shape(), &[6]);
    }

    #[test]
    fn rejects_ragged_rows_and_bad_headers() {
        let fb = Headerless {
            dim: Some(2),
            spacing: 1.0,
        };
        assert!(parse_csv(Path::new("x"), "1,2\n3\n", fb).is_err());
        let h = "# {\"dim\":2,\"shape\":[2],\"spacing\":1,\"origin\":[0]}\n1,2\n";
        assert!(parse_csv(Path::new("x"), h, fb).is_err());
    }
}
