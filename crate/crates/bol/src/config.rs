//! Settings and their three layers: a TOML file, `BOL_*` environment
//! variables, then command-line flags. Later layers win key by key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{CliError, CliResult};

fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("{s:?}: {e}"))
}

fn de_seed<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Seed {
        Int(u64),
        Text(String),
    }
    match Option::<Seed>::deserialize(d)? {
        None => Ok(None),
        Some(Seed::Int(v)) => Ok(Some(v)),
        Some(Seed::Text(s)) => parse_seed(&s).map(Some).map_err(serde::de::Error::custom),
    }
}

/// Every key a command may read. Flags are the kebab-case spelling
/// (`quad_nodes` is `--quad-nodes`), env variables the upper-case one with
/// the `BOL_` prefix.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Young function spec, e.g. `power:p=1.3`
    #[arg(long)]
    pub phi: Option<String>,
    /// Weight spec, e.g. `powerweight:theta=0.5385`
    #[arg(long)]
    pub psi: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub smin: Option<f64>,
    #[arg(long)]
    pub smax: Option<f64>,
    /// Number of log-spaced evaluation points
    #[arg(long)]
    pub points: Option<usize>,
    /// Simpson panels per unit of log-variable in the improper integrals
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    /// Lower limit of the first integral (default 0)
    #[arg(long)]
    pub first_lower: Option<f64>,
    #[arg(long)]
    pub tmin: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Trapezoid nodes on the log-t axis
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Grid file (CSV with a JSON header, headerless CSV, or binary)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Built-in grid: staircase, signed, disc, square or corpus:N
    #[arg(long)]
    pub fixture: Option<String>,
    /// Grid spacing for fixtures and headerless CSV
    #[arg(long)]
    pub h: Option<f64>,
    /// Radius of the disc fixture
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub radii: Option<Vec<f64>>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub offsets: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<u64>,
    /// Decimal or 0x-prefixed hex
    #[arg(long, value_parser = parse_seed)]
    #[serde(default, deserialize_with = "de_seed")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub chunks: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Shift lengths for the modulus curve
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub t: Option<Vec<f64>>,
    /// Lebesgue exponent
    #[arg(long)]
    pub p: Option<f64>,
    /// Grid file format for exports: csv or bin
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub max_change: Option<f64>,
    /// Output directory
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub jobs: Option<usize>,
}

const LIST_KEYS: [&str; 3] = ["radii", "offsets", "t"];

/// Keys set in `s`, in declaration order.
pub fn set_keys(s: &Settings) -> CliResult<Vec<String>> {
    let v = toml::Value::try_from(s).map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(v.as_table()
        .map(|t| t.keys().cloned().collect())
        .unwrap_or_default())
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl Settings {
    /// `self` with every key set in `top` replaced.
    pub fn merged(mut self, top: &Settings) -> Settings {
        overlay!(self, top; phi, psi, dim, smin, smax, points, quad_nodes, first_lower, tmin, tmax, nodes,
            rel_tol, input, fixture, h, radius, radii, r, offsets, samples, seed, chunks, alpha, t, p,
            format, max_change, output, jobs);
        self
    }
}

fn from_table(t: toml::Table, origin: &str) -> CliResult<Settings> {
    toml::Value::Table(t)
        .try_into()
        .map_err(|e: toml::de::Error| {
            let msg = e.message().to_string();
            if msg.contains("unknown field") {
                CliError::Usage(format!("{origin}: {msg}"))
            } else {
                CliError::Invalid(format!("{origin}: {msg}"))
            }
        })
}

pub fn from_toml_file(path: &Path) -> CliResult<Settings> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
    let table: toml::Table = toml::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("config {}: {}", path.display(), e.message())))?;
    from_table(table, &format!("config {}", path.display()))
}

/// A raw env string as a TOML value; bare words stay strings.
fn env_value(key: &str, raw: &str) -> toml::Value {
    let parse = |s: &str| -> toml::Value {
        format!("v = {s}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(s.to_string()))
    };
    if LIST_KEYS.contains(&key) && !raw.trim_start().starts_with('[') {
        return toml::Value::Array(raw.split(',').map(|x| parse(x.trim())).collect());
    }
    parse(raw.trim())
}

/// Settings from `BOL_*` variables. `BOL_CONFIG` names the config file and
/// is not a setting.
pub fn from_env(vars: &BTreeMap<String, String>) -> CliResult<Settings> {
    let mut t = toml::Table::new();
    for (k, v) in vars {
        let Some(key) = k.strip_prefix("BOL_") else {
            continue;
        };
        if key == "CONFIG" {
            continue;
        }
        let key = key.to_ascii_lowercase();
        t.insert(key.clone(), env_value(&key, v));
    }
    from_table(t, "environment")
}

/// The three layers, lowest first.
#[derive(Debug, Clone, Default)]
pub struct Layers {
    pub file: Settings,
    pub env: Settings,
    pub flags: Settings,
}

impl Layers {
    pub fn load(
        config: Option<&Path>,
        vars: &BTreeMap<String, String>,
        flags: Settings,
    ) -> CliResult<Layers> {
        let path = config
            .map(Path::to_path_buf)
            .or_else(|| vars.get("BOL_CONFIG").map(PathBuf::from));
        let file = match path {
            Some(p) => from_toml_file(&p)?,
            None => Settings::default(),
        };
        Ok(Layers {
            file,
            env: from_env(vars)?,
            flags,
        })
    }

    pub fn resolve(&self) -> Settings {
        self.file.clone().merged(&self.env).merged(&self.flags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(kv: &[(&str, &str)]) -> BTreeMap<String, String> {
        kv.iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn env_values_are_typed() {
        let s = from_env(&vars(&[
            ("BOL_JOBS", "3"),
            ("BOL_PHI", "power:p=1.3"),
            ("BOL_RADII", "1,0.5"),
            ("BOL_SEED", "0x5EED"),
            ("HOME", "/root"),
        ]))
        .unwrap();
        assert_eq!(s.jobs, Some(3));
        assert_eq!(s.phi.as_deref(), Some("power:p=1.3"));
        assert_eq!(s.radii, Some(vec![1.0, 0.5]));
        assert_eq!(s.seed, Some(0x5EED));
    }

    #[test]
    fn unknown_env_key_is_a_usage_error() {
        let e = from_env(&vars(&[("BOL_NOPE", "1")])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn flags_beat_env_beat_file() {
        let l = Layers {
            file: Settings {
                dim: Some(1),
                points: Some(20),
                jobs: Some(1),
                ..Default::default()
            },
            env: Settings {
                dim: Some(2),
                jobs: Some(2),
                ..Default::default()
            },
            flags: Settings {
                jobs: Some(3),
                ..Default::default()
            },
        };
        let r = l.resolve();
        assert_eq!((r.points, r.dim, r.jobs), (Some(20), Some(2), Some(3)));
    }

    #[test]
    fn seed_accepts_hex_strings_in_files() {
        let t: toml::Table = "seed = \"0x10\"\nalpha = 0.1".parse().unwrap();
        assert_eq!(from_table(t, "x").unwrap().seed, Some(16));
    }
}
