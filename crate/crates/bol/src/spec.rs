//! The function-spec mini-grammar: `name` or `name:key=value,key=value`.
//!
//! Young functions:
//!
//! * `power:p=P` (P > 1), `linear`;
//! * `section5:alpha=A` (0 < A < e⁻²);
//! * `table:file=PATH`, PATH a two-column CSV `t,Φ(t)`.
//!
//! Weights (an optional `scale=C` multiplies any of them):
//!
//! * `powerweight:theta=T`, Ψ(t) = t^{−T};
//! * `section5:alpha=A`, Ψ(t) = t/Φ⁻¹(t²) for the `section5` Φ;
//! * `inversesquare:p=P`, Ψ(t) = t/Φ⁻¹(t²) for `power:p=P`.

use std::collections::BTreeMap;
use std::path::Path;

use bol_core::{WeightFunction, YoungFunction};

use crate::error::{CliError, CliResult};

fn invalid(spec: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("function spec {spec:?}: {why}"))
}

struct Parsed<'a> {
    name: &'a str,
    args: BTreeMap<&'a str, &'a str>,
}

fn split(spec: &str) -> CliResult<Parsed<'_>> {
    let spec_t = spec.trim();
    let (name, rest) = match spec_t.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (spec_t, None),
    };
    if name.is_empty() {
        return Err(invalid(spec, "missing name"));
    }
    let mut args = BTreeMap::new();
    if let Some(rest) = rest {
        for kv in rest.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| invalid(spec, format!("expected key=value, got {kv:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(invalid(spec, format!("empty key or value in {kv:?}")));
            }
            if args.insert(k, v).is_some() {
                return Err(invalid(spec, format!("key {k:?} given twice")));
            }
        }
    }
    Ok(Parsed { name, args })
}

impl Parsed<'_> {
    fn number(&mut self, spec: &str, key: &str) -> CliResult<f64> {
        let v = self
            .args
            .remove(key)
            .ok_or_else(|| invalid(spec, format!("missing {key}=")))?;
        let x: f64 = v
            .parse()
            .map_err(|_| invalid(spec, format!("{key}={v} is not a number")))?;
        if !x.is_finite() {
            return Err(invalid(spec, format!("{key} must be finite")));
        }
        Ok(x)
    }

    fn optional(&mut self, spec: &str, key: &str) -> CliResult<Option<f64>> {
        if self.args.contains_key(key) {
            self.number(spec, key).map(Some)
        } else {
            Ok(None)
        }
    }

    fn done(self, spec: &str) -> CliResult<()> {
        match self.args.keys().next() {
            Some(k) => Err(invalid(
                spec,
                format!("unknown key {k:?} for {}", self.name),
            )),
            None => Ok(()),
        }
    }
}

/// Reads a `t,Φ(t)` table; a first line that does not parse is a header.
pub fn read_table(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("table {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cols.as_slice() {
            [a, b] => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => out.push(p),
            None if out.is_empty() && i == 0 => continue,
            None => {
                return Err(CliError::Invalid(format!(
                    "table {} line {}: expected two numbers",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

pub fn parse_young(spec: &str) -> CliResult<YoungFunction> {
    let mut p = split(spec)?;
    let phi = match p.name {
        "power" => YoungFunction::power(p.number(spec, "p")?)?,
        "linear" => YoungFunction::linear(),
        "section5" => YoungFunction::section5(p.number(spec, "alpha")?)?,
        "table" => {
            let file = p
                .args
                .remove("file")
                .ok_or_else(|| invalid(spec, "missing file="))?;
            YoungFunction::table(&read_table(Path::new(file))?)?
        }
        other => return Err(invalid(spec, format!("unknown Young function {other:?}"))),
    };
    p.done(spec)?;
    Ok(phi)
}

pub fn parse_weight(spec: &str) -> CliResult<WeightFunction> {
    let mut p = split(spec)?;
    let scale = p.optional(spec, "scale")?;
    let psi = match p.name {
        "powerweight" => WeightFunction::power(p.number(spec, "theta")?),
        "section5" => {
            WeightFunction::inverse_square(YoungFunction::section5(p.number(spec, "alpha")?)?)
        }
        "inversesquare" => {
            WeightFunction::inverse_square(YoungFunction::power(p.number(spec, "p")?)?)
        }
        other => return Err(invalid(spec, format!("unknown weight {other:?}"))),
    };
    p.done(spec)?;
    match scale {
        Some(c) => Ok(psi.scaled(c)?),
        None => Ok(psi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_presets() {
        assert_eq!(
            parse_young("power:p=1.3").unwrap().to_string(),
            YoungFunction::power(1.3).unwrap().to_string()
        );
        assert!(parse_young("section5:alpha=0.1")
            .unwrap()
            .section5_params()
            .is_some());
        assert!(parse_weight("powerweight:theta=0.5385").is_ok());
        assert!(parse_weight("powerweight:theta=0.5,scale=2").is_ok());
        assert!(parse_weight("section5:alpha=0.1").is_ok());
    }

    #[test]
    fn rejects_malformed() {
        for s in [
            "",
            "power",
            "power:p",
            "power:p=x",
            "power:p=1.3,q=2",
            "power:p=0.5",
            "cubic:p=3",
            "section5:alpha=0.2",
        ] {
            let e = parse_young(s).unwrap_err();
            assert_eq!(e.exit_code(), 3, "{s}");
        }
        assert_eq!(
            parse_weight("powerweight:theta=1,theta=2")
                .unwrap_err()
                .exit_code(),
            3
        );
    }
}
