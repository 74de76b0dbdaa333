//! Built-in grids, so that commands run without input files.

use bol_core::corpus::{corpus_item, CorpusSpec};
use bol_core::grid::{ball_indicator, box_indicator};
use bol_core::GridFunction;

use crate::error::{CliError, CliResult};

pub const NAMES: &str = "staircase, signed, disc, square, corpus:N";

/// 3 on [0,1] and 2 on (1,2]; decomposes into two molecules.
pub fn staircase(h: f64) -> CliResult<GridFunction> {
    let n = cells(2.0, h)?;
    let k = n / 2;
    let v = (0..n).map(|i| if i < k { 3.0 } else { 2.0 }).collect();
    Ok(GridFunction::new(vec![n], h, vec![0.0], v)?)
}

/// `χ_[0,1] − χ_[2,3]`.
pub fn signed(h: f64) -> CliResult<GridFunction> {
    let n = cells(3.0, h)?;
    let (one, two) = (cells(1.0, h)?, cells(2.0, h)?);
    let v = (0..n)
        .map(|i| {
            if i < one {
                1.0
            } else if i >= two {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(GridFunction::new(vec![n], h, vec![0.0], v)?)
}

fn cells(len: f64, h: f64) -> CliResult<usize> {
    let n = len / h;
    if h.is_nan() || h <= 0.0 || (n - n.round()).abs() > 1e-9 * n || n < 1.0 {
        return Err(CliError::Invalid(format!("h = {h} must divide {len}")));
    }
    Ok(n.round() as usize)
}

/// Resolves a fixture name. `h` is the spacing, `radius` the disc radius
/// (and the square's half side), `dim` the dimension of disc and square.
pub fn fixture(
    name: &str,
    h: Option<f64>,
    radius: Option<f64>,
    dim: Option<usize>,
) -> CliResult<GridFunction> {
    let radius = radius.unwrap_or(1.0);
    let dim = dim.unwrap_or(2);
    match name {
        "staircase" => staircase(h.unwrap_or(0.01)),
        "signed" => signed(h.unwrap_or(0.01)),
        "disc" => Ok(ball_indicator(dim, radius, h.unwrap_or(1.0 / 32.0))?.grid),
        "square" => {
            let h = h.unwrap_or(1.0 / 32.0);
            let n = cells(2.0 * radius, h)?;
            Ok(box_indicator(&vec![n; dim], h)?)
        }
        _ => match name.strip_prefix("corpus:") {
            Some(i) => {
                let spec = CorpusSpec::default();
                let i: usize = i.parse().ok().filter(|&i| i < spec.count).ok_or_else(|| {
                    CliError::Invalid(format!("fixture {name:?}: index must be 0..{}", spec.count))
                })?;
                Ok(corpus_item(&spec, i)?)
            }
            None => Err(CliError::Invalid(format!(
                "unknown fixture {name:?}; known: {NAMES}"
            ))),
        },
    }
}

/// Discs and squares at spacing `h` and `h/2`, for the refinement check.
pub fn sobolev_pairs(dim: usize, h: f64) -> CliResult<Vec<(GridFunction, GridFunction)>> {
    let mut out = Vec::new();
    for r in [0.25, 0.5] {
        out.push((
            ball_indicator(dim, r, h)?.grid,
            ball_indicator(dim, r, h / 2.0)?.grid,
        ));
    }
    for side in [0.5, 1.0] {
        let n = cells(side, h)?;
        out.push((
            box_indicator(&vec![n; dim], h)?,
            box_indicator(&vec![2 * n; dim], h / 2.0)?,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase_norms() {
        let f = staircase(0.01).unwrap();
        assert!((f.l1() - 5.0).abs() < 1e-12);
        assert!((f.total_variation() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_names_are_invalid() {
        assert_eq!(
            fixture("blob", None, None, None).unwrap_err().exit_code(),
            3
        );
        assert_eq!(
            fixture("corpus:100", None, None, None)
                .unwrap_err()
                .exit_code(),
            3
        );
        assert!(fixture("corpus:7", None, None, None).is_ok());
    }
}
