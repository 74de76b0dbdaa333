//! Quadrature in logarithmic coordinates.
//!
//! Integrands are passed as `u ↦ ln g(u)` so that factors like `e^{4000}`
//! never leave the exponent. All rules are composite Simpson on uniform
//! nodes; the improper routine grows its window by doubling until a
//! remainder estimate is small or the increments stop shrinking.

use crate::error::{End, Error, Result};
use crate::math::{ceil, exp};

/// Settings for [`improper`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailConfig {
    /// Length of the first window in `u`.
    pub initial_span: f64,
    /// Simpson panels per unit of `u`.
    pub panels_per_unit: usize,
    /// Stop once the remainder estimate is below `rel_tol * total`.
    pub rel_tol: f64,
    /// Give up (and report divergence) past this span.
    pub max_span: f64,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            initial_span: 60.0,
            panels_per_unit: 32,
            rel_tol: 1e-10,
            max_span: 1.0e5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailResult {
    pub value: f64,
    /// Estimated mass beyond `span`.
    pub remainder: f64,
    /// Window actually integrated, `[0, span]`.
    pub span: f64,
    /// Log-slope of the integrand at the end of the window.
    pub end_slope: f64,
}

fn eval(ln_g: &impl Fn(f64) -> f64, u: f64) -> Result<f64> {
    let l = ln_g(u);
    if l.is_nan() || l == f64::INFINITY {
        return Err(Error::Domain(alloc::format!(
            "integrand not finite at u = {u:e}"
        )));
    }
    Ok(exp(l))
}

/// Composite Simpson for `∫_a^b e^{ln_g(u)} du` with `panels` panels.
pub fn simpson_exp<F>(ln_g: F, a: f64, b: f64, panels: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return Ok(0.0);
    }
    let n = panels.max(1) * 2;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = eval(&ln_g, a + h * i as f64)?;
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    let ends = eval(&ln_g, a)? + eval(&ln_g, b)?;
    Ok(h / 3.0 * (ends + 4.0 * odd + 2.0 * even))
}

/// Composite Simpson for a plain (not log) integrand.
pub fn simpson<F>(f: F, a: f64, b: f64, panels: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return 0.0;
    }
    let n = panels.max(1) * 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Trapezoid over tabulated `(x, y)` pairs.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `∫_0^∞ e^{ln_g(u)} du`.
///
/// Windows have lengths `L, L, 2L, 4L, …`. After each window the integrand's
/// log-slope over the last unit of `u` is measured; a nonnegative slope or a
/// per-unit increment that fails to shrink means divergence. Otherwise the
/// remainder is estimated as `g(end)/|slope|`, which is exact for exponential
/// tails and an overestimate for tails that steepen.
pub fn improper<F>(ln_g: F, end: End, cfg: &TailConfig) -> Result<TailResult>
where
    F: Fn(f64) -> f64,
{
    let mut total = 0.0;
    let mut start = 0.0;
    let mut len = cfg.initial_span;
    let mut prev_density = f64::INFINITY;
    let mut windows = 0usize;
    loop {
        let stop = start + len;
        let panels = ceil(len * cfg.panels_per_unit as f64) as usize;
        let incr = simpson_exp(&ln_g, start, stop, panels)?;
        total += incr;
        windows += 1;

        let g_end = ln_g(stop);
        let slope = g_end - ln_g(stop - 1.0);
        if g_end == f64::NEG_INFINITY {
            return Ok(TailResult {
                value: total,
                remainder: 0.0,
                span: stop,
                end_slope: f64::NEG_INFINITY,
            });
        }
        if slope >= 0.0 {
            return Err(Error::Divergence { end, at: stop });
        }
        let remainder = exp(g_end) / -slope;
        if remainder <= cfg.rel_tol * total {
            return Ok(TailResult {
                value: total,
                remainder,
                span: stop,
                end_slope: slope,
            });
        }
        let density = incr / len;
        if density >= prev_density || stop >= cfg.max_span {
            return Err(Error::Divergence { end, at: stop });
        }
        prev_density = density;
        start = stop;
        if windows >= 2 {
            len *= 2.0;
        }
    }
}

/// Integrates over `[0, span]` only; used to compare truncations.
pub fn truncated<F>(ln_g: F, span: f64, panels_per_unit: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let panels = ceil(span * panels_per_unit as f64) as usize;
    simpson_exp(ln_g, 0.0, span, panels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_tail_is_exact() {
        let r = improper(|u| -0.5 * u, End::Infinity, &TailConfig::default()).unwrap();
        assert_relative_eq!(r.value + r.remainder, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn slow_exponential_converges() {
        let r = improper(|u| -0.01 * u, End::Infinity, &TailConfig::default()).unwrap();
        assert_relative_eq!(r.value, 100.0, max_relative = 1e-8);
    }

    #[test]
    fn flat_integrand_diverges() {
        let err = improper(|_| 0.0, End::Zero, &TailConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { end: End::Zero, .. }));
    }

    #[test]
    fn growing_integrand_diverges() {
        assert!(improper(|u| 0.03 * u, End::Infinity, &TailConfig::default()).is_err());
    }

    #[test]
    fn harmonic_tail_diverges() {
        // ∫ du/(1+u) grows like ln u; caught by the span cap
        let cfg = TailConfig {
            max_span: 1e4,
            ..TailConfig::default()
        };
        assert!(improper(|u| -crate::math::ln(1.0 + u), End::Infinity, &cfg).is_err());
    }

    #[test]
    fn simpson_on_cubic_is_exact() {
        assert_relative_eq!(
            simpson(|x| x * x * x, 0.0, 2.0, 3),
            4.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn trapezoid_on_line() {
        assert_relative_eq!(trapezoid(&[0.0, 1.0, 3.0], &[0.0, 1.0, 3.0]), 4.5);
    }
}
