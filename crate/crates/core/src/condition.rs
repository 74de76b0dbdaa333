//! The two-integral embedding condition
//!
//! ```text
//! C(s) = s^{d−1}/Φ⁻¹(s^d) ∫₀^s Ψ(1/t) dt/t + ∫_s^∞ Ψ(1/t) s^{d−1}/(Φ⁻¹(t s^{d−1}) t) dt
//! ```
//!
//! and its supremum over `s > 0`. Both integrals are done in log
//! coordinates (`t = s e^{∓u}`) with [`improper`], so power laws become
//! exponentials in `u` and nothing overflows for huge `s`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{End, Error, Result};
use crate::math::{exp, ln, lsq_slope, powf};
use crate::quad::{improper, simpson_exp, truncated, TailConfig};
use crate::young::{Section5Params, WeightFunction, YoungFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionOptions {
    pub dim: usize,
    pub tail: TailConfig,
    /// Lower limit of the first integral instead of 0.
    pub first_lower: Option<f64>,
}

impl ConditionOptions {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            tail: TailConfig::default(),
            first_lower: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Term {
    pub value: f64,
    pub remainder: f64,
}

fn check_dim(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    Ok(d as f64)
}

/// `s^{d−1}/Φ⁻¹(s^d) ∫_a^s Ψ(1/t) dt/t` with `a = 0` unless overridden.
pub fn first_term(
    s: f64,
    phi: &YoungFunction,
    psi: &WeightFunction,
    opts: &ConditionOptions,
) -> Result<Term> {
    let d = check_dim(opts.dim)?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid("s", "must be positive and finite"));
    }
    let sig = ln(s);
    let pre = (d - 1.0) * sig - phi.ln_inv(d * sig);
    // t = s e^{−y}
    let g = |y: f64| pre + psi.ln_at_recip(sig - y);
    match opts.first_lower {
        Some(a) => {
            if !(a > 0.0) {
                return Err(Error::invalid("first_lower", "must be positive"));
            }
            let span = sig - ln(a);
            if span <= 0.0 {
                return Ok(Term {
                    value: 0.0,
                    remainder: 0.0,
                });
            }
            let panels = ((span * opts.tail.panels_per_unit as f64) as usize).max(64);
            Ok(Term {
                value: simpson_exp(g, 0.0, span, panels)?,
                remainder: 0.0,
            })
        }
        None => {
            if psi.zero_exponent() <= 0.0 {
                return Err(Error::Divergence {
                    end: End::Zero,
                    at: 0.0,
                });
            }
            let r = improper(g, End::Zero, &opts.tail)?;
            Ok(Term {
                value: r.value,
                remainder: r.remainder,
            })
        }
    }
}

/// `ln` of the second integrand in `u = ln(t/s)`.
fn second_integrand<'a>(
    s: f64,
    phi: &'a YoungFunction,
    psi: &'a WeightFunction,
    d: f64,
) -> impl Fn(f64) -> f64 + 'a {
    let sig = ln(s);
    move |u: f64| psi.ln_at_recip(sig + u) + (d - 1.0) * sig - phi.ln_inv(d * sig + u)
}

/// `∫_s^∞ Ψ(1/t) s^{d−1}/(Φ⁻¹(t s^{d−1}) t) dt`.
pub fn second_term(
    s: f64,
    phi: &YoungFunction,
    psi: &WeightFunction,
    opts: &ConditionOptions,
) -> Result<Term> {
    let d = check_dim(opts.dim)?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid("s", "must be positive and finite"));
    }
    let r = improper(second_integrand(s, phi, psi, d), End::Infinity, &opts.tail)?;
    Ok(Term {
        value: r.value,
        remainder: r.remainder,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionValue {
    pub s: f64,
    pub value: f64,
    pub first: f64,
    pub second: f64,
    /// Estimated truncation error of both integrals together.
    pub remainder: f64,
}

pub fn condition_value(
    s: f64,
    phi: &YoungFunction,
    psi: &WeightFunction,
    opts: &ConditionOptions,
) -> Result<ConditionValue> {
    let a = first_term(s, phi, psi, opts)?;
    let b = second_term(s, phi, psi, opts)?;
    Ok(ConditionValue {
        s,
        value: a.value + b.value,
        first: a.value,
        second: b.value,
        remainder: a.remainder + b.remainder,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Verdict {
    Bounded,
    Unbounded,
    Inconclusive,
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Verdict::Bounded => "bounded",
            Verdict::Unbounded => "unbounded",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Outward slope at or below which the sup is called bounded.
pub const BOUNDED_SLOPE: f64 = 0.02;
/// Outward slope at or above which it is called unbounded.
pub const UNBOUNDED_SLOPE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Divergent {
    pub s: f64,
    pub end: End,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionReport {
    pub dim: usize,
    pub s_grid: Vec<f64>,
    /// `+∞` where an integral diverges.
    #[cfg_attr(feature = "serde", serde(with = "crate::ser::ext_vec"))]
    pub values: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(with = "crate::ser::ext_vec"))]
    pub first_terms: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(with = "crate::ser::ext_vec"))]
    pub second_terms: Vec<f64>,
    pub remainders: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(with = "crate::ser::ext"))]
    pub d_hat: f64,
    pub argmax_s: f64,
    pub verdict: Verdict,
    /// `d ln C / d ln s` over the first and last decade of the grid.
    #[cfg_attr(feature = "serde", serde(with = "crate::ser::ext_pair"))]
    pub tail_slopes: (f64, f64),
    /// Whether the slopes were taken on the first term alone, because the
    /// second diverged.
    pub slopes_from_first_term: bool,
    pub divergence: Option<Divergent>,
}

fn end_slopes(s: &[f64], v: &[f64]) -> (f64, f64) {
    let ls: Vec<f64> = s.iter().map(|&x| ln(x)).collect();
    let lv: Vec<f64> = v.iter().map(|&x| ln(x)).collect();
    let n = ls.len();
    let decade = ln(10.0);
    let lo_end = ls
        .iter()
        .position(|&x| x > ls[0] + decade * (1.0 + 1e-9))
        .unwrap_or(n)
        .max(2);
    let hi_start = ls
        .iter()
        .rposition(|&x| x < ls[n - 1] - decade * (1.0 + 1e-9))
        .map(|i| i + 1)
        .unwrap_or(0)
        .min(n - 2);
    (
        lsq_slope(&ls[..lo_end], &lv[..lo_end]),
        lsq_slope(&ls[hi_start..], &lv[hi_start..]),
    )
}

/// Evaluates the condition on `n_points` log-spaced values of `s` and
/// classifies the supremum by the outward log-slopes at both ends.
pub fn condition_sup(
    phi: &YoungFunction,
    psi: &WeightFunction,
    s_range: (f64, f64),
    n_points: usize,
    opts: &ConditionOptions,
) -> Result<ConditionReport> {
    let (lo, hi) = s_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid("s_range", "need 0 < smin < smax < ∞"));
    }
    if n_points < 16 {
        return Err(Error::invalid(
            "points",
            format!("need at least 16, got {n_points}"),
        ));
    }
    let s_grid = crate::young::log_grid(lo, hi, n_points);
    let mut values = Vec::with_capacity(n_points);
    let mut firsts = Vec::with_capacity(n_points);
    let mut seconds = Vec::with_capacity(n_points);
    let mut remainders = Vec::with_capacity(n_points);
    let mut divergence: Option<Divergent> = None;
    for &s in &s_grid {
        let a = match first_term(s, phi, psi, opts) {
            Ok(t) => t,
            Err(Error::Divergence { end, .. }) => {
                divergence.get_or_insert(Divergent { s, end });
                Term {
                    value: f64::INFINITY,
                    remainder: 0.0,
                }
            }
            Err(e) => return Err(e),
        };
        let b = match second_term(s, phi, psi, opts) {
            Ok(t) => t,
            Err(Error::Divergence { end, .. }) => {
                divergence.get_or_insert(Divergent { s, end });
                Term {
                    value: f64::INFINITY,
                    remainder: 0.0,
                }
            }
            Err(e) => return Err(e),
        };
        firsts.push(a.value);
        seconds.push(b.value);
        values.push(a.value + b.value);
        remainders.push(a.remainder + b.remainder);
    }

    let (mut d_hat, mut argmax_s) = (f64::NEG_INFINITY, s_grid[0]);
    for (&s, &v) in s_grid.iter().zip(&values) {
        if v > d_hat {
            d_hat = v;
            argmax_s = s;
        }
    }

    let all_finite = values.iter().all(|v| v.is_finite());
    let first_finite = firsts.iter().all(|v| v.is_finite() && *v > 0.0);
    let (tail_slopes, from_first) = if all_finite {
        (end_slopes(&s_grid, &values), false)
    } else if first_finite {
        (end_slopes(&s_grid, &firsts), true)
    } else {
        ((f64::NAN, f64::NAN), false)
    };

    let outward = (-tail_slopes.0).max(tail_slopes.1);
    let verdict = if divergence.is_some() || outward >= UNBOUNDED_SLOPE {
        Verdict::Unbounded
    } else if outward <= BOUNDED_SLOPE {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    };

    Ok(ConditionReport {
        dim: opts.dim,
        s_grid,
        values,
        first_terms: firsts,
        second_terms: seconds,
        remainders,
        d_hat,
        argmax_s,
        verdict,
        tail_slopes,
        slopes_from_first_term: from_first,
        divergence,
    })
}

/// `p/(2−p) + p/(p−1)`: the condition at the critical exponent, `d = 2`.
pub fn power_closed_form_d2(p: f64) -> f64 {
    p / (2.0 - p) + p / (p - 1.0)
}

/// `1/θ(p,d) + 1/((d−1)(1−1/p))`, the general critical-case constant.
pub fn power_closed_form(p: f64, d: usize) -> f64 {
    let d = d as f64;
    1.0 / (d * (1.0 / p + 1.0 / d - 1.0)) + 1.0 / ((d - 1.0) * (1.0 - 1.0 / p))
}

fn section5_pair(alpha: f64) -> Result<(YoungFunction, WeightFunction, Section5Params)> {
    let phi = YoungFunction::section5(alpha)?;
    let sp = *phi.section5_params().expect("section5 preset");
    let psi = WeightFunction::inverse_square(phi.clone());
    Ok((phi, psi, sp))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Section5First {
    pub s: f64,
    /// `(s/Φ⁻¹(s²)) ∫_r^s dt/(t²Φ⁻¹(1/t²))`.
    pub value: f64,
    /// `β = α/ln ln s`.
    pub beta: f64,
    /// `s^{β−1} ∫_r^s t^{−β} dt`.
    pub intermediate: f64,
    /// `1/(1−β)`.
    pub cap: f64,
    pub pass: bool,
}

pub fn section5_first_bound(alpha: f64, s_list: &[f64]) -> Result<Vec<Section5First>> {
    let (phi, psi, sp) = section5_pair(alpha)?;
    let mut opts = ConditionOptions::new(2);
    opts.first_lower = Some(sp.r);
    let mut out = Vec::with_capacity(s_list.len());
    for &s in s_list {
        if !(s >= sp.r * (1.0 - 1e-12)) {
            return Err(Error::invalid(
                "s",
                format!("must be at least r = {:e}, got {s:e}", sp.r),
            ));
        }
        let value = first_term(s, &phi, &psi, &opts)?.value;
        let beta = alpha / ln(ln(s));
        let intermediate = (1.0 - powf(sp.r / s, 1.0 - beta)) / (1.0 - beta);
        let cap = 1.0 / (1.0 - beta);
        out.push(Section5First {
            s,
            value,
            beta,
            intermediate,
            cap,
            pass: value < 2.0,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Section5Second {
    pub s: f64,
    pub value: f64,
    /// Span in `x = ln t` past `ln s` used for `value`.
    pub span: f64,
    /// The same integral over twice the span.
    pub value_doubled: f64,
    pub rel_change: f64,
    /// Mass of the dominating integrand beyond the span.
    pub dominating_remainder: f64,
    pub converged: bool,
}

/// Exponent of the dominating integrand in `x = ln t`, with `k = ln s`.
pub fn section5_dominating_exponent(alpha: f64, k: f64, x: f64) -> f64 {
    let lx = ln(x);
    let l2 = core::f64::consts::LN_2;
    alpha * ((k - x) * lx + 2.0 * x * l2) / (2.0 * (lx - l2) * lx)
}

/// `∫_s^∞ s/(t² Φ⁻¹(ts) Φ⁻¹(1/t²)) dt`, checked by doubling the span.
pub fn section5_second_bound(alpha: f64, s: f64, tail: &TailConfig) -> Result<Section5Second> {
    let (phi, psi, sp) = section5_pair(alpha)?;
    if !(s >= sp.r * (1.0 - 1e-12)) {
        return Err(Error::invalid(
            "s",
            format!("must be at least r = {:e}, got {s:e}", sp.r),
        ));
    }
    let g = second_integrand(s, &phi, &psi, 2.0);
    let r = improper(&g, End::Infinity, tail)?;
    let value_doubled = truncated(&g, 2.0 * r.span, tail.panels_per_unit)?;
    let value = truncated(&g, r.span, tail.panels_per_unit)?;
    let rel_change = (value_doubled - value).abs() / value_doubled;

    let k = ln(s);
    let x = k + r.span;
    let gx = section5_dominating_exponent(alpha, k, x);
    let slope = gx - section5_dominating_exponent(alpha, k, x - 1.0);
    let dominating_remainder = if slope < 0.0 {
        exp(gx) / -slope
    } else {
        f64::INFINITY
    };
    Ok(Section5Second {
        s,
        value,
        span: r.span,
        value_doubled,
        rel_change,
        dominating_remainder,
        converged: rel_change < 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::young::critical_theta;
    use approx::assert_relative_eq;

    fn power_pair(p: f64, theta: f64) -> (YoungFunction, WeightFunction) {
        (
            YoungFunction::power(p).unwrap(),
            WeightFunction::power(theta),
        )
    }

    #[test]
    fn critical_power_value_is_constant() {
        let p = 1.3;
        let (phi, psi) = power_pair(p, critical_theta(p, 2));
        let opts = ConditionOptions::new(2);
        for s in [1e-3, 1.0, 1e5] {
            let v = condition_value(s, &phi, &psi, &opts).unwrap();
            assert_relative_eq!(v.value, power_closed_form_d2(p), max_relative = 1e-6);
        }
        assert_relative_eq!(power_closed_form_d2(1.3), 6.190476, max_relative = 1e-6);
        assert_relative_eq!(
            power_closed_form(1.3, 2),
            power_closed_form_d2(1.3),
            max_relative = 1e-14
        );
    }

    #[test]
    fn off_critical_first_term_grows() {
        let (phi, psi) = power_pair(1.3, 0.8);
        let opts = ConditionOptions::new(2);
        assert!(matches!(
            second_term(1.0, &phi, &psi, &opts),
            Err(Error::Divergence {
                end: End::Infinity,
                ..
            })
        ));
        let a = first_term(1.0, &phi, &psi, &opts).unwrap().value;
        let b = first_term(10.0, &phi, &psi, &opts).unwrap().value;
        assert_relative_eq!(
            ln(b / a) / ln(10.0),
            0.8 - critical_theta(1.3, 2),
            max_relative = 1e-6
        );
    }

    #[test]
    fn bounded_verdict_for_critical_pair() {
        let (phi, psi) = power_pair(1.3, critical_theta(1.3, 2));
        let rep = condition_sup(&phi, &psi, (1e-6, 1e12), 97, &ConditionOptions::new(2)).unwrap();
        assert_eq!(rep.verdict, Verdict::Bounded);
        assert_relative_eq!(rep.d_hat, power_closed_form_d2(1.3), max_relative = 1e-2);
    }

    #[test]
    fn too_few_points_rejected() {
        let (phi, psi) = power_pair(1.3, 0.5);
        assert!(condition_sup(&phi, &psi, (1.0, 10.0), 8, &ConditionOptions::new(2)).is_err());
    }

    #[test]
    fn first_term_vanishes_as_s_shrinks_with_bounded_weight() {
        let (phi, psi) = power_pair(1.5, 0.5);
        let opts = ConditionOptions::new(2);
        let a = first_term(1e-8, &phi, &psi, &opts).unwrap().value;
        let b = first_term(1e-4, &phi, &psi, &opts).unwrap().value;
        assert!(a < b);
    }

    #[test]
    fn section5_first_bound_small_cases() {
        let sp = Section5Params::new(0.1).unwrap();
        let r = section5_first_bound(0.1, &[sp.r, 10.0 * sp.r]).unwrap();
        assert_eq!(r[0].value, 0.0);
        assert!(r.iter().all(|x| x.pass));
        let r = section5_first_bound(0.13, &[sp.r * sp.r]).unwrap();
        assert!(r[0].pass, "{:?}", r[0]);
        assert!(section5_first_bound(0.1, &[1.0]).is_err());
    }

    #[test]
    fn section5_second_bound_converges() {
        let sp = Section5Params::new(0.1).unwrap();
        let r = section5_second_bound(0.1, sp.r, &TailConfig::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.value.is_finite() && r.value > 0.0);
        assert!(r.dominating_remainder < 1e-6 * r.value, "{r:?}");
    }

    #[test]
    fn section5_second_bound_degenerates_with_alpha() {
        let sp = Section5Params::new(1e-9).unwrap();
        let err = section5_second_bound(1e-9, sp.r, &TailConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }
}
