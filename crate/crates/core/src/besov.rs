//! The Besov–Orlicz norm `‖f‖_Φ + ∫₀^∞ Ψ(t) ω_Φ(f, t) dt/t`.
//!
//! The integral is split at `t_min` and `t_max`:
//!
//! * on `[t_min, t_max]` a trapezoid rule on a log grid over the tabulated
//!   lattice modulus;
//! * below `t_min` the modulus is continued linearly from its one-cell value,
//!   and separately bounded by `2‖f‖∞/Φ⁻¹(2‖f‖∞/(t·TV))`, which reduces to
//!   `t·TV` for L¹; that bound is reported as `tail_bound`;
//! * above `t_max` (past the support diameter) the lattice modulus is
//!   constant, so that piece is integrated exactly.

use crate::error::{End, Error, Result};
use crate::grid::GridFunction;
use crate::math::{exp, ln};
use crate::orlicz::{luxemburg_norm, ShiftProfile};
use crate::quad::{improper, trapezoid, TailConfig};
use crate::young::{WeightFunction, YoungFunction};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureConfig {
    /// Defaults to the grid spacing.
    pub t_min: Option<f64>,
    /// Defaults to ten support diameters.
    pub t_max: Option<f64>,
    pub nodes: usize,
    pub rel_tol: f64,
    pub tail: TailConfig,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            t_min: None,
            t_max: None,
            nodes: 512,
            rel_tol: 0.05,
            tail: TailConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BesovNorm {
    pub orlicz_part: f64,
    pub seminorm_part: f64,
    pub total: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Rigorous bound on the part of the seminorm below `t_min`.
    pub tail_bound: f64,
    pub converged: bool,
    /// The three pieces of `seminorm_part`.
    pub head: f64,
    pub body: f64,
    pub tail: f64,
}

impl BesovNorm {
    fn zero(t_min: f64, t_max: f64) -> Self {
        Self {
            orlicz_part: 0.0,
            seminorm_part: 0.0,
            total: 0.0,
            t_min,
            t_max,
            tail_bound: 0.0,
            converged: true,
            head: 0.0,
            body: 0.0,
            tail: 0.0,
        }
    }
}

fn ln_psi(psi: &WeightFunction, t: f64) -> f64 {
    psi.ln_at_recip(-ln(t))
}

/// `∫_{t0}^∞ Ψ(t) dt/t`.
pub fn weight_tail(psi: &WeightFunction, t0: f64, cfg: &TailConfig) -> Result<f64> {
    let l0 = ln(t0);
    Ok(improper(|u| psi.ln_at_recip(-(l0 + u)), End::Infinity, cfg)?.value)
}

/// Analytic bound on `∫₀^{t0} Ψ(t) ω(t) dt/t` from `ω(t) ≤ 2m/Φ⁻¹(2m/(t·tv))`.
pub fn head_bound(
    psi: &WeightFunction,
    phi: &YoungFunction,
    linf: f64,
    tv: f64,
    t0: f64,
    cfg: &TailConfig,
) -> Result<f64> {
    if linf == 0.0 || tv == 0.0 {
        return Ok(0.0);
    }
    let (l0, lm, ltv) = (ln(t0), ln(2.0 * linf), ln(tv));
    let g = |y: f64| {
        let lt = l0 - y;
        psi.ln_at_recip(-lt) + lm - phi.ln_inv(lm - lt - ltv)
    };
    Ok(improper(g, End::Zero, cfg)?.value)
}

pub fn besov_orlicz_norm(
    f: &GridFunction,
    phi: &YoungFunction,
    psi: &WeightFunction,
    quad: &QuadratureConfig,
) -> Result<BesovNorm> {
    let h = f.spacing();
    let diam = f.support_diameter();
    let t_min = quad.t_min.unwrap_or(h);
    let t_max = quad.t_max.unwrap_or(10.0 * diam.max(h));
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(Error::invalid("t_min/t_max", "need 0 < t_min < t_max"));
    }
    if quad.nodes < 2 {
        return Err(Error::invalid("nodes", "need at least 2"));
    }
    if f.is_zero() {
        return Ok(BesovNorm::zero(t_min, t_max));
    }
    let orlicz_part = luxemburg_norm(f, phi)?.norm;
    let profile = ShiftProfile::new(f, phi, t_max)?;

    let (la, lb) = (ln(t_min), ln(t_max));
    let n = quad.nodes;
    let us: Vec<f64> = (0..n)
        .map(|i| la + (lb - la) * i as f64 / (n - 1) as f64)
        .collect();
    let ys: Vec<f64> = us
        .iter()
        .map(|&u| exp(ln_psi(psi, exp(u))) * profile.omega(exp(u)))
        .collect();
    let body = trapezoid(&us, &ys);

    // linear continuation of the one-cell modulus below t_min
    let w_min = profile.omega(t_min);
    let head = if w_min == 0.0 {
        0.0
    } else {
        let c = ln(w_min);
        improper(|y| psi.ln_at_recip(y - la) - y + c, End::Zero, &quad.tail)?.value
    };

    let w_sat = profile.omega(t_max);
    let tail = if w_sat == 0.0 {
        0.0
    } else {
        w_sat * weight_tail(psi, t_max, &quad.tail)?
    };

    let tail_bound = head_bound(psi, phi, f.linf(), f.total_variation(), t_min, &quad.tail)?;
    let seminorm_part = head + body + tail;
    Ok(BesovNorm {
        orlicz_part,
        seminorm_part,
        total: orlicz_part + seminorm_part,
        t_min,
        t_max,
        tail_bound,
        converged: tail_bound <= quad.rel_tol * seminorm_part,
        head,
        body,
        tail,
    })
}

/// `‖f‖_{B} / (‖f‖₁ + TV(f))`, with the norm it was computed from.
pub fn besov_bv_ratio(
    f: &GridFunction,
    phi: &YoungFunction,
    psi: &WeightFunction,
    quad: &QuadratureConfig,
) -> Result<(f64, BesovNorm)> {
    let bv = f.l1() + f.total_variation();
    if bv == 0.0 {
        return Err(Error::invalid("f", "BV norm is zero"));
    }
    let b = besov_orlicz_norm(f, phi, psi, quad)?;
    Ok((b.total / bv, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::interval_indicator;
    use crate::math::powf;
    use approx::assert_relative_eq;

    #[test]
    fn zero_function() {
        let f = GridFunction::zeros(alloc::vec![4], 0.1, alloc::vec![0.0]).unwrap();
        let b = besov_orlicz_norm(
            &f,
            &YoungFunction::power(2.0).unwrap(),
            &WeightFunction::power(0.3),
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert_eq!(b.total, 0.0);
    }

    #[test]
    fn classical_interval_matches_closed_form() {
        let (p, theta) = (1.3, 0.2);
        let f = interval_indicator(0.0, 1.0, 1e-3, 1.0).unwrap();
        let phi = YoungFunction::power(p).unwrap();
        let psi = WeightFunction::power(theta);
        let b = besov_orlicz_norm(&f, &phi, &psi, &QuadratureConfig::default()).unwrap();
        let exact = powf(2.0, 1.0 / p) * (1.0 / (1.0 / p - theta) + 1.0 / theta);
        assert_relative_eq!(b.seminorm_part, exact, max_relative = 1e-2);
        assert_relative_eq!(b.orlicz_part, 1.0, max_relative = 1e-9);
        assert!(b.tail_bound > 0.0);
        assert!(b.converged);
    }

    #[test]
    fn homogeneous_for_power_phi() {
        let f = interval_indicator(0.0, 1.0, 0.01, 1.0).unwrap();
        let phi = YoungFunction::power(2.0).unwrap();
        let psi = WeightFunction::power(0.25);
        let q = QuadratureConfig::default();
        let a = besov_orlicz_norm(&f, &phi, &psi, &q).unwrap();
        let b = besov_orlicz_norm(&f.scale(2.0), &phi, &psi, &q).unwrap();
        assert_relative_eq!(b.total, 2.0 * a.total, max_relative = 1e-9);
    }

    #[test]
    fn weight_without_decay_diverges() {
        let f = interval_indicator(0.0, 1.0, 0.01, 1.0).unwrap();
        let err = besov_orlicz_norm(
            &f,
            &YoungFunction::power(2.0).unwrap(),
            &WeightFunction::power(0.0),
            &QuadratureConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::Divergence {
                end: End::Infinity,
                ..
            }
        ));
        let err = besov_orlicz_norm(
            &f,
            &YoungFunction::power(2.0).unwrap(),
            &WeightFunction::power(1.0),
            &QuadratureConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Divergence { end: End::Zero, .. }));
    }

    #[test]
    fn ratio_rejects_zero() {
        let f = GridFunction::zeros(alloc::vec![4], 0.1, alloc::vec![0.0]).unwrap();
        assert!(besov_bv_ratio(
            &f,
            &YoungFunction::power(2.0).unwrap(),
            &WeightFunction::power(0.3),
            &QuadratureConfig::default()
        )
        .is_err());
    }
}
