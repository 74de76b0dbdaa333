//! Young functions Φ and weights Ψ.
//!
//! Every preset knows `ln Φ⁻¹` as a function of `ln s`, which is what the
//! condition integrals consume; Φ itself is obtained by bisection where no
//! closed form exists.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::{exp, ln, powf, E};
use crate::root::{solve_increasing_real, BisectionConfig};

/// Parameters of the three-piece slowly varying example.
///
/// `Φ⁻¹(t) = t·e^{α u/ln u}` with `u = ln(1/√t)` below `1/r`, linear
/// `p_lin·t + q_lin` on `[1/r, r)`, and `t·e^{−α v/ln v}` with `v = ln √t`
/// from `r` on, where `r = e^{2e²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Section5Params {
    pub alpha: f64,
    pub r: f64,
    pub p_lin: f64,
    pub q_lin: f64,
}

impl Section5Params {
    pub fn new(alpha: f64) -> Result<Self> {
        let cap = exp(-2.0);
        if !(alpha > 0.0 && alpha < cap) {
            return Err(Error::invalid(
                "alpha",
                format!("must lie in (0, e^-2 = {cap:.6}), got {alpha}"),
            ));
        }
        let ln_r = 2.0 * E * E;
        let r = exp(ln_r);
        // branch values at the two breakpoints, where u = v = e² and ln u = 2
        let hi = r * exp(-alpha * E * E / 2.0);
        let lo = exp(alpha * E * E / 2.0) / r;
        let p_lin = (hi - lo) / (r - 1.0 / r);
        // avoids the cancellation in hi − p·r
        let q_lin = (r * lo - hi / r) / (r - 1.0 / r);
        Ok(Self {
            alpha,
            r,
            p_lin,
            q_lin,
        })
    }

    pub fn ln_r(&self) -> f64 {
        ln(self.r)
    }

    /// `α·ln r / ln ln r`, which must not exceed one.
    pub fn admissibility(&self) -> f64 {
        let l = self.ln_r();
        self.alpha * l / ln(l)
    }

    fn ln_inv(&self, ls: f64) -> f64 {
        let lr = self.ln_r();
        if ls < -lr {
            let u = -0.5 * ls;
            ls + self.alpha * u / ln(u)
        } else if ls < lr {
            ln(self.p_lin * exp(ls) + self.q_lin)
        } else {
            let v = 0.5 * ls;
            ls - self.alpha * v / ln(v)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum YoungKind {
    /// `Φ(t) = t^p`.
    Power {
        p: f64,
    },
    /// `Φ(t) = t`: not a Young function, but its gauge is the L¹ norm.
    Linear,
    Section5(Section5Params),
    /// Knots in log-log coordinates, interpolated linearly and extended with
    /// the end slopes.
    Table {
        ln_t: Vec<f64>,
        ln_phi: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct YoungFunction {
    pub kind: YoungKind,
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::invalid(
                "p",
                format!("power Young functions need p > 1, got {p}"),
            ));
        }
        Ok(Self {
            kind: YoungKind::Power { p },
        })
    }

    pub fn linear() -> Self {
        Self {
            kind: YoungKind::Linear,
        }
    }

    pub fn section5(alpha: f64) -> Result<Self> {
        Ok(Self {
            kind: YoungKind::Section5(Section5Params::new(alpha)?),
        })
    }

    /// Tabulated Φ from `(t, Φ(t))` pairs, both columns strictly increasing
    /// and positive.
    pub fn table(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("table", "need at least two knots"));
        }
        let mut ln_t = Vec::with_capacity(points.len());
        let mut ln_phi = Vec::with_capacity(points.len());
        for (i, &(t, v)) in points.iter().enumerate() {
            if !(t > 0.0 && v > 0.0 && t.is_finite() && v.is_finite()) {
                return Err(Error::invalid(
                    "table",
                    format!("knot {i} must be positive and finite"),
                ));
            }
            if i > 0 && (t <= points[i - 1].0 || v <= points[i - 1].1) {
                return Err(Error::invalid(
                    "table",
                    format!("knot {i} breaks strict monotonicity"),
                ));
            }
            ln_t.push(ln(t));
            ln_phi.push(ln(v));
        }
        let first = (ln_phi[1] - ln_phi[0]) / (ln_t[1] - ln_t[0]);
        let n = ln_t.len();
        let last = (ln_phi[n - 1] - ln_phi[n - 2]) / (ln_t[n - 1] - ln_t[n - 2]);
        if first < 1.0 || last < 1.0 {
            return Err(Error::invalid(
                "table",
                "end log-slopes below 1 cannot extend to a Young function",
            ));
        }
        Ok(Self {
            kind: YoungKind::Table { ln_t, ln_phi },
        })
    }

    pub fn section5_params(&self) -> Option<&Section5Params> {
        match &self.kind {
            YoungKind::Section5(p) => Some(p),
            _ => None,
        }
    }

    /// `ln Φ⁻¹(e^{ls})`.
    pub fn ln_inv(&self, ls: f64) -> f64 {
        if ls == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            YoungKind::Power { p } => ls / p,
            YoungKind::Linear => ls,
            YoungKind::Section5(sp) => sp.ln_inv(ls),
            YoungKind::Table { ln_t, ln_phi } => interp(ln_phi, ln_t, ls),
        }
    }

    /// `ln Φ(e^{lt})`.
    pub fn ln_eval(&self, lt: f64) -> f64 {
        if lt == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            YoungKind::Power { p } => p * lt,
            YoungKind::Linear => lt,
            YoungKind::Table { ln_t, ln_phi } => interp(ln_t, ln_phi, lt),
            YoungKind::Section5(sp) => {
                // Φ⁻¹(s) ≤ s·e^{...}, so ln s is within a few units of lt
                solve_increasing_real(|ls| sp.ln_inv(ls), lt, lt, &BisectionConfig::default())
                    .map(|r| r.x)
                    .unwrap_or(f64::NAN)
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            YoungKind::Power { p } => powf(t, *p),
            YoungKind::Linear => t,
            _ if t <= 0.0 => 0.0,
            _ => exp(self.ln_eval(ln(t))),
        }
    }

    pub fn inv(&self, s: f64) -> f64 {
        match &self.kind {
            YoungKind::Power { p } => powf(s, 1.0 / p),
            YoungKind::Linear => s,
            YoungKind::Section5(sp) if s >= 1.0 / sp.r && s < sp.r => sp.p_lin * s + sp.q_lin,
            _ if s <= 0.0 => 0.0,
            _ => exp(self.ln_inv(ln(s))),
        }
    }

    /// Asymptotic order of Φ at 0 and at ∞ (the `g` in `Φ(t) ≈ t^g`).
    pub fn growth_exponents(&self) -> (f64, f64) {
        match &self.kind {
            YoungKind::Power { p } => (*p, *p),
            YoungKind::Linear | YoungKind::Section5(_) => (1.0, 1.0),
            YoungKind::Table { ln_t, ln_phi } => {
                let n = ln_t.len();
                (
                    (ln_phi[1] - ln_phi[0]) / (ln_t[1] - ln_t[0]),
                    (ln_phi[n - 1] - ln_phi[n - 2]) / (ln_t[n - 1] - ln_t[n - 2]),
                )
            }
        }
    }

    /// Order of Φ near ∞, when one exists.
    pub fn growth_exponent_hint(&self) -> Option<f64> {
        Some(self.growth_exponents().1)
    }
}

impl fmt::Display for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            YoungKind::Power { p } => write!(f, "power:p={p}"),
            YoungKind::Linear => f.write_str("linear"),
            YoungKind::Section5(sp) => write!(f, "section5:alpha={}", sp.alpha),
            YoungKind::Table { ln_t, .. } => write!(f, "table:{} knots", ln_t.len()),
        }
    }
}

// piecewise-linear y(x) with linear extrapolation
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let i = match xs.iter().position(|&k| k > x) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => n - 2,
    }
    .min(n - 2);
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WeightKind {
    /// `Ψ(t) = t^{−θ}`.
    Power { theta: f64 },
    /// `Ψ(t) = t/Φ⁻¹(t²)`.
    InverseSquare { phi: YoungFunction },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightFunction {
    pub kind: WeightKind,
    /// Constant factor in front of Ψ.
    pub scale: f64,
    /// Left end of the domain when Ψ has no limit at 0.
    pub t_min: f64,
}

impl WeightFunction {
    pub fn power(theta: f64) -> Self {
        Self {
            kind: WeightKind::Power { theta },
            scale: 1.0,
            t_min: 0.0,
        }
    }

    pub fn inverse_square(phi: YoungFunction) -> Self {
        Self {
            kind: WeightKind::InverseSquare { phi },
            scale: 1.0,
            t_min: 0.0,
        }
    }

    pub fn scaled(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("scale", "must be positive and finite"));
        }
        self.scale *= c;
        Ok(self)
    }

    /// `ln Ψ(e^{−y})`, i.e. `ln Ψ(1/t)` at `t = e^y`.
    pub fn ln_at_recip(&self, y: f64) -> f64 {
        let base = match &self.kind {
            WeightKind::Power { theta } => theta * y,
            WeightKind::InverseSquare { phi } => -y - phi.ln_inv(-2.0 * y),
        };
        base + ln(self.scale)
    }

    /// Ψ(t) for `t > 0`; at `t = 0` the continuous extension when it exists.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t > 0.0 {
            if let WeightKind::InverseSquare { phi } = &self.kind {
                let d = phi.inv(t * t);
                if d <= 0.0 {
                    return Err(Error::Domain(format!("Φ⁻¹(t²) vanishes at t = {t:e}")));
                }
                return Ok(self.scale * t / d);
            }
            return Ok(exp(self.ln_at_recip(-ln(t))));
        }
        if t < 0.0 || t < self.t_min {
            return Err(Error::Domain(format!("Ψ is not defined at t = {t:e}")));
        }
        // Ψ(t) ~ t^{−σ∞} as t → 0
        let s = self.infinity_exponent();
        if s < 0.0 {
            Ok(0.0)
        } else if s == 0.0 && matches!(self.kind, WeightKind::Power { .. }) {
            Ok(self.scale)
        } else {
            Err(Error::Domain(format!(
                "Ψ has no finite limit at 0 (order {s})"
            )))
        }
    }

    /// σ₀ with `Ψ(1/t) ~ t^{σ₀}` as `t → 0`.
    pub fn zero_exponent(&self) -> f64 {
        match &self.kind {
            WeightKind::Power { theta } => *theta,
            WeightKind::InverseSquare { phi } => 2.0 / phi.growth_exponents().1 - 1.0,
        }
    }

    /// σ∞ with `Ψ(1/t) ~ t^{σ∞}` as `t → ∞`.
    pub fn infinity_exponent(&self) -> f64 {
        match &self.kind {
            WeightKind::Power { theta } => *theta,
            WeightKind::InverseSquare { phi } => 2.0 / phi.growth_exponents().0 - 1.0,
        }
    }

    /// Finite-difference log-slopes of `Ψ(1/t)` over `[t, 10t]` at `t_lo` and
    /// `t_hi / 10`, to compare with the declared exponents.
    pub fn measured_exponents(&self, t_lo: f64, t_hi: f64) -> (f64, f64) {
        let l10 = ln(10.0);
        let at = |lt: f64| (self.ln_at_recip(lt + l10) - self.ln_at_recip(lt)) / l10;
        (at(ln(t_lo)), at(ln(t_hi) - l10))
    }
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WeightKind::Power { theta } => write!(f, "powerweight:theta={theta}")?,
            WeightKind::InverseSquare { phi } => write!(f, "inverse-square({phi})")?,
        }
        if self.scale != 1.0 {
            write!(f, " x{}", self.scale)?;
        }
        Ok(())
    }
}

/// `θ(p, d) = d(1/p + 1/d − 1)`.
pub fn critical_theta(p: f64, d: usize) -> f64 {
    let d = d as f64;
    d * (1.0 / p + 1.0 / d - 1.0)
}

/// Pass/fail per Young-function axiom on a sample grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub zero_at_zero: bool,
    pub monotone: bool,
    pub midpoint_convex: bool,
    pub superlinear_at_infinity: bool,
    pub sublinear_at_zero: bool,
    /// Φ(Φ⁻¹(s)) = s and Φ⁻¹(Φ(t)) = t to 1e-8.
    pub round_trip: bool,
    /// Φ(αt) ≤ αΦ(t) for α in {0.1, 0.5, 0.9}.
    pub subhomogeneous: bool,
    /// Φ⁻¹(αx) ≤ αΦ⁻¹(x) for α in {2, 10, 100}.
    pub inverse_subhomogeneous: bool,
    pub worst_round_trip: f64,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.zero_at_zero
            && self.monotone
            && self.midpoint_convex
            && self.superlinear_at_infinity
            && self.sublinear_at_zero
            && self.round_trip
            && self.subhomogeneous
            && self.inverse_subhomogeneous
    }
}

const SLACK: f64 = 1e-9;

pub fn validate_young(phi: &YoungFunction, grid: &[f64]) -> Result<ValidationReport> {
    if grid.is_empty() {
        return Err(Error::Empty("sample grid"));
    }
    if grid.iter().any(|&t| !(t > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "grid",
            "must be strictly positive and increasing",
        ));
    }
    let v: Vec<f64> = grid.iter().map(|&t| phi.eval(t)).collect();
    let monotone = v.windows(2).all(|w| w[1] > w[0]);

    let mut midpoint_convex = true;
    for step in 1..=2 {
        for i in 0..grid.len().saturating_sub(step) {
            let (a, b) = (grid[i], grid[i + step]);
            let mid = phi.eval(0.5 * (a + b));
            if mid > 0.5 * (v[i] + v[i + step]) * (1.0 + SLACK) {
                midpoint_convex = false;
            }
        }
    }

    // ratios over the last/first three samples
    let tail = grid.len().saturating_sub(3);
    let superlinear_at_infinity = grid.len() >= 2
        && (tail..grid.len() - 1).all(|i| grid[i + 1] / v[i + 1] < grid[i] / v[i] * (1.0 - 1e-12));
    let head = grid.len().min(3);
    let sublinear_at_zero = grid.len() >= 2
        && (0..head - 1).all(|i| v[i] / grid[i] < v[i + 1] / grid[i + 1] * (1.0 - 1e-12));

    let mut worst: f64 = 0.0;
    for (&t, &ft) in grid.iter().zip(&v) {
        worst = worst.max(((phi.inv(ft) - t) / t).abs());
        let s = t;
        worst = worst.max(((phi.eval(phi.inv(s)) - s) / s).abs());
    }

    let mut subhomogeneous = true;
    let mut inverse_subhomogeneous = true;
    for (&t, &ft) in grid.iter().zip(&v) {
        for a in [0.1, 0.5, 0.9] {
            if phi.eval(a * t) > a * ft * (1.0 + SLACK) {
                subhomogeneous = false;
            }
        }
        let it = phi.inv(t);
        for a in [2.0, 10.0, 100.0] {
            if phi.inv(a * t) > a * it * (1.0 + SLACK) {
                inverse_subhomogeneous = false;
            }
        }
    }

    Ok(ValidationReport {
        zero_at_zero: phi.eval(0.0) == 0.0,
        monotone,
        midpoint_convex,
        superlinear_at_infinity,
        sublinear_at_zero,
        round_trip: worst <= 1e-8,
        subhomogeneous,
        inverse_subhomogeneous,
        worst_round_trip: worst,
    })
}

/// `n` log-spaced points on `[a, b]`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![a];
    }
    let (la, lb) = (ln(a), ln(b));
    (0..n)
        .map(|i| exp(la + (lb - la) * i as f64 / (n - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_values() {
        let phi = YoungFunction::power(2.0).unwrap();
        assert_eq!(phi.eval(3.0), 9.0);
        assert_eq!(phi.inv(9.0), 3.0);
        let phi = YoungFunction::power(1.3).unwrap();
        for t in [0.1, 1.0, 10.0] {
            assert_relative_eq!(phi.inv(phi.eval(t)), t, max_relative = 1e-10);
        }
    }

    #[test]
    fn power_rejects_p_at_most_one() {
        assert!(YoungFunction::power(1.0).is_err());
        assert!(YoungFunction::power(0.5).is_err());
    }

    #[test]
    fn section5_continuity_and_branches() {
        let phi = YoungFunction::section5(0.1).unwrap();
        let sp = *phi.section5_params().unwrap();
        assert!(sp.admissibility() <= 1.0);
        let l = sp.ln_r();
        // compare the neighbouring branches at both breakpoints
        let right = sp.r * exp(-0.1 * (l / 2.0) / ln(l / 2.0));
        assert_relative_eq!(sp.p_lin * sp.r + sp.q_lin, right, max_relative = 1e-10);
        let left = exp(0.1 * (l / 2.0) / ln(l / 2.0)) / sp.r;
        assert_relative_eq!(sp.p_lin / sp.r + sp.q_lin, left, max_relative = 1e-10);
        // just below and at r
        assert_relative_eq!(
            phi.inv(sp.r * (1.0 - 1e-15)),
            phi.inv(sp.r),
            max_relative = 1e-10
        );

        let t = sp.r * sp.r;
        assert_relative_eq!(phi.inv(t), t * exp(-0.1 * l / ln(l)), max_relative = 1e-12);
    }

    #[test]
    fn section5_round_trip() {
        let phi = YoungFunction::section5(0.1).unwrap();
        let r = phi.section5_params().unwrap().r;
        for s in [10.0 * r, 1e3 * r, 1e6 * r] {
            assert_relative_eq!(phi.eval(phi.inv(s)), s, max_relative = 1e-8);
        }
    }

    #[test]
    fn section5_alpha_range() {
        assert!(YoungFunction::section5(0.2).is_err());
        assert!(YoungFunction::section5(0.0).is_err());
        assert!(YoungFunction::section5(-1.0).is_err());
        assert!(YoungFunction::section5(0.13).is_ok());
    }

    #[test]
    fn power_weight() {
        assert_relative_eq!(
            WeightFunction::power(0.5).eval(4.0).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        assert_eq!(WeightFunction::power(0.0).eval(123.0).unwrap(), 1.0);
        assert_eq!(WeightFunction::power(0.0).eval(0.0).unwrap(), 1.0);
        assert_relative_eq!(
            critical_theta(1.3, 2),
            2.0 / 1.3 - 1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(critical_theta(1.3, 2), 0.538462, epsilon = 1e-6);
    }

    #[test]
    fn inverse_square_weight() {
        let w = WeightFunction::inverse_square(YoungFunction::power(2.0).unwrap());
        assert_relative_eq!(w.eval(4.0).unwrap(), 1.0, max_relative = 1e-15);

        let phi = YoungFunction::section5(0.1).unwrap();
        let sp = *phi.section5_params().unwrap();
        let w = WeightFunction::inverse_square(phi);
        let t = sp.r.sqrt();
        assert_relative_eq!(
            w.eval(t).unwrap(),
            t / (sp.p_lin * sp.r + sp.q_lin),
            max_relative = 1e-12
        );
        let t = 10.0 * sp.r;
        let expected = exp(0.1 * ln(t) / ln(ln(t))) / t;
        assert_relative_eq!(w.eval(t).unwrap(), expected, max_relative = 1e-10);
    }

    #[test]
    fn declared_exponents_match_measured() {
        let w = WeightFunction::power(0.7);
        let (a, b) = w.measured_exponents(1e-6, 1e6);
        assert!((a - w.zero_exponent()).abs() < 0.05);
        assert!((b - w.infinity_exponent()).abs() < 0.05);
        let w = WeightFunction::inverse_square(YoungFunction::power(1.5).unwrap());
        let (a, b) = w.measured_exponents(1e-6, 1e6);
        assert!((a - w.zero_exponent()).abs() < 0.05, "{a}");
        assert!((b - w.infinity_exponent()).abs() < 0.05, "{b}");
    }

    #[test]
    fn validation_of_presets() {
        let g = log_grid(1e-6, 1e6, 49);
        let rep = validate_young(&YoungFunction::power(2.0).unwrap(), &g).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        let rep = validate_young(&YoungFunction::linear(), &g).unwrap();
        assert!(!rep.superlinear_at_infinity);

        let g = log_grid(1.0, 1e30, 61);
        let rep = validate_young(&YoungFunction::section5(0.1).unwrap(), &g).unwrap();
        assert!(rep.monotone && rep.midpoint_convex, "{rep:?}");
        assert!(
            rep.subhomogeneous && rep.inverse_subhomogeneous && rep.round_trip,
            "{rep:?}"
        );
    }

    #[test]
    fn validation_rejects_empty_grid() {
        assert!(validate_young(&YoungFunction::linear(), &[]).is_err());
    }

    #[test]
    fn table_interpolates_in_log_log() {
        let phi = YoungFunction::table(&[(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)]).unwrap();
        assert_relative_eq!(phi.eval(3.0), 9.0, max_relative = 1e-12);
        assert_relative_eq!(phi.eval(8.0), 64.0, max_relative = 1e-12);
        assert_relative_eq!(phi.inv(9.0), 3.0, max_relative = 1e-12);
        assert!(YoungFunction::table(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn section5_tail_beats_sobolev_power() {
        // Φ(x)/x² keeps falling along the grid tail in d = 2
        let phi = YoungFunction::section5(0.1).unwrap();
        let g = log_grid(1e10, 1e40, 16);
        let q: Vec<f64> = g.iter().map(|&x| phi.eval(x) / (x * x)).collect();
        assert!(q.windows(2).all(|w| w[1] < w[0]));
    }
}
