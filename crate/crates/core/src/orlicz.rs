//! Luxemburg norms and integral moduli of continuity.
//!
//! `‖f‖_Φ = inf{λ > 0 : Σ Φ(|v|/λ) h^d ≤ 1}` is found by bisection on `ln λ`
//! after compressing the values to `(value, multiplicity)` pairs.
//!
//! The modulus `ω_Φ(f, t)` is a sup over lattice shifts `k` with `|k|h ≤ t`.
//! We tabulate `‖f(· + kh) − f‖_Φ` once per half-lattice vector that still
//! overlaps the support box; every other shift gives disjoint copies of `f`
//! and therefore one common value.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::math::{exp, floor, ln, sqrt};
use crate::root::{solve_increasing_real, BisectionConfig};
use crate::young::{YoungFunction, YoungKind};

/// Most lattice vectors a shift sup may examine.
pub const MAX_SHIFT_VECTORS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LuxemburgResult {
    pub norm: f64,
    pub iterations: usize,
    /// `|Σ Φ(|v|/λ) h^d − 1|` at the returned λ.
    pub residual: f64,
}

/// Sorted distinct magnitudes with multiplicities; zeros dropped.
pub fn compress(values: &[f64]) -> Vec<(f64, usize)> {
    let mut a: Vec<f64> = values
        .iter()
        .map(|v| v.abs())
        .filter(|&v| v > 0.0)
        .collect();
    a.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for v in a {
        match out.last_mut() {
            Some((w, c)) if *w == v => *c += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// `ln Σ c_i Φ(v_i e^{−ℓ}) w`, with a log-sum-exp.
fn ln_modular(phi: &YoungFunction, pairs: &[(f64, usize)], weight: f64, l: f64) -> f64 {
    let mut terms: Vec<f64> = Vec::with_capacity(pairs.len());
    for &(v, c) in pairs {
        terms.push(phi.ln_eval(ln(v) - l) + ln(c as f64 * weight));
    }
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ln(terms.iter().map(|t| exp(t - m)).sum::<f64>())
}

/// Luxemburg norm of a function taking the given compressed values on
/// cells of measure `weight`.
pub fn luxemburg_norm_of_values(
    pairs: &[(f64, usize)],
    weight: f64,
    phi: &YoungFunction,
) -> Result<LuxemburgResult> {
    if pairs.is_empty() {
        return Ok(LuxemburgResult {
            norm: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    if let YoungKind::Linear = phi.kind {
        let s: f64 = pairs.iter().map(|&(v, c)| v * c as f64).sum::<f64>() * weight;
        return Ok(LuxemburgResult {
            norm: s,
            iterations: 0,
            residual: 0.0,
        });
    }
    let vmin = pairs[0].0;
    let vmax = pairs[pairs.len() - 1].0;
    let count: usize = pairs.iter().map(|p| p.1).sum();
    // J(lo) ≥ 1 and J(hi) ≤ 1 by the single-cell / whole-support estimates
    let lo = ln(vmin) - phi.ln_inv(-ln(weight));
    let hi = ln(vmax) - phi.ln_inv(-ln(weight * count as f64));
    let guess = 0.5 * (lo + hi);
    if !guess.is_finite() {
        return Err(Error::Domain(format!(
            "Luxemburg bracket not finite ({lo}, {hi})"
        )));
    }
    let g = |l: f64| -ln_modular(phi, pairs, weight, l);
    let root = solve_increasing_real(g, 0.0, guess, &BisectionConfig::default())?;
    let j = exp(ln_modular(phi, pairs, weight, root.x));
    Ok(LuxemburgResult {
        norm: exp(root.x),
        iterations: root.iterations,
        residual: (j - 1.0).abs(),
    })
}

pub fn luxemburg_norm(f: &GridFunction, phi: &YoungFunction) -> Result<LuxemburgResult> {
    luxemburg_norm_of_values(&compress(f.values()), f.cell_volume(), phi)
}

/// `‖χ_A‖_Φ = 1/Φ⁻¹(1/|A|)`.
pub fn indicator_norm(measure: f64, phi: &YoungFunction) -> f64 {
    if measure <= 0.0 {
        return 0.0;
    }
    exp(-phi.ln_inv(-ln(measure)))
}

/// Iterates the overlap box of `f` and `f(· + k)`; returns nothing, calls
/// `pair(a, b)` with `a = f(x)`, `b = f(x + k)` for overlapping cells.
fn for_each_overlap<F: FnMut(f64, f64)>(f: &GridFunction, k: &[i64], mut pair: F) {
    let d = f.dim();
    let shape = f.shape();
    let strides = f.strides();
    let mut lo = vec![0usize; d];
    let mut hi = vec![0usize; d];
    for a in 0..d {
        let n = shape[a] as i64;
        let l = (-k[a]).max(0);
        let h = (n - k[a]).min(n);
        if l >= h {
            return;
        }
        lo[a] = l as usize;
        hi[a] = h as usize;
    }
    let offset: i64 = (0..d).map(|a| k[a] * strides[a] as i64).sum();
    let v = f.values();
    let last = d - 1;
    let mut idx = lo.clone();
    loop {
        let base: usize = (0..d).map(|a| idx[a] * strides[a]).sum();
        for j in 0..hi[last] - lo[last] {
            let i = base + j;
            pair(v[i], v[(i as i64 + offset) as usize]);
        }
        // advance the outer axes
        let mut a = last;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < hi[a] {
                break;
            }
            idx[a] = lo[a];
        }
    }
}

/// `‖f(· + kh) − f‖₁` without materialising the difference.
pub fn shift_difference_l1(f: &GridFunction, k: &[i64]) -> f64 {
    let total: f64 = f.values().iter().map(|v| v.abs()).sum();
    let mut overlap = 0.0;
    for_each_overlap(f, k, |a, b| overlap += a.abs() + b.abs() - (b - a).abs());
    (2.0 * total - overlap).max(0.0) * f.cell_volume()
}

/// Values of `f(· + kh) − f` on the union box, zeros included.
pub fn shift_difference_values(f: &GridFunction, k: &[i64]) -> Vec<f64> {
    let d = f.dim();
    let shape = f.shape();
    let strides = f.strides();
    let offset: i64 = (0..d).map(|a| k[a] * strides[a] as i64).sum();
    let v = f.values();
    let mut out = Vec::with_capacity(2 * v.len());
    // every cell of f appears once as x (paired with x + k, or alone) and
    // once as x + k (paired, or alone)
    let mut partnered = vec![false; v.len()];
    let mut idx = vec![0usize; d];
    for i in 0..v.len() {
        f.index_of(i, &mut idx);
        let inside = (0..d).all(|a| {
            let j = idx[a] as i64 + k[a];
            j >= 0 && j < shape[a] as i64
        });
        if inside {
            let j = (i as i64 + offset) as usize;
            partnered[j] = true;
            out.push(v[j] - v[i]);
        } else {
            out.push(-v[i]);
        }
    }
    for (i, &p) in partnered.iter().enumerate() {
        if !p {
            out.push(v[i]);
        }
    }
    out
}

/// `‖f(· + kh) − f‖_Φ`.
pub fn shift_difference_norm(f: &GridFunction, phi: &YoungFunction, k: &[i64]) -> Result<f64> {
    if let YoungKind::Linear = phi.kind {
        return Ok(shift_difference_l1(f, k));
    }
    let vals = shift_difference_values(f, k);
    Ok(luxemburg_norm_of_values(&compress(&vals), f.cell_volume(), phi)?.norm)
}

/// Tabulated `‖f(· + kh) − f‖_Φ` over shift lengths, with running maxima.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftProfile {
    pub h: f64,
    /// `(|k|², running max of the norm)` sorted by `|k|²`.
    pub entries: Vec<(i64, f64)>,
    /// Shortest squared length of a shift that separates the supports, and
    /// the common norm of such shifts.
    pub disjoint: (i64, f64),
    pub vectors_examined: usize,
}

impl ShiftProfile {
    /// `f` is cropped to its support first; lengths up to `t_max` are
    /// tabulated.
    pub fn new(f: &GridFunction, phi: &YoungFunction, t_max: f64) -> Result<Self> {
        let f = f.crop_to_support();
        let h = f.spacing();
        let d = f.dim();
        let r = floor(t_max / h + 1e-9).max(1.0) as i64;
        let ext: Vec<i64> = f.shape().iter().map(|&e| e as i64).collect();
        let lim: Vec<i64> = ext.iter().map(|&e| (e - 1).min(r)).collect();

        let mut count: usize = 1;
        for &l in &lim {
            count = count.saturating_mul((2 * l + 1) as usize);
        }
        if count / 2 > MAX_SHIFT_VECTORS {
            return Err(Error::ResourceGuard {
                guard: "shift_vectors",
                detail: format!(
                    "about {} lattice vectors needed; coarsen the grid or lower t",
                    count / 2
                ),
            });
        }

        let disjoint_len = ext.iter().cloned().min().unwrap_or(1);
        let disjoint_value = if f.is_zero() {
            0.0
        } else {
            let mut k = vec![0i64; d];
            k[ext.iter().position(|&e| e == disjoint_len).unwrap_or(0)] = disjoint_len;
            shift_difference_norm(&f, phi, &k)?
        };

        let mut raw: Vec<(i64, f64)> = Vec::new();
        let mut k = vec![0i64; d];
        for a in 0..d {
            k[a] = -lim[a];
        }
        let mut examined = 0usize;
        loop {
            let len2: i64 = k.iter().map(|c| c * c).sum();
            let first_nonzero = k.iter().find(|&&c| c != 0);
            if len2 > 0 && len2 <= r * r && matches!(first_nonzero, Some(&c) if c > 0) {
                raw.push((len2, shift_difference_norm(&f, phi, &k)?));
                examined += 1;
            }
            // odometer over the box [-lim, lim]
            let mut a = d;
            loop {
                if a == 0 {
                    break;
                }
                a -= 1;
                k[a] += 1;
                if k[a] <= lim[a] {
                    break;
                }
                k[a] = -lim[a];
                if a == 0 {
                    a = usize::MAX;
                    break;
                }
            }
            if a == usize::MAX {
                break;
            }
        }
        raw.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut run = 0.0f64;
        let mut entries: Vec<(i64, f64)> = Vec::with_capacity(raw.len());
        for (l2, v) in raw {
            run = run.max(v);
            match entries.last_mut() {
                Some(e) if e.0 == l2 => e.1 = run,
                _ => entries.push((l2, run)),
            }
        }
        Ok(Self {
            h,
            entries,
            disjoint: (disjoint_len * disjoint_len, disjoint_value),
            vectors_examined: examined,
        })
    }

    fn max_up_to(&self, len2: f64) -> f64 {
        let n = self
            .entries
            .partition_point(|e| (e.0 as f64) <= len2 * (1.0 + 1e-12));
        let mut m = if n == 0 { 0.0 } else { self.entries[n - 1].1 };
        if (self.disjoint.0 as f64) <= len2 * (1.0 + 1e-12) {
            m = m.max(self.disjoint.1);
        }
        m
    }

    /// `ω_Φ(f, t)`; below one cell the one-cell value is scaled linearly.
    pub fn omega(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let u = t / self.h;
        if u < 1.0 {
            return u * self.max_up_to(1.0);
        }
        self.max_up_to(u * u)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModulusCurve {
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
    pub shift_budget: usize,
}

pub fn modulus_curve(f: &GridFunction, phi: &YoungFunction, ts: &[f64]) -> Result<ModulusCurve> {
    if ts.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::invalid("t", "must be positive"));
    }
    let mut ts = ts.to_vec();
    ts.sort_by(f64::total_cmp);
    let t_max = ts.last().copied().unwrap_or(0.0);
    let prof = ShiftProfile::new(f, phi, t_max)?;
    let values = ts.iter().map(|&t| prof.omega(t)).collect();
    Ok(ModulusCurve {
        ts,
        values,
        shift_budget: prof.vectors_examined,
    })
}

pub fn modulus_of_continuity(f: &GridFunction, phi: &YoungFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", "must be positive"));
    }
    Ok(ShiftProfile::new(f, phi, t)?.omega(t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lemma5Check {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `ω₁(f, t) ≤ t·TV(f)·(1 + 2h/t)` for each `t`.
pub fn check_lemma_omega1(f: &GridFunction, ts: &[f64]) -> Result<Vec<Lemma5Check>> {
    let curve = modulus_curve(f, &YoungFunction::linear(), ts)?;
    let tv = f.total_variation();
    let h = f.spacing();
    Ok(curve
        .ts
        .iter()
        .zip(&curve.values)
        .map(|(&t, &lhs)| {
            let rhs = t * tv;
            Lemma5Check {
                t,
                lhs,
                rhs,
                pass: lhs <= rhs * (1.0 + 2.0 * h / t),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InfimaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `‖Δ_k f‖_Φ ≤ 2‖f‖∞ / Φ⁻¹(2‖f‖∞ / ‖Δ_k f‖₁)`.
pub fn check_infima_bound(f: &GridFunction, phi: &YoungFunction, k: &[i64]) -> Result<InfimaCheck> {
    if k.len() != f.dim() {
        return Err(Error::GridMismatch(format!(
            "shift of length {} on a {}-d grid",
            k.len(),
            f.dim()
        )));
    }
    let l1 = shift_difference_l1(f, k);
    if l1 == 0.0 {
        return Ok(InfimaCheck {
            lhs: 0.0,
            rhs: 0.0,
            pass: true,
        });
    }
    let lhs = shift_difference_norm(f, phi, k)?;
    let m = 2.0 * f.linf();
    let rhs = m / phi.inv(m / l1);
    Ok(InfimaCheck {
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + 1e-8),
    })
}

/// The constant `A = max{Φ(1), N}·max(1, C)` in `‖f‖_Φ ≤ A(‖f‖₁ + TV(f))`,
/// where `N` is the point past which `Φ(x) ≤ x^{d/(d−1)}` on a log grid up
/// to `1e12` and `C` is a measured Sobolev constant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate2 {
    pub phi_at_one: f64,
    pub n: f64,
    pub c_grid: f64,
    pub a: f64,
}

pub fn estimate2_constant(phi: &YoungFunction, d: usize, c_grid: f64) -> Result<Estimate2> {
    if d == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    let grid = crate::young::log_grid(1.0, 1e12, 241);
    let q = if d == 1 {
        f64::INFINITY
    } else {
        d as f64 / (d as f64 - 1.0)
    };
    let ok = |x: f64| q == f64::INFINITY || phi.ln_eval(ln(x)) <= q * ln(x) + 1e-12;
    if !ok(*grid.last().unwrap()) {
        return Err(Error::invalid(
            "phi",
            format!("Φ(x) exceeds x^{q} at the end of the sample grid"),
        ));
    }
    let mut n = grid[grid.len() - 1];
    for &x in grid.iter().rev() {
        if !ok(x) {
            break;
        }
        n = x;
    }
    let phi1 = phi.eval(1.0);
    Ok(Estimate2 {
        phi_at_one: phi1,
        n,
        c_grid,
        a: phi1.max(n) * c_grid.max(1.0),
    })
}

/// Euclidean length of a shift in physical units.
pub fn shift_length(k: &[i64], h: f64) -> f64 {
    sqrt(k.iter().map(|&c| (c * c) as f64).sum::<f64>()) * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{box_indicator, interval_indicator};
    use approx::assert_relative_eq;

    #[test]
    fn power_luxemburg_is_lp() {
        let f = box_indicator(&[2, 2], 1.0).unwrap();
        let phi = YoungFunction::power(2.0).unwrap();
        let r = luxemburg_norm(&f, &phi).unwrap();
        assert_relative_eq!(r.norm, 2.0, max_relative = 1e-10);
        assert!(r.residual <= 1e-8);
        assert_relative_eq!(indicator_norm(4.0, &phi), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let f = GridFunction::zeros(vec![3, 3], 1.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(
            luxemburg_norm(&f, &YoungFunction::power(1.5).unwrap())
                .unwrap()
                .norm,
            0.0
        );
        assert_eq!(
            modulus_of_continuity(&f, &YoungFunction::linear(), 1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn l1_modulus_of_interval() {
        let f = interval_indicator(0.0, 1.0, 0.01, 1.0).unwrap();
        let w = modulus_of_continuity(&f, &YoungFunction::linear(), 0.2).unwrap();
        assert_relative_eq!(w, 0.4, max_relative = 1e-10);
        // saturation: disjoint copies
        let w = modulus_of_continuity(&f, &YoungFunction::linear(), 5.0).unwrap();
        assert_relative_eq!(w, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn fast_l1_kernel_matches_materialised_difference() {
        let v: Vec<f64> = (0..30).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let f = GridFunction::new(vec![5, 6], 0.5, vec![0.0, 0.0], v).unwrap();
        for k in [[1i64, 0], [0, 2], [-2, 3], [4, -5], [7, 1]] {
            let direct = f.shift(&k).unwrap().sub(&f).unwrap().l1();
            assert_relative_eq!(shift_difference_l1(&f, &k), direct, max_relative = 1e-12);
            let vals = shift_difference_values(&f, &k);
            let s: f64 = vals.iter().map(|v| v.abs()).sum::<f64>() * f.cell_volume();
            assert_relative_eq!(s, direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn infima_bound_examples() {
        let f = interval_indicator(0.0, 1.0, 0.01, 1.0).unwrap();
        let phi = YoungFunction::power(2.0).unwrap();
        let c = check_infima_bound(&f, &phi, &[20]).unwrap();
        assert_relative_eq!(c.lhs, sqrt(0.4), max_relative = 1e-9);
        assert_relative_eq!(c.rhs, 2.0 / sqrt(5.0), max_relative = 1e-9);
        assert!(c.pass);
        assert_relative_eq!(c.lhs / c.rhs, 1.0 / sqrt(2.0), max_relative = 1e-9);
        let z = check_infima_bound(&f, &phi, &[0]).unwrap();
        assert!(z.pass && z.lhs == 0.0 && z.rhs == 0.0);
    }

    #[test]
    fn lemma5_equality_in_one_dimension() {
        let f = interval_indicator(0.0, 1.0, 0.01, 1.0).unwrap();
        let r = check_lemma_omega1(&f, &[0.2]).unwrap();
        assert_relative_eq!(r[0].lhs, 0.4, max_relative = 1e-10);
        assert_relative_eq!(r[0].rhs, 0.4, max_relative = 1e-10);
        assert!(r[0].pass);
    }

    #[test]
    fn lemma5_for_square() {
        let f = box_indicator(&[200, 200], 0.005).unwrap();
        let r = check_lemma_omega1(&f, &[0.1]).unwrap();
        assert!(r[0].pass && r[0].lhs <= r[0].rhs, "{:?}", r[0]);
    }

    #[test]
    fn shift_guard() {
        let f = box_indicator(&[3000, 3000], 1.0).unwrap();
        let err = ShiftProfile::new(&f, &YoungFunction::linear(), 2000.0).unwrap_err();
        assert!(matches!(err, Error::ResourceGuard { .. }));
    }

    #[test]
    fn section5_luxemburg_of_indicator() {
        let phi = YoungFunction::section5(0.1).unwrap();
        let f = box_indicator(&[4, 4], 0.25).unwrap();
        let r = luxemburg_norm(&f, &phi).unwrap();
        assert_relative_eq!(r.norm, indicator_norm(1.0, &phi), max_relative = 1e-10);
    }

    #[test]
    fn estimate2_for_power() {
        let e = estimate2_constant(&YoungFunction::power(1.3).unwrap(), 2, 0.25).unwrap();
        assert_eq!(e.n, 1.0);
        assert_eq!(e.a, 1.0);
        assert!(estimate2_constant(&YoungFunction::power(3.0).unwrap(), 2, 0.25).is_err());
    }
}
