//! Halving level-set decomposition of BV functions into molecules.
//!
//! For `g ≥ 0`: `a_0 = 0`, `A_n = {g > a_n}` and `a_{n+1}` is the least value
//! above `a_n` whose upper level set has at most half the measure of `A_n`.
//! The molecule is `clamp(g − a_n, 0, a_{n+1} − a_n)`. On a grid the infimum
//! is taken over the finite set of cell values, so it is exact.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{ball_indicator, GridFunction};
use crate::math::{ceil, log2, powf, sqrt};

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    /// Nonnegative layer `f_n`.
    pub layer: GridFunction,
    pub a_lo: f64,
    pub a_hi: f64,
    /// `|A_n|`.
    pub level_measure: f64,
    pub sign: i8,
    /// Position within its sign class.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub molecules: Vec<Molecule>,
    pub source: GridFunction,
    pub alpha_observed: f64,
}

fn molecule_ratio(layer: &GridFunction) -> Option<f64> {
    let d = layer.dim() as f64;
    let tv = layer.total_variation();
    if tv == 0.0 {
        return None;
    }
    Some(powf(layer.linf(), 1.0 / d) * powf(layer.l1(), (d - 1.0) / d) / tv)
}

fn decompose_nonneg(g: &GridFunction, sign: i8) -> Vec<Molecule> {
    // distinct positive values and, for each, the cell count of {g > v}
    let pairs = crate::orlicz::compress(g.values());
    let mut above = vec![0usize; pairs.len()];
    let mut acc = 0;
    for i in (0..pairs.len()).rev() {
        above[i] = acc;
        acc += pairs[i].1;
    }
    let cell = g.cell_volume();
    let mut out = Vec::new();
    let mut a = 0.0;
    let mut cells = acc;
    let mut j = 0;
    let mut n = 0;
    while cells > 0 {
        let measure = cells as f64 * cell;
        // least value above a whose upper level set has at most half the cells
        while 2 * above[j] > cells {
            j += 1;
        }
        let next = pairs[j].0;
        let lo = a;
        let layer = g.map(|v| (v - lo).clamp(0.0, next - lo));
        out.push(Molecule {
            layer,
            a_lo: a,
            a_hi: next,
            level_measure: measure,
            sign,
            index: n,
        });
        a = next;
        cells = above[j];
        j += 1;
        n += 1;
    }
    out
}

/// Splits `f = f⁺ − f⁻` and decomposes both parts, interleaving signs as
/// `f₀⁺, −f₀⁻, f₁⁺, −f₁⁻, …`.
pub fn decompose(f: &GridFunction) -> Decomposition {
    let pos = decompose_nonneg(&f.map(|v| v.max(0.0)), 1);
    let neg = decompose_nonneg(&f.map(|v| (-v).max(0.0)), -1);
    let mut molecules = Vec::with_capacity(pos.len() + neg.len());
    let mut pi = pos.into_iter();
    let mut ni = neg.into_iter();
    loop {
        let (p, n) = (pi.next(), ni.next());
        if p.is_none() && n.is_none() {
            break;
        }
        molecules.extend(p);
        molecules.extend(n);
    }
    let alpha_observed = molecules
        .iter()
        .filter_map(|m| molecule_ratio(&m.layer))
        .fold(0.0, f64::max);
    Decomposition {
        molecules,
        source: f.clone(),
        alpha_observed,
    }
}

impl Decomposition {
    /// `Σ sign·f_n`, summed in molecule order.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.source.len()];
        for m in &self.molecules {
            let s = m.sign as f64;
            for (a, v) in acc.iter_mut().zip(m.layer.values()) {
                *a += s * v;
            }
        }
        acc
    }

    /// `2⌈log₂(|A₀|/h^d)⌉ + 2`.
    pub fn count_bound(&self, sign: i8) -> usize {
        let f = &self.source;
        let cells = f
            .values()
            .iter()
            .filter(|&&v| v * sign as f64 > 0.0)
            .count();
        if cells == 0 {
            return 0;
        }
        2 * ceil(log2(cells as f64)) as usize + 2
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct R12Report {
    pub molecules: usize,
    pub reconstruction_max_error: f64,
    pub reconstruction_exact: bool,
    pub l1_source: f64,
    pub l1_sum: f64,
    pub l1_rel_error: f64,
    pub tv_source: f64,
    pub tv_sum: f64,
    pub tv_rel_error: f64,
    pub halving: bool,
    pub count_within_bound: bool,
    pub pass: bool,
    pub failures: Vec<String>,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Checks reconstruction, L¹ and TV additivity, halving and the count bound.
pub fn verify_r1_r2(dec: &Decomposition) -> R12Report {
    let f = &dec.source;
    let mut failures = Vec::new();
    let rec = dec.reconstruct();
    let mut max_err: f64 = 0.0;
    let mut worst = 0;
    for (i, (r, v)) in rec.iter().zip(f.values()).enumerate() {
        let e = (r - v).abs();
        if e > max_err {
            max_err = e;
            worst = i;
        }
    }
    // exact for dyadic data; otherwise a few ulps per layer
    let tol = 4.0 * f64::EPSILON * f.linf() * dec.molecules.len().max(1) as f64;
    let reconstruction_exact = max_err == 0.0;
    if max_err > tol {
        failures.push(format!("reconstruction off by {max_err:e} at cell {worst}"));
    }

    let l1_source = f.l1();
    let l1_sum: f64 = dec.molecules.iter().map(|m| m.layer.l1()).sum();
    let tv_source = f.total_variation();
    let tv_sum: f64 = dec
        .molecules
        .iter()
        .map(|m| m.layer.total_variation())
        .sum();
    let (l1_rel_error, tv_rel_error) = (rel(l1_source, l1_sum), rel(tv_source, tv_sum));
    if l1_rel_error > 1e-12 {
        failures.push(format!("L1 additivity off by {l1_rel_error:e}"));
    }
    if tv_rel_error > 1e-12 {
        failures.push(format!("TV additivity off by {tv_rel_error:e}"));
    }

    let mut halving = true;
    let mut count_within_bound = true;
    for sign in [1i8, -1] {
        let class: Vec<&Molecule> = dec.molecules.iter().filter(|m| m.sign == sign).collect();
        for w in class.windows(2) {
            if w[1].level_measure > 0.5 * w[0].level_measure {
                halving = false;
                failures.push(format!(
                    "halving fails between molecules {} and {} (sign {sign})",
                    w[0].index, w[1].index
                ));
            }
        }
        let bound = dec.count_bound(sign);
        if class.len() > bound {
            count_within_bound = false;
            failures.push(format!(
                "{} molecules of sign {sign} exceed bound {bound}",
                class.len()
            ));
        }
    }

    R12Report {
        molecules: dec.molecules.len(),
        reconstruction_max_error: max_err,
        reconstruction_exact,
        l1_source,
        l1_sum,
        l1_rel_error,
        tv_source,
        tv_sum,
        tv_rel_error,
        halving,
        count_within_bound,
        pass: failures.is_empty(),
        failures,
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct R3Report {
    pub alpha_observed: f64,
    pub per_molecule: Vec<f64>,
    pub budget: f64,
    pub pass: bool,
}

/// `2^{2−1/d}·c_iso`.
pub fn alpha_budget(d: usize, c_iso: f64) -> f64 {
    powf(2.0, 2.0 - 1.0 / d as f64) * c_iso
}

/// Ratios `‖f_n‖∞^{1/d}‖f_n‖₁^{(d−1)/d}/TV(f_n)` against `budget`.
pub fn verify_r3(dec: &Decomposition, budget: f64) -> Result<R3Report> {
    if dec.molecules.is_empty() {
        return Err(Error::Empty("decomposition has no molecules"));
    }
    let mut per_molecule = Vec::with_capacity(dec.molecules.len());
    for (i, m) in dec.molecules.iter().enumerate() {
        match molecule_ratio(&m.layer) {
            Some(r) => per_molecule.push(r),
            None => {
                return Err(Error::Domain(format!(
                    "molecule {i} has mass but zero variation"
                )));
            }
        }
    }
    let alpha_observed = per_molecule.iter().cloned().fold(0.0, f64::max);
    Ok(R3Report {
        alpha_observed,
        per_molecule,
        budget,
        pass: alpha_observed <= budget,
    })
}

/// Largest `|A|^{(d−1)/d}/Per(A)` over boxes with sides up to `max_cells`
/// cells and discretised balls of radius up to `max_cells·h/2`, with the
/// anisotropic perimeter. For `d ≥ 3` boxes are limited to 32 cells a side.
pub fn isoperimetric_constant_grid(d: usize, max_cells: usize, h: f64) -> Result<f64> {
    if d == 0 || max_cells == 0 {
        return Err(Error::invalid("dim/max_cells", "must be positive"));
    }
    if d == 1 {
        return Ok(0.5);
    }
    let q = (d as f64 - 1.0) / d as f64;
    let side = if d >= 3 { max_cells.min(32) } else { max_cells };
    let mut best: f64 = 0.0;
    // boxes: |A| = Π a_i, Per = 2 Σ_i Π_{j≠i} a_j (in cell units; h cancels)
    let mut a = vec![1usize; d];
    loop {
        let vol: f64 = a.iter().map(|&x| x as f64).product();
        let per: f64 = 2.0 * (0..d).map(|i| vol / a[i] as f64).sum::<f64>();
        best = best.max(powf(vol, q) / per);
        let mut i = 0;
        loop {
            if i == d {
                break;
            }
            a[i] += 1;
            if a[i] <= side {
                break;
            }
            a[i] = 1;
            i += 1;
        }
        if i == d {
            break;
        }
    }
    let disc_cap = if d >= 3 { max_cells.min(64) } else { max_cells };
    for j in 1..=disc_cap {
        let b = ball_indicator(d, 0.5 * j as f64 * h, h)?;
        let g = &b.grid;
        let tv = g.total_variation();
        if tv > 0.0 {
            best = best.max(powf(g.l1(), q) / tv);
        }
    }
    Ok(best)
}

/// `√|A| / TV` for a disc in the plane, the continuum ℓ¹ value.
pub fn disc_ratio_l1() -> f64 {
    sqrt(core::f64::consts::PI) / 8.0
}
