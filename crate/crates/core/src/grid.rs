//! Compactly supported functions on uniform cell-centred grids.
//!
//! Values are stored row-major (last axis fastest) over a box of cells;
//! outside the box the function is zero. The total variation is the
//! anisotropic (ℓ¹) one, for which the coarea formula holds exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ceil, powf, sqrt, unit_ball_volume};

/// Largest radius, in cells, accepted by [`ball_indicator`].
pub const MAX_RADIUS_CELLS: f64 = 1.0e4;
/// Largest number of cells any constructor will allocate.
pub const MAX_CELLS: usize = 1 << 27;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridFunction {
    shape: Vec<usize>,
    h: f64,
    /// Lower corner of the box.
    origin: Vec<f64>,
    values: Vec<f64>,
}

/// ‖f‖₁, ‖f‖∞, ‖f‖_p and TV(f) in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormBundle {
    pub l1: f64,
    pub linf: f64,
    pub p: f64,
    pub lp: f64,
    pub tv: f64,
}

impl NormBundle {
    /// `‖f‖₁ + TV(f)`.
    pub fn bv(&self) -> f64 {
        self.l1 + self.tv
    }
}

pub(crate) fn check_cells(shape: &[usize]) -> Result<usize> {
    let mut n: usize = 1;
    for &e in shape {
        n = n
            .checked_mul(e)
            .filter(|&n| n <= MAX_CELLS)
            .ok_or_else(|| Error::ResourceGuard {
                guard: "max_cells",
                detail: format!("grid {shape:?} exceeds {MAX_CELLS} cells"),
            })?;
    }
    Ok(n)
}

impl GridFunction {
    pub fn new(shape: Vec<usize>, h: f64, origin: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::invalid("shape", "dimension must be at least 1"));
        }
        if shape.contains(&0) {
            return Err(Error::invalid("shape", "every extent must be at least 1"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(
                "spacing",
                format!("must be positive, got {h}"),
            ));
        }
        if origin.len() != shape.len() || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::invalid(
                "origin",
                "needs one finite coordinate per axis",
            ));
        }
        let n = check_cells(&shape)?;
        if values.len() != n {
            return Err(Error::invalid(
                "values",
                format!(
                    "expected {n} values for shape {shape:?}, got {}",
                    values.len()
                ),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "must be finite"));
        }
        Ok(Self {
            shape,
            h,
            origin,
            values,
        })
    }

    pub fn zeros(shape: Vec<usize>, h: f64, origin: Vec<f64>) -> Result<Self> {
        let n = check_cells(&shape)?;
        Self::new(shape, h, origin, vec![0.0; n])
    }

    /// Samples `f` at cell centres.
    pub fn from_fn<F>(shape: Vec<usize>, h: f64, origin: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut g = Self::zeros(shape, h, origin)?;
        let mut x = vec![0.0; g.dim()];
        for i in 0..g.values.len() {
            g.center_into(i, &mut x);
            g.values[i] = f(&x);
        }
        if g.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "sampled function is not finite"));
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        powf(self.h, self.dim() as f64)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    /// Multi-index of flat cell `i`.
    pub fn index_of(&self, mut i: usize, out: &mut [usize]) {
        for a in (0..self.dim()).rev() {
            out[a] = i % self.shape[a];
            i /= self.shape[a];
        }
    }

    fn center_into(&self, i: usize, x: &mut [f64]) {
        let mut idx = vec![0; self.dim()];
        self.index_of(i, &mut idx);
        for a in 0..self.dim() {
            x[a] = self.origin[a] + (idx[a] as f64 + 0.5) * self.h;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut g = self.clone();
        g.values.iter_mut().for_each(|v| *v *= c);
        g
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        let mut g = self.clone();
        g.values.iter_mut().for_each(|v| *v = f(*v));
        g
    }

    /// Same box, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.shape.clone(), self.h, self.origin.clone(), values)
    }

    /// `(Σ |v|^p h^d)^{1/p}`; `p = ∞` gives the max norm.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::invalid(
                "p",
                format!("L^p norms need p >= 1, got {p}"),
            ));
        }
        if p == f64::INFINITY {
            return Ok(self.linf());
        }
        if p == 1.0 {
            return Ok(self.l1());
        }
        // factor out the max to keep |v|^p in range
        let m = self.linf();
        if m == 0.0 {
            return Ok(0.0);
        }
        let s: f64 = self.values.iter().map(|v| powf(v.abs() / m, p)).sum();
        Ok(m * powf(s * self.cell_volume(), 1.0 / p))
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.cell_volume()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Per-axis variation `Σ |f(x + h e_a) − f(x)| h^{d−1}` with zero padding.
    pub fn tv_per_axis(&self) -> Vec<f64> {
        let d = self.dim();
        let strides = self.strides();
        let face = powf(self.h, d as f64 - 1.0);
        let mut out = vec![0.0; d];
        for a in 0..d {
            let (s, n) = (strides[a], self.shape[a]);
            let mut acc = 0.0;
            for (i, &v) in self.values.iter().enumerate() {
                let c = (i / s) % n;
                if c == 0 {
                    acc += v.abs();
                }
                let next = if c + 1 < n { self.values[i + s] } else { 0.0 };
                acc += (next - v).abs();
            }
            out[a] = acc * face;
        }
        out
    }

    pub fn total_variation(&self) -> f64 {
        self.tv_per_axis().iter().sum()
    }

    pub fn norms(&self, p: f64) -> Result<NormBundle> {
        Ok(NormBundle {
            l1: self.l1(),
            linf: self.linf(),
            p,
            lp: self.lp_norm(p)?,
            tv: self.total_variation(),
        })
    }

    /// `g(x) = f(x + k h)`: the same samples over a translated box.
    pub fn shift(&self, k: &[i64]) -> Result<Self> {
        if k.len() != self.dim() {
            return Err(Error::GridMismatch(format!(
                "shift of length {} on a {}-dimensional grid",
                k.len(),
                self.dim()
            )));
        }
        let mut g = self.clone();
        for (o, &ka) in g.origin.iter_mut().zip(k) {
            *o -= ka as f64 * self.h;
        }
        Ok(g)
    }

    /// Integer offset of `other`'s box relative to ours.
    pub fn lattice_offset(&self, other: &Self) -> Result<Vec<i64>> {
        if self.dim() != other.dim() {
            return Err(Error::GridMismatch(format!(
                "dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        if (self.h - other.h).abs() > 1e-12 * self.h {
            return Err(Error::GridMismatch(format!(
                "spacings {} and {}",
                self.h, other.h
            )));
        }
        let mut off = Vec::with_capacity(self.dim());
        for (a, b) in self.origin.iter().zip(&other.origin) {
            let q = (b - a) / self.h;
            let k = libm::round(q);
            if (q - k).abs() > 1e-6 {
                return Err(Error::GridMismatch(
                    "origins are not on a common lattice".into(),
                ));
            }
            off.push(k as i64);
        }
        Ok(off)
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        let off = self.lattice_offset(other)?;
        let d = self.dim();
        let mut lo = vec![0i64; d];
        let mut shape = vec![0usize; d];
        for a in 0..d {
            lo[a] = off[a].min(0);
            let hi = (self.shape[a] as i64).max(off[a] + other.shape[a] as i64);
            shape[a] = (hi - lo[a]) as usize;
        }
        let origin: Vec<f64> = (0..d)
            .map(|a| self.origin[a] + lo[a] as f64 * self.h)
            .collect();
        let mut out = Self::zeros(shape, self.h, origin)?;
        let strides = out.strides();
        let mut idx = vec![0usize; d];
        let base_self: Vec<i64> = lo.iter().map(|l| -l).collect();
        let base_other: Vec<i64> = (0..d).map(|a| off[a] - lo[a]).collect();
        for (src, base, s) in [(self, &base_self, 1.0), (other, &base_other, sign)] {
            for (i, &v) in src.values.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                src.index_of(i, &mut idx);
                let j: usize = (0..d)
                    .map(|a| (idx[a] as i64 + base[a]) as usize * strides[a])
                    .sum();
                out.values[j] += s * v;
            }
        }
        Ok(out)
    }

    /// `self − other` on the union of both boxes.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    /// Smallest index box holding every nonzero value, as `(lo, hi)` with
    /// `hi` exclusive. `None` for the zero function.
    pub fn support_bounds(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        let d = self.dim();
        let mut lo = vec![usize::MAX; d];
        let mut hi = vec![0usize; d];
        let mut idx = vec![0usize; d];
        let mut any = false;
        for (i, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            any = true;
            self.index_of(i, &mut idx);
            for a in 0..d {
                lo[a] = lo[a].min(idx[a]);
                hi[a] = hi[a].max(idx[a] + 1);
            }
        }
        any.then_some((lo, hi))
    }

    /// Restricts the box to the support (a single zero cell for f = 0).
    pub fn crop_to_support(&self) -> Self {
        let Some((lo, hi)) = self.support_bounds() else {
            let d = self.dim();
            return Self {
                shape: vec![1; d],
                h: self.h,
                origin: self.origin.clone(),
                values: vec![0.0],
            };
        };
        self.sub_box(&lo, &hi)
    }

    /// Copy of the cells `lo..hi` (per axis).
    pub fn sub_box(&self, lo: &[usize], hi: &[usize]) -> Self {
        let d = self.dim();
        let shape: Vec<usize> = (0..d).map(|a| hi[a] - lo[a]).collect();
        let origin: Vec<f64> = (0..d)
            .map(|a| self.origin[a] + lo[a] as f64 * self.h)
            .collect();
        let n: usize = shape.iter().product();
        let strides = self.strides();
        let mut values = Vec::with_capacity(n);
        let mut idx = vec![0usize; d];
        for i in 0..n {
            let mut r = i;
            for a in (0..d).rev() {
                idx[a] = r % shape[a];
                r /= shape[a];
            }
            let j: usize = (0..d).map(|a| (idx[a] + lo[a]) * strides[a]).sum();
            values.push(self.values[j]);
        }
        Self {
            shape,
            h: self.h,
            origin,
            values,
        }
    }

    /// Euclidean diameter of the support's bounding box.
    pub fn support_diameter(&self) -> f64 {
        match self.support_bounds() {
            None => 0.0,
            Some((lo, hi)) => {
                let s: f64 = lo
                    .iter()
                    .zip(&hi)
                    .map(|(l, h)| {
                        let e = (h - l) as f64 * self.h;
                        e * e
                    })
                    .sum();
                sqrt(s)
            }
        }
    }

    /// Measure of `{f ≠ 0}`.
    pub fn support_measure(&self) -> f64 {
        self.values.iter().filter(|&&v| v != 0.0).count() as f64 * self.cell_volume()
    }

    /// `χ_{f > t}` on the same box.
    pub fn level_set(&self, t: f64) -> Self {
        self.map(|v| if v > t { 1.0 } else { 0.0 })
    }

    /// `|{f > t}|`.
    pub fn level_measure(&self, t: f64) -> f64 {
        self.values.iter().filter(|&&v| v > t).count() as f64 * self.cell_volume()
    }

    /// Sorted distinct values.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// A discretised ball together with its exact volume and perimeter.
#[derive(Debug, Clone, PartialEq)]
pub struct BallIndicator {
    pub grid: GridFunction,
    pub radius: f64,
    /// `V_d r^d`.
    pub volume: f64,
    /// `d V_d r^{d−1}`.
    pub perimeter: f64,
}

/// `χ_{B(0, radius)}`; a cell belongs to the ball when its centre does.
pub fn ball_indicator(d: usize, radius: f64, h: f64) -> Result<BallIndicator> {
    if d == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("radius", "must be positive"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("spacing", "must be positive"));
    }
    if radius / h > MAX_RADIUS_CELLS {
        return Err(Error::ResourceGuard {
            guard: "radius_over_h",
            detail: format!("radius/h = {:.3e} exceeds {MAX_RADIUS_CELLS:e}", radius / h),
        });
    }
    let half = ceil(radius / h) as usize + 1;
    let n = 2 * half;
    let shape = vec![n; d];
    check_cells(&shape)?;
    let origin = vec![-(half as f64) * h; d];
    let dist2 = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>();
    let probe = GridFunction::from_fn(shape.clone(), h, origin.clone(), |x| dist2(x))?;
    let mut r = radius;
    if probe.values.contains(&(radius * radius)) {
        r += h * 1e-9;
    }
    let grid = probe.map(|q| if q <= r * r { 1.0 } else { 0.0 });
    let vd = unit_ball_volume(d);
    Ok(BallIndicator {
        grid,
        radius,
        volume: vd * powf(radius, d as f64),
        perimeter: d as f64 * vd * powf(radius, d as f64 - 1.0),
    })
}

/// Indicator of `cells[a]` cells along each axis with the lower corner at
/// the origin.
pub fn box_indicator(cells: &[usize], h: f64) -> Result<GridFunction> {
    let n = check_cells(cells)?;
    GridFunction::new(cells.to_vec(), h, vec![0.0; cells.len()], vec![1.0; n])
}

/// Indicator of `[a, b)` sampled with spacing `h` in 1D.
pub fn interval_indicator(a: f64, b: f64, h: f64, value: f64) -> Result<GridFunction> {
    let n = libm::round((b - a) / h) as usize;
    if n == 0 {
        return Err(Error::invalid("interval", "shorter than one cell"));
    }
    GridFunction::new(vec![n], h, vec![a], vec![value; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn norms_of_small_indicators() {
        let one = GridFunction::new(vec![1], 1.0, vec![0.0], vec![1.0]).unwrap();
        assert_eq!(one.lp_norm(1.0).unwrap(), 1.0);
        let four = box_indicator(&[2, 2], 0.5).unwrap();
        assert_relative_eq!(four.lp_norm(2.0).unwrap(), 1.0, max_relative = 1e-15);
        let f = interval_indicator(0.0, 1.0, 0.01, 3.0).unwrap();
        assert_eq!(f.lp_norm(f64::INFINITY).unwrap(), 3.0);
        assert!(f.lp_norm(0.5).is_err());
    }

    #[test]
    fn tv_of_interval_and_square() {
        let f = interval_indicator(0.0, 1.0, 0.1, 1.0).unwrap();
        assert_relative_eq!(f.total_variation(), 2.0, max_relative = 1e-15);
        let sq = box_indicator(&[20, 20], 0.05).unwrap();
        assert_relative_eq!(sq.total_variation(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn disc_tv_tends_to_l1_perimeter() {
        for h in [0.04, 0.02, 0.01] {
            let b = ball_indicator(2, 1.0, h).unwrap();
            let tv = b.grid.total_variation();
            // staircase perimeter of a disc is 8r up to a cell or two
            assert!((tv - 8.0).abs() <= 4.0 * h + 1e-12, "h={h} tv={tv}");
        }
    }

    #[test]
    fn ball_companions() {
        let b = ball_indicator(1, 1.0, 0.1).unwrap();
        assert_eq!(b.volume, 2.0);
        assert_eq!(b.perimeter, 2.0);
        let b = ball_indicator(2, 1.0, 0.01).unwrap();
        assert_relative_eq!(b.volume, core::f64::consts::PI, max_relative = 1e-15);
        assert_relative_eq!(
            b.perimeter,
            2.0 * core::f64::consts::PI,
            max_relative = 1e-15
        );
        assert!((b.grid.l1() - core::f64::consts::PI).abs() < 0.01 * core::f64::consts::PI);
        assert!(ball_indicator(2, 1.0, 1e-5).is_err());
    }

    #[test]
    fn shift_difference_of_interval() {
        let f = interval_indicator(0.0, 1.0, 0.1, 1.0).unwrap();
        assert_eq!(f.shift(&[0]).unwrap(), f);
        let g = f.shift(&[1]).unwrap();
        assert_relative_eq!(g.sub(&f).unwrap().l1(), 0.2, max_relative = 1e-12);
        let back = g.shift(&[-1]).unwrap();
        assert_eq!(back.values(), f.values());
        assert!(f.lattice_offset(&back).unwrap().iter().all(|&k| k == 0));
    }

    #[test]
    fn add_and_sub_on_union_box() {
        let f = GridFunction::new(vec![2, 1], 1.0, vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let g = f.shift(&[-1, 1]).unwrap();
        let s = f.add(&g).unwrap();
        assert_eq!(s.shape(), &[3, 2]);
        assert_relative_eq!(s.l1(), 6.0);
        assert!(f.sub(&f).unwrap().is_zero());
    }

    #[test]
    fn crop_and_diameter() {
        let mut v = vec![0.0; 25];
        v[6] = 1.0;
        v[18] = 2.0;
        let f = GridFunction::new(vec![5, 5], 0.5, vec![0.0, 0.0], v).unwrap();
        let c = f.crop_to_support();
        assert_eq!(c.shape(), &[3, 3]);
        assert_relative_eq!(c.origin()[0], 0.5);
        assert_relative_eq!(f.support_diameter(), sqrt(2.0) * 1.5, max_relative = 1e-15);
        assert_eq!(c.total_variation(), f.total_variation());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridFunction::new(vec![0], 1.0, vec![0.0], vec![]).is_err());
        assert!(GridFunction::new(vec![1], 0.0, vec![0.0], vec![1.0]).is_err());
        assert!(GridFunction::new(vec![1], 1.0, vec![0.0], vec![f64::NAN]).is_err());
        assert!(GridFunction::new(vec![2], 1.0, vec![0.0], vec![1.0]).is_err());
    }
}
