//! Bracketed bisection for monotone scalar equations.
//!
//! Everything in this crate that needs an inverse (Φ from Φ⁻¹, the Luxemburg
//! gauge) reduces to finding the crossing point of a nondecreasing function,
//! so bisection is total once a bracket is known.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionConfig {
    /// Stop once `hi - lo <= rel_tol * hi`.
    pub rel_tol: f64,
    pub max_iterations: usize,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
}

/// Finds `x > 0` with `g(x) = target` for a nondecreasing `g` on `(0, ∞)`.
///
/// The bracket starts at `guess` and grows or shrinks by doubling until it
/// straddles `target`.
pub fn solve_increasing<G>(g: G, target: f64, guess: f64, cfg: &BisectionConfig) -> Result<Root>
where
    G: Fn(f64) -> f64,
{
    if !(guess > 0.0 && guess.is_finite()) {
        return Err(Error::invalid(
            "guess",
            "bracket seed must be positive and finite",
        ));
    }
    let (mut lo, mut hi) = (guess, guess);
    let mut grow = 0;
    while g(hi) < target {
        hi *= 2.0;
        grow += 1;
        if grow > 2100 || !hi.is_finite() {
            return Err(Error::NoConvergence {
                iterations: grow,
                residual: f64::INFINITY,
            });
        }
    }
    let mut shrink = 0;
    while g(lo) > target {
        lo *= 0.5;
        shrink += 1;
        if shrink > 2100 || lo == 0.0 {
            return Err(Error::NoConvergence {
                iterations: shrink,
                residual: f64::INFINITY,
            });
        }
    }
    bisect_increasing(g, target, lo, hi, cfg)
}

/// Same as [`solve_increasing`] but over the whole real line, for functions
/// already expressed in log coordinates.
pub fn solve_increasing_real<G>(
    g: G,
    target: f64,
    guess: f64,
    cfg: &BisectionConfig,
) -> Result<Root>
where
    G: Fn(f64) -> f64,
{
    if !guess.is_finite() || !target.is_finite() {
        return Err(Error::invalid("target", "must be finite"));
    }
    let mut step = 1.0;
    let (mut lo, mut hi) = (guess, guess);
    while g(hi) < target {
        hi += step;
        step *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: f64::INFINITY,
            });
        }
    }
    step = 1.0;
    while g(lo) > target {
        lo -= step;
        step *= 2.0;
        if !lo.is_finite() {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: f64::INFINITY,
            });
        }
    }
    for it in 0..cfg.max_iterations {
        if hi - lo <= cfg.rel_tol * (1.0f64).max(hi.abs().max(lo.abs())) {
            return Ok(Root {
                x: 0.5 * (lo + hi),
                iterations: it,
            });
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        residual: hi - lo,
    })
}

/// Bisection on a known bracket `g(lo) <= target <= g(hi)`.
pub fn bisect_increasing<G>(
    g: G,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    cfg: &BisectionConfig,
) -> Result<Root>
where
    G: Fn(f64) -> f64,
{
    if lo > hi {
        core::mem::swap(&mut lo, &mut hi);
    }
    for it in 0..cfg.max_iterations {
        if hi - lo <= cfg.rel_tol * hi.abs() {
            return Ok(Root {
                x: 0.5 * (lo + hi),
                iterations: it,
            });
        }
        // geometric steps while the bracket spans orders of magnitude
        let mid = if lo > 0.0 && hi > 4.0 * lo {
            crate::math::sqrt(lo) * crate::math::sqrt(hi)
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            return Ok(Root {
                x: mid,
                iterations: it,
            });
        }
        let v = g(mid);
        if v == target {
            return Ok(Root {
                x: mid,
                iterations: it + 1,
            });
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        residual: hi - lo,
    })
}
