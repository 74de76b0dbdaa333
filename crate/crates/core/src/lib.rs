//! Numerical toolkit for embeddings of BV into Besov–Orlicz spaces.
//!
//! The crate is `no_std` (with `alloc`). It provides:
//!
//! * [`young`]: Young functions Φ (power, a slowly varying three-piece
//!   example, tabulated) and weights Ψ;
//! * [`grid`]: compactly supported functions on uniform grids, their
//!   Lebesgue norms and a coarea-exact anisotropic total variation;
//! * [`orlicz`]: Luxemburg norms and integral moduli of continuity ω_Φ;
//! * [`besov`]: the Besov–Orlicz norm ‖f‖_Φ + ∫ Ψ(t) ω_Φ(f,t) dt/t;
//! * [`molecules`]: the halving level-set decomposition of BV functions;
//! * [`condition`]: the two-integral embedding condition and its supremum;
//! * [`evidence`]: the constructive experiments tying these together;
//! * [`corpus`]: seeded random piecewise-constant test functions.
//!
//! IO, file formats and the command-line driver live in the companion `bol`
//! crate.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` rejects NaN along with the nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod besov;
pub mod condition;
pub mod corpus;
pub mod error;
pub mod evidence;
pub mod grid;
pub mod molecules;
pub mod orlicz;
pub mod quad;
pub mod root;
#[cfg(feature = "serde")]
pub mod ser;
pub mod young;

mod math;

pub use error::{End, Error, Result};
pub use grid::{GridFunction, NormBundle};
pub use math::unit_ball_volume;
pub use young::{WeightFunction, YoungFunction};
