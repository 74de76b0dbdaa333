//! Seeded random piecewise-constant functions.
//!
//! Each function is a sum of a few axis-aligned rectangles and discs with
//! heights `k/4`, `k ∈ [−12, 12] \ {0}`. Sums of quarters are exact in
//! binary, so reconstruction from molecules can be checked for equality.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::grid::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorpusSpec {
    pub count: usize,
    pub min_side: usize,
    pub max_side: usize,
    /// Up to this many pieces per function.
    pub max_pieces: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            count: 100,
            min_side: 16,
            max_side: 128,
            max_pieces: 6,
            seed: 0x5EED,
        }
    }
}

fn below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

fn height(rng: &mut ChaCha8Rng) -> f64 {
    let k = below(rng, 24) as i64 - 12;
    (if k >= 0 { k + 1 } else { k }) as f64 / 4.0
}

/// Function `i` of the corpus; independent of the others.
pub fn corpus_item(spec: &CorpusSpec, i: usize) -> Result<GridFunction> {
    if spec.min_side < 2 || spec.max_side < spec.min_side || spec.max_pieces == 0 {
        return Err(Error::invalid(
            "corpus",
            "need 2 ≤ min_side ≤ max_side and max_pieces ≥ 1",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(i as u64);
    let span = spec.max_side - spec.min_side + 1;
    let (nx, ny) = (
        spec.min_side + below(&mut rng, span),
        spec.min_side + below(&mut rng, span),
    );
    let h = 1.0 / spec.max_side as f64;
    let mut v = vec![0.0; nx * ny];
    let pieces = 1 + below(&mut rng, spec.max_pieces);
    for _ in 0..pieces {
        let c = height(&mut rng);
        if below(&mut rng, 3) == 0 {
            let (cx, cy) = (below(&mut rng, nx) as f64, below(&mut rng, ny) as f64);
            let rad = 1.0 + below(&mut rng, nx.min(ny) / 2) as f64;
            for x in 0..nx {
                for y in 0..ny {
                    let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                    if dx * dx + dy * dy <= rad * rad {
                        v[x * ny + y] += c;
                    }
                }
            }
        } else {
            let (a, b) = (below(&mut rng, nx), below(&mut rng, nx));
            let (p, q) = (below(&mut rng, ny), below(&mut rng, ny));
            for x in a.min(b)..=a.max(b) {
                for y in p.min(q)..=p.max(q) {
                    v[x * ny + y] += c;
                }
            }
        }
    }
    if v.iter().all(|&x| x == 0.0) {
        v[(nx / 2) * ny + ny / 2] = 0.25;
    }
    GridFunction::new(vec![nx, ny], h, vec![0.0, 0.0], v)
}

pub fn corpus(spec: &CorpusSpec) -> Result<Vec<GridFunction>> {
    (0..spec.count).map(|i| corpus_item(spec, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_dyadic() {
        let s = CorpusSpec {
            count: 5,
            ..CorpusSpec::default()
        };
        let a = corpus(&s).unwrap();
        assert_eq!(a, corpus(&s).unwrap());
        for f in &a {
            assert!(f.shape().iter().all(|&n| (16..=128).contains(&n)));
            assert!(f.values().iter().all(|&x| (x * 4.0).fract() == 0.0));
            assert!(!f.is_zero());
        }
    }
}
