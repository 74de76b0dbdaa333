//! Property tests for the invariants of each module.

use bol_core::besov::{besov_orlicz_norm, QuadratureConfig};
use bol_core::condition::{condition_value, power_closed_form, ConditionOptions};
use bol_core::evidence::{ball_norms, estimate2_check, symmetric_difference_volume};
use bol_core::molecules::{decompose, verify_r1_r2};
use bol_core::orlicz::{luxemburg_norm, modulus_curve};
use bol_core::quad::TailConfig;
use bol_core::young::{critical_theta, log_grid};
use bol_core::{unit_ball_volume, GridFunction, WeightFunction, YoungFunction};
use proptest::prelude::*;

/// Small grids in 1 to 3 dimensions with values in quarters.
fn grid_fn() -> impl Strategy<Value = GridFunction> {
    (1usize..=3)
        .prop_flat_map(|d| {
            let side = if d == 3 { 1usize..5 } else { 1usize..9 };
            prop::collection::vec(side, d)
        })
        .prop_flat_map(|shape| {
            let n: usize = shape.iter().product();
            (Just(shape), prop::collection::vec(-8i32..=8, n), 1u32..5)
        })
        .prop_map(|(shape, ks, hk)| {
            let d = shape.len();
            let vals = ks.into_iter().map(|k| k as f64 / 4.0).collect();
            GridFunction::new(shape, 0.25 * hk as f64, vec![0.0; d], vals).unwrap()
        })
}

fn planar_pair() -> impl Strategy<Value = (GridFunction, GridFunction)> {
    (2usize..8, 2usize..8).prop_flat_map(|(a, b)| {
        let n = a * b;
        (
            prop::collection::vec(-8i32..=8, n),
            prop::collection::vec(-8i32..=8, n),
        )
            .prop_map(move |(u, v)| {
                let mk = |k: Vec<i32>| {
                    GridFunction::new(
                        vec![a, b],
                        0.125,
                        vec![0.0, 0.0],
                        k.into_iter().map(|x| x as f64 / 4.0).collect(),
                    )
                    .unwrap()
                };
                (mk(u), mk(v))
            })
    })
}

fn young() -> impl Strategy<Value = YoungFunction> {
    prop_oneof![
        (1.05f64..4.0).prop_map(|p| YoungFunction::power(p).unwrap()),
        (0.01f64..0.13).prop_map(|a| YoungFunction::section5(a).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tv_coarea(f in grid_fn()) {
        // TV = Σ_j (t_{j+1} − t_j)·Per{f > t_j} over sorted values, with 0
        // included; for t < 0 the set contains the exterior, so its perimeter
        // is that of the complement {f ≤ t} inside the box
        let mut ts = f.distinct_values();
        ts.push(0.0);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let mut sum = 0.0;
        for w in ts.windows(2) {
            let set = f.level_set(w[0]);
            let per = if w[0] < 0.0 { set.map(|v| 1.0 - v).total_variation() } else { set.total_variation() };
            sum += (w[1] - w[0]) * per;
        }
        let tv = f.total_variation();
        prop_assert!((sum - tv).abs() <= 1e-12 * tv.max(1.0), "{sum} vs {tv}");
    }

    #[test]
    fn tv_translation_and_scaling(f in grid_fn(), c in -3.0f64..3.0, k in prop::collection::vec(-5i64..5, 3)) {
        let k = &k[..f.dim()];
        let tv = f.total_variation();
        prop_assert_eq!(f.shift(k).unwrap().total_variation(), tv);
        let scaled = f.scale(c).total_variation();
        prop_assert!((scaled - c.abs() * tv).abs() <= 1e-12 * tv.max(1.0));
    }

    #[test]
    fn luxemburg_homogeneous(f in grid_fn(), phi in young(), c in 0.01f64..100.0) {
        prop_assume!(!f.is_zero());
        let a = luxemburg_norm(&f, &phi).unwrap().norm;
        let b = luxemburg_norm(&f.scale(c), &phi).unwrap().norm;
        prop_assert!((b - c * a).abs() <= 1e-9 * c * a, "{b} vs {}", c * a);
    }

    #[test]
    fn luxemburg_triangle((f, g) in planar_pair(), phi in young()) {
        let nf = luxemburg_norm(&f, &phi).unwrap().norm;
        let ng = luxemburg_norm(&g, &phi).unwrap().norm;
        let nfg = luxemburg_norm(&f.add(&g).unwrap(), &phi).unwrap().norm;
        prop_assert!(nfg <= (nf + ng) * (1.0 + 1e-9));
    }

    #[test]
    fn modulus_monotone(f in grid_fn(), phi in young()) {
        let h = f.spacing();
        let ts: Vec<f64> = (1..12).map(|i| 0.3 * h * i as f64).collect();
        let c = modulus_curve(&f, &phi, &ts).unwrap();
        for w in c.values.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn decomposition_identity(f in grid_fn()) {
        let r = verify_r1_r2(&decompose(&f));
        prop_assert!(r.pass, "{:?}", r.failures);
        prop_assert!(r.reconstruction_exact);
    }

    #[test]
    fn young_scaling(phi in young(), i in 0usize..40) {
        let t = log_grid(1e-6, 1e8, 40)[i];
        for a in [0.1, 0.5, 0.9] {
            prop_assert!(phi.eval(a * t) <= a * phi.eval(t) * (1.0 + 1e-9));
        }
        for a in [2.0, 10.0, 100.0] {
            prop_assert!(phi.inv(a * t) <= a * phi.inv(t) * (1.0 + 1e-9));
        }
        let back = phi.inv(phi.eval(t));
        prop_assert!((back - t).abs() <= 1e-9 * t);
    }

    #[test]
    fn estimate2_holds(f in grid_fn(), p in 1.05f64..2.0) {
        prop_assume!(f.dim() == 2 && !f.is_zero());
        // with the ℓ¹ perimeter the planar Sobolev constant is 1/4
        let rec = estimate2_check(&YoungFunction::power(p).unwrap(), &[f], 0.25).unwrap();
        prop_assert!(rec.pass, "{:?}", rec.measured);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn besov_triangle((f, g) in planar_pair(), theta in 0.1f64..0.5) {
        let phi = YoungFunction::power(1.5).unwrap();
        let psi = WeightFunction::power(theta);
        let q = QuadratureConfig { nodes: 128, ..QuadratureConfig::default() };
        let fg = f.add(&g).unwrap();
        prop_assume!(!f.is_zero() && !g.is_zero() && !fg.is_zero());
        // one common window so the three norms share a quadrature
        let q = QuadratureConfig { t_min: Some(f.spacing()), t_max: Some(10.0), ..q };
        let a = besov_orlicz_norm(&f, &phi, &psi, &q).unwrap().total;
        let b = besov_orlicz_norm(&g, &phi, &psi, &q).unwrap().total;
        let c = besov_orlicz_norm(&fg, &phi, &psi, &q).unwrap().total;
        prop_assert!(c <= (a + b) * (1.0 + 1e-9), "{c} > {a} + {b}");
    }

    #[test]
    fn besov_quadrature_stable((f, _) in planar_pair(), theta in 0.1f64..0.5) {
        prop_assume!(!f.is_zero());
        let phi = YoungFunction::power(1.5).unwrap();
        let psi = WeightFunction::power(theta);
        let q = QuadratureConfig::default();
        let a = besov_orlicz_norm(&f, &phi, &psi, &q).unwrap().seminorm_part;
        let b = besov_orlicz_norm(&f, &phi, &psi, &QuadratureConfig { nodes: 2 * q.nodes, ..q })
            .unwrap()
            .seminorm_part;
        prop_assert!((a - b).abs() <= q.rel_tol * a);
    }

    #[test]
    fn condition_scale_free_at_critical(p in 1.1f64..1.9, ls in -8.0f64..8.0) {
        let phi = YoungFunction::power(p).unwrap();
        let psi = WeightFunction::power(critical_theta(p, 2));
        let v = condition_value(10f64.powf(ls), &phi, &psi, &ConditionOptions::new(2)).unwrap();
        let exact = power_closed_form(p, 2);
        prop_assert!((v.value - exact).abs() <= 1e-6 * exact);
    }

    #[test]
    fn condition_monotone_in_weight(p in 1.1f64..1.9, c in 1.0f64..5.0, ls in -4.0f64..4.0) {
        let phi = YoungFunction::power(p).unwrap();
        let psi = WeightFunction::power(critical_theta(p, 2));
        let big = psi.clone().scaled(c).unwrap();
        let o = ConditionOptions::new(2);
        let s = 10f64.powf(ls);
        let a = condition_value(s, &phi, &psi, &o).unwrap().value;
        let b = condition_value(s, &phi, &big, &o).unwrap().value;
        prop_assert!(b >= a * (1.0 - 1e-12));
    }

    #[test]
    fn condition_quadrature_stable(alpha in 0.02f64..0.13, ls in 0.0f64..3.0) {
        let phi = YoungFunction::section5(alpha).unwrap();
        let psi = WeightFunction::inverse_square(phi.clone());
        let s = phi.section5_params().unwrap().r * 10f64.powf(ls);
        let o = ConditionOptions::new(2);
        let fine = ConditionOptions { tail: TailConfig { panels_per_unit: 64, ..o.tail }, ..o };
        let a = condition_value(s, &phi, &psi, &o).unwrap().value;
        let b = condition_value(s, &phi, &psi, &fine).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-8 * a);
    }

    #[test]
    fn lemma6_strict_for_positive_offsets(d in 1usize..6, r in 0.1f64..10.0, frac in 0.01f64..0.99) {
        let a = frac * r;
        let v = symmetric_difference_volume(d, r, a).unwrap();
        let bound = unit_ball_volume(d) * r.powi(d as i32 - 1) * a;
        prop_assert!(v > bound, "d={d} {v} ≤ {bound}");
    }

    #[test]
    fn necessity_ratios_grow_between_critical_and_inverse_p(p in 1.2f64..1.8, frac in 0.2f64..0.8) {
        let tc = critical_theta(p, 2);
        let theta = tc + frac * (1.0 / p - tc);
        let phi = YoungFunction::power(p).unwrap();
        let psi = WeightFunction::power(theta);
        let tail = TailConfig::default();
        let mut last = 0.0;
        for r in [1.0, 0.5, 0.25, 0.125] {
            let b = ball_norms(&phi, &psi, 2, r, &tail).unwrap();
            prop_assert!(b.ratio.is_finite() && b.ratio > last);
            last = b.ratio;
        }
    }
}

#[test]
fn lemma6_equality_only_at_zero_offset_in_one_dimension() {
    assert_eq!(symmetric_difference_volume(1, 1.0, 0.0).unwrap(), 0.0);
    let v = symmetric_difference_volume(1, 1.0, 0.3).unwrap();
    assert!(v > unit_ball_volume(1) * 0.3);
}

#[test]
fn section5_tail_ratio_decreases() {
    let phi = YoungFunction::section5(0.1).unwrap();
    let xs = log_grid(1e20, 1e300, 30);
    let ratios: Vec<f64> = xs
        .iter()
        .map(|&x| phi.ln_eval(x.ln()) - 2.0 * x.ln())
        .collect();
    for w in ratios.windows(2) {
        assert!(w[1] < w[0]);
    }
}
