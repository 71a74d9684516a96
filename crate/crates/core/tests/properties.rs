//! Property tests of the algebraic invariants.

use bdlab_core::integrands::{discretize, integrate, riemann_sum, Integrand};
use bdlab_core::limits::{accumulation_stopping_time, infinity_indicator, ky_fan_distance, mazur_sequence, min_norm_convex};
use bdlab_core::paths::{level_crossing, make_grid, simulate, stop};
use bdlab_core::{ElementaryIntegrand, Measurability, PathEnsemble, ProcessModel, SimpleIntegrand, StoppingTimes};
use proptest::prelude::*;

fn bm(level: u32, n: usize, seed: u64) -> PathEnsemble {
    simulate(&ProcessModel::brownian(0.0, 1.0), make_grid(level).unwrap(), n, seed).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_is_linear(
        seed in 0u64..1000,
        level in 1u32..6,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        raw in prop::collection::vec(-1.0f64..1.0, 2 * 8 * 32),
    ) {
        let e = bm(6, 8, seed);
        let cells = 1usize << level;
        let h: Vec<f64> = raw[..8 * cells].to_vec();
        let g: Vec<f64> = raw[8 * cells..16 * cells].to_vec();
        let combo: Vec<f64> = h.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let mk = |c: Vec<f64>| ElementaryIntegrand::new(e.grid(), level, c, Measurability::LagZero).unwrap();
        let ih = integrate(&e, &mk(h)).unwrap();
        let ig = integrate(&e, &mk(g)).unwrap();
        let ic = integrate(&e, &mk(combo)).unwrap();
        let expect: Vec<f64> = ih.iter().zip(&ig).map(|(x, y)| a * x + b * y).collect();
        prop_assert!(close(&ic, &expect, 1e-12));
    }

    #[test]
    fn stopped_integrand_integrates_stopped_path(seed in 0u64..1000, level in 0.05f64..1.5, c in -2.0f64..2.0) {
        let e = bm(7, 20, seed);
        let grid = e.grid();
        let rho = level_crossing(&e, level);
        let tau = level_crossing(&e, level / 2.0);
        let breaks = vec![
            StoppingTimes::constant(grid, 20, Some(0)).unwrap(),
            tau.clone(),
            StoppingTimes::infinite(grid, 20),
        ];
        let h = SimpleIntegrand::adapted(&e, breaks, c.abs().max(1.0), |i, prefix| {
            if i == 0 { c } else { prefix[prefix.len() - 1].clamp(-1.0, 1.0) }
        }).unwrap();
        let restricted = integrate(&e, &h.restrict_to(&rho).unwrap()).unwrap();
        let on_stopped = integrate(&stop(&e, &rho).unwrap(), &h).unwrap();
        let process = bdlab_core::integrands::integral_process(&e, &h).unwrap();
        let frozen: Vec<f64> = (0..20).map(|p| process.value(p, rho.effective(p))).collect();
        prop_assert!(close(&restricted, &on_stopped, 1e-12));
        prop_assert!(close(&restricted, &frozen, 1e-12));
    }

    #[test]
    fn riemann_sum_matches_discretized_integral(seed in 0u64..1000, level in 0u32..=7, shift in -1.0f64..1.0) {
        let e = bm(7, 10, seed);
        let k = e.derive(e.values().iter().map(|x| (x + shift).sin()).collect(), "k");
        let h = discretize(&k, level).unwrap();
        prop_assert!(h.sup_norm() <= 1.0);
        prop_assert_eq!(riemann_sum(&e, &k, level).unwrap(), integrate(&e, &h).unwrap());
    }

    #[test]
    fn ky_fan_is_a_metric(
        x in prop::collection::vec(-3.0f64..3.0, 30),
        y in prop::collection::vec(-3.0f64..3.0, 30),
        z in prop::collection::vec(-3.0f64..3.0, 30),
    ) {
        let d = |a: &[f64], b: &[f64]| ky_fan_distance(a, b).unwrap();
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
        prop_assert!((0.0..=1.0).contains(&d(&x, &y)));
    }

    #[test]
    fn min_norm_is_optimal_simplex_point(
        k in 1usize..6,
        dim in 1usize..6,
        raw in prop::collection::vec(-5.0f64..5.0, 36),
    ) {
        let vs: Vec<Vec<f64>> = (0..k).map(|i| raw[i * dim..(i + 1) * dim].to_vec()).collect();
        let w = min_norm_convex(&vs).unwrap();
        prop_assert!(w.weights.iter().all(|&m| m >= 0.0));
        prop_assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let x = w.combine(&vs);
        let obj: f64 = x.iter().map(|a| a * a).sum();
        prop_assert!((obj - w.objective).abs() <= 1e-9 * (1.0 + obj));
        for v in &vs {
            let vert: f64 = v.iter().map(|a| a * a).sum();
            prop_assert!(w.objective <= vert + 1e-12);
            // first-order optimality: no vertex is a descent direction
            let inner: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
            prop_assert!(inner >= obj - 1e-9 * (1.0 + vert));
        }
    }

    #[test]
    fn accumulation_time_dominates(
        seed in 0u64..1000,
        levels in prop::collection::vec(0.1f64..2.0, 2..7),
        window in 1usize..5,
    ) {
        let e = bm(6, 30, seed);
        let rhos: Vec<StoppingTimes> = levels.iter().map(|&l| level_crossing(&e, l)).collect();
        let xs: Vec<Vec<f64>> = rhos.iter().map(infinity_indicator).collect();
        let seq = mazur_sequence(&xs, window).unwrap();
        let rho = accumulation_stopping_time(&rhos, &seq.weights).unwrap();
        for p in 0..30 {
            for w in &seq.weights {
                for t in 0..=rho.raw(p) {
                    let mass: f64 = (w.start..w.end)
                        .zip(&w.weights)
                        .filter(|(k, _)| t <= rhos[*k].raw(p))
                        .map(|(_, m)| m)
                        .sum();
                    prop_assert!(2.0 * mass >= 1.0 - 1e-12);
                }
            }
        }
    }
}
