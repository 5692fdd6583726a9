mod common;

use common::*;
use proptest::prelude::*;
use radial_ot::transport::w2_generalized;
use radial_ot::{mccann_interpolate, radial_barycenter, radial_rearrangement, w2_distance, RadialProfile};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn rearrangement_is_nondecreasing((a, b) in any_pair()) {
        let map = radial_rearrangement(&a, &b).unwrap();
        let top = map.source().r_max();
        let radii: Vec<f64> = (0..1000).map(|k| top * k as f64 / 999.0).collect();
        let images = map.eval_many(&radii);
        let slack = 1e-12 * map.target().r_max();
        for w in images.windows(2) {
            prop_assert!(w[1] >= w[0] - slack, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn rearrangement_pushes_source_law_onto_target((a, b) in any_pair()) {
        let map = radial_rearrangement(&a, &b).unwrap();
        let (src, dst) = (map.source(), map.target());
        for k in 1..100 {
            let r = src.quantile(k as f64 / 100.0);
            let pushed = dst.cdf(map.eval(r));
            prop_assert!((pushed - src.cdf(r)).abs() <= 1e-8, "r = {r}: {pushed} vs {}", src.cdf(r));
        }
    }

    #[test]
    fn distance_is_symmetric((a, b) in any_pair()) {
        let (ab, ba) = (w2_distance(&a, &b).unwrap(), w2_distance(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() <= 1e-8 * ab.max(1.0), "{ab} vs {ba}");
    }

    #[test]
    fn distance_obeys_triangle_inequality(
        d in 1usize..=3,
        picks in prop::collection::vec((0usize..5, 0.3f64..3.0, -2.0f64..2.0), 3),
    ) {
        let ds: Vec<_> = picks
            .iter()
            .map(|&(g, c, m)| dist(builtin(g), vec![m; d], c))
            .collect();
        let w = |i: usize, j: usize| w2_distance(&ds[i], &ds[j]).unwrap();
        prop_assert!(w(0, 2) <= w(0, 1) + w(1, 2) + 1e-8);
        prop_assert!(w(0, 1) <= w(0, 2) + w(2, 1) + 1e-8);
        prop_assert!(w(1, 2) <= w(1, 0) + w(0, 2) + 1e-8);
    }

    #[test]
    fn inverse_rearrangement_undoes_the_map(g0 in 0usize..3, g1 in 0usize..3, d in 1usize..=3, c0 in 0.3f64..3.0, c1 in 0.3f64..3.0) {
        let a = centered(positive(g0), d, c0);
        let b = centered(positive(g1), d, c1);
        let (fwd, back) = (radial_rearrangement(&a, &b).unwrap(), radial_rearrangement(&b, &a).unwrap());
        let scale = fwd.source().r_max();
        for k in 1..100 {
            let r = fwd.source().quantile(0.01 * k as f64);
            let round = back.eval(fwd.eval(r));
            prop_assert!((round - r).abs() <= 1e-6 * scale, "r = {r}: {round}");
        }
    }

    #[test]
    fn quantile_inverts_cdf(g in 0usize..3, d in 1usize..=4, c in 0.3f64..3.0, us in prop::collection::vec(1e-9f64..1.0 - 1e-9, 50)) {
        let m = centered(positive(g), d, c).radial_measure();
        for u in us {
            prop_assert!((m.cdf(m.quantile(u)) - u).abs() <= 1e-8);
        }
    }

    #[test]
    fn scaling_pushes_radial_law_forward(g in 0usize..5, d in 1usize..=3, c in 0.3f64..3.0) {
        let unit = centered(builtin(g), d, 1.0).radial_measure();
        let scaled = centered(builtin(g), d, c).radial_measure();
        for k in 0..100 {
            let r = scaled.r_max() * k as f64 / 99.0;
            prop_assert!((scaled.cdf(r) - unit.cdf(r / c)).abs() <= 1e-8);
        }
    }

    #[test]
    fn normalizer_scales_with_volume(g in 0usize..5, d in 1usize..=3, c in 0.1f64..10.0) {
        let p = RadialProfile::new(builtin(g), d).unwrap();
        let (z1, zc) = (p.normalizer(1.0).unwrap(), p.normalizer(c).unwrap());
        prop_assert!((zc - c.powi(d as i32) * z1).abs() <= 1e-10 * zc);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn interpolant_is_two_point_barycenter((a, b) in any_pair(), t in 0.05f64..0.95) {
        let path = mccann_interpolate(&a, &b, t).unwrap();
        let bar = radial_barycenter(&[a, b], &[1.0 - t, t]).unwrap();
        let top = path.measure.r_max().max(bar.measure.r_max());
        for k in 0..200 {
            let r = top * k as f64 / 199.0;
            prop_assert!((path.measure.cdf(r) - bar.measure.cdf(r)).abs() <= 1e-6, "r = {r}");
        }
        for (x, y) in path.center.iter().zip(&bar.center) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn interpolation_has_constant_speed((a, b) in any_pair(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let (s, t) = (s.min(t), s.max(t));
        let total = w2_distance(&a, &b).unwrap();
        let w = w2_generalized(&mccann_interpolate(&a, &b, s).unwrap(), &mccann_interpolate(&a, &b, t).unwrap()).unwrap();
        prop_assert!((w - (t - s) * total).abs() <= 1e-6 * total.max(1e-12), "{w} vs {}", (t - s) * total);
    }

    #[test]
    fn barycenter_center_is_weighted_mean(
        d in 1usize..=3,
        picks in prop::collection::vec((0usize..5, 0.3f64..3.0, prop::collection::vec(-3.0f64..3.0, 3)), 1..=5),
        raw in prop::collection::vec(0.01f64..1.0, 5),
    ) {
        let ds: Vec<_> = picks.iter().map(|(g, c, m)| dist(builtin(*g), m[..d].to_vec(), *c)).collect();
        let total: f64 = raw[..ds.len()].iter().sum();
        let mut weights: Vec<f64> = raw[..ds.len()].iter().map(|w| w / total).collect();
        let drift: f64 = 1.0 - weights.iter().sum::<f64>();
        weights[0] += drift;
        let bar = radial_barycenter(&ds, &weights).unwrap();
        for k in 0..d {
            let expect: f64 = ds.iter().zip(&weights).map(|(x, w)| w * x.center()[k]).sum();
            prop_assert_eq!(bar.center[k], expect);
        }
        prop_assert!(bar.certified(), "residual {}", bar.residual);
    }

    #[test]
    fn barycenter_commutes_with_translation((a, b) in any_pair(), shift in -5.0f64..5.0, t in 0.0f64..1.0) {
        let d = a.dim();
        let moved = |x: &radial_ot::RadialDistribution| x.with_center(x.center().iter().map(|c| c + shift).collect()).unwrap();
        let w = [1.0 - t, t];
        let base = radial_barycenter(&[a.clone(), b.clone()], &w).unwrap();
        let shifted = radial_barycenter(&[moved(&a), moved(&b)], &w).unwrap();
        for (p, q) in base.measure.q_values().iter().zip(shifted.measure.q_values()) {
            prop_assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
        }
        for k in 0..d {
            prop_assert!((shifted.center[k] - base.center[k] - shift).abs() <= 1e-12 * shift.abs().max(1.0));
        }
    }

    #[test]
    fn barycenter_scales_with_inputs((a, b) in any_pair(), s in 0.2f64..5.0, t in 0.0f64..1.0) {
        let w = [1.0 - t, t];
        let base = radial_barycenter(&[a.clone(), b.clone()], &w).unwrap();
        let scaled = radial_barycenter(&[a.with_scale(a.scale() * s).unwrap(), b.with_scale(b.scale() * s).unwrap()], &w).unwrap();
        let top = base.measure.r_max();
        for (p, q) in base.measure.q_values().iter().zip(scaled.measure.q_values()) {
            prop_assert!((s * p - q).abs() <= 1e-10 * s * top, "{} vs {q}", s * p);
        }
    }
}
