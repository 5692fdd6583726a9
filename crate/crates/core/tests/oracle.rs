mod common;

use common::*;
use radial_ot::oracle::{discrete_ot, discrete_ot_flow, empirical_w2, ks_statistic, sample, PointCloud};
use radial_ot::{w2_distance, Generator};

/// KS critical value at level 1e-3.
fn ks_critical(n: usize) -> f64 {
    1.95 / (n as f64).sqrt()
}

fn cloud(dist_index: usize, d: usize, n: usize, seed: u64) -> PointCloud {
    sample(&centered(builtin(dist_index), d, 1.0), n, seed).unwrap()
}

#[test]
fn sampled_radii_follow_the_radial_law() {
    let n = 4000;
    for g in 0..5 {
        for d in 1..=3 {
            let dist = dist(builtin(g), vec![0.5; d], 1.3);
            let law = dist.radial_measure();
            let pts = sample(&dist, n, 11 + g as u64).unwrap();
            let ks = ks_statistic(&pts.radii(dist.center()), |r| law.cdf(r));
            assert!(ks < ks_critical(n), "generator {g}, d = {d}: {ks}");
        }
    }
}

#[test]
fn sampled_directions_are_uniform() {
    // the angle of a rotation-invariant 2D sample is uniform on (-pi, pi]
    let n = 4000;
    let dist = dist(Generator::Exponential, vec![1.0, -2.0], 0.7);
    let pts = sample(&dist, n, 5).unwrap();
    let angles: Vec<f64> = (0..n)
        .map(|i| {
            let p = pts.point(i);
            (p[1] + 2.0).atan2(p[0] - 1.0)
        })
        .collect();
    let ks = ks_statistic(&angles, |a| (a + std::f64::consts::PI) / (2.0 * std::f64::consts::PI));
    assert!(ks < ks_critical(n), "{ks}");
}

#[test]
fn seeds_fix_the_sample() {
    let a = cloud(2, 3, 300, 9);
    assert_eq!(a.points, cloud(2, 3, 300, 9).points);
    assert_ne!(a.points, cloud(2, 3, 300, 10).points);
}

#[test]
fn discrete_cost_is_symmetric() {
    let (a, b) = (cloud(0, 2, 200, 1), cloud(3, 2, 200, 2));
    let (ab, ba) = (discrete_ot(&a, &b).unwrap().cost, discrete_ot(&b, &a).unwrap().cost);
    assert!((ab - ba).abs() <= 1e-10 * ab);
}

#[test]
fn discrete_distance_obeys_triangle_inequality() {
    let clouds = [cloud(0, 2, 150, 3), cloud(1, 2, 150, 4), cloud(4, 2, 150, 5)];
    let w = |i: usize, j: usize| discrete_ot(&clouds[i], &clouds[j]).unwrap().cost.sqrt();
    assert!(w(0, 2) <= w(0, 1) + w(1, 2) + 1e-12);
    assert!(w(0, 1) <= w(0, 2) + w(2, 1) + 1e-12);
}

#[test]
fn assignment_and_flow_agree() {
    let (a, b) = (cloud(1, 3, 120, 6), cloud(2, 3, 120, 7));
    let (lsap, flow) = (discrete_ot(&a, &b).unwrap(), discrete_ot_flow(&a, &b).unwrap());
    assert!((lsap.cost - flow.cost).abs() <= 1e-10 * lsap.cost);
}

#[test]
fn weighted_plans_are_feasible() {
    let a = cloud(0, 2, 40, 8);
    let base = cloud(3, 2, 55, 9);
    let raw: Vec<f64> = (0..55).map(|k| 1.0 + (k % 7) as f64).collect();
    let total: f64 = raw.iter().sum();
    let b = PointCloud::new(2, base.points, raw.iter().map(|w| w / total).collect()).unwrap();
    let plan = discrete_ot(&a, &b).unwrap();
    assert!(plan.coupling.iter().all(|&(_, _, w)| w >= 0.0));
    for (s, w) in plan.row_sums(a.len()).iter().zip(&a.weights) {
        assert!((s - w).abs() <= 1e-10);
    }
    for (s, w) in plan.col_sums(b.len()).iter().zip(&b.weights) {
        assert!((s - w).abs() <= 1e-10);
    }
}

#[test]
fn empirical_distance_is_reproducible() {
    let (p, q) = (centered(Generator::Gaussian, 2, 1.0), dist(Generator::Bump, vec![1.0, 0.0], 2.0));
    let (e1, e2) = (empirical_w2(&p, &q, 300, 4).unwrap(), empirical_w2(&p, &q, 300, 4).unwrap());
    assert_eq!(e1.replicates, e2.replicates);
    assert_eq!(e1.replicates.len(), 10);
    let exact = w2_distance(&p, &q).unwrap();
    assert!(e1.brackets(exact), "{:?} vs {exact}", e1.interval());
}
