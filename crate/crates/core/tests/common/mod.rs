#![allow(dead_code)]

use proptest::prelude::*;
use radial_ot::{Generator, RadialDistribution, RadialProfile};

/// Piecewise-linear generator with a zero-density gap between r = 1 and r = 1.5.
pub fn holed_table() -> Generator {
    Generator::Table {
        r: vec![0.0, 0.5, 1.0, 1.0001, 1.5, 2.0, 2.5],
        rho: vec![1.0, 0.8, 0.4, 0.0, 0.0, 0.6, 0.0],
    }
}

pub fn smooth_table() -> Generator {
    Generator::Table {
        r: vec![0.0, 0.7, 1.5, 2.2, 3.0],
        rho: vec![1.0, 0.9, 0.5, 0.2, 0.0],
    }
}

pub fn builtin(index: usize) -> Generator {
    match index % 5 {
        0 => Generator::Gaussian,
        1 => Generator::Exponential,
        2 => Generator::Student { p: 3.0 },
        3 => Generator::Bump,
        _ => smooth_table(),
    }
}

/// Strictly positive on `[0, inf)`.
pub fn positive(index: usize) -> Generator {
    match index % 3 {
        0 => Generator::Gaussian,
        1 => Generator::Exponential,
        _ => Generator::Student { p: 3.5 },
    }
}

pub fn dist(generator: Generator, center: Vec<f64>, scale: f64) -> RadialDistribution {
    let profile = RadialProfile::new(generator, center.len()).unwrap();
    RadialDistribution::new(center, scale, profile).unwrap()
}

pub fn centered(generator: Generator, dim: usize, scale: f64) -> RadialDistribution {
    dist(generator, vec![0.0; dim], scale)
}

/// Random radial distribution in dimension 1..=3 from any builtin family.
pub fn any_dist() -> impl Strategy<Value = RadialDistribution> {
    (0usize..5, 1usize..=3, 0.3f64..3.0, prop::collection::vec(-2.0f64..2.0, 3))
        .prop_map(|(g, d, c, m)| dist(builtin(g), m[..d].to_vec(), c))
}

/// Pair sharing the dimension.
pub fn any_pair() -> impl Strategy<Value = (RadialDistribution, RadialDistribution)> {
    (
        1usize..=3,
        (0usize..5, 0.3f64..3.0, prop::collection::vec(-2.0f64..2.0, 3)),
        (0usize..5, 0.3f64..3.0, prop::collection::vec(-2.0f64..2.0, 3)),
    )
        .prop_map(|(d, (g0, c0, m0), (g1, c1, m1))| {
            (dist(builtin(g0), m0[..d].to_vec(), c0), dist(builtin(g1), m1[..d].to_vec(), c1))
        })
}
