//! Optimal transport between radially contoured distributions.
//!
//! Everything reduces to the monotone rearrangement `C = Q_1 o F_0` of the two
//! radial laws: the Monge map is `x -> C(|x - m0|) (x - m0)/|x - m0| + m1`, and
//! `W2^2 = |m0 - m1|^2 + int (C(r) - r)^2 dmu0(r)`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::barycenter::{
    graded_u_grid, integrate_u, merge_breaks, radial_w2_squared, GeneralizedRadialDistribution, GeneralizedRadialMeasure, QuantileFn,
};
use crate::error::{Error, Result};
use crate::profile::{RadialDistribution, RadialMeasure};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

/// Tolerance of the pushforward identity `F_1(C(r)) = F_0(r)`.
pub const MAP_TOL: f64 = 1e-8;

/// The nondecreasing map `C` between two radial laws.
#[derive(Debug, Clone)]
pub struct RadialMap {
    source: RadialMeasure,
    target: RadialMeasure,
}

impl RadialMap {
    /// `C(r) = Q_1(F_0(r))`. Where the target CDF is flat the left endpoint is taken,
    /// and `C(0)` is the left edge of the target support.
    pub fn eval(&self, r: f64) -> f64 {
        self.target.quantile(self.source.cdf(r.max(0.0)))
    }

    pub fn eval_many(&self, radii: &[f64]) -> Vec<f64> {
        radii.par_iter().map(|&r| self.eval(r)).collect()
    }

    pub fn source(&self) -> &RadialMeasure {
        &self.source
    }

    pub fn target(&self) -> &RadialMeasure {
        &self.target
    }

    /// The map in the other direction, `Q_0 o F_1`.
    pub fn inverse(&self) -> RadialMap {
        RadialMap {
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }

    /// `int_0^1 (Q_1(u) - Q_0(u))^2 du`, split at the knots of both laws.
    ///
    /// Limited by the resolution of `u` near 1: mass beyond the last representable
    /// level below 1 is seen only through a single node.
    pub fn quantile_cost(&self) -> f64 {
        let breaks = merge_breaks([
            self.source.u_breaks().as_slice(),
            self.target.u_breaks().as_slice(),
            graded_u_grid(65).as_slice(),
        ]);
        integrate_u(
            &|u| (self.target.quantile(u) - self.source.quantile(u)).powi(2),
            &breaks,
        )
    }

    /// `int (C(r) - r)^2 dmu0(r)` over the source knots. Accurate when the source
    /// tail is at least as long as the target's; see [`symmetric_cost`](Self::symmetric_cost).
    pub fn cost(&self) -> f64 {
        let mut breaks = self.source.knots();
        breaks.retain(|&k| k <= self.source.r_max());
        let f = |r: f64| {
            let gap = self.eval(r) - r;
            gap * gap * self.source.density(r)
        };
        integrate_with_breaks(
            &f,
            &breaks,
            QuadOptions {
                abs_tol: 1e-300,
                rel_tol: 1e-13,
                max_intervals: breaks.len() + 4000,
            },
        )
        .value
    }
}

impl RadialMap {
    /// The transport cost integrated over the law with the larger truncation radius,
    /// so a heavy tail is never squeezed into the last cells of a light one. Equal
    /// radii average both directions, which keeps the value symmetric.
    pub fn symmetric_cost(&self) -> f64 {
        let (a, b) = (self.source.r_max(), self.target.r_max());
        if a > b {
            self.cost()
        } else if b > a {
            self.inverse().cost()
        } else {
            0.5 * (self.cost() + self.inverse().cost())
        }
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

pub fn radial_rearrangement(mu0: &RadialDistribution, mu1: &RadialDistribution) -> Result<RadialMap> {
    check_dims(mu0.dim(), mu1.dim())?;
    Ok(RadialMap {
        source: mu0.radial_measure(),
        target: mu1.radial_measure(),
    })
}

/// `T(x) = C(|x - m0|) (x - m0) / |x - m0| + m1`.
#[derive(Debug, Clone)]
pub struct MongeMap {
    m0: Vec<f64>,
    m1: Vec<f64>,
    radial: RadialMap,
}

impl MongeMap {
    pub fn radial_map(&self) -> &RadialMap {
        &self.radial
    }

    pub fn source_center(&self) -> &[f64] {
        &self.m0
    }

    pub fn target_center(&self) -> &[f64] {
        &self.m1
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.m0.len(), x.len())?;
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let r = crate::profile::dist(x, &self.m0);
        // the center maps to the center
        let ratio = if r > 0.0 { self.radial.eval(r) / r } else { 0.0 };
        for k in 0..x.len() {
            out[k] = ratio * (x[k] - self.m0[k]) + self.m1[k];
        }
    }

    /// Applies the map to `n` points stored row-major in `points` (`n * d` values).
    pub fn apply_many(&self, points: &[f64]) -> Result<Vec<f64>> {
        let d = self.m0.len();
        if points.len() % d != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not form points of dimension {d}",
                points.len()
            )));
        }
        let mut out = vec![0.0; points.len()];
        out.par_chunks_mut(d)
            .zip(points.par_chunks(d))
            .for_each(|(o, x)| self.apply_into(x, o));
        Ok(out)
    }
}

pub fn monge_map(mu0: &RadialDistribution, mu1: &RadialDistribution) -> Result<MongeMap> {
    Ok(MongeMap {
        m0: mu0.mean(),
        m1: mu1.mean(),
        radial: radial_rearrangement(mu0, mu1)?,
    })
}

/// Squared distance split into its translation and radial parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W2Parts {
    pub translation_sq: f64,
    pub radial_sq: f64,
}

impl W2Parts {
    /// The distance itself.
    pub fn total(&self) -> f64 {
        (self.translation_sq + self.radial_sq).sqrt()
    }
}

pub fn w2_parts(mu0: &RadialDistribution, mu1: &RadialDistribution) -> Result<W2Parts> {
    let map = radial_rearrangement(mu0, mu1)?;
    let translation_sq = mu0
        .center()
        .iter()
        .zip(mu1.center())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(W2Parts {
        translation_sq,
        radial_sq: map.symmetric_cost(),
    })
}

pub fn w2_distance(mu0: &RadialDistribution, mu1: &RadialDistribution) -> Result<f64> {
    Ok(w2_parts(mu0, mu1)?.total())
}

/// Distance between quantile-represented distributions (interpolants, barycenters).
pub fn w2_generalized(a: &GeneralizedRadialDistribution, b: &GeneralizedRadialDistribution) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let shift: f64 = a.center.iter().zip(&b.center).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((shift + radial_w2_squared(&a.measure, &b.measure)).sqrt())
}

/// Point `t` of the displacement interpolation from `mu0` to `mu1`.
///
/// The radial law is the pushforward of `mu0`'s under `r -> (1 - t) r + t C(r)`,
/// carried as the exact quantile `Q_t(u) = (1 - t) Q_0(u) + t C(Q_0(u))`.
pub fn mccann_interpolate(
    mu0: &RadialDistribution,
    mu1: &RadialDistribution,
    t: f64,
) -> Result<GeneralizedRadialDistribution> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("interpolation time must lie in [0, 1] (got {t})")));
    }
    let map = radial_rearrangement(mu0, mu1)?;
    let mut breaks = map.source.u_breaks();
    breaks.extend(map.target.u_breaks());
    let center = mu0
        .center()
        .iter()
        .zip(mu1.center())
        .map(|(a, b)| (1.0 - t) * a + t * b)
        .collect();
    let q_t: QuantileFn = if t == 0.0 {
        let m = map.source.clone();
        Arc::new(move |u| m.quantile(u))
    } else if t == 1.0 {
        let m = map.target.clone();
        Arc::new(move |u| m.quantile(u))
    } else {
        Arc::new(move |u| {
            let r = map.source.quantile(u);
            (1.0 - t) * r + t * map.eval(r)
        })
    };
    Ok(GeneralizedRadialDistribution::new(
        center,
        GeneralizedRadialMeasure::from_quantile_fn(q_t).with_breaks(&breaks),
    ))
}
