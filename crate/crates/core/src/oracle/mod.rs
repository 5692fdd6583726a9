//! Brute-force references: sampling, exact discrete optimal transport, plug-in
//! Wasserstein estimates and one-dimensional empirical barycenters.
//!
//! Nothing here shares numerical machinery with the transport or grid solvers.

pub mod assignment;
pub mod flow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{RadialDistribution, RadialMeasure};

/// Largest `n * m` accepted by [`discrete_ot`].
pub const SIZE_CAP: usize = 4_000_000;
/// Replicates used for the error bar of [`empirical_w2`].
pub const REPLICATES: usize = 10;

/// Weighted points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PointCloud {
    /// Equal weights.
    pub fn uniform(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 || points.is_empty() {
            return Err(Error::InvalidInput("point array does not match the dimension".into()));
        }
        let n = points.len() / dim;
        Self::new(dim, points, vec![1.0 / n as f64; n])
    }

    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() != dim * weights.len() || weights.is_empty() {
            return Err(Error::InvalidInput("point array does not match the weights".into()));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("points must be finite".into()));
        }
        crate::barycenter::check_weights(&weights, weights.len()).map_err(|_| {
            Error::InvalidInput("cloud weights must be nonnegative and sum to 1".into())
        })?;
        Ok(Self { dim, points, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&x| (x - w).abs() <= 1e-15)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for i in 0..self.len() {
            for (c, x) in m.iter_mut().zip(self.point(i)) {
                *c += self.weights[i] * x;
            }
        }
        m
    }

    /// Weighted covariance, row-major `d x d`.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.dim;
        let mean = self.mean();
        let mut cov = vec![0.0; d * d];
        for i in 0..self.len() {
            let p = self.point(i);
            for a in 0..d {
                for b in 0..d {
                    cov[a * d + b] += self.weights[i] * (p[a] - mean[a]) * (p[b] - mean[b]);
                }
            }
        }
        cov
    }

    /// Distances of the points to `center`.
    pub fn radii(&self, center: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| crate::profile::dist(self.point(i), center)).collect()
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw(measure: &RadialMeasure, center: &[f64], n: usize, rng: &mut ChaCha8Rng) -> PointCloud {
    let d = center.len();
    let mut points = Vec::with_capacity(n * d);
    let mut dir = vec![0.0; d];
    for _ in 0..n {
        let u: f64 = rng.random();
        let radius = measure.quantile(u);
        let norm = loop {
            for x in dir.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let s = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if s > 0.0 {
                break s;
            }
        };
        points.extend(dir.iter().zip(center).map(|(x, c)| c + radius * x / norm));
    }
    PointCloud {
        dim: d,
        points,
        weights: vec![1.0 / n as f64; n],
    }
}

fn sample_stream(dist: &RadialDistribution, n: usize, seed: u64, stream: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    Ok(draw(&dist.radial_measure(), dist.center(), n, &mut rng_for(seed, stream)))
}

/// `n` i.i.d. draws: radius by inverse CDF, direction uniform on the sphere.
pub fn sample(dist: &RadialDistribution, n: usize, seed: u64) -> Result<PointCloud> {
    sample_stream(dist, n, seed, 0)
}

/// Optimal coupling for squared Euclidean cost.
#[derive(Debug, Clone)]
pub struct OtSolution {
    pub cost: f64,
    pub coupling: Vec<(usize, usize, f64)>,
}

impl OtSolution {
    pub fn row_sums(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for &(i, _, w) in &self.coupling {
            s[i] += w;
        }
        s
    }

    pub fn col_sums(&self, m: usize) -> Vec<f64> {
        let mut s = vec![0.0; m];
        for &(_, j, w) in &self.coupling {
            s[j] += w;
        }
        s
    }
}

fn cost_matrix(a: &PointCloud, b: &PointCloud) -> Vec<f64> {
    let (n, m) = (a.len(), b.len());
    let mut cost = Vec::with_capacity(n * m);
    for i in 0..n {
        let p = a.point(i);
        for j in 0..m {
            cost.push(p.iter().zip(b.point(j)).map(|(x, y)| (x - y) * (x - y)).sum());
        }
    }
    cost
}

/// Exact discrete optimal transport between two clouds.
pub fn discrete_ot(a: &PointCloud, b: &PointCloud) -> Result<OtSolution> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    let (n, m) = (a.len(), b.len());
    if n.saturating_mul(m) > SIZE_CAP {
        return Err(Error::SizeCap { n, m, cap: SIZE_CAP });
    }
    let cost = cost_matrix(a, b);
    let coupling = if n == m && a.is_uniform() && b.is_uniform() {
        let w = 1.0 / n as f64;
        assignment::solve(&cost, n)?
            .into_iter()
            .enumerate()
            .map(|(i, j)| (i, j, w))
            .collect()
    } else {
        flow::solve(&cost, &a.weights, &b.weights)?
    };
    let total = coupling.iter().map(|&(i, j, w)| w * cost[i * m + j]).sum();
    Ok(OtSolution { cost: total, coupling })
}

/// Same problem, always through the general transportation solver.
pub fn discrete_ot_flow(a: &PointCloud, b: &PointCloud) -> Result<OtSolution> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    let m = b.len();
    let cost = cost_matrix(a, b);
    let coupling = flow::solve(&cost, &a.weights, &b.weights)?;
    let total = coupling.iter().map(|&(i, j, w)| w * cost[i * m + j]).sum();
    Ok(OtSolution { cost: total, coupling })
}

/// Plug-in estimate of `W2(mu0, mu1)` with a resampling error bar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalW2 {
    pub estimate: f64,
    /// Standard deviation over the replicates.
    pub std_dev: f64,
    pub replicates: Vec<f64>,
    pub n: usize,
}

impl EmpiricalW2 {
    /// `estimate +- 2 std_dev`.
    pub fn interval(&self) -> (f64, f64) {
        (self.estimate - 2.0 * self.std_dev, self.estimate + 2.0 * self.std_dev)
    }

    pub fn brackets(&self, value: f64) -> bool {
        let (lo, hi) = self.interval();
        lo <= value && value <= hi
    }
}

/// `sqrt(discrete_ot cost)` between `n` samples of each side. The error bar is the
/// spread over [`REPLICATES`] independent redraws of both samples.
pub fn empirical_w2(mu0: &RadialDistribution, mu1: &RadialDistribution, n: usize, seed: u64) -> Result<EmpiricalW2> {
    if mu0.dim() != mu1.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu0.dim(),
            got: mu1.dim(),
        });
    }
    let one = |k: u64| -> Result<f64> {
        let a = sample_stream(mu0, n, seed, 2 * k)?;
        let b = sample_stream(mu1, n, seed, 2 * k + 1)?;
        Ok(discrete_ot(&a, &b)?.cost.sqrt())
    };
    let estimate = one(0)?;
    let replicates = (1..=REPLICATES as u64).map(one).collect::<Result<Vec<_>>>()?;
    let mean = replicates.iter().sum::<f64>() / REPLICATES as f64;
    let var = replicates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (REPLICATES - 1) as f64;
    Ok(EmpiricalW2 {
        estimate,
        std_dev: var.sqrt(),
        replicates,
        n,
    })
}

/// Quantile averaging of equal-size 1D samples: the `k`-th output point is
/// `sum_j w_j x_j(k)` over the sorted clouds.
pub fn empirical_1d_barycenter(samples: &[PointCloud], weights: &[f64]) -> Result<PointCloud> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidInput("at least one cloud is required".into()))?;
    crate::barycenter::check_weights(weights, samples.len())?;
    let n = first.len();
    for s in samples {
        if s.dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: s.dim });
        }
        if s.len() != n {
            return Err(Error::InvalidInput(format!(
                "clouds must have equal sizes ({} vs {n})",
                s.len()
            )));
        }
        if !s.is_uniform() {
            return Err(Error::InvalidInput("clouds must be equally weighted".into()));
        }
    }
    let mut out = vec![0.0; n];
    for (s, w) in samples.iter().zip(weights) {
        let mut sorted = s.points.clone();
        sorted.sort_by(f64::total_cmp);
        for (o, x) in out.iter_mut().zip(&sorted) {
            *o += w * x;
        }
    }
    PointCloud::uniform(1, out)
}

/// Kolmogorov-Smirnov statistic of `values` against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).max((k + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::RadialProfile;

    fn gauss2(center: [f64; 2], scale: f64) -> RadialDistribution {
        RadialDistribution::new(center.to_vec(), scale, RadialProfile::gaussian(2).unwrap()).unwrap()
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let d = gauss2([1.0, 2.0], 1.0);
        assert_eq!(sample(&d, 100, 7).unwrap(), sample(&d, 100, 7).unwrap());
        assert_ne!(sample(&d, 100, 7).unwrap(), sample(&d, 100, 8).unwrap());
    }

    #[test]
    fn single_points() {
        let a = PointCloud::uniform(2, vec![0.0, 0.0]).unwrap();
        let b = PointCloud::uniform(2, vec![3.0, 4.0]).unwrap();
        assert_eq!(discrete_ot(&a, &b).unwrap().cost, 25.0);
    }

    #[test]
    fn identical_clouds_cost_nothing() {
        let a = sample(&gauss2([0.0, 0.0], 1.0), 50, 1).unwrap();
        let sol = discrete_ot(&a, &a).unwrap();
        assert_eq!(sol.cost, 0.0);
        assert!(sol.coupling.iter().all(|&(i, j, _)| i == j));
    }

    #[test]
    fn sorted_matching_in_one_dimension() {
        let xs = vec![0.3, -1.0, 2.5, 0.0, 1.1, -0.4];
        let ys = vec![1.0, 0.2, -2.0, 0.7, 3.0, -0.1];
        let a = PointCloud::uniform(1, xs.clone()).unwrap();
        let b = PointCloud::uniform(1, ys.clone()).unwrap();
        let sol = discrete_ot(&a, &b).unwrap();
        let mut sx = xs.clone();
        let mut sy = ys.clone();
        sx.sort_by(f64::total_cmp);
        sy.sort_by(f64::total_cmp);
        let sorted: f64 = sx.iter().zip(&sy).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / 6.0;
        assert!((sol.cost - sorted).abs() < 1e-14);
        for &(i, j, _) in &sol.coupling {
            let rank_x = sx.iter().position(|&v| v == xs[i]).unwrap();
            let rank_y = sy.iter().position(|&v| v == ys[j]).unwrap();
            assert_eq!(rank_x, rank_y);
        }
    }

    #[test]
    fn solvers_agree() {
        for seed in 0..5 {
            let a = sample(&gauss2([0.0, 0.0], 1.0), 40, seed).unwrap();
            let b = sample(&gauss2([1.0, 0.0], 2.0), 40, seed + 100).unwrap();
            let x = discrete_ot(&a, &b).unwrap().cost;
            let y = discrete_ot_flow(&a, &b).unwrap().cost;
            assert!((x - y).abs() < 1e-12 * x.max(1.0), "{x} {y}");
        }
    }

    #[test]
    fn unequal_weights_have_feasible_plans() {
        let a = PointCloud::new(1, vec![0.0, 1.0, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        let b = PointCloud::new(1, vec![0.5, 1.5], vec![0.6, 0.4]).unwrap();
        let sol = discrete_ot(&a, &b).unwrap();
        for (s, w) in sol.row_sums(3).iter().zip(&a.weights) {
            assert!((s - w).abs() < 1e-12);
        }
        for (s, w) in sol.col_sums(2).iter().zip(&b.weights) {
            assert!((s - w).abs() < 1e-12);
        }
        // monotone plan: 0->0.5 (0.2), 1->0.5 (0.4), 1->1.5 (0.1), 2->1.5 (0.3)
        let expect = 0.2 * 0.25 + 0.4 * 0.25 + 0.1 * 0.25 + 0.3 * 0.25;
        assert!((sol.cost - expect).abs() < 1e-14);
    }

    #[test]
    fn size_cap() {
        let a = PointCloud::uniform(1, vec![0.0; 2001]).unwrap();
        assert!(matches!(discrete_ot(&a, &a), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn one_dimensional_barycenter() {
        let a = PointCloud::uniform(1, vec![3.0, 1.0, 2.0]).unwrap();
        let b = PointCloud::uniform(1, vec![10.0, 30.0, 20.0]).unwrap();
        let bar = empirical_1d_barycenter(&[a.clone(), b], &[0.5, 0.5]).unwrap();
        assert_eq!(bar.points, vec![5.5, 11.0, 16.5]);
        let single = empirical_1d_barycenter(&[a], &[1.0]).unwrap();
        assert_eq!(single.points, vec![1.0, 2.0, 3.0]);
        let c = PointCloud::uniform(1, vec![0.0, 1.0]).unwrap();
        let d = PointCloud::uniform(1, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(empirical_1d_barycenter(&[c, d], &[0.5, 0.5]).is_err());
    }
}
