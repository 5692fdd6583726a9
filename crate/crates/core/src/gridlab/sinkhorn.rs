//! Debiased entropic Wasserstein barycenters on a shared 2D grid.
//!
//! Iterative Bregman projections with the Sinkhorn debiasing potential, run entirely
//! in the log domain. The Gibbs kernel `exp(-|x - y|^2 / eps)` is separable, so each
//! kernel application is a log-sum-exp convolution along rows followed by one along
//! columns.
//!
//! The 1D log-convolution uses
//! `LSE_j [v_j - g (i - j)^2] = -g i^2 + LSE_j [v_j - g j^2 + 2 g i j]`: outputs are
//! processed in blocks around a center `c`, where the exponentials of
//! `v_j - g j^2 + 2 g c j` (shifted by their maximum) are combined with a fixed table
//! of `exp(2 g (i - c) j)` through one matrix product. Block widths keep every table
//! exponent within `[-300, 300]`, so the dominant term of each sum is never lost.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GridDensity;
use crate::error::{Error, Result};

/// Largest `cell^2 / eps` accepted: beyond it neighbouring cells no longer interact.
pub const MAX_KERNEL_EXPONENT: f64 = 700.0;
const TABLE_EXPONENT: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinkhornConfig {
    /// Final regularization, in units of the squared longest domain side.
    pub epsilon: f64,
    /// Regularization of the first annealing stage (same units).
    pub epsilon_start: f64,
    /// Number of geometrically spaced annealing stages ending at `epsilon`.
    pub stages: usize,
    /// Iteration cap per stage.
    pub max_iters: usize,
    /// Stop when successive barycenters differ by less than this in sup norm.
    pub tol: f64,
    /// Same test for the annealing stages before the last, which only warm-start it.
    pub stage_tol: f64,
    pub debias: bool,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            epsilon_start: 1e-1,
            stages: 3,
            max_iters: 2000,
            tol: 1e-9,
            stage_tol: 1e-7,
            debias: true,
        }
    }
}

impl SinkhornConfig {
    /// Regularization of each stage, in grid units (not normalized).
    pub fn schedule(&self, side: f64) -> Vec<f64> {
        let scale = side * side;
        if self.stages <= 1 || self.epsilon_start <= self.epsilon {
            return vec![self.epsilon * scale];
        }
        let ratio = self.epsilon / self.epsilon_start;
        (0..self.stages)
            .map(|s| self.epsilon_start * ratio.powf(s as f64 / (self.stages - 1) as f64) * scale)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub epsilon: f64,
    pub iterations: usize,
    pub change: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycenterStatus {
    /// Whether the final stage met the tolerance.
    pub converged: bool,
    pub iterations: usize,
    pub stages: Vec<StageReport>,
    /// Total mass of the last iterate before normalization.
    pub raw_mass: f64,
}

/// `out[i] = LSE_j (v_j - gamma (i - j)^2)` for many lines at once.
struct LogConv1d {
    n: usize,
    gamma: f64,
    block: usize,
    centered: Vec<f64>,
    table: DMatrix<f64>,
}

impl LogConv1d {
    fn new(n: usize, gamma: f64) -> Self {
        let half = (n as f64 - 1.0) / 2.0;
        let centered: Vec<f64> = (0..n).map(|j| j as f64 - half).collect();
        let span = gamma * (n as f64 - 1.0);
        let block = if span > 0.0 {
            (1 + (2.0 * TABLE_EXPONENT / span) as usize).min(n)
        } else {
            n
        };
        let shift = (block as f64 - 1.0) / 2.0;
        let table = DMatrix::from_fn(n, block, |j, t| (2.0 * gamma * (t as f64 - shift) * centered[j]).exp());
        Self {
            n,
            gamma,
            block,
            centered,
            table,
        }
    }

    /// `input` holds `lines` rows of length `n`; the result is written transposed
    /// (`n` rows of length `lines`).
    fn apply(&self, input: &[f64], lines: usize, out: &mut [f64]) {
        let (n, g) = (self.n, self.gamma);
        let half = (n as f64 - 1.0) / 2.0;
        let shift = (self.block as f64 - 1.0) / 2.0;
        let w: Vec<f64> = input
            .chunks(n)
            .flat_map(|row| row.iter().zip(&self.centered).map(move |(v, c)| v - g * c * c))
            .collect();
        out.par_chunks_mut(self.block * lines)
            .enumerate()
            .for_each(|(b, chunk)| {
                let i0 = b * self.block;
                let center = i0 as f64 + shift - half;
                let mut maxima = vec![f64::NEG_INFINITY; lines];
                let mut e = DMatrix::<f64>::zeros(lines, n);
                for l in 0..lines {
                    let row = &w[l * n..(l + 1) * n];
                    let top = row
                        .iter()
                        .zip(&self.centered)
                        .map(|(x, c)| x + 2.0 * g * center * c)
                        .fold(f64::NEG_INFINITY, f64::max);
                    maxima[l] = top;
                    if top == f64::NEG_INFINITY {
                        continue;
                    }
                    for j in 0..n {
                        e[(l, j)] = (row[j] + 2.0 * g * center * self.centered[j] - top).exp();
                    }
                }
                let sums = &e * &self.table;
                for (t, out_row) in chunk.chunks_mut(lines).enumerate() {
                    let ic = (i0 + t) as f64 - half;
                    for l in 0..lines {
                        out_row[l] = if maxima[l] == f64::NEG_INFINITY {
                            f64::NEG_INFINITY
                        } else {
                            -g * ic * ic + maxima[l] + sums[(l, t)].ln()
                        };
                    }
                }
            });
    }
}

/// Log-domain application of the separable Gibbs kernel on an `nx x ny` grid.
struct LogKernel {
    nx: usize,
    ny: usize,
    along_x: LogConv1d,
    along_y: LogConv1d,
    scratch: Vec<f64>,
}

impl LogKernel {
    fn new(nx: usize, ny: usize, cell: [f64; 2], eps: f64) -> Self {
        Self {
            nx,
            ny,
            along_x: LogConv1d::new(nx, cell[0] * cell[0] / eps),
            along_y: LogConv1d::new(ny, cell[1] * cell[1] / eps),
            scratch: vec![0.0; nx * ny],
        }
    }

    fn apply(&mut self, input: &[f64], out: &mut [f64]) {
        self.along_x.apply(input, self.ny, &mut self.scratch);
        self.along_y.apply(&self.scratch, self.nx, out);
    }
}

fn log_values(g: &GridDensity) -> Vec<f64> {
    g.values
        .iter()
        .map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
        .collect()
}

/// Barycenter of `densities` (normalized to unit mass) with the given weights.
///
/// Returns the normalized barycenter and the solver status; a run that exhausts
/// the iteration cap reports `converged = false` with its last iterate.
pub fn entropic_barycenter(
    densities: &[GridDensity],
    weights: &[f64],
    cfg: &SinkhornConfig,
) -> Result<(GridDensity, BarycenterStatus)> {
    let first = densities
        .first()
        .ok_or_else(|| Error::InvalidInput("at least one density is required".into()))?;
    crate::barycenter::check_weights(weights, densities.len())?;
    if densities.iter().any(|d| !d.same_geometry(first)) {
        return Err(Error::InvalidInput("all densities must share the grid geometry".into()));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if cfg.max_iters == 0 {
        return Err(Error::InvalidInput("iteration cap must be positive".into()));
    }
    let (nx, ny) = (first.nx, first.ny);
    let size = nx * ny;
    let side = (first.cell[0] * nx as f64).max(first.cell[1] * ny as f64);
    let schedule = cfg.schedule(side);
    for &eps in &schedule {
        let worst = first.cell[0].max(first.cell[1]).powi(2) / eps;
        if worst > MAX_KERNEL_EXPONENT {
            return Err(Error::KernelUnderflow {
                epsilon: eps / (side * side),
            });
        }
    }

    let active: Vec<(f64, Vec<f64>)> = densities
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(d, &w)| Ok((w, log_values(&d.clone().normalized()?))))
        .collect::<Result<_>>()?;
    let k = active.len();
    let mut log_a = vec![vec![0.0; size]; k];
    let mut log_b = vec![vec![0.0; size]; k];
    let mut log_ka = vec![vec![0.0; size]; k];
    let mut log_d = vec![0.0; size];
    let mut log_bar = vec![0.0; size];
    let mut tmp = vec![0.0; size];
    let mut bar = vec![0.0; size];
    let mut prev = vec![0.0; size];

    let mut stages = Vec::new();
    let mut total = 0;
    let mut raw_mass = 0.0;
    let mut previous_eps: Option<f64> = None;
    for (stage, &eps) in schedule.iter().enumerate() {
        let tol = if stage + 1 == schedule.len() { cfg.tol } else { cfg.stage_tol };
        if let Some(old) = previous_eps {
            // potentials are eps * log-scalings; keep them across stages
            let ratio = old / eps;
            for v in log_b.iter_mut().flatten().chain(log_d.iter_mut()) {
                *v *= ratio;
            }
        }
        previous_eps = Some(eps);
        let mut kernel = LogKernel::new(nx, ny, first.cell, eps);
        let mut change = f64::INFINITY;
        let mut iters = 0;
        while iters < cfg.max_iters {
            iters += 1;
            for (m, (_, log_alpha)) in active.iter().enumerate() {
                kernel.apply(&log_b[m], &mut tmp);
                for ((a, al), kb) in log_a[m].iter_mut().zip(log_alpha).zip(&tmp) {
                    *a = if *al == f64::NEG_INFINITY { f64::NEG_INFINITY } else { al - kb };
                }
                kernel.apply(&log_a[m], &mut log_ka[m]);
            }
            for x in 0..size {
                let mut s = if cfg.debias { log_d[x] } else { 0.0 };
                for (m, (w, _)) in active.iter().enumerate() {
                    s += w * log_ka[m][x];
                }
                log_bar[x] = s;
            }
            for m in 0..k {
                for x in 0..size {
                    log_b[m][x] = log_bar[x] - log_ka[m][x];
                }
            }
            if cfg.debias {
                kernel.apply(&log_d, &mut tmp);
                for x in 0..size {
                    log_d[x] = 0.5 * (log_d[x] + log_bar[x] - tmp[x]);
                }
            }
            std::mem::swap(&mut bar, &mut prev);
            for (b, l) in bar.iter_mut().zip(&log_bar) {
                *b = l.exp();
            }
            // compare normalized iterates: the raw mass drifts while potentials settle
            raw_mass = bar.iter().sum();
            if !(raw_mass > 0.0 && raw_mass.is_finite()) {
                return Err(Error::Solver(format!(
                    "barycenter mass became {raw_mass} at epsilon {}; try a larger epsilon",
                    eps / (side * side)
                )));
            }
            for b in bar.iter_mut() {
                *b /= raw_mass;
            }
            if iters > 1 {
                change = bar.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if change < tol {
                    break;
                }
            }
        }
        total += iters;
        stages.push(StageReport {
            epsilon: eps / (side * side),
            iterations: iters,
            change,
            converged: change < tol,
        });
    }

    let out = GridDensity::new(nx, ny, first.origin, first.cell, bar)?.normalized()?;
    Ok((
        out,
        BarycenterStatus {
            converged: stages.last().map(|s| s.converged).unwrap_or(false),
            iterations: total,
            stages,
            raw_mass,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(v: &[f64], gamma: f64) -> Vec<f64> {
        let n = v.len();
        (0..n)
            .map(|i| {
                let terms: Vec<f64> = (0..n).map(|j| v[j] - gamma * ((i as f64) - (j as f64)).powi(2)).collect();
                let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if m == f64::NEG_INFINITY {
                    return m;
                }
                m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
            })
            .collect()
    }

    #[test]
    fn blocked_convolution_matches_direct_sum() {
        for &gamma in &[1e-4, 0.02, 0.7, 5.0, 300.0] {
            for &n in &[1usize, 7, 64, 129] {
                let v: Vec<f64> = (0..2 * n)
                    .map(|k| if k % 11 == 3 { f64::NEG_INFINITY } else { 40.0 * ((k as f64) * 0.61).sin() })
                    .collect();
                let conv = LogConv1d::new(n, gamma);
                let mut out = vec![0.0; 2 * n];
                conv.apply(&v, 2, &mut out);
                for l in 0..2 {
                    let expect = naive(&v[l * n..(l + 1) * n], gamma);
                    for i in 0..n {
                        let got = out[i * 2 + l];
                        assert!(
                            (got - expect[i]).abs() <= 1e-10 * expect[i].abs().max(1.0),
                            "gamma {gamma} n {n}: {got} vs {}",
                            expect[i]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn empty_lines_stay_empty() {
        let conv = LogConv1d::new(5, 0.3);
        let mut out = vec![0.0; 10];
        let mut v = vec![f64::NEG_INFINITY; 10];
        v[7] = 0.0;
        conv.apply(&v, 2, &mut out);
        for i in 0..5 {
            assert_eq!(out[2 * i], f64::NEG_INFINITY);
            assert!(out[2 * i + 1].is_finite());
        }
    }

    #[test]
    fn schedule_is_geometric() {
        let cfg = SinkhornConfig::default();
        let s = cfg.schedule(2.0);
        assert_eq!(s.len(), 3);
        assert!((s[0] - 0.4).abs() < 1e-15 && (s[1] - 0.04).abs() < 1e-15 && (s[2] - 0.004).abs() < 1e-15);
    }
}
