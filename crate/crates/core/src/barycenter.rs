//! Wasserstein barycenters of radially contoured distributions.
//!
//! The barycenter of `R_d(m_j, rho_j)` with weights `lambda` is centered at
//! `sum_j lambda_j m_j` and its radial law has quantile function
//! `Q*(u) = sum_j lambda_j Q_j(u)`. The result is certified by the fixed-point
//! residual of `sum_j lambda_j C_{*->j} = id` evaluated on the stored table, and can
//! be probed through [`barycenter_functional`].

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{RadialDistribution, RadialMeasure};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

/// Number of Chebyshev nodes in the default quantile grid.
pub const GRID_POINTS: usize = 4096;
/// Minimal `u`-length of a flat piece of `Q*` reported as an atom.
pub const ATOM_EPS: f64 = 1e-6;
/// Acceptance bound on the fixed-point residual.
pub const RESIDUAL_TOL: f64 = 1e-6;

pub type QuantileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Chebyshev-Lobatto nodes on `[0, 1]`, plus a few nodes in the last cell so that
/// heavy upper tails are not flattened by linear interpolation.
pub fn graded_u_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut u: Vec<f64> = (0..n)
        .map(|k| 0.5 * (1.0 - (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()))
        .collect();
    u[0] = 0.0;
    u[n - 1] = 1.0;
    let last_interior = u[n - 2];
    for k in 8..=12 {
        let v = 1.0 - 10f64.powi(-k);
        if v > last_interior {
            u.push(v);
        }
    }
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

/// A point mass of the radial law, i.e. a flat piece of the quantile function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub radius: f64,
    pub mass: f64,
    pub u_lo: f64,
    pub u_hi: f64,
}

/// Radial law represented by its quantile function; may carry atoms.
///
/// The quantile is tabulated on a graded `u`-grid. When the law was produced from
/// exact components, the exact quantile is kept as well and used for evaluation;
/// the table serves bracketing, serialization and the fixed-point certificate.
#[derive(Clone)]
pub struct GeneralizedRadialMeasure {
    u_grid: Arc<Vec<f64>>,
    q: Vec<f64>,
    exact: Option<QuantileFn>,
    atoms: Vec<Atom>,
    // points of [0, 1] where the quantile may fail to be smooth
    breaks: Arc<Vec<f64>>,
}

impl fmt::Debug for GeneralizedRadialMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralizedRadialMeasure")
            .field("nodes", &self.q.len())
            .field("r_max", &self.r_max())
            .field("exact", &self.exact.is_some())
            .field("atoms", &self.atoms)
            .finish()
    }
}

impl GeneralizedRadialMeasure {
    /// Tabulates an exact quantile function on the default grid.
    pub fn from_quantile_fn(quantile: QuantileFn) -> Self {
        Self::from_quantile_fn_on(quantile, Arc::new(graded_u_grid(GRID_POINTS)))
    }

    pub fn from_quantile_fn_on(quantile: QuantileFn, u_grid: Arc<Vec<f64>>) -> Self {
        let mut q: Vec<f64> = u_grid.iter().map(|&u| quantile(u)).collect();
        // remove sub-tolerance wiggles so the table is monotone
        for k in 1..q.len() {
            if q[k] < q[k - 1] {
                q[k] = q[k - 1];
            }
        }
        let mut m = Self {
            u_grid,
            q,
            exact: Some(quantile),
            atoms: Vec::new(),
            breaks: Arc::new(graded_u_grid(65)),
        };
        m.atoms = m.scan_atoms();
        m
    }

    pub fn from_radial_measure(measure: &RadialMeasure) -> Self {
        let m = measure.clone();
        Self::from_quantile_fn(Arc::new(move |u| m.quantile(u))).with_breaks(&measure.u_breaks())
    }

    /// Adds points where the exact quantile is not smooth; integrals over `u` split there.
    pub fn with_breaks(mut self, extra: &[f64]) -> Self {
        self.breaks = Arc::new(merge_breaks([self.breaks.as_slice(), extra]));
        self
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Piecewise-linear quantile through `(u_k, q_k)`.
    pub fn from_table(u_grid: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        validate_table(&u_grid, &q)?;
        let u_grid = Arc::new(u_grid);
        let mut m = Self {
            breaks: u_grid.clone(),
            u_grid,
            q,
            exact: None,
            atoms: Vec::new(),
        };
        m.atoms = m.scan_atoms();
        Ok(m)
    }

    /// Table plus a previously detected atom list (used when reloading serialized results).
    pub fn from_parts(u_grid: Vec<f64>, q: Vec<f64>, atoms: Vec<Atom>) -> Result<Self> {
        validate_table(&u_grid, &q)?;
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if atoms.iter().any(|a| !(a.mass >= 0.0)) || total > 1.0 + 1e-12 {
            return Err(Error::InvalidInput("atom masses must be nonnegative and sum to at most 1".into()));
        }
        let u_grid = Arc::new(u_grid);
        Ok(Self {
            breaks: u_grid.clone(),
            u_grid,
            q,
            exact: None,
            atoms,
        })
    }

    pub fn u_grid(&self) -> &[f64] {
        &self.u_grid
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q
    }

    pub fn has_exact_quantile(&self) -> bool {
        self.exact.is_some()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Mass not carried by atoms.
    pub fn continuous_mass(&self) -> f64 {
        1.0 - self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    pub fn r_max(&self) -> f64 {
        *self.q.last().unwrap()
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match &self.exact {
            Some(f) => f(u.clamp(0.0, 1.0)),
            None => self.table_quantile(u),
        }
    }

    /// Linear interpolation of the stored table.
    pub fn table_quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let grid = &self.u_grid;
        let k = grid.partition_point(|&x| x <= u);
        if k == 0 {
            return self.q[0];
        }
        if k >= grid.len() {
            return self.q[grid.len() - 1];
        }
        let w = (u - grid[k - 1]) / (grid[k] - grid[k - 1]);
        self.q[k - 1] + w * (self.q[k] - self.q[k - 1])
    }

    /// Right-continuous CDF `sup { u : Q(u) <= r }`.
    pub fn cdf(&self, r: f64) -> f64 {
        let Some(exact) = &self.exact else {
            return self.table_cdf(r);
        };
        let k = self.q.partition_point(|&x| x <= r);
        if k == 0 {
            return 0.0;
        }
        if k >= self.q.len() {
            return 1.0;
        }
        let (mut lo, mut hi) = (self.u_grid[k - 1], self.u_grid[k]);
        while hi - lo > 1e-16 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if exact(mid) <= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// CDF of the piecewise-linear table.
    pub fn table_cdf(&self, r: f64) -> f64 {
        let k = self.q.partition_point(|&x| x <= r);
        if k == 0 {
            return 0.0;
        }
        if k >= self.q.len() {
            return 1.0;
        }
        let (q0, q1) = (self.q[k - 1], self.q[k]);
        let (u0, u1) = (self.u_grid[k - 1], self.u_grid[k]);
        u0 + (r - q0) / (q1 - q0) * (u1 - u0)
    }

    /// Density of the radius law by central differences of the CDF.
    pub fn radial_density(&self, r: f64) -> f64 {
        let h = self.r_max() * 1e-5;
        let lo = (r - h).max(0.0);
        (self.cdf(r + h) - self.cdf(lo)) / (r + h - lo)
    }

    /// `E[r^2]`.
    pub fn second_moment(&self) -> f64 {
        integrate_u(&|u| self.quantile(u).powi(2), &self.breaks)
    }

    /// Maximal flat runs of the table, refined against the exact quantile when available.
    fn scan_atoms(&self) -> Vec<Atom> {
        let scale = self.r_max().abs().max(1.0);
        let flat_tol = 1e-12 * scale;
        let n = self.q.len();
        let mut atoms = Vec::new();
        let mut k = 0;
        while k + 1 < n {
            if self.q[k + 1] - self.q[k] > flat_tol {
                k += 1;
                continue;
            }
            let start = k;
            while k + 1 < n && self.q[k + 1] - self.q[start] <= flat_tol {
                k += 1;
            }
            let end = k;
            let radius = self.q[start];
            let (mut u_lo, mut u_hi) = (self.u_grid[start], self.u_grid[end]);
            if let Some(f) = &self.exact {
                if start > 0 {
                    u_lo = bisect(self.u_grid[start - 1], u_lo, |u| f(u) >= radius - flat_tol);
                }
                if end + 1 < n {
                    u_hi = bisect(u_hi, self.u_grid[end + 1], |u| f(u) > radius + flat_tol);
                }
            }
            if u_hi - u_lo >= ATOM_EPS {
                atoms.push(Atom {
                    radius,
                    mass: u_hi - u_lo,
                    u_lo,
                    u_hi,
                });
            }
        }
        atoms
    }
}

// smallest point in [lo, hi] where `pred` turns true (pred(hi) assumed true)
fn bisect<P: Fn(f64) -> bool>(mut lo: f64, mut hi: f64, pred: P) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn validate_table(u: &[f64], q: &[f64]) -> Result<()> {
    if u.len() < 2 || u.len() != q.len() {
        return Err(Error::InvalidInput("quantile table needs matching u and Q arrays of length >= 2".into()));
    }
    if u[0] != 0.0 || u[u.len() - 1] != 1.0 || u.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("u-grid must increase strictly from 0 to 1".into()));
    }
    if q.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || q.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("quantile values must be finite, nonnegative and nondecreasing".into()));
    }
    Ok(())
}

/// Sorted union of break lists, clipped to `[0, 1]` and including both ends.
pub(crate) fn merge_breaks<'a>(lists: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut m: Vec<f64> = lists
        .into_iter()
        .flatten()
        .map(|u| u.clamp(0.0, 1.0))
        .chain([0.0, 1.0])
        .collect();
    m.sort_by(f64::total_cmp);
    m.dedup();
    m
}

/// `int_0^1 f(u) du`, split at `breaks` where the integrand is only piecewise smooth.
pub(crate) fn integrate_u<F: Fn(f64) -> f64>(f: &F, breaks: &[f64]) -> f64 {
    integrate_with_breaks(
        f,
        breaks,
        QuadOptions {
            abs_tol: 1e-300,
            rel_tol: 1e-13,
            max_intervals: breaks.len() + 4000,
        },
    )
    .value
}

/// `W2^2` between two radial laws, `int_0^1 (Q_a - Q_b)^2 du`.
pub fn radial_w2_squared(a: &GeneralizedRadialMeasure, b: &GeneralizedRadialMeasure) -> f64 {
    let breaks = merge_breaks([a.breaks(), b.breaks()]);
    integrate_u(&|u| (a.quantile(u) - b.quantile(u)).powi(2), &breaks)
}

/// A center plus a generalized radial law.
#[derive(Debug, Clone)]
pub struct GeneralizedRadialDistribution {
    pub center: Vec<f64>,
    pub measure: GeneralizedRadialMeasure,
}

impl GeneralizedRadialDistribution {
    pub fn new(center: Vec<f64>, measure: GeneralizedRadialMeasure) -> Self {
        Self { center, measure }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

impl From<&RadialDistribution> for GeneralizedRadialDistribution {
    fn from(d: &RadialDistribution) -> Self {
        Self {
            center: d.mean(),
            measure: GeneralizedRadialMeasure::from_radial_measure(&d.radial_measure()),
        }
    }
}

/// Barycenter together with its certificate.
#[derive(Debug, Clone)]
pub struct BarycenterResult {
    pub center: Vec<f64>,
    pub measure: GeneralizedRadialMeasure,
    /// `int_0^1 (sum_j lambda_j C_{*->j}(Q*(u)) - Q*(u))^2 du`, radii in units of `r_max`.
    pub residual: f64,
    pub weights: Vec<f64>,
}

impl BarycenterResult {
    pub fn distribution(&self) -> GeneralizedRadialDistribution {
        GeneralizedRadialDistribution::new(self.center.clone(), self.measure.clone())
    }

    pub fn certified(&self) -> bool {
        self.residual <= RESIDUAL_TOL
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&BarycenterJson::from(self))?)
    }

    /// Reloads a serialized result. The exact quantile is not serialized; the table is.
    pub fn from_json(text: &str) -> Result<Self> {
        let j: BarycenterJson = serde_json::from_str(text)?;
        let atoms = j
            .atoms
            .into_iter()
            .map(|a| Atom {
                radius: a.radius,
                mass: a.mass,
                u_lo: a.u_lo,
                u_hi: a.u_hi,
            })
            .collect();
        Ok(Self {
            center: j.center,
            measure: GeneralizedRadialMeasure::from_parts(j.u_grid, j.quantile, atoms)?,
            residual: j.residual,
            weights: j.weights,
        })
    }

    /// `u,quantile` rows with 17 significant digits.
    pub fn write_quantile_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "u,quantile")?;
        for (u, q) in self.measure.u_grid().iter().zip(self.measure.q_values()) {
            writeln!(w, "{u:.16e},{q:.16e}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct BarycenterJson {
    center: Vec<f64>,
    weights: Vec<f64>,
    residual: f64,
    atoms: Vec<Atom>,
    u_grid: Vec<f64>,
    quantile: Vec<f64>,
}

impl From<&BarycenterResult> for BarycenterJson {
    fn from(b: &BarycenterResult) -> Self {
        Self {
            center: b.center.clone(),
            weights: b.weights.clone(),
            residual: b.residual,
            atoms: b.measure.atoms().to_vec(),
            u_grid: b.measure.u_grid().to_vec(),
            quantile: b.measure.q_values().to_vec(),
        }
    }
}

pub(crate) fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::InvalidInput(format!("{} weights for {n} distributions", weights.len())));
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSimplex { sum });
    }
    Ok(())
}

fn check_dims(dims: impl Iterator<Item = usize>) -> Result<usize> {
    let mut expected = None;
    for d in dims {
        match expected {
            None => expected = Some(d),
            Some(e) if e != d => return Err(Error::DimensionMismatch { expected: e, got: d }),
            _ => {}
        }
    }
    expected.ok_or_else(|| Error::InvalidInput("at least one distribution is required".into()))
}

fn weighted_center<'a>(centers: impl Iterator<Item = &'a [f64]>, weights: &[f64], dim: usize) -> Vec<f64> {
    let mut center = vec![0.0; dim];
    for (m, w) in centers.zip(weights) {
        for (c, x) in center.iter_mut().zip(m) {
            *c += w * x;
        }
    }
    center
}

/// Barycenter of radially contoured distributions.
pub fn radial_barycenter(dists: &[RadialDistribution], weights: &[f64]) -> Result<BarycenterResult> {
    let dim = check_dims(dists.iter().map(|d| d.dim()))?;
    check_weights(weights, dists.len())?;
    let center = weighted_center(dists.iter().map(|d| d.center()), weights, dim);
    let terms: Vec<(f64, RadialMeasure)> = weights
        .iter()
        .copied()
        .zip(dists.iter().map(|d| d.radial_measure()))
        .filter(|(w, _)| *w > 0.0)
        .collect();
    let components: Vec<(f64, QuantileFn)> = terms
        .iter()
        .map(|(w, m)| {
            let m = m.clone();
            (*w, Arc::new(move |u: f64| m.quantile(u)) as QuantileFn)
        })
        .collect();
    let breaks: Vec<Vec<f64>> = terms.iter().map(|(_, m)| m.u_breaks()).collect();
    let breaks = merge_breaks(breaks.iter().map(Vec::as_slice));
    Ok(assemble(center, components, weights.to_vec(), &breaks))
}

/// Barycenter of generalized radial inputs (inputs may carry atoms).
pub fn generalized_barycenter(
    inputs: &[GeneralizedRadialDistribution],
    weights: &[f64],
) -> Result<BarycenterResult> {
    let dim = check_dims(inputs.iter().map(|d| d.dim()))?;
    check_weights(weights, inputs.len())?;
    let center = weighted_center(inputs.iter().map(|d| d.center.as_slice()), weights, dim);
    let breaks = merge_breaks(
        weights
            .iter()
            .zip(inputs)
            .filter(|(w, _)| **w > 0.0)
            .map(|(_, d)| d.measure.breaks()),
    );
    let components: Vec<(f64, QuantileFn)> = weights
        .iter()
        .zip(inputs)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, d)| {
            let m = d.measure.clone();
            (*w, Arc::new(move |u: f64| m.quantile(u)) as QuantileFn)
        })
        .collect();
    Ok(assemble(center, components, weights.to_vec(), &breaks))
}

fn assemble(
    center: Vec<f64>,
    components: Vec<(f64, QuantileFn)>,
    weights: Vec<f64>,
    breaks: &[f64],
) -> BarycenterResult {
    let parts = Arc::new(components);
    let average = {
        let parts = parts.clone();
        Arc::new(move |u: f64| parts.iter().map(|(w, q)| w * q(u)).sum::<f64>()) as QuantileFn
    };
    let measure = GeneralizedRadialMeasure::from_quantile_fn(average).with_breaks(breaks);
    let residual = fixed_point_residual(&measure, &parts);
    BarycenterResult {
        center,
        measure,
        residual,
        weights,
    }
}

/// Defect of `sum_j lambda_j C_{*->j} = id` for the stored piecewise-linear `Q*`,
/// midpoint rule over the table cells, radii normalized by `r_max`.
fn fixed_point_residual(measure: &GeneralizedRadialMeasure, parts: &[(f64, QuantileFn)]) -> f64 {
    let u = measure.u_grid();
    let r_max = measure.r_max().max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for k in 0..u.len() - 1 {
        let mid = 0.5 * (u[k] + u[k + 1]);
        let r = measure.table_quantile(mid);
        let in_atom = measure.atoms().iter().any(|a| mid >= a.u_lo && mid <= a.u_hi);
        // C_{*->j}(r) = Q_j(F*(r)); at an atom the optimal plan is the quantile coupling
        let level = if in_atom { mid } else { measure.table_cdf(r) };
        let pushed: f64 = parts.iter().map(|(w, q)| w * q(level)).sum();
        let defect = (pushed - r) / r_max;
        total += (u[k + 1] - u[k]) * defect * defect;
    }
    total
}

/// `sum_j lambda_j W2(mu_j, candidate)^2`.
pub fn barycenter_functional(
    candidate: &GeneralizedRadialDistribution,
    inputs: &[GeneralizedRadialDistribution],
    weights: &[f64],
) -> Result<f64> {
    check_weights(weights, inputs.len())?;
    for d in inputs {
        if d.dim() != candidate.dim() {
            return Err(Error::DimensionMismatch {
                expected: candidate.dim(),
                got: d.dim(),
            });
        }
    }
    Ok(weights
        .iter()
        .zip(inputs)
        .map(|(w, d)| {
            let shift: f64 = d
                .center
                .iter()
                .zip(&candidate.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            w * (shift + radial_w2_squared(&d.measure, &candidate.measure))
        })
        .sum())
}

/// Flat pieces of the quantile function with `u`-length at least [`ATOM_EPS`].
pub fn detect_atoms(measure: &GeneralizedRadialMeasure) -> Vec<Atom> {
    measure.atoms().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::RadialProfile;

    #[test]
    fn grid_is_graded() {
        let u = graded_u_grid(GRID_POINTS);
        assert_eq!(u[0], 0.0);
        assert_eq!(*u.last().unwrap(), 1.0);
        assert!(u.windows(2).all(|w| w[1] > w[0]));
        let first = u[1] - u[0];
        let middle = u[u.len() / 2 + 1] - u[u.len() / 2];
        assert!(first < 1e-6 && middle > 1e-4);
    }

    #[test]
    fn weight_validation() {
        let d = RadialDistribution::centered(1.0, RadialProfile::gaussian(2).unwrap()).unwrap();
        let ds = vec![d.clone(), d];
        assert!(matches!(radial_barycenter(&ds, &[0.6, 0.6]), Err(Error::WeightSimplex { .. })));
        assert!(matches!(radial_barycenter(&ds, &[1.5, -0.5]), Err(Error::WeightSimplex { .. })));
        assert!(radial_barycenter(&ds, &[1.0]).is_err());
        assert!(radial_barycenter(&ds, &[0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn dimension_mismatch() {
        let a = RadialDistribution::centered(1.0, RadialProfile::gaussian(2).unwrap()).unwrap();
        let b = RadialDistribution::centered(1.0, RadialProfile::gaussian(3).unwrap()).unwrap();
        assert!(matches!(
            radial_barycenter(&[a, b], &[0.5, 0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_input_is_returned() {
        let d = RadialDistribution::new(vec![1.0, -2.0], 1.3, RadialProfile::exponential(2).unwrap()).unwrap();
        let b = radial_barycenter(&[d.clone()], &[1.0]).unwrap();
        assert_eq!(b.center, vec![1.0, -2.0]);
        let m = d.radial_measure();
        for &u in &[0.01, 0.3, 0.77, 0.999] {
            assert!((b.measure.quantile(u) - m.quantile(u)).abs() < 1e-13);
        }
        assert!(b.measure.atoms().is_empty());
        assert!(b.certified());
    }

    #[test]
    fn table_cdf_inverts_table_quantile() {
        let m = GeneralizedRadialMeasure::from_table(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 3.0]).unwrap();
        assert!((m.table_cdf(2.0) - 0.75).abs() < 1e-15);
        assert!((m.cdf(0.5) - 0.25).abs() < 1e-15);
        assert_eq!(m.cdf(-1.0), 0.0);
        assert_eq!(m.cdf(3.0), 1.0);
    }

    #[test]
    fn flat_table_yields_atom() {
        let m = GeneralizedRadialMeasure::from_table(
            vec![0.0, 0.25, 0.4, 0.6, 1.0],
            vec![0.0, 1.0, 1.5, 1.5, 3.0],
        )
        .unwrap();
        let atoms = detect_atoms(&m);
        assert_eq!(atoms.len(), 1);
        assert!((atoms[0].mass - 0.2).abs() < 1e-15);
        assert_eq!(atoms[0].radius, 1.5);
        assert!((m.continuous_mass() + atoms[0].mass - 1.0).abs() < 1e-12);
        // right-continuous CDF jumps across the atom
        assert!((m.cdf(1.5) - 0.6).abs() < 1e-15);
        assert!((m.cdf(1.5 - 1e-9) - 0.4).abs() < 1e-8);
    }

    #[test]
    fn bad_tables_are_rejected() {
        assert!(GeneralizedRadialMeasure::from_table(vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
        assert!(GeneralizedRadialMeasure::from_table(vec![0.1, 1.0], vec![0.0, 0.5]).is_err());
        assert!(GeneralizedRadialMeasure::from_table(vec![0.0, 1.0], vec![-1.0, 0.5]).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_identical() {
        let a = RadialDistribution::new(vec![0.5, 0.0], 1.0, RadialProfile::gaussian(2).unwrap()).unwrap();
        let b = RadialDistribution::new(vec![0.0, 2.0], 2.0, RadialProfile::bump(2).unwrap()).unwrap();
        let res = radial_barycenter(&[a, b], &[0.3, 0.7]).unwrap();
        let text = res.to_json().unwrap();
        let back = BarycenterResult::from_json(&text).unwrap();
        assert_eq!(back.center, res.center);
        assert_eq!(back.weights, res.weights);
        assert_eq!(back.residual.to_bits(), res.residual.to_bits());
        assert_eq!(back.measure.q_values(), res.measure.q_values());
        assert_eq!(back.measure.u_grid(), res.measure.u_grid());
        assert_eq!(back.to_json().unwrap(), text);
    }
}
