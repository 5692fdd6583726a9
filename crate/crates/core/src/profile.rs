//! Radial generator functions and the radially contoured distributions built on them.
//!
//! A distribution `R_d(m, c, rho)` has density `rho(|x - m| / c) / Z` on `R^d`.
//! Everything transport-related reduces to the law of the radius `|x - m|`,
//! whose density is `|S^{d-1}| r^{d-1} rho(r)` (suitably normalized). That law is
//! tabulated once per profile at unit scale in [`RadialMeasure`]; other scales are
//! exact pushforwards under `r -> c r`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gk15, integrate_with_breaks, QuadOptions};

/// Mass of the radial law allowed beyond the truncation radius.
pub const TAIL_EPS: f64 = 1e-12;
/// Relative tolerance of the quadratures behind normalizers and moments.
pub const QUAD_TOL: f64 = 1e-10;
/// Quantile solve tolerance, relative to the truncation radius.
pub const QUANTILE_TOL: f64 = 1e-10;

// Doubling search for the truncation radius gives up here.
const MAX_TAIL_RADIUS: f64 = 1e12;

/// Builtin generator families, all evaluated at unit scale.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `exp(-r^2 / 2)`
    Gaussian,
    /// `exp(-r)`
    Exponential,
    /// `(1 + r^2)^(-p)`
    Student { p: f64 },
    /// `max(1 - r^2, 0)`
    Bump,
    /// Piecewise-linear samples `(r_i, rho_i)`, zero beyond the last knot.
    Table { r: Vec<f64>, rho: Vec<f64> },
}

impl Generator {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Generator::Gaussian => (-0.5 * r * r).exp(),
            Generator::Exponential => (-r).exp(),
            Generator::Student { p } => (1.0 + r * r).powf(-p),
            Generator::Bump => (1.0 - r * r).max(0.0),
            Generator::Table { r: knots, rho } => {
                if r < 0.0 || r > knots[knots.len() - 1] {
                    return 0.0;
                }
                let k = knots.partition_point(|&x| x <= r);
                if k == 0 {
                    return rho[0];
                }
                if k == knots.len() {
                    return rho[k - 1];
                }
                let (r0, r1) = (knots[k - 1], knots[k]);
                let w = (r - r0) / (r1 - r0);
                rho[k - 1] + w * (rho[k] - rho[k - 1])
            }
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Generator::Gaussian => "gaussian",
            Generator::Exponential => "exponential",
            Generator::Student { .. } => "student",
            Generator::Bump => "bump",
            Generator::Table { .. } => "table",
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Generator::Student { p } => {
                let d = dim as f64;
                if !p.is_finite() || *p <= d / 2.0 {
                    return Err(Error::NonNormalizable(format!(
                        "student generator needs p > d/2 = {} (got p = {p})",
                        d / 2.0
                    )));
                }
                if *p <= (d + 2.0) / 2.0 {
                    return Err(Error::DivergentMoment(format!(
                        "student generator needs p > (d+2)/2 = {} (got p = {p})",
                        (d + 2.0) / 2.0
                    )));
                }
            }
            Generator::Table { r, rho } => {
                if r.len() < 2 || r.len() != rho.len() {
                    return Err(Error::InvalidInput(
                        "table needs matching r and rho arrays with at least two samples".into(),
                    ));
                }
                if r[0] != 0.0 {
                    return Err(Error::InvalidInput("table radii must start at 0".into()));
                }
                if r.windows(2).any(|w| !(w[1] > w[0])) || r.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput(
                        "table radii must be finite and strictly increasing".into(),
                    ));
                }
                if rho.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidInput("table values must be finite and nonnegative".into()));
                }
                if rho.iter().all(|v| *v == 0.0) {
                    return Err(Error::NonNormalizable("table generator is identically zero".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Points where the generator may fail to be smooth.
    fn kinks(&self) -> Vec<f64> {
        match self {
            Generator::Bump => vec![1.0],
            Generator::Table { r, .. } => r.clone(),
            _ => Vec::new(),
        }
    }

    fn compact_support(&self) -> Option<f64> {
        match self {
            Generator::Bump => Some(1.0),
            Generator::Table { r, rho } => {
                let last = rho.iter().rposition(|&v| v > 0.0)?;
                Some(r[(last + 1).min(r.len() - 1)])
            }
            _ => None,
        }
    }

    fn support_start(&self) -> f64 {
        match self {
            Generator::Table { r, rho } => {
                // rho rises linearly from the last zero knot before the first positive one
                let first = rho.iter().position(|&v| v > 0.0).unwrap_or(0);
                if first == 0 {
                    0.0
                } else {
                    r[first - 1]
                }
            }
            _ => 0.0,
        }
    }
}

/// `|S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    // Gamma(d/2) by recursion from Gamma(1) = 1 and Gamma(1/2) = sqrt(pi)
    let mut gamma = if dim % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if dim % 2 == 0 { 1.0 } else { 0.5 };
    let target = dim as f64 / 2.0;
    while x < target {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma
}

/// Unit-scale radial law of a profile: cumulative table over adaptive quadrature leaves.
struct UnitRadial {
    dim: usize,
    generator: Generator,
    knots: Vec<f64>,
    cum: Vec<f64>,
    mass: f64,
    second: f64,
    support_lo: f64,
}

/// `int_0^inf r^(d+1) rho(r) dr`. Beyond the mass cutoff the integral is continued by
/// doubling panels; power-law tails are closed with the geometric sum of the panel ratios.
fn second_moment(generator: &Generator, dim: usize, breaks: &[f64], opts: QuadOptions) -> Result<f64> {
    let g2 = |r: f64| r.powi(dim as i32 + 1) * generator.eval(r);
    let mut total = integrate_with_breaks(&g2, breaks, QuadOptions { rel_tol: 1e-13, ..opts }).value;
    let divergent = || {
        Error::DivergentMoment(format!("{} generator: second moment is not finite", generator.family()))
    };
    if generator.compact_support().is_some() {
        return if total.is_finite() { Ok(total) } else { Err(divergent()) };
    }
    let mut lo = *breaks.last().unwrap();
    let mut previous = f64::NAN;
    loop {
        let panel = integrate_with_breaks(&g2, &[lo, 2.0 * lo], opts).value;
        total += panel;
        if !total.is_finite() {
            return Err(divergent());
        }
        if panel <= 1e-15 * total {
            return Ok(total);
        }
        let ratio = panel / previous;
        if lo >= MAX_TAIL_RADIUS {
            return if ratio < 0.999 {
                Ok(total + panel * ratio / (1.0 - ratio))
            } else {
                Err(divergent())
            };
        }
        previous = panel;
        lo *= 2.0;
    }
}

impl UnitRadial {
    fn build(generator: Generator, dim: usize) -> Result<Self> {
        let g = |r: f64| r.powi(dim as i32 - 1) * generator.eval(r);
        let opts = QuadOptions {
            abs_tol: 1e-300,
            rel_tol: 1e-14,
            max_intervals: 2000,
        };

        let mut breaks = vec![0.0];
        match generator.compact_support() {
            Some(end) => {
                breaks.extend(generator.kinks().into_iter().filter(|&k| k > 0.0 && k < end));
                breaks.push(end);
            }
            None => {
                // doubling search; the mass beyond `hi` is estimated by continuing the
                // last two panels geometrically
                let mut total = 0.0;
                let mut lo = 0.0;
                let mut hi = 1.0;
                let mut previous = f64::INFINITY;
                loop {
                    let panel = integrate_with_breaks(&g, &[lo, hi], opts).value;
                    total += panel;
                    breaks.push(hi);
                    let ratio = panel / previous;
                    let beyond = if previous.is_finite() && ratio < 1.0 {
                        panel * ratio / (1.0 - ratio)
                    } else {
                        f64::INFINITY
                    };
                    if total > 0.0 && (panel == 0.0 || beyond <= TAIL_EPS * total) {
                        break;
                    }
                    previous = panel;
                    if hi >= MAX_TAIL_RADIUS {
                        return Err(Error::NonNormalizable(format!(
                            "{} generator keeps mass beyond r = {hi:e}",
                            generator.family()
                        )));
                    }
                    lo = hi;
                    hi *= 2.0;
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let mut knots = vec![breaks[0]];
        let mut cum = vec![0.0];
        let mut acc = 0.0;
        for w in breaks.windows(2) {
            let res = integrate_with_breaks(&g, w, opts);
            for p in res.panels {
                acc += p.value;
                knots.push(p.b);
                cum.push(acc);
            }
        }
        let mass = acc;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::NonNormalizable(format!(
                "{} generator has zero or non-finite mass",
                generator.family()
            )));
        }
        let second = second_moment(&generator, dim, &breaks, opts)?;
        let support_lo = generator.support_start();
        Ok(Self {
            dim,
            generator,
            knots,
            cum,
            mass,
            second,
            support_lo,
        })
    }

    fn r_max(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    fn radial_integrand(&self, r: f64) -> f64 {
        r.powi(self.dim as i32 - 1) * self.generator.eval(r)
    }

    /// Unnormalized cumulative mass on `[0, r]`.
    fn cumulative(&self, r: f64) -> f64 {
        if r <= self.knots[0] {
            return 0.0;
        }
        if r >= self.r_max() {
            return self.mass;
        }
        let k = self.knots.partition_point(|&x| x <= r) - 1;
        let a = self.knots[k];
        if r == a {
            return self.cum[k];
        }
        let g = |s: f64| self.radial_integrand(s);
        self.cum[k] + gk15(&g, a, r).0
    }

    fn cdf(&self, r: f64) -> f64 {
        (self.cumulative(r) / self.mass).clamp(0.0, 1.0)
    }

    fn density(&self, r: f64) -> f64 {
        if r < 0.0 || r > self.r_max() {
            return 0.0;
        }
        self.radial_integrand(r) / self.mass
    }

    /// Generalized inverse `inf { r : F(r) >= u }`.
    fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.support_lo;
        }
        if u >= 1.0 {
            return self.r_max();
        }
        let target = u * self.mass;
        // first leaf whose right end reaches the target
        let k = self.cum.partition_point(|&c| c < target).clamp(1, self.cum.len() - 1) - 1;
        let (mut lo, mut hi) = (self.knots[k], self.knots[k + 1]);
        let base = self.cum[k];
        let need = target - base;
        let leaf_mass = self.cum[k + 1] - base;
        if leaf_mass <= 0.0 {
            return lo;
        }
        // inversion is ill-conditioned where the density vanishes at a knot
        if self.cum[k + 1] - target <= 4.0 * f64::EPSILON * self.cum[k + 1] {
            return hi;
        }
        let g = |s: f64| self.radial_integrand(s);
        // integrate from the nearer knot so rounding scales with the smaller piece
        let rest = self.cum[k + 1] - target;
        let from_right = need > rest;
        let (left, right) = (self.knots[k], self.knots[k + 1]);
        let defect = |r: f64| {
            if from_right {
                rest - gk15(&g, r, right).0
            } else {
                gk15(&g, left, r).0 - need
            }
        };
        let tol = 1e-15 * self.r_max().max(1.0);
        let mut r = lo + (need / leaf_mass).clamp(0.0, 1.0) * (hi - lo);
        for _ in 0..100 {
            let val = defect(r);
            if val < 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            if hi - lo <= tol {
                break;
            }
            let slope = g(r);
            let newton = if slope > 0.0 { r - val / slope } else { f64::NAN };
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - r).abs() <= 0.25 * tol {
                // converged; the sign test above already tightened the bracket
                r = next;
                break;
            }
            r = next;
        }
        r.clamp(left, right)
    }
}

/// A generator function in a fixed dimension, with its unit-scale radial law.
#[derive(Clone)]
pub struct RadialProfile {
    unit: Arc<UnitRadial>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("generator", &self.unit.generator)
            .field("dim", &self.unit.dim)
            .field("tail_radius", &self.unit.r_max())
            .finish()
    }
}

impl RadialProfile {
    pub fn new(generator: Generator, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        generator.validate(dim)?;
        Ok(Self {
            unit: Arc::new(UnitRadial::build(generator, dim)?),
        })
    }

    pub fn gaussian(dim: usize) -> Result<Self> {
        Self::new(Generator::Gaussian, dim)
    }

    pub fn exponential(dim: usize) -> Result<Self> {
        Self::new(Generator::Exponential, dim)
    }

    pub fn student(p: f64, dim: usize) -> Result<Self> {
        Self::new(Generator::Student { p }, dim)
    }

    pub fn bump(dim: usize) -> Result<Self> {
        Self::new(Generator::Bump, dim)
    }

    pub fn table(r: Vec<f64>, rho: Vec<f64>, dim: usize) -> Result<Self> {
        Self::new(Generator::Table { r, rho }, dim)
    }

    pub fn generator(&self) -> &Generator {
        &self.unit.generator
    }

    pub fn dim(&self) -> usize {
        self.unit.dim
    }

    /// Truncation radius at unit scale.
    pub fn tail_radius(&self) -> f64 {
        self.unit.r_max()
    }

    /// `int_0^inf r^{d-1} rho(r) dr`
    pub fn radial_mass(&self) -> f64 {
        self.unit.mass
    }

    /// `int_0^inf r^{d+1} rho(r) dr`
    pub fn radial_second_moment(&self) -> f64 {
        self.unit.second
    }

    /// `Z = c^d |S^{d-1}| int_0^inf r^{d-1} rho(r) dr`
    pub fn normalizer(&self, scale: f64) -> Result<f64> {
        check_scale(scale)?;
        Ok(scale.powi(self.dim() as i32) * sphere_area(self.dim()) * self.unit.mass)
    }

    /// The radial law of `R_d(m, scale, rho)`.
    pub fn radial_measure(&self, scale: f64) -> Result<RadialMeasure> {
        check_scale(scale)?;
        Ok(RadialMeasure {
            unit: self.unit.clone(),
            scale,
        })
    }

    pub fn same_generator(&self, other: &RadialProfile) -> bool {
        Arc::ptr_eq(&self.unit, &other.unit) || (self.dim() == other.dim() && self.generator() == other.generator())
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("scale must be positive and finite (got {scale})")))
    }
}

/// Probability law of the radius on `[0, r_max]`, represented through its CDF and quantile.
#[derive(Clone)]
pub struct RadialMeasure {
    unit: Arc<UnitRadial>,
    scale: f64,
}

impl fmt::Debug for RadialMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialMeasure")
            .field("family", &self.unit.generator.family())
            .field("dim", &self.unit.dim)
            .field("scale", &self.scale)
            .finish()
    }
}

impl RadialMeasure {
    pub fn dim(&self) -> usize {
        self.unit.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn r_max(&self) -> f64 {
        self.scale * self.unit.r_max()
    }

    pub fn support_lo(&self) -> f64 {
        self.scale * self.unit.support_lo
    }

    pub fn cdf(&self, r: f64) -> f64 {
        self.unit.cdf(r / self.scale)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.scale * self.unit.quantile(u)
    }

    /// Density of the radius law (integrates to one over `[0, r_max]`).
    pub fn density(&self, r: f64) -> f64 {
        self.unit.density(r / self.scale) / self.scale
    }

    /// `E[r^2]` under this law.
    pub fn second_moment(&self) -> f64 {
        self.scale * self.scale * self.unit.second / self.unit.mass
    }

    /// Leaf boundaries of the underlying cumulative table, in scaled units.
    /// CDF values at the knots: the quantile is smooth between consecutive ones.
    pub fn u_breaks(&self) -> Vec<f64> {
        self.knots().into_iter().map(|r| self.cdf(r)).collect()
    }

    pub fn knots(&self) -> Vec<f64> {
        self.unit.knots.iter().map(|k| k * self.scale).collect()
    }
}

/// `R_d(m, c, rho)`.
#[derive(Debug, Clone)]
pub struct RadialDistribution {
    center: Vec<f64>,
    scale: f64,
    profile: RadialProfile,
}

impl RadialDistribution {
    pub fn new(center: Vec<f64>, scale: f64, profile: RadialProfile) -> Result<Self> {
        check_scale(scale)?;
        if center.len() != profile.dim() {
            return Err(Error::DimensionMismatch {
                expected: profile.dim(),
                got: center.len(),
            });
        }
        if center.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("center must be finite".into()));
        }
        Ok(Self {
            center,
            scale,
            profile,
        })
    }

    /// Centered at the origin.
    pub fn centered(scale: f64, profile: RadialProfile) -> Result<Self> {
        let dim = profile.dim();
        Self::new(vec![0.0; dim], scale, profile)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    /// `E[X] = m`, exactly.
    pub fn mean(&self) -> Vec<f64> {
        self.center.clone()
    }

    pub fn normalizer(&self) -> f64 {
        self.profile
            .normalizer(self.scale)
            .expect("scale validated at construction")
    }

    /// `sigma^2` with `Cov[X] = sigma^2 I_d`.
    pub fn covariance_scalar(&self) -> f64 {
        let d = self.dim() as f64;
        self.scale * self.scale / d * self.profile.radial_second_moment() / self.profile.radial_mass()
    }

    pub fn radial_measure(&self) -> RadialMeasure {
        self.profile
            .radial_measure(self.scale)
            .expect("scale validated at construction")
    }

    /// Density on `R^d`.
    pub fn pdf(&self, x: &[f64]) -> f64 {
        let r = dist(x, &self.center);
        self.profile.generator().eval(r / self.scale) / self.normalizer()
    }

    pub fn with_center(&self, center: Vec<f64>) -> Result<Self> {
        Self::new(center, self.scale, self.profile.clone())
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(self.center.clone(), scale, self.profile.clone())
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// JSON description of a distribution, shared by the CLI and config files.
///
/// ```json
/// {"family": "student", "params": {"p": 3}, "dim": 2, "scale": 1.5, "center": [0, 1]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub family: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    pub dim: usize,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

impl DistributionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("distribution spec: {e}")))
    }

    pub fn generator(&self) -> Result<Generator> {
        let param = |name: &str| -> Result<&serde_json::Value> {
            self.params
                .get(name)
                .ok_or_else(|| Error::InvalidInput(format!("{} family needs params.{name}", self.family)))
        };
        let array = |name: &str| -> Result<Vec<f64>> {
            param(name)?
                .as_array()
                .ok_or_else(|| Error::InvalidInput(format!("params.{name} must be an array")))?
                .iter()
                .map(|v| {
                    v.as_f64()
                        .ok_or_else(|| Error::InvalidInput(format!("params.{name} must hold numbers")))
                })
                .collect()
        };
        Ok(match self.family.as_str() {
            "gaussian" => Generator::Gaussian,
            "exponential" => Generator::Exponential,
            "bump" => Generator::Bump,
            "student" => Generator::Student {
                p: param("p")?
                    .as_f64()
                    .ok_or_else(|| Error::InvalidInput("params.p must be a number".into()))?,
            },
            "table" => Generator::Table {
                r: array("r")?,
                rho: array("rho")?,
            },
            other => return Err(Error::InvalidInput(format!("unknown family '{other}'"))),
        })
    }

    pub fn build(&self) -> Result<RadialDistribution> {
        let profile = RadialProfile::new(self.generator()?, self.dim)?;
        let center = self.center.clone().unwrap_or_else(|| vec![0.0; self.dim]);
        RadialDistribution::new(center, self.scale, profile)
    }
}
