//! Two pairs of elliptically contoured densities whose barycenter is not elliptical.
//!
//! Each run rasterizes the pair, computes the (0.5, 0.5) entropic barycenter, and
//! fits ellipses to its level sets. A control run with gaussian generators and the
//! same shape matrices goes through the identical pipeline, so solver blur and
//! discretization are measured rather than assumed.

use serde::{Deserialize, Serialize};

use super::{
    ellipse_deviation, entropic_barycenter, extract_contours_with, leakage, rasterize, BarycenterStatus, ContourSet,
    Domain, EdgeInterpolation, EllipseFit, GridDensity, SinkhornConfig,
};
use crate::error::{Error, Result};

pub const LEVEL_FRACTIONS: [f64; 6] = [0.8, 0.5, 0.3, 0.15, 0.05, 0.02];

type Density = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    /// Cells per side.
    pub n: usize,
    /// Solver settings, shared by the barycenter and the control run. Debiasing is
    /// off by default: its potential update is a deconvolution that stalls on the
    /// cusp and support edge of these densities, leaving blur-scale ripples.
    pub sinkhorn: SinkhornConfig,
    /// Tolerated mass fraction outside the domain.
    pub leak_tol: f64,
    /// Contour levels as fractions of the barycenter maximum, innermost first.
    pub fractions: Vec<f64>,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            n: 256,
            sinkhorn: SinkhornConfig {
                debias: false,
                ..SinkhornConfig::default()
            },
            leak_tol: 5e-2,
            fractions: LEVEL_FRACTIONS.to_vec(),
        }
    }
}

/// Domain, the two marginals, and the two gaussian controls of a case.
pub fn case_setup(case: u8) -> Result<(Domain, [Density; 2], [Density; 2])> {
    match case {
        1 => Ok((
            Domain::square(4.0),
            [
                Box::new(|x, y| (-(x * x + 4.0 * y * y)).exp()),
                Box::new(|x, y| (-(4.0 * x * x + y * y).powf(0.6)).exp()),
            ],
            [
                Box::new(|x, y| (-(x * x + 4.0 * y * y)).exp()),
                Box::new(|x, y| (-(4.0 * x * x + y * y)).exp()),
            ],
        )),
        2 => Ok((
            Domain::square(8.0),
            [
                Box::new(|x, y| (1.0 - 0.25 * x * x - y * y).max(0.0)),
                Box::new(|x, y| (1.0 + 4.0 * x * x + y * y).powi(-2)),
            ],
            [
                Box::new(|x, y| (-(0.25 * x * x + y * y)).exp()),
                Box::new(|x, y| (-(4.0 * x * x + y * y)).exp()),
            ],
        )),
        _ => Err(Error::InvalidInput(format!("unknown counterexample case {case}; expected 1 or 2"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub fraction: f64,
    pub level: f64,
    /// Points on the longest closed contour (0 when there is none).
    pub points: usize,
    pub fit: Option<EllipseFit>,
}

impl LevelReport {
    pub fn deviation(&self) -> Option<f64> {
        self.fit.map(|f| f.deviation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub levels: Vec<LevelReport>,
    pub status: BarycenterStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub case: u8,
    pub domain: Domain,
    pub n: usize,
    /// Solver settings of both runs.
    pub sinkhorn: SinkhornConfig,
    pub leakage: [f64; 2],
    pub marginals: [Vec<LevelReport>; 2],
    pub barycenter: RunReport,
    pub control: RunReport,
    pub inner_deviation: f64,
    pub outer_deviation: f64,
    pub control_outer_deviation: f64,
    pub outer_exceeds_inner: bool,
    pub outer_exceeds_control: bool,
    pub contours: ContourSet,
}

impl CounterexampleReport {
    pub fn converged(&self) -> bool {
        self.barycenter.status.converged && self.control.status.converged
    }

    pub fn non_elliptical(&self) -> bool {
        self.outer_exceeds_inner && self.outer_exceeds_control
    }
}

/// Report plus the computed grids.
#[derive(Debug, Clone)]
pub struct CounterexampleRun {
    pub report: CounterexampleReport,
    pub barycenter: GridDensity,
    pub control: GridDensity,
}

/// Contour fits at `fractions` of the grid maximum. Crossings use cubic edge
/// interpolation so that small inner contours are not dominated by the
/// interpolation error of marching squares.
pub fn level_reports(grid: &GridDensity, fractions: &[f64]) -> (Vec<LevelReport>, ContourSet) {
    let max = grid.max();
    let levels: Vec<f64> = fractions.iter().map(|f| f * max).collect();
    let contours = extract_contours_with(grid, &levels, EdgeInterpolation::Cubic);
    let reports = fractions
        .iter()
        .zip(&levels)
        .enumerate()
        .map(|(k, (&fraction, &level))| {
            let curve = contours.longest_closed(k);
            LevelReport {
                fraction,
                level,
                points: curve.map_or(0, |c| c.len().saturating_sub(1)),
                fit: curve.and_then(|c| ellipse_deviation(c).ok()),
            }
        })
        .collect();
    (reports, contours)
}

fn extreme_deviation(levels: &[LevelReport], outer: bool) -> Result<f64> {
    let pick = if outer {
        levels.iter().min_by(|a, b| a.fraction.total_cmp(&b.fraction))
    } else {
        levels.iter().max_by(|a, b| a.fraction.total_cmp(&b.fraction))
    };
    pick.and_then(LevelReport::deviation).ok_or_else(|| {
        Error::DegenerateFit(format!(
            "no ellipse could be fitted to the {} contour",
            if outer { "outermost" } else { "innermost" }
        ))
    })
}

/// Runs case 1 or 2 and compares its contours with the gaussian control.
pub fn counterexample_run(case: u8, cfg: &CounterexampleConfig) -> Result<CounterexampleRun> {
    if cfg.fractions.is_empty() || cfg.fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
        return Err(Error::InvalidInput("contour fractions must lie strictly between 0 and 1".into()));
    }
    let (domain, marginals, controls) = case_setup(case)?;
    let n = cfg.n;
    let leaks = [leakage(&marginals[0], &domain, n, n)?, leakage(&marginals[1], &domain, n, n)?];
    let grids = [
        rasterize(&marginals[0], &domain, n, n, cfg.leak_tol)?,
        rasterize(&marginals[1], &domain, n, n, cfg.leak_tol)?,
    ];
    let control_grids = [
        rasterize(&controls[0], &domain, n, n, cfg.leak_tol)?,
        rasterize(&controls[1], &domain, n, n, cfg.leak_tol)?,
    ];
    let weights = [0.5, 0.5];
    let (bar, status) = entropic_barycenter(&grids, &weights, &cfg.sinkhorn)?;
    let (control, control_status) = entropic_barycenter(&control_grids, &weights, &cfg.sinkhorn)?;

    let (levels, contours) = level_reports(&bar, &cfg.fractions);
    let (control_levels, _) = level_reports(&control, &cfg.fractions);
    let marginal_levels = [
        level_reports(&grids[0], &cfg.fractions).0,
        level_reports(&grids[1], &cfg.fractions).0,
    ];
    let inner = extreme_deviation(&levels, false)?;
    let outer = extreme_deviation(&levels, true)?;
    let control_outer = extreme_deviation(&control_levels, true)?;
    Ok(CounterexampleRun {
        report: CounterexampleReport {
            case,
            domain,
            n,
            sinkhorn: cfg.sinkhorn,
            leakage: leaks,
            marginals: marginal_levels,
            barycenter: RunReport { levels, status },
            control: RunReport {
                levels: control_levels,
                status: control_status,
            },
            inner_deviation: inner,
            outer_deviation: outer,
            control_outer_deviation: control_outer,
            outer_exceeds_inner: outer > inner,
            outer_exceeds_control: outer > 2.0 * control_outer,
            contours,
        },
        barycenter: bar,
        control,
    })
}
