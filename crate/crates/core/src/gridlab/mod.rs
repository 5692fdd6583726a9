//! Densities on uniform 2D grids: rasterization, entropic barycenters, level-set
//! contours and ellipse diagnostics.

pub mod contour;
pub mod counterexample;
pub mod ellipse;
mod io;
pub mod sinkhorn;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::RadialDistribution;

pub use contour::{extract_contours, extract_contours_with, ContourSet, EdgeInterpolation, Polyline};
pub use counterexample::{counterexample_run, CounterexampleConfig, CounterexampleReport};
pub use ellipse::{ellipse_deviation, EllipseFit};
pub use sinkhorn::{entropic_barycenter, BarycenterStatus, SinkhornConfig};

/// Default tolerated fraction of mass outside the rasterization domain.
pub const LEAK_TOL: f64 = 1e-6;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Domain {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || [x0, x1, y0, y1].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("domain bounds must be finite with x0 < x1, y0 < y1".into()));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    /// `[-h, h]^2`.
    pub fn square(h: f64) -> Self {
        Self {
            x0: -h,
            x1: h,
            y0: -h,
            y1: h,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    fn scaled(&self, factor: f64) -> Self {
        let (cx, cy) = (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1));
        let (hx, hy) = (0.5 * factor * self.width(), 0.5 * factor * self.height());
        Self {
            x0: cx - hx,
            x1: cx + hx,
            y0: cy - hy,
            y1: cy + hy,
        }
    }
}

/// Nonnegative cell values on an `nx x ny` grid, row-major (`values[j * nx + i]`,
/// `i` along x). Cell `(i, j)` has center `origin + ((i + 1/2) cx, (j + 1/2) cy)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
    pub cell: [f64; 2],
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn new(nx: usize, ny: usize, origin: [f64; 2], cell: [f64; 2], values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 || values.len() != nx * ny {
            return Err(Error::InvalidInput(format!(
                "grid of {nx}x{ny} cells cannot hold {} values",
                values.len()
            )));
        }
        if !(cell[0] > 0.0 && cell[1] > 0.0) || !origin.iter().chain(&cell).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("cell sizes must be positive and finite".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput("grid values must be finite and nonnegative".into()));
        }
        Ok(Self {
            nx,
            ny,
            origin,
            cell,
            values,
        })
    }

    /// Grid covering `domain` with `nx x ny` cells, all zero.
    pub fn zeros(domain: &Domain, nx: usize, ny: usize) -> Result<Self> {
        Self::new(
            nx,
            ny,
            [domain.x0, domain.y0],
            [domain.width() / nx as f64, domain.height() / ny as f64],
            vec![0.0; nx * ny],
        )
    }

    pub fn domain(&self) -> Domain {
        Domain {
            x0: self.origin[0],
            x1: self.origin[0] + self.nx as f64 * self.cell[0],
            y0: self.origin[1],
            y1: self.origin[1] + self.ny as f64 * self.cell[1],
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin[0] + (i as f64 + 0.5) * self.cell[0]
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin[1] + (j as f64 + 0.5) * self.cell[1]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn normalized(mut self) -> Result<Self> {
        let s = self.sum();
        if !(s > 0.0) {
            return Err(Error::InvalidInput("grid carries no mass".into()));
        }
        self.values.iter_mut().for_each(|v| *v /= s);
        Ok(self)
    }

    pub fn same_geometry(&self, other: &GridDensity) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.origin == other.origin && self.cell == other.cell
    }

    /// Weighted mean of the cell centers.
    pub fn mean(&self) -> [f64; 2] {
        let s = self.sum();
        let (mut mx, mut my) = (0.0, 0.0);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = self.at(i, j);
                mx += v * self.x(i);
                my += v * self.y(j);
            }
        }
        [mx / s, my / s]
    }

    /// `E|X - E X|^2` of the normalized cell masses.
    pub fn second_moment(&self) -> f64 {
        let s = self.sum();
        let [mx, my] = self.mean();
        let mut acc = 0.0;
        for j in 0..self.ny {
            let dy = self.y(j) - my;
            for i in 0..self.nx {
                let dx = self.x(i) - mx;
                acc += self.at(i, j) * (dx * dx + dy * dy);
            }
        }
        acc / s
    }

    /// Covariance `[xx, xy, yy]` of the normalized cell masses.
    pub fn covariance(&self) -> [f64; 3] {
        let s = self.sum();
        let [mx, my] = self.mean();
        let mut c = [0.0; 3];
        for j in 0..self.ny {
            let dy = self.y(j) - my;
            for i in 0..self.nx {
                let dx = self.x(i) - mx;
                let v = self.at(i, j);
                c[0] += v * dx * dx;
                c[1] += v * dx * dy;
                c[2] += v * dy * dy;
            }
        }
        c.map(|x| x / s)
    }

    /// `max |a - b|` over cells.
    pub fn sup_distance(&self, other: &GridDensity) -> Result<f64> {
        if !self.same_geometry(other) {
            return Err(Error::InvalidInput("grids have different geometry".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Point reflection `(x, y) -> (-x, -y)` about the domain center, in index space.
    pub fn reflected(&self) -> GridDensity {
        let mut out = self.clone();
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.values[j * self.nx + i] = self.at(self.nx - 1 - i, self.ny - 1 - j);
            }
        }
        out
    }
}

fn midpoint_mass<F: Fn(f64, f64) -> f64>(f: &F, domain: &Domain, nx: usize, ny: usize, skip: Option<(usize, usize)>) -> f64 {
    let (hx, hy) = (domain.width() / nx as f64, domain.height() / ny as f64);
    let mut acc = 0.0;
    for j in 0..ny {
        let y = domain.y0 + (j as f64 + 0.5) * hy;
        for i in 0..nx {
            if let Some((bx, by)) = skip {
                // central block already accounted for
                if i >= bx && i < nx - bx && j >= by && j < ny - by {
                    continue;
                }
            }
            acc += f(domain.x0 + (i as f64 + 0.5) * hx, y);
        }
    }
    acc * hx * hy
}

fn sample_cells<F: Fn(f64, f64) -> f64>(f: &F, domain: &Domain, nx: usize, ny: usize) -> Result<GridDensity> {
    let mut grid = GridDensity::zeros(domain, nx, ny)?;
    for j in 0..ny {
        let y = grid.y(j);
        for i in 0..nx {
            let v = f(grid.x(i), y);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "density is negative or not finite at ({}, {y})",
                    grid.x(i)
                )));
            }
            grid.values[j * nx + i] = v;
        }
    }
    Ok(grid)
}

fn leak_fraction<F: Fn(f64, f64) -> f64>(f: &F, grid: &GridDensity) -> Result<f64> {
    let inside = grid.sum() * grid.cell[0] * grid.cell[1];
    if !(inside > 0.0) {
        return Err(Error::InvalidInput("density vanishes on the whole domain".into()));
    }
    let domain = grid.domain();
    let mut outside = 0.0;
    for k in 1..=3 {
        let frame = domain.scaled(3f64.powi(k));
        outside += midpoint_mass(f, &frame, 3 * grid.nx, 3 * grid.ny, Some((grid.nx, grid.ny)));
    }
    Ok(outside / (inside + outside))
}

/// Fraction of the mass of `f` lying outside `domain`, estimated by the midpoint rule
/// on three nested frames of 3, 9 and 27 times the domain size.
pub fn leakage<F: Fn(f64, f64) -> f64>(f: F, domain: &Domain, nx: usize, ny: usize) -> Result<f64> {
    leak_fraction(&f, &sample_cells(&f, domain, nx, ny)?)
}

/// Samples `f` at cell centers and normalizes; fails if more than `leak_tol` of the
/// mass lies outside the domain (see [`leakage`]).
pub fn rasterize<F: Fn(f64, f64) -> f64>(f: F, domain: &Domain, nx: usize, ny: usize, leak_tol: f64) -> Result<GridDensity> {
    let grid = sample_cells(&f, domain, nx, ny)?;
    let leakage = leak_fraction(&f, &grid)?;
    if leakage > leak_tol {
        return Err(Error::DomainTooSmall {
            leakage,
            tolerance: leak_tol,
        });
    }
    grid.normalized()
}

/// Rasterizes a two-dimensional radially contoured distribution.
pub fn rasterize_radial(dist: &RadialDistribution, domain: &Domain, nx: usize, ny: usize, leak_tol: f64) -> Result<GridDensity> {
    if dist.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: dist.dim(),
        });
    }
    rasterize(|x, y| dist.pdf(&[x, y]), domain, nx, ny, leak_tol)
}
