//! Ellipse fitting of closed polylines and the resulting shape deviation.
//!
//! A direct ellipse-specific algebraic fit (Halir-Flusser formulation of the
//! constrained conic least-squares problem) provides the start; Levenberg-Marquardt
//! on orthogonal distances refines it.

use nalgebra::{Matrix3, Matrix5, Vector3, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseFit {
    pub center: [f64; 2],
    /// Semi-axes, major first.
    pub axes: [f64; 2],
    /// Direction of the major axis, radians in `(-pi/2, pi/2]`.
    pub angle: f64,
    /// RMS orthogonal distance divided by the mean distance of the points to the center.
    pub deviation: f64,
    pub rms_distance: f64,
}

/// Signed distance from `p` to the ellipse (negative inside).
pub fn signed_distance(center: [f64; 2], axes: [f64; 2], angle: f64, p: [f64; 2]) -> f64 {
    let (s, c) = angle.sin_cos();
    let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
    let (mut u, mut v) = ((c * dx + s * dy).abs(), (-s * dx + c * dy).abs());
    let (mut a, mut b) = (axes[0].abs(), axes[1].abs());
    if a < b {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut u, &mut v);
    }
    let d = distance_first_quadrant(a, b, u, v);
    if (u / a).powi(2) + (v / b).powi(2) < 1.0 {
        -d
    } else {
        d
    }
}

// distance from (y0, y1), y >= 0, to the ellipse with semi-axes e0 >= e1 > 0
fn distance_first_quadrant(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let (z0, z1) = (y0 / e0, y1 / e1);
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1).powi(2);
            let s = root(r0, z0, z1, g);
            let x0 = r0 * y0 / (s + r0);
            let x1 = y1 / (s + 1.0);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer = e0 * y0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let t = numer / denom;
            let x0 = e0 * t;
            let x1 = e1 * (1.0 - t * t).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

fn root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..200 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let g = (n0 / (s + r0)).powi(2) + (z1 / (s + 1.0)).powi(2) - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Conic coefficients `[A, B, C, D, E, F]` of the algebraic fit, on normalized points.
fn direct_fit(pts: &[[f64; 2]]) -> Result<[f64; 6]> {
    let mut s1 = Matrix3::zeros();
    let mut s2 = Matrix3::zeros();
    let mut s3 = Matrix3::zeros();
    for p in pts {
        let (x, y) = (p[0], p[1]);
        let d1 = Vector3::new(x * x, x * y, y * y);
        let d2 = Vector3::new(x, y, 1.0);
        s1 += d1 * d1.transpose();
        s2 += d1 * d2.transpose();
        s3 += d2 * d2.transpose();
    }
    let degenerate = || Error::DegenerateFit("points do not determine an ellipse".into());
    let s3_inv = s3.try_inverse().ok_or_else(degenerate)?;
    let t = -s3_inv * s2.transpose();
    let m = s1 + s2 * t;
    // premultiply by the inverse of the constraint matrix [[0,0,2],[0,-1,0],[2,0,0]]
    let m = Matrix3::from_rows(&[m.row(2) / 2.0, -m.row(1), m.row(0) / 2.0]);
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for lambda in m.complex_eigenvalues().iter() {
        if lambda.im.abs() > 1e-9 * lambda.re.abs().max(1e-300) {
            continue;
        }
        let Some(v) = null_vector(&(m - Matrix3::identity() * lambda.re)) else {
            continue;
        };
        let cond = 4.0 * v[0] * v[2] - v[1] * v[1];
        if cond > 0.0 && best.as_ref().is_none_or(|(c, _)| cond > *c) {
            best = Some((cond, v));
        }
    }
    let (_, a1) = best.ok_or_else(degenerate)?;
    let a2 = t * a1;
    Ok([a1[0], a1[1], a1[2], a2[0], a2[1], a2[2]])
}

fn null_vector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let candidates = [rows[0].cross(&rows[1]), rows[0].cross(&rows[2]), rows[1].cross(&rows[2])];
    let v = candidates.into_iter().max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    let n = v.norm();
    (n > 0.0).then(|| v / n)
}

/// `(center, axes, angle)` of an ellipse given as a conic.
fn conic_geometry(k: [f64; 6]) -> Option<([f64; 2], [f64; 2], f64)> {
    let [a, b, c, d, e, f] = k;
    let det = 4.0 * a * c - b * b;
    if !(det.abs() > 0.0) {
        return None;
    }
    let x0 = (b * e - 2.0 * c * d) / det;
    let y0 = (b * d - 2.0 * a * e) / det;
    let f0 = f + 0.5 * (d * x0 + e * y0);
    let mean = 0.5 * (a + c);
    let diff = (0.25 * (a - c).powi(2) + 0.25 * b * b).sqrt();
    let (l_small, l_large) = (mean - diff, mean + diff);
    let (ax_major, ax_minor) = (-f0 / l_small, -f0 / l_large);
    if !(ax_major > 0.0 && ax_minor > 0.0) {
        return None;
    }
    // eigenvector of [[a, b/2], [b/2, c]] for the smaller eigenvalue
    let angle = 0.5 * b.atan2(a - c) + std::f64::consts::FRAC_PI_2;
    Some(([x0, y0], [ax_major.sqrt(), ax_minor.sqrt()], wrap_angle(angle)))
}

fn wrap_angle(mut t: f64) -> f64 {
    use std::f64::consts::PI;
    while t > PI / 2.0 {
        t -= PI;
    }
    while t <= -PI / 2.0 {
        t += PI;
    }
    t
}

fn residuals(p: &Vector5<f64>, pts: &[[f64; 2]], out: &mut Vec<f64>) {
    out.clear();
    out.extend(pts.iter().map(|&q| signed_distance([p[0], p[1]], [p[2], p[3]], p[4], q)));
}

/// Geometric refinement by Levenberg-Marquardt with forward-difference Jacobians.
fn refine(start: Vector5<f64>, pts: &[[f64; 2]], scale: f64) -> Vector5<f64> {
    let mut p = start;
    let mut r = Vec::new();
    residuals(&p, pts, &mut r);
    let mut cost: f64 = r.iter().map(|x| x * x).sum();
    let mut mu = 1e-3;
    let mut shifted = Vec::new();
    for _ in 0..200 {
        let mut jac = vec![Vector5::zeros(); pts.len()];
        for k in 0..5 {
            let h = 1e-7 * if k == 4 { 1.0 } else { scale };
            let mut q = p;
            q[k] += h;
            residuals(&q, pts, &mut shifted);
            for (row, (a, b)) in jac.iter_mut().zip(shifted.iter().zip(&r)) {
                row[k] = (a - b) / h;
            }
        }
        let mut jtj = Matrix5::zeros();
        let mut jtr = Vector5::zeros();
        for (row, res) in jac.iter().zip(&r) {
            jtj += row * row.transpose();
            jtr += row * *res;
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut lhs = jtj;
            for k in 0..5 {
                lhs[(k, k)] += mu * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = lhs.lu().solve(&(-jtr)) else {
                mu *= 10.0;
                continue;
            };
            let trial = p + step;
            if trial[2] <= 0.0 || trial[3] <= 0.0 {
                mu *= 10.0;
                continue;
            }
            residuals(&trial, pts, &mut shifted);
            let trial_cost: f64 = shifted.iter().map(|x| x * x).sum();
            if trial_cost < cost {
                let gain = (cost - trial_cost) / cost.max(1e-300);
                p = trial;
                std::mem::swap(&mut r, &mut shifted);
                cost = trial_cost;
                mu = (mu / 3.0).max(1e-12);
                improved = gain > 1e-13;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    p
}

/// Fits an ellipse to a closed polyline and reports its deviation.
pub fn ellipse_deviation(polyline: &[[f64; 2]]) -> Result<EllipseFit> {
    let mut pts: Vec<[f64; 2]> = polyline.to_vec();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < MIN_POINTS {
        return Err(Error::DegenerateFit(format!(
            "need at least {MIN_POINTS} points, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let scale = (pts.iter().map(|p| (p[0] - mx).powi(2) + (p[1] - my).powi(2)).sum::<f64>() / n).sqrt();
    if !(scale > 0.0) {
        return Err(Error::DegenerateFit("all points coincide".into()));
    }
    let normalized: Vec<[f64; 2]> = pts.iter().map(|p| [(p[0] - mx) / scale, (p[1] - my) / scale]).collect();
    let conic = direct_fit(&normalized)?;
    let (c, axes, angle) =
        conic_geometry(conic).ok_or_else(|| Error::DegenerateFit("algebraic fit is not an ellipse".into()))?;
    let start = Vector5::new(c[0] * scale + mx, c[1] * scale + my, axes[0] * scale, axes[1] * scale, angle);
    let p = refine(start, &pts, scale);

    let (center, mut axes, mut angle) = ([p[0], p[1]], [p[2].abs(), p[3].abs()], p[4]);
    if axes[0] < axes[1] {
        axes.swap(0, 1);
        angle += std::f64::consts::FRAC_PI_2;
    }
    let mut r = Vec::new();
    residuals(&Vector5::new(center[0], center[1], axes[0], axes[1], angle), &pts, &mut r);
    let rms = (r.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    let mean_radius = pts.iter().map(|q| (q[0] - center[0]).hypot(q[1] - center[1])).sum::<f64>() / n;
    Ok(EllipseFit {
        center,
        axes,
        angle: wrap_angle(angle),
        deviation: rms / mean_radius,
        rms_distance: rms,
    })
}
