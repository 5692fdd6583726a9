//! Level sets by marching squares on the lattice of cell centers.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::GridDensity;
use crate::error::{Error, Result};

pub type Polyline = Vec<[f64; 2]>;

/// Polylines per level. Closed curves repeat their first point at the end and are
/// oriented counterclockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub levels: Vec<f64>,
    pub curves: Vec<Vec<Polyline>>,
}

impl ContourSet {
    /// Longest closed curve at level index `k`.
    pub fn longest_closed(&self, k: usize) -> Option<&Polyline> {
        self.curves[k]
            .iter()
            .filter(|c| is_closed(c))
            .max_by(|a, b| perimeter(a).total_cmp(&perimeter(b)))
    }

    /// Rows `level,curve_id,x,y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "level,curve_id,x,y")?;
        let mut id = 0;
        for (level, curves) in self.levels.iter().zip(&self.curves) {
            for c in curves {
                for p in c {
                    writeln!(w, "{level:.16e},{id},{:.16e},{:.16e}", p[0], p[1])?;
                }
                id += 1;
            }
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("level,curve_id,x,y") {
            return Err(Error::Parse("contour CSV must start with level,curve_id,x,y".into()));
        }
        let mut out = ContourSet {
            levels: Vec::new(),
            curves: Vec::new(),
        };
        let mut last_id = None;
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("bad contour row {line:?}")));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
            let level = num(f[0])?;
            let id: usize = f[1].trim().parse().map_err(|_| Error::Parse(format!("bad curve id {:?}", f[1])))?;
            let point = [num(f[2])?, num(f[3])?];
            if out.levels.last() != Some(&level) {
                out.levels.push(level);
                out.curves.push(Vec::new());
            }
            let curves = out.curves.last_mut().unwrap();
            if last_id != Some(id) {
                curves.push(Vec::new());
                last_id = Some(id);
            }
            curves.last_mut().unwrap().push(point);
        }
        Ok(out)
    }

    /// Feature collection with one `MultiLineString` per level.
    pub fn to_geojson(&self) -> Value {
        let features: Vec<Value> = self
            .levels
            .iter()
            .zip(&self.curves)
            .map(|(level, curves)| {
                json!({
                    "type": "Feature",
                    "properties": { "level": level },
                    "geometry": { "type": "MultiLineString", "coordinates": curves },
                })
            })
            .collect();
        json!({ "type": "FeatureCollection", "features": features })
    }

    pub fn from_geojson(value: &Value) -> Result<Self> {
        let bad = || Error::Parse("not a contour feature collection".into());
        let features = value.get("features").and_then(Value::as_array).ok_or_else(bad)?;
        let mut out = ContourSet {
            levels: Vec::new(),
            curves: Vec::new(),
        };
        for f in features {
            let level = f
                .pointer("/properties/level")
                .and_then(Value::as_f64)
                .ok_or_else(bad)?;
            let coords = f.pointer("/geometry/coordinates").ok_or_else(bad)?;
            out.levels.push(level);
            out.curves.push(serde_json::from_value(coords.clone())?);
        }
        Ok(out)
    }
}

pub(crate) fn is_closed(c: &Polyline) -> bool {
    c.len() >= 4 && c.first() == c.last()
}

fn perimeter(c: &Polyline) -> f64 {
    c.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
}

fn signed_area(c: &Polyline) -> f64 {
    0.5 * c
        .windows(2)
        .map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1])
        .sum::<f64>()
}

// edge identifiers: horizontal edge from (i, j) to (i + 1, j), vertical from (i, j) to (i, j + 1)
fn h_edge(nx: usize, i: usize, j: usize) -> usize {
    2 * (j * nx + i)
}

fn v_edge(nx: usize, i: usize, j: usize) -> usize {
    2 * (j * nx + i) + 1
}

/// How crossings are located along a grid edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeInterpolation {
    /// Linear between the two edge samples.
    Linear,
    /// Catmull-Rom cubic through the two samples and their outer neighbours on the same
    /// grid line; falls back to linear at the border.
    Cubic,
}

/// Marching squares at each level. A level outside `(0, max)` yields no curves.
pub fn extract_contours(grid: &GridDensity, levels: &[f64]) -> ContourSet {
    extract_contours_with(grid, levels, EdgeInterpolation::Linear)
}

/// [`extract_contours`] with a choice of edge interpolation. The cells crossed, and so
/// the topology of the curves, do not depend on it.
pub fn extract_contours_with(grid: &GridDensity, levels: &[f64], interp: EdgeInterpolation) -> ContourSet {
    ContourSet {
        levels: levels.to_vec(),
        curves: levels.iter().map(|&l| contour_level(grid, l, interp)).collect(),
    }
}

fn catmull_rom(v: [f64; 4], t: f64) -> f64 {
    let [a, b, c, d] = v;
    b + 0.5 * t * (c - a + t * (2.0 * a - 5.0 * b + 4.0 * c - d + t * (3.0 * (b - c) + d - a)))
}

// root of the cubic in [0, 1]; v[1] and v[2] bracket the level
fn cubic_crossing(v: [f64; 4], level: f64, guess: f64) -> f64 {
    let rising = v[2] > v[1];
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut t = guess;
    for _ in 0..60 {
        let above = (catmull_rom(v, t) >= level) == rising;
        if above {
            hi = t;
        } else {
            lo = t;
        }
        if hi - lo < 1e-14 {
            break;
        }
        t = 0.5 * (lo + hi);
    }
    0.5 * (lo + hi)
}

fn contour_level(grid: &GridDensity, level: f64, interp: EdgeInterpolation) -> Vec<Polyline> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut points: HashMap<usize, [f64; 2]> = HashMap::new();
    let mut segments: Vec<[usize; 2]> = Vec::new();
    let cross = |p: (usize, usize), q: (usize, usize)| -> [f64; 2] {
        let (vp, vq) = (grid.at(p.0, p.1), grid.at(q.0, q.1));
        let mut t = if vq != vp { ((level - vp) / (vq - vp)).clamp(0.0, 1.0) } else { 0.5 };
        if interp == EdgeInterpolation::Cubic && vq != vp {
            // p and q differ in exactly one index, by one
            let (di, dj) = (q.0 - p.0, q.1 - p.1);
            let inside = p.0 >= di && p.1 >= dj && q.0 + di < nx && q.1 + dj < ny;
            if inside {
                let before = grid.at(p.0 - di, p.1 - dj);
                let after = grid.at(q.0 + di, q.1 + dj);
                t = cubic_crossing([before, vp, vq, after], level, t);
            }
        }
        let (xp, yp) = (grid.x(p.0), grid.y(p.1));
        let (xq, yq) = (grid.x(q.0), grid.y(q.1));
        [xp + t * (xq - xp), yp + t * (yq - yp)]
    };
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let vals = corners.map(|(a, b)| grid.at(a, b));
            let case = vals
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, v)| acc | (((*v >= level) as u8) << k));
            if case == 0 || case == 15 {
                continue;
            }
            // edges: 0 bottom, 1 right, 2 top, 3 left
            let edge = |e: usize| -> (usize, (usize, usize), (usize, usize)) {
                match e {
                    0 => (h_edge(nx, i, j), corners[0], corners[1]),
                    1 => (v_edge(nx, i + 1, j), corners[1], corners[2]),
                    2 => (h_edge(nx, i, j + 1), corners[3], corners[2]),
                    _ => (v_edge(nx, i, j), corners[0], corners[3]),
                }
            };
            let center_high = vals.iter().sum::<f64>() / 4.0 >= level;
            let pairs: &[(usize, usize)] = match case {
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 if center_high => &[(0, 1), (2, 3)],
                5 => &[(3, 0), (1, 2)],
                10 if center_high => &[(3, 0), (1, 2)],
                _ => &[(0, 1), (2, 3)],
            };
            for &(e1, e2) in pairs {
                let mut ids = [0; 2];
                for (slot, e) in [e1, e2].into_iter().enumerate() {
                    let (key, p, q) = edge(e);
                    points.entry(key).or_insert_with(|| cross(p, q));
                    ids[slot] = key;
                }
                segments.push(ids);
            }
        }
    }
    link(&points, &segments)
}

fn link(points: &HashMap<usize, [f64; 2]>, segments: &[[usize; 2]]) -> Vec<Polyline> {
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for &node in seg {
            adjacency.entry(node).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();
    let other = |s: usize, node: usize| if segments[s][0] == node { segments[s][1] } else { segments[s][0] };

    // open chains first, starting from their endpoints, then the remaining loops
    let mut starts: Vec<usize> = adjacency
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(&n, _)| n)
        .collect();
    starts.sort_unstable();
    let mut loop_starts: Vec<usize> = (0..segments.len()).collect();
    loop_starts.sort_by_key(|&s| segments[s][0]);

    let walk = |start_node: usize, first_seg: usize, used: &mut Vec<bool>| -> Vec<usize> {
        let mut chain = vec![start_node];
        let (mut node, mut seg) = (start_node, first_seg);
        loop {
            used[seg] = true;
            node = other(seg, node);
            chain.push(node);
            if node == start_node {
                break;
            }
            match adjacency[&node].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        chain
    };

    for n in starts {
        if let Some(&s) = adjacency[&n].iter().find(|&&s| !used[s]) {
            curves.push(walk(n, s, &mut used));
        }
    }
    for s in loop_starts {
        if !used[s] {
            curves.push(walk(segments[s][0], s, &mut used));
        }
    }

    curves
        .into_iter()
        .map(|ids| {
            let mut c: Polyline = ids.iter().map(|k| points[k]).collect();
            if is_closed(&c) && signed_area(&c) < 0.0 {
                c.reverse();
            }
            c
        })
        .collect()
}
