//! Transportation problem with arbitrary marginals by successive shortest paths.
//!
//! Dense Dijkstra over a bipartite residual graph with a super source and sink;
//! reduced costs are kept nonnegative by node potentials. Intended for small
//! and medium instances that the assignment solver cannot handle (unequal sizes
//! or nonuniform weights).

use crate::error::{Error, Result};

const MASS_EPS: f64 = 1e-15;

/// Returns the optimal plan as `(row, col, mass)` triples.
pub fn solve(cost: &[f64], a: &[f64], b: &[f64]) -> Result<Vec<(usize, usize, f64)>> {
    let (n, m) = (a.len(), b.len());
    assert_eq!(cost.len(), n * m);
    // node layout: rows 0..n, columns n..n+m, source n+m, sink n+m+1
    let nodes = n + m + 2;
    let (src, sink) = (n + m, n + m + 1);
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let mut flow = vec![0.0; n * m];
    // positive-flow entries per column, for residual reverse arcs
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut pot = vec![0.0; nodes];
    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];

    let total_a: f64 = a.iter().sum();
    let mut moved = 0.0;
    let mut guard = 0usize;
    while moved < total_a * (1.0 - 1e-14) {
        guard += 1;
        if guard > 4 * (n + m) * (n + m) + 16 {
            return Err(Error::Solver("transport solver failed to terminate".into()));
        }
        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        done.fill(false);
        dist[src] = 0.0;
        loop {
            let mut best = f64::INFINITY;
            let mut node = usize::MAX;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    node = v;
                }
            }
            if node == usize::MAX || node == sink {
                break;
            }
            done[node] = true;
            let du = dist[node] + pot[node];
            let relax = |to: usize, arc_cost: f64, dist: &mut [f64], prev: &mut [usize]| {
                let nd = (du + arc_cost - pot[to]).max(dist[node]);
                if nd < dist[to] {
                    dist[to] = nd;
                    prev[to] = node;
                }
            };
            if node == src {
                for i in 0..n {
                    if supply[i] > MASS_EPS {
                        relax(i, 0.0, &mut dist, &mut prev);
                    }
                }
            } else if node < n {
                let i = node;
                let row = &cost[i * m..(i + 1) * m];
                for j in 0..m {
                    relax(n + j, row[j], &mut dist, &mut prev);
                }
                if supply[i] < a[i] - MASS_EPS {
                    relax(src, 0.0, &mut dist, &mut prev);
                }
            } else {
                let j = node - n;
                for &i in &col_rows[j] {
                    relax(i, -cost[i * m + j], &mut dist, &mut prev);
                }
                if demand[j] > MASS_EPS {
                    relax(sink, 0.0, &mut dist, &mut prev);
                }
            }
        }
        if !dist[sink].is_finite() {
            return Err(Error::Solver("no augmenting path; marginals have unequal mass".into()));
        }
        let d_sink = dist[sink];
        for v in 0..nodes {
            pot[v] += dist[v].min(d_sink);
        }

        // bottleneck along the path
        let mut delta = f64::INFINITY;
        let mut v = sink;
        while v != src {
            let u = prev[v];
            if v == sink {
                delta = delta.min(demand[u - n]);
            } else if u == src {
                delta = delta.min(supply[v]);
            } else if u >= n && v < n {
                delta = delta.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        let mut v = sink;
        while v != src {
            let u = prev[v];
            if v == sink {
                demand[u - n] -= delta;
            } else if u == src {
                supply[v] -= delta;
            } else if u < n {
                let j = v - n;
                let e = &mut flow[u * m + j];
                if *e <= 0.0 {
                    col_rows[j].push(u);
                }
                *e += delta;
            } else {
                let j = u - n;
                let e = &mut flow[v * m + j];
                *e -= delta;
                if *e <= MASS_EPS {
                    *e = 0.0;
                    col_rows[j].retain(|&r| r != v);
                }
            }
            v = u;
        }
        moved += delta;
    }
    let mut plan = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if flow[i * m + j] > 0.0 {
                plan.push((i, j, flow[i * m + j]));
            }
        }
    }
    Ok(plan)
}
