//! Dense linear assignment by shortest augmenting paths (Crouse's variant of
//! Jonker-Volgenant), warm-started with column prices from an auction.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
/// Last auction epsilon relative to the largest cost.
const AUCTION_FINAL_EPS: f64 = 1e-6;
const AUCTION_SCALING: f64 = 5.0;

/// Minimum-cost perfect matching of an `n x n` row-major cost matrix.
/// Returns the column assigned to each row.
pub fn solve(cost: &[f64], n: usize) -> Result<Vec<usize>> {
    assert_eq!(cost.len(), n * n);
    let mut col4row = vec![NONE; n];
    let mut row4col = vec![NONE; n];
    // column duals from an approximate auction; the rows start unassigned
    let mut v: Vec<f64> = auction_prices(cost, n).iter().map(|p| -p).collect();
    let mut u = vec![0.0; n];
    let mut shortest = vec![f64::INFINITY; n];
    let mut path = vec![NONE; n];
    let mut visited_rows = vec![false; n];
    let mut visited_cols = vec![false; n];
    let mut remaining: Vec<usize> = Vec::with_capacity(n);
    let mut touched_rows: Vec<usize> = Vec::with_capacity(n);
    let mut touched_cols: Vec<usize> = Vec::with_capacity(n);

    for cur_row in 0..n {
        shortest.fill(f64::INFINITY);
        remaining.clear();
        remaining.extend((0..n).rev());
        touched_rows.clear();
        touched_cols.clear();

        let mut min_val = 0.0;
        let mut i = cur_row;
        let sink = loop {
            visited_rows[i] = true;
            touched_rows.push(i);
            let row = &cost[i * n..(i + 1) * n];
            let ui = u[i];
            let mut lowest = f64::INFINITY;
            let mut index = NONE;
            for (it, &j) in remaining.iter().enumerate() {
                let r = min_val + row[j] - ui - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                if shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == NONE) {
                    lowest = shortest[j];
                    index = it;
                }
            }
            if index == NONE || !lowest.is_finite() {
                return Err(Error::Solver("assignment problem is infeasible".into()));
            }
            min_val = lowest;
            let j = remaining.swap_remove(index);
            visited_cols[j] = true;
            touched_cols.push(j);
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };

        u[cur_row] += min_val;
        for &r in &touched_rows {
            if r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
            visited_rows[r] = false;
        }
        for &c in &touched_cols {
            v[c] -= min_val - shortest[c];
            visited_cols[c] = false;
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }
    Ok(col4row)
}

/// Column prices from a Gauss-Seidel auction with epsilon scaling. Each phase
/// ends with every row within `eps` of its cheapest `cost + price`; the final
/// `eps` is small against the cost range, so these prices leave few conflicts
/// for the exact augmentation.
fn auction_prices(cost: &[f64], n: usize) -> Vec<f64> {
    let mut prices = vec![0.0; n];
    let range = cost.iter().fold(0.0_f64, |m, &c| m.max(c.abs()));
    if n < 2 || !(range > 0.0) || !range.is_finite() {
        return prices;
    }
    let mut owner = vec![NONE; n];
    let mut queue: Vec<usize> = Vec::with_capacity(n);
    let mut eps = range / 4.0;
    let last = range * AUCTION_FINAL_EPS;
    loop {
        owner.fill(NONE);
        queue.clear();
        queue.extend((0..n).rev());
        while let Some(i) = queue.pop() {
            let row = &cost[i * n..(i + 1) * n];
            let (mut best, mut second, mut j_best) = (f64::INFINITY, f64::INFINITY, 0);
            for (j, (&c, &p)) in row.iter().zip(&prices).enumerate() {
                let h = c + p;
                if h < second {
                    if h < best {
                        second = best;
                        best = h;
                        j_best = j;
                    } else {
                        second = h;
                    }
                }
            }
            prices[j_best] += second - best + eps;
            let previous = std::mem::replace(&mut owner[j_best], i);
            if previous != NONE {
                queue.push(previous);
            }
        }
        if eps <= last {
            return prices;
        }
        eps = (eps / AUCTION_SCALING).max(last);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(cost: &[f64], n: usize) -> f64 {
        fn rec(cost: &[f64], n: usize, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == n {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row * n + j] + rec(cost, n, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, n, 0, &mut vec![false; n])
    }

    #[test]
    fn matches_enumeration() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..=7 {
            for _ in 0..20 {
                let cost: Vec<f64> = (0..n * n).map(|_| (next() * 10.0).floor()).collect();
                let assign = solve(&cost, n).unwrap();
                let mut seen = vec![false; n];
                for &j in &assign {
                    assert!(!seen[j]);
                    seen[j] = true;
                }
                let total: f64 = assign.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
                assert_eq!(total, brute_force(&cost, n));
            }
        }
    }
}
