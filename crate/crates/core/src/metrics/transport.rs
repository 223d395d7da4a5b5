//! Exact transportation solver (transportation simplex with MODI potentials).

use crate::error::{Error, Result};

/// Largest supply or demand count accepted by [`transport_cost`].
pub const MAX_SUPPORT: usize = 512;

/// Minimum of `Σ cost[i][j]·x[i][j]` over couplings of `supply` and `demand`.
///
/// Both marginals must be nonnegative with (nearly) equal totals. Returns the
/// optimal cost and the plan.
pub fn transport_cost(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    let m = supply.len();
    let n = demand.len();
    if m == 0 || n == 0 {
        return Ok((0.0, vec![vec![0.0; n]; m]));
    }
    if m > MAX_SUPPORT || n > MAX_SUPPORT {
        return Err(Error::Unsupported(format!(
            "transport supports at most {MAX_SUPPORT} points per side"
        )));
    }
    let total_a: f64 = supply.iter().sum();
    let total_b: f64 = demand.iter().sum();
    if (total_a - total_b).abs() > 1e-9 * (1.0 + total_a.abs()) {
        return Err(Error::InvalidArgument(format!(
            "unbalanced transport problem ({total_a} vs {total_b})"
        )));
    }
    let scale = cost.iter().flatten().fold(0.0f64, |s, c| s.max(c.abs()));
    let tol = 1e-12 * (1.0 + scale);

    // northwest corner start: m + n − 1 basic cells forming a spanning tree
    let mut x = vec![vec![0.0; n]; m];
    let mut basic = vec![vec![false; n]; m];
    let (mut ra, mut rb) = (supply.to_vec(), demand.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let q = ra[i].min(rb[j]);
        x[i][j] = q;
        basic[i][j] = true;
        ra[i] -= q;
        rb[j] -= q;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if (ra[i] <= 0.0 && i < m - 1) || j == n - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }

    let max_iter = 50 * (m + n) * (m + n) + 1000;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    for iter in 0..max_iter {
        let bland = iter > max_iter / 2;
        potentials(&basic, cost, &mut u, &mut v);
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -tol;
        'scan: for r in 0..m {
            for c in 0..n {
                if basic[r][c] {
                    continue;
                }
                let d = cost[r][c] - u[r] - v[c];
                if d < best {
                    entering = Some((r, c));
                    if bland {
                        break 'scan;
                    }
                    best = d;
                }
            }
        }
        let Some((er, ec)) = entering else {
            let total: f64 = (0..m)
                .flat_map(|r| (0..n).map(move |c| (r, c)))
                .map(|(r, c)| x[r][c] * cost[r][c])
                .sum();
            return Ok((total, x));
        };
        // tree path from column ec back to row er; the cycle alternates + / −
        let path = tree_path(&basic, er, ec);
        let mut theta = f64::INFINITY;
        let mut leave = None;
        for (k, &(r, c)) in path.iter().enumerate() {
            if k % 2 == 0 && x[r][c] < theta {
                theta = x[r][c];
                leave = Some((r, c));
            }
        }
        let (lr, lc) = leave.expect("cycle always has a donor cell");
        for (k, &(r, c)) in path.iter().enumerate() {
            if k % 2 == 0 {
                x[r][c] -= theta;
            } else {
                x[r][c] += theta;
            }
        }
        x[er][ec] += theta;
        x[lr][lc] = 0.0;
        basic[lr][lc] = false;
        basic[er][ec] = true;
    }
    Err(Error::Numerical("transportation simplex did not converge".into()))
}

fn potentials(basic: &[Vec<bool>], cost: &[Vec<f64>], u: &mut [f64], v: &mut [f64]) {
    let (m, n) = (basic.len(), basic[0].len());
    let mut row_done = vec![false; m];
    let mut col_done = vec![false; n];
    u[0] = 0.0;
    row_done[0] = true;
    let mut stack = vec![(true, 0usize)];
    while let Some((is_row, k)) = stack.pop() {
        if is_row {
            for c in 0..n {
                if basic[k][c] && !col_done[c] {
                    v[c] = cost[k][c] - u[k];
                    col_done[c] = true;
                    stack.push((false, c));
                }
            }
        } else {
            for r in 0..m {
                if basic[r][k] && !row_done[r] {
                    u[r] = cost[r][k] - v[k];
                    row_done[r] = true;
                    stack.push((true, r));
                }
            }
        }
    }
}

/// Basic cells on the tree path from column `ec` to row `er`, starting with the
/// cell in column `ec`.
fn tree_path(basic: &[Vec<bool>], er: usize, ec: usize) -> Vec<(usize, usize)> {
    let (m, n) = (basic.len(), basic[0].len());
    // nodes: rows 0..m, columns m..m+n
    let mut parent = vec![usize::MAX; m + n];
    let start = m + ec;
    parent[start] = start;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == er {
            break;
        }
        if node < m {
            for c in 0..n {
                if basic[node][c] && parent[m + c] == usize::MAX {
                    parent[m + c] = node;
                    queue.push_back(m + c);
                }
            }
        } else {
            let c = node - m;
            for r in 0..m {
                if basic[r][c] && parent[r] == usize::MAX {
                    parent[r] = node;
                    queue.push_back(r);
                }
            }
        }
    }
    // walk back from er to the start column
    let mut cells = Vec::new();
    let mut node = er;
    while node != start {
        let p = parent[node];
        let cell = if node < m { (node, p - m) } else { (p, node - m) };
        cells.push(cell);
        node = p;
    }
    cells.reverse();
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_unit_move() {
        let (c, _) = transport_cost(&[1.0], &[1.0], &[vec![3.0]]).unwrap();
        assert_eq!(c, 3.0);
    }

    #[test]
    fn small_integer_instance_matches_enumeration() {
        let cost = vec![
            vec![8.0, 6.0, 10.0, 9.0],
            vec![9.0, 12.0, 13.0, 7.0],
            vec![14.0, 9.0, 16.0, 5.0],
        ];
        let supply = [3.0, 4.0, 2.0];
        let demand = [2.0, 1.0, 4.0, 2.0];
        let (c, plan) = transport_cost(&supply, &demand, &cost).unwrap();
        let brute = brute_force(&supply, &demand, &cost);
        assert!((c - brute).abs() < 1e-9, "{c} vs {brute}");
        for (i, row) in plan.iter().enumerate() {
            assert!((row.iter().sum::<f64>() - supply[i]).abs() < 1e-9);
        }
    }

    /// Integer enumeration over all plans for tiny problems.
    fn brute_force(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
        fn rec(i: usize, j: usize, ra: &mut Vec<i64>, rb: &mut Vec<i64>, cost: &[Vec<f64>], acc: f64, best: &mut f64) {
            let m = ra.len();
            let n = rb.len();
            if i == m {
                if rb.iter().all(|&b| b == 0) {
                    *best = best.min(acc);
                }
                return;
            }
            if j == n {
                if ra[i] == 0 {
                    rec(i + 1, 0, ra, rb, cost, acc, best);
                }
                return;
            }
            let hi = ra[i].min(rb[j]);
            for q in 0..=hi {
                ra[i] -= q;
                rb[j] -= q;
                rec(i, j + 1, ra, rb, cost, acc + q as f64 * cost[i][j], best);
                ra[i] += q;
                rb[j] += q;
            }
        }
        let mut ra: Vec<i64> = supply.iter().map(|&x| x as i64).collect();
        let mut rb: Vec<i64> = demand.iter().map(|&x| x as i64).collect();
        let mut best = f64::INFINITY;
        rec(0, 0, &mut ra, &mut rb, cost, 0.0, &mut best);
        best
    }

    #[test]
    fn degenerate_instances_terminate() {
        let supply = [0.25, 0.25, 0.25, 0.25];
        let demand = [0.25, 0.25, 0.25, 0.25];
        let cost: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| (i as f64 - j as f64).abs()).collect())
            .collect();
        let (c, _) = transport_cost(&supply, &demand, &cost).unwrap();
        assert!(c.abs() < 1e-12);
    }
}
