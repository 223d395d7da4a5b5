//! Dense tableau simplex for `max cᵀx  s.t.  Ax ≤ b, x ≥ 0` with `b ≥ 0`.

use crate::error::{Error, Result};

/// Solves the LP from the slack basis with Bland's rule. Returns the optimal
/// value and a maximizer.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument("LP dimensions do not match".into()));
    }
    if let Some(i) = b.iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "LP right-hand side {i} is negative; origin must be feasible"
        )));
    }
    let width = n + m + 1;
    // rows 0..m: constraints; row m: objective row holding −c (reduced costs)
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        t[i * width..i * width + n].copy_from_slice(&a[i]);
        t[i * width + n + i] = 1.0;
        t[i * width + width - 1] = b[i];
    }
    for j in 0..n {
        t[m * width + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let scale = 1.0 + c.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = 1e-12 * scale;
    let max_iter = 100 * (n + m) + 1000;
    for _ in 0..max_iter {
        let obj = &t[m * width..(m + 1) * width];
        let Some(enter) = (0..n + m).find(|&j| obj[j] < -tol) else {
            let mut x = vec![0.0; n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t[i * width + width - 1];
                }
            }
            return Ok((t[m * width + width - 1], x));
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let coef = t[i * width + enter];
            if coef > 1e-12 {
                let ratio = t[i * width + width - 1] / coef;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[i] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return Err(Error::Numerical("LP is unbounded".into()));
        };
        let piv = t[row * width + enter];
        for k in 0..width {
            t[row * width + k] /= piv;
        }
        for i in 0..=m {
            if i == row {
                continue;
            }
            let f = t[i * width + enter];
            if f != 0.0 {
                for k in 0..width {
                    t[i * width + k] -= f * t[row * width + k];
                }
            }
        }
        basis[row] = enter;
    }
    Err(Error::Numerical("simplex iteration limit reached".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_lp() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6)
        let (v, x) = maximize(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((v - 36.0).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        assert!(maximize(&[1.0], &[vec![-1.0]], &[1.0]).is_err());
    }

    #[test]
    fn degenerate_lp() {
        let (v, _) = maximize(
            &[1.0, 1.0],
            &[vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, -1.0]],
            &[1.0, 1.0, 1.0, 0.0],
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }
}
