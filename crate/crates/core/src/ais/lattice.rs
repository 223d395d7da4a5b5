//! The type lattice `Q_n = {p : n·p_i ∈ ℤ≥0, Σ p = 1}` and nearest-point quantization.

use crate::model::ProbVector;

/// Scaled coordinates within this distance of an integer are snapped to it.
const SNAP: f64 = 1e-9;

/// Integer counts `n·Q_n(b)` of the ℓ1-nearest lattice point.
///
/// Floors `n·b`, then hands the remaining units to the largest fractional parts.
/// Equal fractional parts go to the higher index first, which yields the
/// lexicographically smallest minimizer.
pub fn lattice_key(b: &[f64], n: usize) -> Vec<u32> {
    assert!(n >= 1, "lattice resolution must be positive");
    let mut counts = Vec::with_capacity(b.len());
    let mut frac = Vec::with_capacity(b.len());
    for &p in b {
        let x = p.max(0.0) * n as f64;
        let r = x.round();
        let (c, f) = if (x - r).abs() < SNAP { (r, 0.0) } else { (x.floor(), x - x.floor()) };
        counts.push(c as u32);
        frac.push(f);
    }
    let total: u32 = counts.iter().sum();
    let n = n as u32;
    if total < n {
        let mut order: Vec<usize> = (0..b.len()).collect();
        order.sort_by(|&i, &j| frac[j].total_cmp(&frac[i]).then(j.cmp(&i)));
        for &i in order.iter().take((n - total) as usize) {
            counts[i] += 1;
        }
    } else if total > n {
        // only reachable when b is not normalized; trim from the smallest fractions
        let mut order: Vec<usize> = (0..b.len()).collect();
        order.sort_by(|&i, &j| frac[i].total_cmp(&frac[j]).then(i.cmp(&j)));
        let mut excess = total - n;
        for &i in order.iter().cycle() {
            if excess == 0 {
                break;
            }
            if counts[i] > 0 {
                counts[i] -= 1;
                excess -= 1;
            }
        }
    }
    counts
}

pub(crate) fn key_to_point(key: &[u32], n: usize) -> Vec<f64> {
    key.iter().map(|&c| c as f64 / n as f64).collect()
}

/// ℓ1-nearest point of `Q_n`.
pub fn lattice_quantize(b: &ProbVector, n: usize) -> ProbVector {
    ProbVector::from_raw(key_to_point(&lattice_key(b, n), n))
}

/// `e₁(n,m) = 2⌊m/2⌋⌈m/2⌉/(m n)`, the largest ℓ1 quantization error on the m-simplex.
pub fn max_l1_error(n: usize, m: usize) -> f64 {
    let lo = (m / 2) as f64;
    let hi = m.div_ceil(2) as f64;
    2.0 * lo * hi / (m as f64 * n as f64)
}
