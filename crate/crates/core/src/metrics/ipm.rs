//! Distances, Minkowski functionals and contraction factors.

use super::{lp, transport, EmbeddedPoints, FunctionClassSpec, MetricSpace};
use crate::error::{Error, Result};

fn same_len(p: &[f64], q: &[f64], n: usize) -> Result<()> {
    for (what, len) in [("p", p.len()), ("q", q.len())] {
        if len != n {
            return Err(Error::DimensionMismatch {
                field: what.to_string(),
                expected: n,
                got: len,
            });
        }
    }
    Ok(())
}

/// `Σ_i |p_i − q_i|`, in `[0, 2]` for distributions.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q, p.len())?;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

/// Optimal transport cost (Wasserstein-1) under `metric`.
pub fn kantorovich_distance(metric: &MetricSpace, p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q, metric.len())?;
    // with a metric cost, shared mass stays put; transport only the difference
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for (i, (a, b)) in p.iter().zip(q).enumerate() {
        let w = a - b;
        if w > 0.0 {
            src.push((i, w));
        } else if w < 0.0 {
            dst.push((i, -w));
        }
    }
    if src.is_empty() || dst.is_empty() {
        return Ok(0.0);
    }
    let supply: Vec<f64> = src.iter().map(|s| s.1).collect();
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = dst.iter().map(|d| d.1).sum();
    let demand: Vec<f64> = dst.iter().map(|d| d.1 * total_s / total_d).collect();
    let cost: Vec<Vec<f64>> = src
        .iter()
        .map(|&(i, _)| dst.iter().map(|&(j, _)| metric.d(i, j)).collect())
        .collect();
    let (c, _) = transport::transport_cost(&supply, &demand, &cost)?;
    Ok(c)
}

/// `sup { Σ f (p − q) : ‖f‖_∞ + ‖f‖_Lip ≤ 1 }` by linear programming.
///
/// Variables are `g_i = f_i + c ∈ [0, 2c]` and the split `c` of the unit budget:
/// `‖f‖_∞ ≤ c`, `‖f‖_Lip ≤ 1 − c`.
pub fn bounded_lipschitz_distance(metric: &MetricSpace, p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q, metric.len())?;
    let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] != q[i]).collect();
    let k = support.len();
    if k == 0 {
        return Ok(0.0);
    }
    let w: Vec<f64> = support.iter().map(|&i| p[i] - q[i]).collect();
    let nvar = k + 1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..k {
        let mut row = vec![0.0; nvar];
        row[i] = 1.0;
        row[k] = -2.0;
        a.push(row);
        b.push(0.0);
    }
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = metric.d(support[i], support[j]);
            let mut row = vec![0.0; nvar];
            row[i] = 1.0;
            row[j] = -1.0;
            row[k] = d;
            a.push(row);
            b.push(d);
        }
    }
    let mut row = vec![0.0; nvar];
    row[k] = 1.0;
    a.push(row);
    b.push(1.0);
    let mut obj = w.clone();
    obj.push(-w.iter().sum::<f64>());
    let (v, _) = lp::maximize(&obj, &a, &b)?;
    Ok(v.max(0.0))
}

/// Distance-based MMD with exponent `p_exp ∈ (0, 2]`:
/// `sqrt(E‖X−W‖^p − ½E‖X−X'‖^p − ½E‖W−W'‖^p)`.
pub fn mmd_distance(points: &EmbeddedPoints, p: &[f64], q: &[f64], exponent: f64) -> Result<f64> {
    same_len(p, q, points.len())?;
    if !(exponent > 0.0 && exponent <= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "MMD exponent {exponent} outside (0, 2]"
        )));
    }
    let n = points.len();
    let mut cross = 0.0;
    let mut pp = 0.0;
    let mut qq = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = super::euclid(&points.coords[i], &points.coords[j]).powf(exponent);
            cross += p[i] * q[j] * d;
            pp += p[i] * p[j] * d;
            qq += q[i] * q[j] * d;
        }
    }
    let rad = cross - 0.5 * pp - 0.5 * qq;
    if rad < -1e-10 {
        return Err(Error::Numerical(format!("MMD radicand {rad} is negative")));
    }
    Ok(rad.max(0.0).sqrt())
}

fn lipschitz(metric: &MetricSpace, f: &[f64]) -> f64 {
    let mut lip: f64 = 0.0;
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            let df = (f[i] - f[j]).abs();
            if df == 0.0 {
                continue;
            }
            let d = metric.d(i, j);
            lip = lip.max(if d > 0.0 { df / d } else { f64::INFINITY });
        }
    }
    lip
}

/// `ρ_𝔉(f)`: the smallest scale at which `f` enters `𝔉`.
pub fn minkowski_functional(fclass: &FunctionClassSpec, f: &[f64]) -> Result<f64> {
    let check = |n: usize| {
        if f.len() != n {
            Err(Error::DimensionMismatch {
                field: "f".into(),
                expected: n,
                got: f.len(),
            })
        } else {
            Ok(())
        }
    };
    match fclass {
        FunctionClassSpec::TotalVariation => {
            if f.is_empty() {
                return Ok(0.0);
            }
            let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
            Ok((hi - lo) / 2.0)
        }
        FunctionClassSpec::Kantorovich(m) => {
            check(m.len())?;
            Ok(lipschitz(m, f))
        }
        FunctionClassSpec::BoundedLipschitz(m) => {
            check(m.len())?;
            let sup = f.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            Ok(sup + lipschitz(m, f))
        }
        FunctionClassSpec::Mmd { .. } => Err(Error::Unsupported(
            "Minkowski functional of the MMD class needs an RKHS norm".into(),
        )),
    }
}

/// `C_𝔉(ℓ)` for a map `ℓ` from the points of `source` to the points of `target`.
///
/// Total variation gives 1; Kantorovich gives the Lipschitz constant of `ℓ`.
pub fn contraction_factor(
    source: &FunctionClassSpec,
    target: &FunctionClassSpec,
    map: &[usize],
) -> Result<f64> {
    match (source, target) {
        (FunctionClassSpec::TotalVariation, FunctionClassSpec::TotalVariation) => Ok(1.0),
        (FunctionClassSpec::Kantorovich(src), FunctionClassSpec::Kantorovich(dst)) => {
            if map.len() != src.len() {
                return Err(Error::DimensionMismatch {
                    field: "map".into(),
                    expected: src.len(),
                    got: map.len(),
                });
            }
            if let Some(&bad) = map.iter().find(|&&z| z >= dst.len()) {
                return Err(Error::InvalidArgument(format!(
                    "map image {bad} outside the target space"
                )));
            }
            let mut lip: f64 = 0.0;
            for i in 0..map.len() {
                for j in i + 1..map.len() {
                    let dz = dst.d(map[i], map[j]);
                    if dz == 0.0 {
                        continue;
                    }
                    let dy = src.d(i, j);
                    lip = lip.max(if dy > 0.0 { dz / dy } else { f64::INFINITY });
                }
            }
            Ok(lip)
        }
        (s, t) if s.class() != t.class() => Err(Error::InvalidArgument(
            "source and target function classes differ".into(),
        )),
        _ => Err(Error::Unsupported(format!(
            "contraction factor for class {}",
            source.class()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::random_distribution;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> MetricSpace {
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>() * 3.0, rng.gen()]).collect();
        MetricSpace::euclidean(&pts)
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(tv_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.75, 0.25]).unwrap(), 0.5);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn kantorovich_examples() {
        let m = MetricSpace::line(&[0.0, 1.0]);
        assert!((kantorovich_distance(&m, &[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(kantorovich_distance(&m, &[0.4, 0.6], &[0.4, 0.6]).unwrap(), 0.0);
        // on a line W1 is the area between the CDFs
        let line = MetricSpace::line(&[0.0, 1.0, 2.0, 3.0]);
        let p = [0.1, 0.4, 0.2, 0.3];
        let q = [0.5, 0.1, 0.1, 0.3];
        let mut cdf_gap = 0.0;
        let (mut cp, mut cq) = (0.0, 0.0);
        for i in 0..3 {
            cp += p[i];
            cq += q[i];
            cdf_gap += f64::abs(cp - cq);
        }
        assert!((kantorovich_distance(&line, &p, &q).unwrap() - cdf_gap).abs() < 1e-12);
    }

    #[test]
    fn bl_two_point_closed_form() {
        // sup over c of min(2c, (1 − c)d) = 2d/(2 + d)
        for d in [0.5, 1.0, 2.0, 10.0] {
            let m = MetricSpace::line(&[0.0, d]);
            let v = bounded_lipschitz_distance(&m, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
            assert!((v - 2.0 * d / (2.0 + d)).abs() < 1e-12, "d={d}: {v}");
        }
        let m = MetricSpace::line(&[0.0, 10.0]);
        let v = bounded_lipschitz_distance(&m, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((v - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bl_below_tv_and_kantorovich() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let n = rng.gen_range(2..6);
            let m = random_metric(&mut rng, n);
            let p = random_distribution(&mut rng, n);
            let q = random_distribution(&mut rng, n);
            let bl = bounded_lipschitz_distance(&m, &p, &q).unwrap();
            assert!(bl <= tv_distance(&p, &q).unwrap() + 1e-9);
            assert!(bl <= kantorovich_distance(&m, &p, &q).unwrap() + 1e-9);
        }
    }

    #[test]
    fn mmd_examples() {
        let corners = EmbeddedPoints::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let v = mmd_distance(&corners, &[0.2, 0.8], &[0.5, 0.5], 2.0).unwrap();
        assert!((v - (0.18f64).sqrt()).abs() < 1e-12);
        assert_eq!(mmd_distance(&corners, &[0.2, 0.8], &[0.2, 0.8], 1.0).unwrap(), 0.0);
        assert!(mmd_distance(&corners, &[0.2, 0.8], &[0.2, 0.8], 2.5).is_err());
    }

    #[test]
    fn minkowski_examples() {
        let tv = FunctionClassSpec::TotalVariation;
        assert_eq!(minkowski_functional(&tv, &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(minkowski_functional(&tv, &[1.0, -1.0]).unwrap(), 1.0);
        let k = FunctionClassSpec::Kantorovich(MetricSpace::line(&[0.0, 1.0]));
        assert_eq!(minkowski_functional(&k, &[0.0, 3.0]).unwrap(), 3.0);
        let bl = FunctionClassSpec::BoundedLipschitz(MetricSpace::line(&[0.0, 1.0]));
        assert_eq!(minkowski_functional(&bl, &[0.0, 3.0]).unwrap(), 6.0);
        let mmd = FunctionClassSpec::Mmd {
            points: EmbeddedPoints::new(vec![vec![0.0], vec![1.0]]).unwrap(),
            exponent: 1.0,
        };
        assert!(matches!(minkowski_functional(&mmd, &[0.0, 1.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn contraction_examples() {
        let tv = FunctionClassSpec::TotalVariation;
        assert_eq!(contraction_factor(&tv, &tv, &[0, 0, 3]).unwrap(), 1.0);
        let k = FunctionClassSpec::Kantorovich(MetricSpace::line(&[0.0, 1.0, 2.5]));
        assert_eq!(contraction_factor(&k, &k, &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(contraction_factor(&k, &k, &[1, 1, 1]).unwrap(), 0.0);
        assert!(contraction_factor(&k, &tv, &[0, 1, 2]).is_err());
        assert!(contraction_factor(&k, &k, &[0, 1, 7]).is_err());
    }
}
