//! KL divergence, Pinsker's bound and the two surrogate losses.

use crate::error::{Error, Result};

/// `Σ p_i log(p_i / q_i)`; `+∞` when `q` misses mass of `p`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut kl = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            kl += a * (a / b).ln();
        }
    }
    kl.max(0.0)
}

/// `sqrt(2·KL)`, an upper bound on the un-halved total variation.
pub fn pinsker_bound(kl: f64) -> f64 {
    (2.0 * kl).sqrt()
}

/// `(1/T) Σ_t log ν(X_t)`; larger is better.
pub fn cross_entropy_surrogate(samples: &[usize], predicted: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let mut total = 0.0;
    for &x in samples {
        let p = *predicted.get(x).ok_or_else(|| {
            Error::InvalidArgument(format!("sample {x} outside the predicted support"))
        })?;
        if p <= 0.0 {
            return Err(Error::Numerical(format!(
                "zero predicted mass on sample {x} (log-likelihood −∞)"
            )));
        }
        total += p.ln();
    }
    Ok(total / samples.len() as f64)
}

/// `(M − 2X)ᵀM` with `M` the predicted mean and `X` a sample (or sample mean).
pub fn mmd2_surrogate(sample: &[f64], predicted_mean: &[f64]) -> f64 {
    predicted_mean
        .iter()
        .zip(sample)
        .map(|(m, x)| (m - 2.0 * x) * m)
        .sum()
}

/// Gradient of [`mmd2_surrogate`] in `M`: `2(M − X)`.
pub fn mmd2_surrogate_grad(sample: &[f64], predicted_mean: &[f64]) -> Vec<f64> {
    predicted_mean
        .iter()
        .zip(sample)
        .map(|(m, x)| 2.0 * (m - x))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        let kl = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]);
        assert!((kl - 2f64.ln()).abs() < 1e-15);
        assert!((pinsker_bound(kl) - 1.1774100225154747).abs() < 1e-12);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy_surrogate(&[1], &[0.0, 1.0]).unwrap(), 0.0);
        let v = cross_entropy_surrogate(&[0, 2, 1], &[0.25; 4]).unwrap();
        assert!((v + 4f64.ln()).abs() < 1e-15);
        assert!(cross_entropy_surrogate(&[0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn cross_entropy_expectation_is_negative_cross_entropy() {
        let mu = [0.2, 0.5, 0.3];
        let nu = [0.4, 0.4, 0.2];
        let exact: f64 = (0..3).map(|x| mu[x] * cross_entropy_surrogate(&[x], &nu).unwrap()).sum();
        let direct: f64 = (0..3).map(|x| mu[x] * nu[x].ln()).sum();
        assert!((exact - direct).abs() < 1e-15);
    }

    #[test]
    fn mmd2_examples() {
        let x = [0.0, 1.0, 0.0];
        assert_eq!(mmd2_surrogate(&x, &x), -1.0);
        let g = mmd2_surrogate_grad(&[1.0, 2.0], &[0.5, 0.5]);
        assert_eq!(g, vec![-1.0, -3.0]);
    }

    #[test]
    fn mmd2_expected_loss_minimized_at_mean() {
        // X uniform on {0, 1, 3}; E[(M − 2X)M] = M² − 2M·E[X] minimized at E[X] = 4/3
        let xs = [0.0, 1.0, 3.0];
        let exp = |m: f64| xs.iter().map(|&x| mmd2_surrogate(&[x], &[m])).sum::<f64>() / 3.0;
        let best = (0..=3000)
            .map(|k| k as f64 * 0.001)
            .min_by(|a, b| exp(*a).partial_cmp(&exp(*b)).unwrap())
            .unwrap();
        assert!((best - 4.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn mmd2_gradient_matches_finite_differences() {
        let x = [0.3, -1.2, 0.8];
        let m = [0.5, 0.1, -0.4];
        let g = mmd2_surrogate_grad(&x, &m);
        let h = 1e-5;
        for i in 0..3 {
            let mut up = m;
            let mut dn = m;
            up[i] += h;
            dn[i] -= h;
            let fd = (mmd2_surrogate(&x, &up) - mmd2_surrogate(&x, &dn)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0));
        }
    }
}
