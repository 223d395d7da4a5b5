//! AIS surrogate loss on a rollout and its score-function gradient.

use super::{add_log_softmax_grad, check_step, AgentStep, LearnedAis};
use crate::error::{Error, Result};
use crate::metrics::{cross_entropy_surrogate, mmd2_surrogate};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// `−log ν̂^y(y_t)`, the KL route.
    CrossEntropy,
    /// `(M − 2·onehot(y_t))ᵀ M` with `M = ν̂^y`, the MMD route.
    Mmd2,
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl" | "cross-entropy" | "ce" => Ok(LossKind::CrossEntropy),
            "mmd" | "mmd2" => Ok(LossKind::Mmd2),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss '{other}'; allowed: kl, mmd"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AisLossGrad {
    pub loss: f64,
    /// Gradient with the layout of [`LearnedAis::params`].
    pub grad: Vec<f64>,
}

/// Per-step loss `λ(R − r̂)² + (1−λ)ℓ` and its direct gradient on the heads.
fn step_loss(ais: &LearnedAis, s: &AgentStep, lambda: f64, kind: LossKind, scale: f64, grad: &mut [f64]) -> Result<f64> {
    let r_idx = ais.reward_index(s.z, s.action);
    let err = ais.params[r_idx] - s.reward;
    grad[r_idx] += scale * lambda * 2.0 * err;
    let nu = ais.obs_predictor(s.z, s.action);
    let o = ais.obs_offset(s.z, s.action);
    let ell = match kind {
        LossKind::CrossEntropy => {
            let l = -cross_entropy_surrogate(&[s.observation], &nu)?;
            add_log_softmax_grad(&mut grad[o..o + nu.len()], &nu, s.observation, -scale * (1.0 - lambda));
            l
        }
        LossKind::Mmd2 => {
            let x: Vec<f64> = (0..nu.len()).map(|y| f64::from(u8::from(y == s.observation))).collect();
            let l = mmd2_surrogate(&x, &nu);
            // dℓ/dM = 2(M − X), pushed through the softmax Jacobian
            let g: Vec<f64> = nu.iter().zip(&x).map(|(m, x)| 2.0 * (m - x)).collect();
            let mean: f64 = nu.iter().zip(&g).map(|(m, g)| m * g).sum();
            for (i, (m, gi)) in nu.iter().zip(&g).enumerate() {
                grad[o + i] += scale * (1.0 - lambda) * m * (gi - mean);
            }
            l
        }
    };
    Ok(lambda * err * err + (1.0 - lambda) * ell)
}

pub(crate) fn ais_loss_baselined(
    steps: &[AgentStep],
    ais: &LearnedAis,
    lambda: f64,
    kind: LossKind,
    baseline: f64,
) -> Result<AisLossGrad> {
    if steps.is_empty() {
        return Err(Error::InvalidArgument("empty rollout".into()));
    }
    let n = steps.len() as f64;
    let mut grad = vec![0.0; ais.params.len()];
    let mut per_step = Vec::with_capacity(steps.len());
    for s in steps {
        check_step(s, ais.k, ais.n_actions, ais.n_observations)?;
        per_step.push(step_loss(ais, s, lambda, kind, 1.0 / n, &mut grad)? / n);
    }
    let loss: f64 = per_step.iter().sum();
    // z_t influences the losses of steps t..T; baseline is per unit of remaining horizon
    let mut to_go = loss;
    for (t, s) in steps.iter().enumerate() {
        let remaining = (steps.len() - t) as f64 / n;
        let w = to_go - baseline * remaining;
        if t == 0 {
            let p = ais.initial();
            add_log_softmax_grad(&mut grad[ais.init_range()], &p, s.z, w);
        } else {
            let prev = &steps[t - 1];
            let p = ais.transition(prev.z, prev.action, prev.observation);
            let o = ais.trans_offset(prev.z, prev.action, prev.observation);
            add_log_softmax_grad(&mut grad[o..o + ais.k], &p, s.z, w);
        }
        to_go -= per_step[t];
    }
    Ok(AisLossGrad { loss, grad })
}

/// `(1/T) Σ_t [λ(R_t − r̂(ẑ_t,a_t))² + (1−λ)ℓ_t]` on a rollout with its sampled
/// symbol path, and an unbiased estimate of the gradient of its expectation over
/// symbol paths: direct gradients on the heads plus score-function terms on the
/// initial and transition logits weighted by the loss still to come.
pub fn ais_loss(steps: &[AgentStep], ais: &LearnedAis, lambda: f64, kind: LossKind) -> Result<AisLossGrad> {
    ais_loss_baselined(steps, ais, lambda, kind, 0.0)
}

/// Expected loss and the exact expectation of the [`ais_loss`] gradient estimate
/// over every symbol path, for fixed actions, rewards and observations.
/// Exponential in the rollout length.
pub fn ais_loss_expected(steps: &[AgentStep], ais: &LearnedAis, lambda: f64, kind: LossKind) -> Result<AisLossGrad> {
    let t_len = steps.len();
    if t_len == 0 {
        return Err(Error::InvalidArgument("empty rollout".into()));
    }
    let total = ais.k.checked_pow(t_len as u32).filter(|&n| n <= 1 << 20).ok_or_else(|| {
        Error::CapExceeded(format!("{}^{t_len} symbol paths", ais.k))
    })?;
    let mut path: Vec<AgentStep> = steps.to_vec();
    let mut loss = 0.0;
    let mut grad = vec![0.0; ais.params.len()];
    for code in 0..total {
        let mut c = code;
        let mut prob = 1.0;
        for t in 0..t_len {
            path[t].z = c % ais.k;
            c /= ais.k;
            prob *= if t == 0 {
                ais.initial()[path[0].z]
            } else {
                let p = &path[t - 1];
                ais.transition(p.z, p.action, p.observation)[path[t].z]
            };
        }
        let g = ais_loss(&path, ais, lambda, kind)?;
        loss += prob * g.loss;
        for (acc, x) in grad.iter_mut().zip(&g.grad) {
            *acc += prob * x;
        }
    }
    Ok(AisLossGrad { loss, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_steps(rng: &mut ChaCha8Rng, ais: &LearnedAis, n: usize) -> Vec<AgentStep> {
        (0..n)
            .map(|_| AgentStep {
                z: rng.gen_range(0..ais.k),
                action: rng.gen_range(0..ais.n_actions),
                reward: rng.gen_range(-1.0..1.0),
                observation: rng.gen_range(0..ais.n_observations),
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let n = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
        d / n.max(1e-8)
    }

    #[test]
    fn perfect_reward_head_gives_zero_loss() {
        let mut ais = LearnedAis::zeros(2, 2, 2);
        let steps = vec![AgentStep { z: 0, action: 1, reward: 0.7, observation: 0 }];
        let i = ais.reward_index(0, 1);
        ais.params[i] = 0.7;
        let g = ais_loss(&steps, &ais, 1.0, LossKind::CrossEntropy).unwrap();
        assert_eq!(g.loss, 0.0);
        assert_eq!(g.grad[i], 0.0);
    }

    #[test]
    fn mmd_point_mass_attains_minus_one() {
        let mut ais = LearnedAis::zeros(1, 1, 3);
        let o = ais.obs_offset(0, 0);
        ais.params[o + 2] = 800.0;
        let steps = vec![AgentStep { z: 0, action: 0, reward: 0.0, observation: 2 }; 4];
        let g = ais_loss(&steps, &ais, 0.0, LossKind::Mmd2).unwrap();
        assert!((g.loss + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_observation_errors_under_kl() {
        let mut ais = LearnedAis::zeros(1, 1, 2);
        let o = ais.obs_offset(0, 0);
        ais.params[o] = 2000.0;
        let steps = vec![AgentStep { z: 0, action: 0, reward: 0.0, observation: 1 }];
        assert!(ais_loss(&steps, &ais, 0.5, LossKind::CrossEntropy).is_err());
        assert!(ais_loss(&steps, &ais, 0.5, LossKind::Mmd2).is_ok());
    }

    fn fd_check(kind: LossKind, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ais = LearnedAis::random(&mut rng, 2, 2, 3, 1.0);
        let mut ais = ais;
        for i in 0..ais.k * ais.n_actions {
            let idx = ais.reward_index(i / 2, i % 2);
            ais.params[idx] = rng.gen_range(-1.0..1.0);
        }
        let steps = random_steps(&mut rng, &ais, 3);
        let lambda = rng.gen_range(0.0..1.0);
        let g = ais_loss_expected(&steps, &ais, lambda, kind).unwrap();
        let h = 1e-5;
        let fd: Vec<f64> = (0..ais.params.len())
            .map(|i| {
                let mut p = ais.clone();
                p.params[i] += h;
                let up = ais_loss_expected(&steps, &p, lambda, kind).unwrap().loss;
                p.params[i] -= 2.0 * h;
                let down = ais_loss_expected(&steps, &p, lambda, kind).unwrap().loss;
                (up - down) / (2.0 * h)
            })
            .collect();
        rel_err(&g.grad, &fd)
    }

    #[test]
    fn expected_gradient_matches_finite_differences() {
        for seed in 0..3 {
            assert!(fd_check(LossKind::CrossEntropy, seed) < 1e-4);
            assert!(fd_check(LossKind::Mmd2, seed) < 1e-4);
        }
    }

    #[test]
    fn baseline_keeps_estimator_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ais = LearnedAis::random(&mut rng, 2, 2, 2, 1.0);
        let steps = random_steps(&mut rng, &ais, 3);
        let plain = ais_loss_expected(&steps, &ais, 0.5, LossKind::CrossEntropy).unwrap();
        // expectation of the baselined estimator over all paths
        let mut grad = vec![0.0; ais.params.len()];
        let mut path = steps.clone();
        for code in 0..8usize {
            let mut prob = 1.0;
            for t in 0..3 {
                path[t].z = (code >> t) & 1;
                prob *= if t == 0 {
                    ais.initial()[path[0].z]
                } else {
                    ais.transition(path[t - 1].z, path[t - 1].action, path[t - 1].observation)[path[t].z]
                };
            }
            let g = ais_loss_baselined(&path, &ais, 0.5, LossKind::CrossEntropy, 3.7).unwrap();
            grad.iter_mut().zip(&g.grad).for_each(|(a, x)| *a += prob * x);
        }
        assert!(rel_err(&grad, &plain.grad) < 1e-12);
    }
}
