//! Tabular AIS-based reinforcement learning for partially observed models.
//!
//! The AIS is a stochastic automaton over `k` symbols: the next symbol is drawn
//! from a softmax row indexed by `(ẑ, a, y)`. Reward and observation heads give
//! `r̂(ẑ,a)` and `ν̂^y(·|ẑ,a)`. The policy and critic are tables over `(ẑ, a)`.

mod loss;
mod pg;
mod train;

pub use loss::{ais_loss, ais_loss_expected, AisLossGrad, LossKind};
pub use pg::{
    gpomdp_gradient, gpomdp_gradient_with_baseline, gpomdp_surrogate, smooth_l1, td_loss,
};
pub use train::{
    evaluate_policy, marginal_action_probs, rollout, train, CurvePoint, EvalResult, Schedule,
    TrainConfig, TrainResult, DIVERGENCE_NORM,
};

use crate::ais::{AisGenerator, AisStage, Compression, Horizon, SparseDist};
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// `∇_l log softmax(l)_i = e_i − softmax(l)`, added with weight `w` into `out`.
pub(crate) fn add_log_softmax_grad(out: &mut [f64], probs: &[f64], i: usize, w: f64) {
    for (j, (o, p)) in out.iter_mut().zip(probs).enumerate() {
        *o += w * (f64::from(u8::from(j == i)) - p);
    }
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, scale).expect("positive scale");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// One step of an agent rollout, with the sampled AIS symbol the agent acted on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentStep {
    pub z: usize,
    pub action: usize,
    pub reward: f64,
    pub observation: usize,
}

/// Learned stochastic-automaton AIS with a flat parameter vector.
///
/// Layout: initial logits `[k]`, transition logits `[k][A][Y][k]`, reward head
/// `[k][A]`, observation logits `[k][A][Y]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnedAis {
    pub k: usize,
    pub n_actions: usize,
    pub n_observations: usize,
    pub params: Vec<f64>,
}

impl LearnedAis {
    pub fn zeros(k: usize, n_actions: usize, n_observations: usize) -> Self {
        let n = k + k * n_actions * n_observations * k + k * n_actions + k * n_actions * n_observations;
        LearnedAis { k, n_actions, n_observations, params: vec![0.0; n] }
    }

    /// Gaussian logits with standard deviation `scale`; the reward head starts at zero.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, k: usize, n_actions: usize, n_observations: usize, scale: f64) -> Self {
        let mut a = Self::zeros(k, n_actions, n_observations);
        let n = a.params.len();
        a.params = gaussian_vec(rng, n, scale);
        let r = a.reward_offset();
        a.params[r..r + k * n_actions].iter_mut().for_each(|x| *x = 0.0);
        a
    }

    pub fn init_range(&self) -> std::ops::Range<usize> {
        0..self.k
    }

    pub fn trans_offset(&self, z: usize, a: usize, y: usize) -> usize {
        self.k + ((z * self.n_actions + a) * self.n_observations + y) * self.k
    }

    fn reward_offset(&self) -> usize {
        self.k + self.k * self.n_actions * self.n_observations * self.k
    }

    pub fn reward_index(&self, z: usize, a: usize) -> usize {
        self.reward_offset() + z * self.n_actions + a
    }

    pub fn obs_offset(&self, z: usize, a: usize) -> usize {
        self.reward_offset() + self.k * self.n_actions + (z * self.n_actions + a) * self.n_observations
    }

    pub fn initial(&self) -> Vec<f64> {
        softmax(&self.params[self.init_range()])
    }

    /// Next-symbol distribution after `(z, a, y)`.
    pub fn transition(&self, z: usize, a: usize, y: usize) -> Vec<f64> {
        let o = self.trans_offset(z, a, y);
        softmax(&self.params[o..o + self.k])
    }

    pub fn reward(&self, z: usize, a: usize) -> f64 {
        self.params[self.reward_index(z, a)]
    }

    /// `ν̂^y(·|z,a)`.
    pub fn obs_predictor(&self, z: usize, a: usize) -> Vec<f64> {
        let o = self.obs_offset(z, a);
        softmax(&self.params[o..o + self.n_observations])
    }

    /// Stationary AIS generator with kernel `P̂(z'|z,a) = Σ_y ν̂^y(y|z,a) T(z'|z,a,y)`
    /// and the automaton as a stochastic compression.
    pub fn to_generator(&self, discount: f64) -> AisGenerator {
        let (k, na, ny) = (self.k, self.n_actions, self.n_observations);
        let kernel: Vec<Vec<SparseDist>> = (0..k)
            .map(|z| {
                (0..na)
                    .map(|a| {
                        let nu = self.obs_predictor(z, a);
                        let mut row = vec![0.0; k];
                        for (y, &p) in nu.iter().enumerate() {
                            for (r, t) in row.iter_mut().zip(self.transition(z, a, y)) {
                                *r += p * t;
                            }
                        }
                        row.into_iter().enumerate().filter(|e| e.1 > 0.0).collect()
                    })
                    .collect()
            })
            .collect();
        AisGenerator {
            horizon: Horizon::Stationary,
            discount,
            n_actions: na,
            n_observations: ny,
            stages: vec![AisStage {
                n_points: k,
                points: None,
                metric: None,
                embedding: None,
                kernel,
                reward: (0..k).map(|z| (0..na).map(|a| self.reward(z, a)).collect()).collect(),
                update_map: None,
                obs_predictor: Some((0..k).map(|z| (0..na).map(|a| self.obs_predictor(z, a)).collect()).collect()),
            }],
            compression: Compression::Automaton {
                initial: self.initial(),
                transition: (0..k)
                    .map(|z| (0..na).map(|a| (0..ny).map(|y| self.transition(z, a, y)).collect()).collect())
                    .collect(),
            },
            action_quantizer: None,
            ground_metric: None,
            declared: None,
        }
    }
}

/// Softmax policy over AIS symbols, `logits[z·A + a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxPolicy {
    pub k: usize,
    pub n_actions: usize,
    pub logits: Vec<f64>,
}

impl SoftmaxPolicy {
    pub fn uniform(k: usize, n_actions: usize) -> Self {
        SoftmaxPolicy { k, n_actions, logits: vec![0.0; k * n_actions] }
    }

    pub fn probs(&self, z: usize) -> Vec<f64> {
        softmax(&self.logits[z * self.n_actions..(z + 1) * self.n_actions])
    }
}

/// Tabular critic `Q_ζ(z,a)` stored as `q[z·A + a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Critic {
    pub k: usize,
    pub n_actions: usize,
    pub q: Vec<f64>,
}

impl Critic {
    pub fn zeros(k: usize, n_actions: usize) -> Self {
        Critic { k, n_actions, q: vec![0.0; k * n_actions] }
    }

    pub fn value(&self, z: usize, a: usize) -> f64 {
        self.q[z * self.n_actions + a]
    }
}

pub(crate) fn check_step(step: &AgentStep, k: usize, na: usize, ny: usize) -> Result<()> {
    if step.z >= k || step.action >= na || step.observation >= ny {
        return Err(Error::InvalidArgument(format!(
            "step (z={}, a={}, y={}) outside ({k}, {na}, {ny})",
            step.z, step.action, step.observation
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layout_is_disjoint_and_covers_params() {
        let a = LearnedAis::zeros(3, 2, 4);
        let mut seen = vec![0u8; a.params.len()];
        for i in a.init_range() {
            seen[i] += 1;
        }
        for z in 0..3 {
            for act in 0..2 {
                for y in 0..4 {
                    for j in 0..3 {
                        seen[a.trans_offset(z, act, y) + j] += 1;
                    }
                }
                seen[a.reward_index(z, act)] += 1;
                for y in 0..4 {
                    seen[a.obs_offset(z, act) + y] += 1;
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn generator_rows_are_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = LearnedAis::random(&mut rng, 4, 3, 2, 1.0);
        let g = a.to_generator(0.9);
        g.validate().unwrap();
        for row in g.stages[0].kernel.iter().flatten() {
            assert!((row.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let p = softmax(&[1.0, 2.0, 3.0]);
        let q = softmax(&[1001.0, 1002.0, 1003.0]);
        for (x, y) in p.iter().zip(&q) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
