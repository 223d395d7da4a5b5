//! Seeded trajectory simulation.

use super::{belief_update, History, PomdpModel, ProbVector};
use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    /// Exact belief `b(h_t)` before acting.
    pub belief: ProbVector,
    pub action: usize,
    pub reward: f64,
    pub observation: usize,
    /// Hidden state `s_t`, kept for diagnostics.
    pub state: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub seed: u64,
}

impl Trajectory {
    pub fn discounted_return(&self, discount: f64) -> f64 {
        self.steps
            .iter()
            .rev()
            .fold(0.0, |acc, s| s.reward + discount * acc)
    }

    pub fn history(&self) -> History {
        History {
            steps: self
                .steps
                .iter()
                .map(|s| crate::Step {
                    action: s.action,
                    observation: s.observation,
                })
                .collect(),
        }
    }
}

/// Samples an index from `probs` (assumed to be a distribution).
pub(crate) fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap at the top; take the last positive entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Simulates `horizon` steps under `policy`, reproducibly for a given `seed`.
pub fn simulate<F>(model: &PomdpModel, mut policy: F, horizon: usize, seed: u64) -> Result<Trajectory>
where
    F: FnMut(&History) -> Vec<f64>,
{
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = sample_index(&mut rng, &model.initial_belief);
    let mut belief = model.initial_belief.clone();
    let mut history = History::new();
    let mut steps = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let probs = policy(&history);
        if probs.len() != model.n_actions {
            return Err(Error::DimensionMismatch {
                field: "policy output".into(),
                expected: model.n_actions,
                got: probs.len(),
            });
        }
        let probs = ProbVector::new(probs)?;
        let action = sample_index(&mut rng, &probs);
        let reward = model.reward[state][action];
        let next = sample_index(&mut rng, &model.transition[action][state]);
        let observation = sample_index(&mut rng, &model.observation[action][next]);
        let post = belief_update(model, &belief, action, observation)?;
        steps.push(TrajectoryStep {
            belief: std::mem::replace(&mut belief, post),
            action,
            reward,
            observation,
            state,
        });
        history.steps.push(crate::Step { action, observation });
        state = next;
    }
    Ok(Trajectory { steps, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;

    #[test]
    fn same_seed_same_trajectory() {
        let m = envs::tiger().model;
        let pol = |_: &History| vec![0.6, 0.2, 0.2];
        let t1 = simulate(&m, pol, 50, 42).unwrap();
        let t2 = simulate(&m, pol, 50, 42).unwrap();
        assert_eq!(t1, t2);
        let t3 = simulate(&m, pol, 50, 43).unwrap();
        assert_ne!(t1, t3);
    }

    #[test]
    fn deterministic_model_ignores_seed() {
        let m = PomdpModel::fully_observed(
            vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]],
            vec![vec![1.0], vec![2.0]],
            ProbVector::point(2, 0),
            0.9,
        )
        .unwrap();
        let a = simulate(&m, |_| vec![1.0], 10, 1).unwrap();
        let b = simulate(&m, |_| vec![1.0], 10, 999).unwrap();
        assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn invalid_policy_output_rejected() {
        let m = envs::tiger().model;
        assert!(simulate(&m, |_| vec![0.5, 0.5, 0.5], 3, 0).is_err());
        assert!(simulate(&m, |_| vec![1.0], 3, 0).is_err());
    }

    #[test]
    fn visit_frequencies_match_stationary_distribution() {
        // chain 0->1 w.p. 0.3, 1->0 w.p. 0.1; stationary π = (0.25, 0.75)
        let m = PomdpModel::fully_observed(
            vec![vec![vec![0.7, 0.3], vec![0.1, 0.9]]],
            vec![vec![0.0], vec![0.0]],
            ProbVector::new(vec![0.25, 0.75]).unwrap(),
            0.9,
        )
        .unwrap();
        let n = 100_000;
        let traj = simulate(&m, |_| vec![1.0], n, 7).unwrap();
        let visits = traj.steps.iter().filter(|s| s.state == 0).count() as f64 / n as f64;
        // autocorrelated chain: variance inflated by (1+λ)/(1−λ) with λ = 0.6
        let sigma = (0.25 * 0.75 * 4.0 / n as f64).sqrt();
        assert!((visits - 0.25).abs() < 3.0 * sigma, "{visits}");
    }
}
