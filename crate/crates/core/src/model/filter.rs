//! Exact Bayes filter.

use super::{History, PomdpModel, ProbVector};
use crate::error::{Error, Result};

/// One-step predicted state distribution `Σ_s P(s'|s,a) b(s)`.
pub fn predict_state(model: &PomdpModel, belief: &[f64], action: usize) -> Vec<f64> {
    let mut next = vec![0.0; model.n_states];
    for (s, &p) in belief.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (n, &t) in next.iter_mut().zip(&model.transition[action][s]) {
            *n += p * t;
        }
    }
    next
}

/// `ψ(y|b,a) = Σ_{s'} P^y(y|s',a) Σ_s P(s'|s,a) b(s)`.
pub fn obs_likelihood(model: &PomdpModel, belief: &[f64], action: usize) -> ProbVector {
    let pred = predict_state(model, belief, action);
    let mut psi = vec![0.0; model.n_observations];
    for (s2, &p) in pred.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (q, &o) in psi.iter_mut().zip(&model.observation[action][s2]) {
            *q += p * o;
        }
    }
    ProbVector::from_raw(psi)
}

/// Bayes update `b'(s') ∝ P^y(y|s',a) Σ_s P(s'|s,a) b(s)`.
///
/// An observation with likelihood exactly zero is an error, never renormalized.
pub fn belief_update(
    model: &PomdpModel,
    belief: &[f64],
    action: usize,
    observation: usize,
) -> Result<ProbVector> {
    let pred = predict_state(model, belief, action);
    let mut post: Vec<f64> = pred
        .iter()
        .enumerate()
        .map(|(s2, &p)| p * model.observation[action][s2][observation])
        .collect();
    let psi: f64 = post.iter().sum();
    if psi <= 0.0 {
        return Err(Error::ImpossibleObservation {
            action,
            observation,
        });
    }
    post.iter_mut().for_each(|p| *p /= psi);
    Ok(ProbVector::from_raw(post))
}

/// `⟨b, r(·,a)⟩`.
pub fn expected_reward(model: &PomdpModel, belief: &[f64], action: usize) -> f64 {
    belief
        .iter()
        .zip(&model.reward)
        .map(|(p, row)| p * row[action])
        .sum()
}

/// Belief `b(h)` obtained by folding [`belief_update`] from the initial belief.
pub fn belief_of(model: &PomdpModel, history: &History) -> Result<ProbVector> {
    let mut b = model.initial_belief.clone();
    for step in &history.steps {
        b = belief_update(model, &b, step.action, step.observation)?;
    }
    Ok(b)
}
