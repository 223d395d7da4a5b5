//! Policy-gradient estimates and the critic's TD loss.

use super::{add_log_softmax_grad, AgentStep, Critic, SoftmaxPolicy};
use crate::error::{Error, Result};

/// `Σ_t (Σ_{τ≤t} ∇_θ log π_θ(A_τ|ẑ_τ)) γ^{t−1} (R_t − b_t)`.
pub fn gpomdp_gradient_with_baseline(steps: &[AgentStep], discount: f64, policy: &SoftmaxPolicy, baseline: &[f64]) -> Vec<f64> {
    let na = policy.n_actions;
    let mut grad = vec![0.0; policy.logits.len()];
    // regroup as Σ_τ ∇log π_τ · Σ_{t≥τ} γ^{t−1}(R_t − b_t)
    let mut to_go = 0.0;
    let mut weights = vec![0.0; steps.len()];
    for t in (0..steps.len()).rev() {
        let b = baseline.get(t).copied().unwrap_or(0.0);
        to_go += discount.powi(t as i32) * (steps[t].reward - b);
        weights[t] = to_go;
    }
    for (s, w) in steps.iter().zip(weights) {
        let p = policy.probs(s.z);
        add_log_softmax_grad(&mut grad[s.z * na..(s.z + 1) * na], &p, s.action, w);
    }
    grad
}

/// GPOMDP estimate `Σ_t (Σ_{τ≤t} ∇_θ log π_θ(A_τ|ẑ_τ)) γ^{t−1} R_t`.
pub fn gpomdp_gradient(steps: &[AgentStep], discount: f64, policy: &SoftmaxPolicy) -> Vec<f64> {
    gpomdp_gradient_with_baseline(steps, discount, policy, &[])
}

/// `Σ_t γ^{t−1} R_t Σ_{τ≤t} log π_θ(A_τ|ẑ_τ)`, whose gradient on a fixed rollout is
/// [`gpomdp_gradient`].
pub fn gpomdp_surrogate(steps: &[AgentStep], discount: f64, policy: &SoftmaxPolicy) -> f64 {
    let mut cum_log = 0.0;
    let mut total = 0.0;
    for (t, s) in steps.iter().enumerate() {
        cum_log += policy.probs(s.z)[s.action].ln();
        total += discount.powi(t as i32) * s.reward * cum_log;
    }
    total
}

/// Smooth L1: `x²/2` on `|x| < 1`, `|x| − 1/2` outside.
pub fn smooth_l1(x: f64) -> f64 {
    if x.abs() < 1.0 {
        0.5 * x * x
    } else {
        x.abs() - 0.5
    }
}

fn smooth_l1_grad(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Mean smooth-L1 TD error `R_t + γ Q̄(ẑ_{t+1},A_{t+1}) − Q_ζ(ẑ_t,A_t)` over
/// consecutive step pairs, with the target table `Q̄` held fixed. Returns the loss
/// and its gradient in `ζ`.
pub fn td_loss(steps: &[AgentStep], critic: &Critic, target: &Critic, discount: f64) -> Result<(f64, Vec<f64>)> {
    if steps.len() < 2 {
        return Err(Error::InvalidArgument("TD loss needs at least two steps".into()));
    }
    let na = critic.n_actions;
    let n = (steps.len() - 1) as f64;
    let mut grad = vec![0.0; critic.q.len()];
    let mut loss = 0.0;
    for w in steps.windows(2) {
        let (s, next) = (&w[0], &w[1]);
        let d = s.reward + discount * target.value(next.z, next.action) - critic.value(s.z, s.action);
        loss += smooth_l1(d) / n;
        grad[s.z * na + s.action] -= smooth_l1_grad(d) / n;
    }
    Ok((loss, grad))
}
