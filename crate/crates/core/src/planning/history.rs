//! Backward recursions over enumerated histories.

use super::{argmax, StageValues, ValueTables};
use crate::error::{Error, Result};
use crate::model::{History, HistoryTree, PomdpModel, ProbVector, SUM_TOL};

/// Continuation `Σ_y ψ(y|h,a) V_{t+1}(h + (a,y))`.
fn continuation(node: &crate::model::HistoryNode, a: usize, next: Option<&[f64]>) -> f64 {
    match next {
        None => 0.0,
        Some(v) => node.children[a]
            .iter()
            .zip(&node.obs_probs[a])
            .filter_map(|(c, &p)| c.map(|c| p * v[c]))
            .sum(),
    }
}

/// Optimal values over histories; `stages[t-1]` follows the order of `tree.stages[t-1]`.
pub fn history_dp_on(model: &PomdpModel, tree: &HistoryTree) -> ValueTables {
    let actions: Vec<usize> = (0..model.n_actions).collect();
    let mut stages: Vec<StageValues> = Vec::with_capacity(tree.horizon());
    for t in (0..tree.horizon()).rev() {
        let next = stages.last().map(|s: &StageValues| s.value.as_slice());
        let mut st = StageValues::default();
        for node in &tree.stages[t] {
            let q: Vec<f64> = (0..model.n_actions)
                .map(|a| node.exp_reward[a] + model.discount * continuation(node, a, next))
                .collect();
            let (g, v) = argmax(&q, &actions);
            st.keys.push(node.history.to_string());
            st.value.push(v);
            st.q.push(q);
            st.greedy.push(g);
        }
        stages.push(st);
    }
    stages.reverse();
    ValueTables { stages }
}

/// `V_t`, `Q_t` for every reachable history up to `horizon`, discounted by the model's factor.
pub fn history_dp(model: &PomdpModel, horizon: usize) -> Result<ValueTables> {
    Ok(history_dp_on(model, &HistoryTree::build(model, horizon)?))
}

fn check_distribution(p: &[f64], n: usize, h: &History) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.len() != n || p.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidProbability(format!(
            "policy at history {h} is not a distribution over {n} actions"
        )));
    }
    Ok(())
}

/// `V^π_t`, `Q^π_t` over the tree for a history-dependent stochastic policy.
/// The policy receives the history and its belief.
pub fn history_policy_eval_on<F>(model: &PomdpModel, tree: &HistoryTree, policy: F) -> Result<ValueTables>
where
    F: Fn(&History, &ProbVector) -> Vec<f64>,
{
    let actions: Vec<usize> = (0..model.n_actions).collect();
    let mut stages: Vec<StageValues> = Vec::with_capacity(tree.horizon());
    for t in (0..tree.horizon()).rev() {
        let next = stages.last().map(|s: &StageValues| s.value.as_slice());
        let mut st = StageValues::default();
        for node in &tree.stages[t] {
            let pi = policy(&node.history, &node.belief);
            check_distribution(&pi, model.n_actions, &node.history)?;
            let q: Vec<f64> = (0..model.n_actions)
                .map(|a| node.exp_reward[a] + model.discount * continuation(node, a, next))
                .collect();
            st.value.push(pi.iter().zip(&q).map(|(p, q)| p * q).sum());
            st.greedy.push(argmax(&q, &actions).0);
            st.keys.push(node.history.to_string());
            st.q.push(q);
        }
        stages.push(st);
    }
    stages.reverse();
    Ok(ValueTables { stages })
}

pub fn history_policy_eval<F>(model: &PomdpModel, policy: F, horizon: usize) -> Result<ValueTables>
where
    F: Fn(&History, &ProbVector) -> Vec<f64>,
{
    history_policy_eval_on(model, &HistoryTree::build(model, horizon)?, policy)
}
