//! Truncated evaluation of infinite-horizon discounted values with the
//! geometric-tail sandwich.

use crate::error::{Error, Result};
use crate::model::{BeliefGraph, History, HistoryTree, PomdpModel, DEFAULT_NODE_CAP};
use crate::model::random_distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Finite-state controller: a stochastic action per memory state and a
/// deterministic memory update on `(a, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FscPolicy {
    pub n_memory: usize,
    pub initial_memory: usize,
    /// `action_probs[m][a]`.
    pub action_probs: Vec<Vec<f64>>,
    /// `next_memory[m][a][y]`.
    pub next_memory: Vec<Vec<Vec<usize>>>,
}

impl FscPolicy {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n_memory: usize, n_actions: usize, n_observations: usize) -> Self {
        FscPolicy {
            n_memory,
            initial_memory: 0,
            action_probs: (0..n_memory).map(|_| random_distribution(rng, n_actions)).collect(),
            next_memory: (0..n_memory)
                .map(|_| {
                    (0..n_actions)
                        .map(|_| (0..n_observations).map(|_| rng.gen_range(0..n_memory)).collect())
                        .collect()
                })
                .collect(),
        }
    }

    /// Memory after following `h` from the initial memory.
    pub fn memory_of(&self, h: &History) -> usize {
        h.steps
            .iter()
            .fold(self.initial_memory, |m, s| self.next_memory[m][s.action][s.observation])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedValue {
    pub history: History,
    /// `J_{t,T}(h)`.
    pub value: f64,
    /// `J_{t,T}(h) + γ^{T−t} R_min/(1−γ)`.
    pub lower: f64,
    /// `J_{t,T}(h) + γ^{T−t} R_max/(1−γ)`.
    pub upper: f64,
}

fn require_discounted(model: &PomdpModel) -> Result<()> {
    if !(model.discount < 1.0) {
        return Err(Error::Unsupported("truncated infinite-horizon values need a discount below 1".into()));
    }
    Ok(())
}

fn sandwich(model: &PomdpModel, value: f64, steps: usize) -> (f64, f64) {
    let tail = model.discount.powi(steps as i32) / (1.0 - model.discount);
    (value + tail * model.r_min(), value + tail * model.r_max())
}

/// `W_k(s,m)`: expected discounted reward of `k` steps from state `s` and memory `m`.
fn fsc_values(model: &PomdpModel, policy: &FscPolicy, k: usize) -> Vec<Vec<f64>> {
    let (ns, nm) = (model.n_states, policy.n_memory);
    let mut w = vec![vec![0.0; nm]; ns];
    for _ in 0..k {
        let mut next = vec![vec![0.0; nm]; ns];
        for s in 0..ns {
            for m in 0..nm {
                let mut v = 0.0;
                for (a, &pa) in policy.action_probs[m].iter().enumerate() {
                    if pa == 0.0 {
                        continue;
                    }
                    let mut cont = 0.0;
                    for (s2, &p) in model.transition[a][s].iter().enumerate() {
                        if p == 0.0 {
                            continue;
                        }
                        for (y, &o) in model.observation[a][s2].iter().enumerate() {
                            cont += p * o * w[s2][policy.next_memory[m][a][y]];
                        }
                    }
                    v += pa * (model.reward[s][a] + model.discount * cont);
                }
                next[s][m] = v;
            }
        }
        w = next;
    }
    w
}

/// `J^π_{t,T}(h_t)` with its sandwich for every reachable `h_t`.
pub fn truncated_eval_inf(model: &PomdpModel, policy: &FscPolicy, t: usize, horizon: usize) -> Result<Vec<TruncatedValue>> {
    require_discounted(model)?;
    if t == 0 || t > horizon {
        return Err(Error::InvalidArgument(format!("need 1 ≤ t ≤ T, got t={t}, T={horizon}")));
    }
    let tree = HistoryTree::build_with_caps(model, t, t, DEFAULT_NODE_CAP)?;
    let steps = horizon - t;
    let w = fsc_values(model, policy, steps);
    Ok(tree.stages[t - 1]
        .iter()
        .map(|node| {
            let m = policy.memory_of(&node.history);
            let value: f64 = node.belief.iter().enumerate().map(|(s, &b)| b * w[s][m]).sum();
            let (lower, upper) = sandwich(model, value, steps);
            TruncatedValue { history: node.history.clone(), value, lower, upper }
        })
        .collect())
}

/// Optimal truncated values on the reachable belief graph.
#[derive(Clone, Debug)]
pub struct TruncatedOptimal {
    pub horizon: usize,
    pub graph: BeliefGraph,
    /// `values[k][node]`: optimal `k`-step value.
    pub values: Vec<Vec<f64>>,
    discount: f64,
    r_min: f64,
    r_max: f64,
}

impl TruncatedOptimal {
    /// `(J_{t,T}(b), lower, upper)` for a belief reachable at stage `t`.
    pub fn sandwich(&self, belief: &[f64], t: usize) -> Result<(f64, f64, f64)> {
        if t == 0 || t > self.horizon {
            return Err(Error::InvalidArgument(format!("stage {t} outside 1..={}", self.horizon)));
        }
        let node = self
            .graph
            .find(belief)
            .ok_or_else(|| Error::InvalidArgument("belief not in the reachable graph".into()))?;
        let k = self.horizon - t;
        if self.graph.nodes[node].depth + k > self.graph.max_depth {
            return Err(Error::InvalidArgument(format!(
                "belief first reached at depth {} is too deep for a {k}-step value",
                self.graph.nodes[node].depth
            )));
        }
        let v = self.values[k][node];
        let tail = self.discount.powi(k as i32) / (1.0 - self.discount);
        Ok((v, v + tail * self.r_min, v + tail * self.r_max))
    }
}

/// Builds the belief graph to depth `T − 1` and the optimal `k`-step values on it.
pub fn truncated_opt_inf(model: &PomdpModel, horizon: usize) -> Result<TruncatedOptimal> {
    require_discounted(model)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let graph = BeliefGraph::build(model, horizon - 1, DEFAULT_NODE_CAP)?;
    let values = graph.optimal_values(model.discount);
    Ok(TruncatedOptimal {
        horizon,
        graph,
        values,
        discount: model.discount,
        r_min: model.r_min(),
        r_max: model.r_max(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;
    use crate::model::random_pomdp;
    use crate::planning::history_dp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_model(c: f64, gamma: f64) -> PomdpModel {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = random_pomdp(&mut rng, 2, 2, 2, gamma);
        m.reward.iter_mut().flatten().for_each(|r| *r = c);
        m
    }

    #[test]
    fn constant_reward_geometric_series() {
        let m = constant_model(2.0, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pol = FscPolicy::random(&mut rng, 2, 2, 2);
        for v in truncated_eval_inf(&m, &pol, 2, 12).unwrap() {
            let want = 2.0 * (1.0 - 0.9f64.powi(10)) / 0.1;
            assert!((v.value - want).abs() < 1e-12);
            assert!(v.lower <= 20.0 + 1e-12 && 20.0 <= v.upper + 1e-12);
        }
    }

    #[test]
    fn sandwich_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_pomdp(&mut rng, 3, 2, 2, 0.8);
        let pol = FscPolicy::random(&mut rng, 3, 2, 2);
        for v in truncated_eval_inf(&m, &pol, 1, 7).unwrap() {
            let want = 0.8f64.powi(6) * m.r_span() / 0.2;
            assert!((v.upper - v.lower - want).abs() < 1e-12);
        }
    }

    #[test]
    fn undiscounted_rejected() {
        let m = constant_model(1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pol = FscPolicy::random(&mut rng, 1, 2, 2);
        assert!(truncated_eval_inf(&m, &pol, 1, 5).is_err());
        assert!(truncated_opt_inf(&m, 5).is_err());
    }

    #[test]
    fn longer_truncation_inside_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let m = random_pomdp(&mut rng, 3, 2, 2, 0.9);
            let pol = FscPolicy::random(&mut rng, 2, 2, 2);
            let short = truncated_eval_inf(&m, &pol, 2, 30).unwrap();
            let long = truncated_eval_inf(&m, &pol, 2, 200).unwrap();
            let slack = 0.9f64.powi(198) * m.r_inf_norm() / 0.1;
            for (s, l) in short.iter().zip(&long) {
                assert_eq!(s.history, l.history);
                assert!(s.lower - slack <= l.value && l.value <= s.upper + slack);
            }
        }
    }

    #[test]
    fn one_memory_state_matches_history_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_pomdp(&mut rng, 3, 2, 2, 0.9);
        let pol = FscPolicy::random(&mut rng, 1, 2, 2);
        let probs = pol.action_probs[0].clone();
        let hist = crate::planning::history_policy_eval(&m, |_, _| probs.clone(), 4).unwrap();
        let tv = truncated_eval_inf(&m, &pol, 1, 5).unwrap();
        assert!((tv[0].value - hist.stages[0].value[0]).abs() < 1e-12);
    }

    #[test]
    fn optimal_truncation_matches_history_dp() {
        let m = envs::tiger().model;
        let opt = truncated_opt_inf(&m, 5).unwrap();
        // J_{1,5} covers four steps
        let dp = history_dp(&m, 4).unwrap();
        let (v, lo, hi) = opt.sandwich(m.initial_belief.as_slice(), 1).unwrap();
        assert!((v - dp.stages[0].value[0]).abs() < 1e-9);
        let tail = 0.95f64.powi(4) / 0.05;
        assert!((lo - (v + tail * m.r_min())).abs() < 1e-9 && (hi - (v + tail * m.r_max())).abs() < 1e-9);
        assert!(opt.sandwich(m.initial_belief.as_slice(), 6).is_err());
    }
}
