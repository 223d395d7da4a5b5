//! Enumeration of all reachable histories up to a horizon.

use super::{belief_update, expected_reward, obs_likelihood, History, PomdpModel, ProbVector};
use crate::error::{Error, Result};

/// Default maximum horizon for history enumeration.
pub const DEFAULT_HISTORY_CAP: usize = 8;
/// Default maximum number of history nodes across all stages.
pub const DEFAULT_NODE_CAP: usize = 2_000_000;

#[derive(Clone, Debug)]
pub struct HistoryNode {
    pub history: History,
    pub belief: ProbVector,
    /// `ψ(y|b(h),a)` indexed `[a][y]`.
    pub obs_probs: Vec<Vec<f64>>,
    /// `E[R_t | h, a]` indexed by action.
    pub exp_reward: Vec<f64>,
    /// Index of `h + (a, y)` in the next stage, `None` when `ψ = 0` or at the last stage.
    pub children: Vec<Vec<Option<usize>>>,
}

/// Reachable histories grouped by stage: `stages[t-1]` holds every `h_t` with
/// positive probability under some policy.
#[derive(Clone, Debug)]
pub struct HistoryTree {
    pub stages: Vec<Vec<HistoryNode>>,
}

impl HistoryTree {
    /// Enumerates stages `1..=horizon` with the default caps.
    pub fn build(model: &PomdpModel, horizon: usize) -> Result<Self> {
        Self::build_with_caps(model, horizon, DEFAULT_HISTORY_CAP, DEFAULT_NODE_CAP)
    }

    pub fn build_with_caps(
        model: &PomdpModel,
        horizon: usize,
        history_cap: usize,
        node_cap: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if horizon > history_cap {
            return Err(Error::CapExceeded(format!(
                "horizon {horizon} exceeds the history cap {history_cap}"
            )));
        }
        let make = |history: History, belief: ProbVector| -> HistoryNode {
            let obs_probs = (0..model.n_actions)
                .map(|a| obs_likelihood(model, &belief, a).into_vec())
                .collect();
            let exp_reward = (0..model.n_actions)
                .map(|a| expected_reward(model, &belief, a))
                .collect();
            HistoryNode {
                history,
                belief,
                obs_probs,
                exp_reward,
                children: vec![vec![None; model.n_observations]; model.n_actions],
            }
        };
        let mut stages = vec![vec![make(History::new(), model.initial_belief.clone())]];
        let mut total = 1usize;
        for _ in 1..horizon {
            let prev = stages.last_mut().expect("at least one stage");
            let mut next = Vec::new();
            for node in prev.iter_mut() {
                for a in 0..model.n_actions {
                    for y in 0..model.n_observations {
                        if node.obs_probs[a][y] <= 0.0 {
                            continue;
                        }
                        let b = belief_update(model, &node.belief, a, y)?;
                        node.children[a][y] = Some(next.len());
                        next.push(make(node.history.extended(a, y), b));
                        total += 1;
                        if total > node_cap {
                            return Err(Error::CapExceeded(format!(
                                "more than {node_cap} history nodes"
                            )));
                        }
                    }
                }
            }
            stages.push(next);
        }
        Ok(HistoryTree { stages })
    }

    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    pub fn node_count(&self) -> usize {
        self.stages.iter().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;
    use crate::model::random_pomdp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tiger_stage_sizes() {
        let tree = HistoryTree::build(&envs::tiger().model, 4).unwrap();
        let sizes: Vec<usize> = tree.stages.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 6, 36, 216]);
    }

    #[test]
    fn zero_probability_branches_pruned() {
        let m = PomdpModel::fully_observed(
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            vec![vec![0.0], vec![0.0]],
            ProbVector::point(2, 0),
            1.0,
        )
        .unwrap();
        let tree = HistoryTree::build(&m, 3).unwrap();
        assert_eq!(tree.stages[2].len(), 1);
    }

    #[test]
    fn caps_enforced() {
        let m = envs::tiger().model;
        assert!(matches!(
            HistoryTree::build(&m, 9),
            Err(Error::CapExceeded(_))
        ));
        assert!(matches!(
            HistoryTree::build_with_caps(&m, 5, 8, 100),
            Err(Error::CapExceeded(_))
        ));
    }

    /// Filter exactness: every node belief equals brute-force conditioning of the
    /// joint path distribution.
    #[test]
    fn node_beliefs_match_joint_conditioning() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let m = random_pomdp(&mut rng, 3, 2, 2, 1.0);
            let tree = HistoryTree::build(&m, 5).unwrap();
            for stage in &tree.stages {
                for node in stage {
                    let mut paths: Vec<(usize, f64)> =
                        (0..3).map(|s| (s, m.initial_belief[s])).collect();
                    for st in &node.history.steps {
                        let mut next = Vec::new();
                        for &(s, w) in &paths {
                            for s2 in 0..3 {
                                next.push((
                                    s2,
                                    w * m.transition[st.action][s][s2]
                                        * m.observation[st.action][s2][st.observation],
                                ));
                            }
                        }
                        paths = next;
                    }
                    let mut joint = [0.0; 3];
                    for (s, w) in paths {
                        joint[s] += w;
                    }
                    let z: f64 = joint.iter().sum();
                    assert!(z > 0.0);
                    for s in 0..3 {
                        assert!((node.belief[s] - joint[s] / z).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
