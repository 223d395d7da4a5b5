//! Reachable beliefs with global deduplication, for long horizons where the
//! history tree is out of reach.

use super::{belief_update, expected_reward, obs_likelihood, PomdpModel, ProbVector};
use crate::error::{Error, Result};
use std::collections::{HashMap, VecDeque};

/// Beliefs agreeing after rounding to this many units per 1 are merged.
const KEY_SCALE: f64 = 1e10;

#[derive(Clone, Debug)]
pub struct BeliefNode {
    pub belief: ProbVector,
    /// Smallest number of steps from the initial belief.
    pub depth: usize,
    pub obs_probs: Vec<Vec<f64>>,
    pub exp_reward: Vec<f64>,
    /// `children[a][y]`; all `None` for nodes that were not expanded.
    pub children: Vec<Vec<Option<usize>>>,
    pub expanded: bool,
}

/// Breadth-first belief graph rooted at the initial belief; node 0 is the root.
#[derive(Clone, Debug)]
pub struct BeliefGraph {
    pub nodes: Vec<BeliefNode>,
    pub max_depth: usize,
    index: HashMap<Vec<i64>, usize>,
}

fn key(b: &[f64]) -> Vec<i64> {
    b.iter().map(|&p| (p * KEY_SCALE).round() as i64).collect()
}

impl BeliefGraph {
    /// Expands every belief first reached at depth `< max_depth`.
    pub fn build(model: &PomdpModel, max_depth: usize, node_cap: usize) -> Result<Self> {
        Self::build_from(model, model.initial_belief.clone(), max_depth, node_cap)
    }

    pub fn build_from(
        model: &PomdpModel,
        root: ProbVector,
        max_depth: usize,
        node_cap: usize,
    ) -> Result<Self> {
        let make = |belief: ProbVector, depth: usize| BeliefNode {
            obs_probs: (0..model.n_actions)
                .map(|a| obs_likelihood(model, &belief, a).into_vec())
                .collect(),
            exp_reward: (0..model.n_actions)
                .map(|a| expected_reward(model, &belief, a))
                .collect(),
            children: vec![vec![None; model.n_observations]; model.n_actions],
            expanded: false,
            belief,
            depth,
        };
        let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
        index.insert(key(&root), 0);
        let mut nodes = vec![make(root, 0)];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            if nodes[i].depth >= max_depth {
                continue;
            }
            for a in 0..model.n_actions {
                for y in 0..model.n_observations {
                    if nodes[i].obs_probs[a][y] <= 0.0 {
                        continue;
                    }
                    let b = belief_update(model, &nodes[i].belief, a, y)?;
                    let k = key(&b);
                    let j = match index.get(&k) {
                        Some(&j) => j,
                        None => {
                            if nodes.len() >= node_cap {
                                return Err(Error::CapExceeded(format!(
                                    "more than {node_cap} distinct beliefs within depth {max_depth}"
                                )));
                            }
                            let j = nodes.len();
                            nodes.push(make(b, nodes[i].depth + 1));
                            index.insert(k, j);
                            queue.push_back(j);
                            j
                        }
                    };
                    nodes[i].children[a][y] = Some(j);
                }
            }
            nodes[i].expanded = true;
        }
        Ok(BeliefGraph { nodes, max_depth, index })
    }

    /// Node holding `b`, matched by rounded key and then by a 1e-9 sup-norm scan.
    pub fn find(&self, b: &[f64]) -> Option<usize> {
        self.index.get(&key(b)).copied().or_else(|| {
            self.nodes.iter().position(|n| {
                n.belief.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
            })
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Optimal `k`-step discounted values `V_k(b)` for `k = 0..=max_depth`,
    /// as `values[k][node]`.
    ///
    /// `V_k` is exact at every node whose depth is at most `max_depth − k`.
    pub fn optimal_values(&self, discount: f64) -> Vec<Vec<f64>> {
        let mut values = vec![vec![0.0; self.nodes.len()]];
        for _ in 0..self.max_depth {
            let prev = values.last().expect("k = 0 present");
            let next = self
                .nodes
                .iter()
                .map(|n| {
                    (0..n.exp_reward.len())
                        .map(|a| {
                            let cont: f64 = n.children[a]
                                .iter()
                                .zip(&n.obs_probs[a])
                                .filter_map(|(c, &p)| c.map(|c| p * prev[c]))
                                .sum();
                            n.exp_reward[a] + discount * cont
                        })
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            values.push(next);
        }
        values
    }
}

/// Distinct beliefs reachable within `depth` steps, truncated to the first `cap`
/// in breadth-first order.
pub fn reachable_beliefs(model: &PomdpModel, depth: usize, cap: usize) -> Result<Vec<ProbVector>> {
    let mut seen: HashMap<Vec<i64>, ()> = HashMap::new();
    let mut out = vec![model.initial_belief.clone()];
    seen.insert(key(&model.initial_belief), ());
    let mut frontier = vec![model.initial_belief.clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for b in &frontier {
            for a in 0..model.n_actions {
                let psi = obs_likelihood(model, b, a);
                for y in 0..model.n_observations {
                    if psi[y] <= 0.0 {
                        continue;
                    }
                    let nb = belief_update(model, b, a, y)?;
                    if seen.insert(key(&nb), ()).is_none() {
                        if out.len() >= cap {
                            return Ok(out);
                        }
                        out.push(nb.clone());
                        next.push(nb);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(out)
}
