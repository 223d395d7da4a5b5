use crate::error::Result;
use crate::model::{History, HistoryTree, PomdpModel, ProbVector, DEFAULT_HISTORY_CAP, DEFAULT_NODE_CAP};
use serde::Serialize;
use std::collections::HashMap;
use std::hash::Hash;

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoStateReport {
    /// `ε = δ = 0` within 1e-9 under total variation.
    pub holds: bool,
    /// Largest reward-prediction gap between histories sharing a key.
    pub eps: f64,
    /// Largest TV gap between next-key laws of histories sharing a key.
    pub delta: f64,
    /// Keys of successors are a function of `(key, a, y)`.
    pub p2a: bool,
    /// Observation likelihoods are a function of `(key, a)`.
    pub p2b: bool,
}

/// Checks whether `compress` is an information state up to `horizon`.
///
/// Histories are grouped by key and compared with the first history of their
/// group, which is what the exact kernels induced by the key would predict if
/// the compression were sufficient. `compress` receives the history and its belief.
pub fn verify_information_state<K, F>(model: &PomdpModel, compress: F, horizon: usize) -> Result<InfoStateReport>
where
    K: Hash + Eq + Clone,
    F: Fn(&History, &ProbVector) -> K,
{
    let tree = HistoryTree::build_with_caps(model, horizon + 1, DEFAULT_HISTORY_CAP + 1, DEFAULT_NODE_CAP)?;
    let keys: Vec<Vec<K>> = tree
        .stages
        .iter()
        .map(|s| s.iter().map(|n| compress(&n.history, &n.belief)).collect())
        .collect();
    let (mut eps, mut delta) = (0.0f64, 0.0f64);
    let (mut p2a, mut p2b) = (true, true);
    for t in 0..horizon {
        let stage = &tree.stages[t];
        let mut rep: HashMap<&K, usize> = HashMap::new();
        for (i, n) in stage.iter().enumerate() {
            let r = *rep.entry(&keys[t][i]).or_insert(i);
            if r == i {
                continue;
            }
            let m = &stage[r];
            for a in 0..model.n_actions {
                eps = eps.max((n.exp_reward[a] - m.exp_reward[a]).abs());
                // next-key laws as maps key → mass
                let law = |node: &crate::model::HistoryNode| {
                    let mut out: HashMap<&K, f64> = HashMap::new();
                    for (y, c) in node.children[a].iter().enumerate() {
                        if let Some(c) = c {
                            *out.entry(&keys[t + 1][*c]).or_insert(0.0) += node.obs_probs[a][y];
                        }
                    }
                    out
                };
                let (ln, lm) = (law(n), law(m));
                let mut tv = 0.0;
                for (k, p) in &ln {
                    tv += (p - lm.get(k).copied().unwrap_or(0.0)).abs();
                }
                for (k, p) in &lm {
                    if !ln.contains_key(k) {
                        tv += p;
                    }
                }
                delta = delta.max(tv);
                for y in 0..model.n_observations {
                    if (n.obs_probs[a][y] - m.obs_probs[a][y]).abs() > TOL {
                        p2b = false;
                    }
                    if let (Some(cn), Some(cm)) = (n.children[a][y], m.children[a][y]) {
                        if keys[t + 1][cn] != keys[t + 1][cm] {
                            p2a = false;
                        }
                    }
                }
            }
        }
    }
    Ok(InfoStateReport { holds: eps <= TOL && delta <= TOL, eps, delta, p2a, p2b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ais::lattice_key;
    use crate::envs;

    #[test]
    fn belief_is_an_information_state_on_tiger() {
        let m = envs::tiger().model;
        let r = verify_information_state(&m, |_, b| lattice_key(b, 1_000_000_000), 4).unwrap();
        assert!(r.holds && r.p2a && r.p2b, "{r:?}");
    }

    #[test]
    fn full_history_is_an_information_state() {
        let m = envs::voicemail().model;
        let r = verify_information_state(&m, |h, _| h.clone(), 3).unwrap();
        assert!(r.holds && r.eps == 0.0 && r.delta == 0.0);
    }

    #[test]
    fn constant_compression_fails_on_tiger() {
        let m = envs::tiger().model;
        let r = verify_information_state(&m, |_, _| (), 3).unwrap();
        assert!(!r.holds);
        assert!(r.eps >= 0.5, "{r:?}");
        assert!(!r.p2b);
    }
}
