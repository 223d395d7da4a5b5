//! Belief-based generators: lattice-quantized beliefs and the exact belief.

use super::compose_kernel_from_obs_predictor;
use super::lattice::{key_to_point, lattice_key, max_l1_error};
use super::{AisCertificate, AisGenerator, AisStage, CertificateKind, Compression, Horizon};
use crate::error::{Error, Result};
use crate::metrics::{EmbeddedPoints, FunctionClass, MetricSpace};
use crate::model::{
    belief_update, expected_reward, obs_likelihood, reachable_beliefs, BeliefGraph, HistoryTree,
    PomdpModel, DEFAULT_HISTORY_CAP,
};
use std::collections::HashMap;

/// Largest AIS space a stationary belief generator may have.
pub const STATIONARY_POINT_CAP: usize = 100_000;

/// Insertion-ordered set of lattice keys.
#[derive(Default)]
struct KeySet {
    keys: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl KeySet {
    fn insert(&mut self, k: Vec<u32>) -> usize {
        if let Some(&i) = self.index.get(&k) {
            return i;
        }
        self.index.insert(k.clone(), self.keys.len());
        self.keys.push(k);
        self.keys.len() - 1
    }

    fn len(&self) -> usize {
        self.keys.len()
    }
}

/// Tables of one stage given its points and, unless it is the last stage, a way
/// to place `Q_n(aupdate(ẑ,a,y))` in the next space.
fn stage_from_points(
    model: &PomdpModel,
    points: Vec<Vec<f64>>,
    mut place: Option<&mut dyn FnMut(&[f64], usize, usize) -> Result<usize>>,
) -> Result<AisStage> {
    let (na, ny) = (model.n_actions, model.n_observations);
    let mut update_map = Vec::with_capacity(points.len());
    let mut obs_predictor = Vec::with_capacity(points.len());
    let mut reward = Vec::with_capacity(points.len());
    for z in &points {
        let mut upd = vec![vec![None; ny]; na];
        let mut obs = Vec::with_capacity(na);
        let mut rew = Vec::with_capacity(na);
        for a in 0..na {
            let psi = obs_likelihood(model, z, a).into_vec();
            if let Some(place) = place.as_mut() {
                for y in 0..ny {
                    if psi[y] > 0.0 {
                        upd[a][y] = Some(place(z, a, y)?);
                    }
                }
            }
            rew.push(expected_reward(model, z, a));
            obs.push(psi);
        }
        update_map.push(upd);
        obs_predictor.push(obs);
        reward.push(rew);
    }
    let kernel = if place.is_some() {
        compose_kernel_from_obs_predictor(&update_map, &obs_predictor)?
    } else {
        vec![vec![Vec::new(); na]; points.len()]
    };
    Ok(AisStage {
        n_points: points.len(),
        metric: Some(MetricSpace::l1(&points)),
        embedding: Some(EmbeddedPoints::new(points.clone())?),
        points: Some(points),
        kernel,
        reward,
        update_map: Some(update_map),
        obs_predictor: Some(obs_predictor),
    })
}

fn declared_certificate(model: &PomdpModel, n: usize, stages: usize, stationary: bool) -> AisCertificate {
    let e1 = max_l1_error(n, model.n_states);
    AisCertificate {
        fclass: FunctionClass::BoundedLipschitz,
        ground_metric: "l1 between belief points".into(),
        eps: vec![model.r_inf_norm() * e1; stages],
        delta: vec![3.0 * e1; stages],
        kind: CertificateKind::Declared,
        stationary,
    }
}

/// Quantized-belief generator on the type lattice `Q_n`.
///
/// Finite horizons: `Ẑ_1 = {Q_n(b_1)}` and `Ẑ_{t+1}` holds `Q_n(b(h))` for every
/// reachable `h_{t+1}` plus `Q_n(aupdate(ẑ,a,y))` for every `ẑ ∈ Ẑ_t` with
/// `ψ(y|ẑ,a) > 0`. Stationary: the closure of the quantized reachable beliefs
/// (explored to the default history cap) under `Q_n ∘ aupdate`.
///
/// The update map is `Q_n ∘ aupdate`, the observation predictor is `ψ(·|ẑ,a)`,
/// and `r̂(ẑ,a) = ⟨ẑ, r(·,a)⟩`. The ground metric is ℓ1 between points. The
/// declared certificate is `(‖r‖_∞ e₁, 3 e₁)` under the bounded-Lipschitz class.
pub fn build_belief_quant_ais(model: &PomdpModel, horizon: Horizon, n: usize) -> Result<AisGenerator> {
    if n == 0 {
        return Err(Error::InvalidArgument("lattice resolution n must be at least 1".into()));
    }
    let q = |b: &[f64]| lattice_key(b, n);
    let stages = match horizon {
        Horizon::Finite(t_max) => {
            let tree = HistoryTree::build(model, t_max)?;
            let mut sets = vec![KeySet::default()];
            sets[0].insert(q(&model.initial_belief));
            for t in 1..t_max {
                let mut next = KeySet::default();
                for k in &sets[t - 1].keys {
                    let z = key_to_point(k, n);
                    for a in 0..model.n_actions {
                        let psi = obs_likelihood(model, &z, a);
                        for y in 0..model.n_observations {
                            if psi[y] > 0.0 {
                                next.insert(q(&belief_update(model, &z, a, y)?));
                            }
                        }
                    }
                }
                for node in &tree.stages[t] {
                    next.insert(q(&node.belief));
                }
                sets.push(next);
            }
            let mut stages = Vec::with_capacity(t_max);
            for t in 0..t_max {
                let points: Vec<Vec<f64>> = sets[t].keys.iter().map(|k| key_to_point(k, n)).collect();
                let stage = if t + 1 < t_max {
                    let next = &sets[t + 1];
                    let mut place = |z: &[f64], a: usize, y: usize| -> Result<usize> {
                        Ok(next.index[&q(&belief_update(model, z, a, y)?)])
                    };
                    stage_from_points(model, points, Some(&mut place))?
                } else {
                    stage_from_points(model, points, None)?
                };
                stages.push(stage);
            }
            stages
        }
        Horizon::Stationary => {
            let mut set = KeySet::default();
            set.insert(q(&model.initial_belief));
            for b in reachable_beliefs(model, DEFAULT_HISTORY_CAP, STATIONARY_POINT_CAP)? {
                set.insert(q(&b));
            }
            let mut i = 0;
            while i < set.len() {
                let z = key_to_point(&set.keys[i], n);
                for a in 0..model.n_actions {
                    let psi = obs_likelihood(model, &z, a);
                    for y in 0..model.n_observations {
                        if psi[y] > 0.0 {
                            set.insert(q(&belief_update(model, &z, a, y)?));
                        }
                    }
                }
                if set.len() > STATIONARY_POINT_CAP {
                    return Err(Error::CapExceeded(format!(
                        "more than {STATIONARY_POINT_CAP} lattice points reachable at n = {n}; try a smaller n"
                    )));
                }
                i += 1;
            }
            let points: Vec<Vec<f64>> = set.keys.iter().map(|k| key_to_point(k, n)).collect();
            let mut place = |z: &[f64], a: usize, y: usize| -> Result<usize> {
                Ok(set.index[&q(&belief_update(model, z, a, y)?)])
            };
            vec![stage_from_points(model, points.clone(), Some(&mut place))?]
        }
    };
    let n_stages = stages.len();
    let gen = AisGenerator {
        horizon,
        discount: model.discount,
        n_actions: model.n_actions,
        n_observations: model.n_observations,
        stages,
        compression: Compression::Belief { lattice: n },
        action_quantizer: None,
        ground_metric: Some("l1 between belief points".into()),
        declared: Some(declared_certificate(
            model,
            n,
            n_stages,
            horizon == Horizon::Stationary,
        )),
    };
    gen.validate()?;
    Ok(gen)
}

/// The exact belief as an information state, with beliefs equal up to 1e-10 merged.
///
/// Histories are compressed by folding the update map from the initial belief.
/// The stationary variant exists only when the reachable belief set closes
/// within the default history cap.
pub fn build_exact_belief_ais(model: &PomdpModel, horizon: Horizon) -> Result<AisGenerator> {
    let graph_to_stage = |model: &PomdpModel, g: &BeliefGraph, ids: &[usize], pos: &dyn Fn(usize) -> usize| {
        let points: Vec<Vec<f64>> = ids.iter().map(|&i| g.nodes[i].belief.to_vec()).collect();
        let mut update_map = Vec::new();
        let mut obs_predictor = Vec::new();
        let mut reward = Vec::new();
        for &i in ids {
            let node = &g.nodes[i];
            update_map.push(
                node.children
                    .iter()
                    .map(|row| row.iter().map(|c| c.map(pos)).collect())
                    .collect::<Vec<Vec<Option<usize>>>>(),
            );
            obs_predictor.push(node.obs_probs.clone());
            reward.push(node.exp_reward.clone());
        }
        let _ = model;
        (points, update_map, obs_predictor, reward)
    };
    let finish = |points: Vec<Vec<f64>>,
                  update_map: Vec<Vec<Vec<Option<usize>>>>,
                  obs_predictor: Vec<Vec<Vec<f64>>>,
                  reward: Vec<Vec<f64>>,
                  last: bool|
     -> Result<AisStage> {
        let kernel = if last {
            vec![vec![Vec::new(); model.n_actions]; points.len()]
        } else {
            compose_kernel_from_obs_predictor(&update_map, &obs_predictor)?
        };
        Ok(AisStage {
            n_points: points.len(),
            metric: Some(MetricSpace::l1(&points)),
            embedding: Some(EmbeddedPoints::new(points.clone())?),
            points: Some(points),
            kernel,
            reward,
            update_map: Some(update_map),
            obs_predictor: Some(obs_predictor),
        })
    };
    let stages = match horizon {
        Horizon::Finite(t_max) => {
            if t_max > DEFAULT_HISTORY_CAP {
                return Err(Error::CapExceeded(format!(
                    "horizon {t_max} exceeds the history cap {DEFAULT_HISTORY_CAP}"
                )));
            }
            let g = BeliefGraph::build(model, t_max - 1, crate::model::DEFAULT_NODE_CAP)?;
            // a belief can recur at several stages; each stage gets its own copy
            let mut per_stage: Vec<Vec<usize>> = vec![vec![0]];
            for t in 1..t_max {
                let mut next: Vec<usize> = Vec::new();
                let mut seen = HashMap::new();
                for &i in &per_stage[t - 1] {
                    for row in &g.nodes[i].children {
                        for c in row.iter().flatten() {
                            if seen.insert(*c, ()).is_none() {
                                next.push(*c);
                            }
                        }
                    }
                }
                per_stage.push(next);
            }
            let mut stages = Vec::with_capacity(t_max);
            for t in 0..t_max {
                let last = t + 1 == t_max;
                let pos_map: HashMap<usize, usize> = if last {
                    HashMap::new()
                } else {
                    per_stage[t + 1].iter().enumerate().map(|(j, &i)| (i, j)).collect()
                };
                let (points, mut update_map, obs_predictor, reward) =
                    graph_to_stage(model, &g, &per_stage[t], &|i| pos_map.get(&i).copied().unwrap_or(usize::MAX));
                if last {
                    for u in &mut update_map {
                        for row in u.iter_mut() {
                            row.iter_mut().for_each(|c| *c = None);
                        }
                    }
                }
                stages.push(finish(points, update_map, obs_predictor, reward, last)?);
            }
            stages
        }
        Horizon::Stationary => {
            let g = BeliefGraph::build(model, DEFAULT_HISTORY_CAP * 8, crate::model::DEFAULT_NODE_CAP)?;
            if g.nodes.iter().any(|n| !n.expanded) {
                return Err(Error::Unsupported(format!(
                    "reachable belief set does not close within {} steps; use a quantized generator",
                    g.max_depth
                )));
            }
            let ids: Vec<usize> = (0..g.len()).collect();
            let (points, update_map, obs_predictor, reward) = graph_to_stage(model, &g, &ids, &|i| i);
            vec![finish(points, update_map, obs_predictor, reward, false)?]
        }
    };
    let gen = AisGenerator {
        horizon,
        discount: model.discount,
        n_actions: model.n_actions,
        n_observations: model.n_observations,
        stages,
        compression: Compression::Recursive { initial: 0 },
        action_quantizer: None,
        ground_metric: Some("l1 between belief points".into()),
        declared: None,
    };
    gen.validate()?;
    Ok(gen)
}
