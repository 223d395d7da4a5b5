//! Exact `(ε_t, δ_t)` of a generator by enumerating reachable histories.

use super::{add_scaled, AisCertificate, AisGenerator, CertificateKind, Compression, Compressor, SparseDist};
use crate::error::{Error, Result};
use crate::metrics::{FunctionClass, FunctionClassSpec};
use crate::model::{BeliefGraph, HistoryTree, PomdpModel, DEFAULT_NODE_CAP};

/// Errors at one history: `(ε, δ)` maximized over actions.
#[allow(clippy::too_many_arguments)]
fn node_errors(
    gen: &AisGenerator,
    t: usize,
    own: &SparseDist,
    exp_reward: &[f64],
    obs_probs: &[Vec<f64>],
    children: Option<&[Vec<Option<SparseDist>>]>,
    fspec: Option<&FunctionClassSpec>,
) -> Result<(f64, f64)> {
    let st = gen.stage(t)?;
    let mut eps: f64 = 0.0;
    let mut delta: f64 = 0.0;
    for (a, &er) in exp_reward.iter().enumerate() {
        let qa = gen.quantize_action(a);
        let rhat: f64 = own.iter().map(|&(z, w)| w * st.reward[z][qa]).sum();
        eps = eps.max((er - rhat).abs());
        let (Some(children), Some(fspec)) = (children, fspec) else {
            continue;
        };
        let mut mu: SparseDist = Vec::new();
        for (y, c) in children[a].iter().enumerate() {
            if let Some(c) = c {
                add_scaled(&mut mu, c, obs_probs[a][y]);
            }
        }
        let mut nu: SparseDist = Vec::new();
        for &(z, w) in own {
            add_scaled(&mut nu, &st.kernel[z][qa], w);
        }
        delta = delta.max(fspec.sparse_distance(&mu, &nu)?);
    }
    Ok((eps, delta))
}

/// Exact certificate of `gen` against `model` over stages `1..=horizon`.
///
/// `ε_t` is the largest `|E[R_t|h_t,a] − E[r̂_t(Ẑ_t, q_a(a))]|` over reachable
/// `(h_t, a)`; `δ_t` the largest `d_𝔉(μ, ν)` where `μ` is the law of the next AIS
/// under the model and `ν` the generator's kernel row. For a finite generator
/// `δ` at its last stage is 0. Stationary certificates hold one entry: the
/// maximum over all measured stages.
///
/// Stationary generators that quantize the belief are measured on the
/// deduplicated reachable-belief graph, which admits horizons far beyond the
/// history-enumeration cap.
pub fn measure_ais(
    model: &PomdpModel,
    gen: &AisGenerator,
    horizon: usize,
    fclass: FunctionClass,
) -> Result<AisCertificate> {
    if gen.n_actions != model.n_actions {
        return Err(Error::DimensionMismatch {
            field: "generator actions".into(),
            expected: model.n_actions,
            got: gen.n_actions,
        });
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let comp = Compressor::new(model, gen)?;
    let ground_metric = match fclass {
        FunctionClass::TotalVariation => "none".to_string(),
        _ => gen.ground_metric.clone().unwrap_or_else(|| "generator metric".into()),
    };
    let (eps, delta) = if gen.is_stationary() && matches!(gen.compression, Compression::Belief { .. }) {
        let fspec = gen.function_class(fclass, 1)?;
        let graph = BeliefGraph::build(model, horizon, DEFAULT_NODE_CAP)?;
        let comps = graph
            .nodes
            .iter()
            .map(|n| comp.compress_with_belief(&crate::model::History::new(), Some(&n.belief)))
            .collect::<Result<Vec<_>>>()?;
        let (mut eps, mut delta) = (0.0f64, 0.0f64);
        for (i, n) in graph.nodes.iter().enumerate() {
            if !n.expanded {
                continue;
            }
            let children: Vec<Vec<Option<SparseDist>>> = n
                .children
                .iter()
                .map(|row| row.iter().map(|c| c.map(|c| comps[c].clone())).collect())
                .collect();
            let (e, d) = node_errors(gen, 1, &comps[i], &n.exp_reward, &n.obs_probs, Some(&children), Some(&fspec))?;
            eps = eps.max(e);
            delta = delta.max(d);
        }
        (vec![eps], vec![delta])
    } else {
        let with_next = match gen.horizon {
            super::Horizon::Stationary => true,
            super::Horizon::Finite(h) => {
                if horizon > h {
                    return Err(Error::InvalidArgument(format!(
                        "measurement horizon {horizon} exceeds the generator horizon {h}"
                    )));
                }
                horizon < h
            }
        };
        let tree = HistoryTree::build(model, if with_next { horizon + 1 } else { horizon })?;
        let comps = tree
            .stages
            .iter()
            .map(|stage| {
                stage
                    .iter()
                    .map(|n| comp.compress_with_belief(&n.history, Some(&n.belief)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut eps = vec![0.0f64; horizon];
        let mut delta = vec![0.0f64; horizon];
        for t in 1..=horizon {
            let has_next = t < tree.horizon();
            let fspec = if has_next { Some(gen.function_class(fclass, t + 1)?) } else { None };
            let fspec = match (&fspec, gen.is_stationary()) {
                (Some(_), true) => Some(gen.function_class(fclass, 1)?),
                _ => fspec,
            };
            for (i, n) in tree.stages[t - 1].iter().enumerate() {
                let children: Option<Vec<Vec<Option<SparseDist>>>> = has_next.then(|| {
                    n.children
                        .iter()
                        .map(|row| row.iter().map(|c| c.map(|c| comps[t][c].clone())).collect())
                        .collect()
                });
                let (e, d) = node_errors(
                    gen,
                    t,
                    &comps[t - 1][i],
                    &n.exp_reward,
                    &n.obs_probs,
                    children.as_deref(),
                    fspec.as_ref(),
                )?;
                eps[t - 1] = eps[t - 1].max(e);
                delta[t - 1] = delta[t - 1].max(d);
            }
        }
        if gen.is_stationary() {
            (
                vec![eps.iter().fold(0.0, |m: f64, &e| m.max(e))],
                vec![delta.iter().fold(0.0, |m: f64, &d| m.max(d))],
            )
        } else {
            (eps, delta)
        }
    };
    Ok(AisCertificate {
        fclass,
        ground_metric,
        eps,
        delta,
        kind: CertificateKind::Measured,
        stationary: gen.is_stationary(),
    })
}
