//! Empirical checks of the α bounds against exact history dynamic programs.

use super::{
    ais_dp, ais_policy_eval, alpha_bounds, history_dp_on, history_policy_eval_on, AisPolicy,
    BoundReport, BoundVariant, ValueTables,
};
use crate::ais::{AisCertificate, AisGenerator, Compressor, SparseDist};
use crate::error::{Error, Result};
use crate::metrics::FunctionClass;
use crate::model::{History, HistoryTree, PomdpModel, DEFAULT_NODE_CAP};
use serde::Serialize;
use std::collections::HashMap;

/// Slack allowed on every comparison.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, Serialize)]
pub struct BoundCheck {
    /// Per stage `max_h |V_t(h) − E V̂_t(σ̂(h))|`.
    pub value_gap: Vec<f64>,
    /// Per stage `max_{h,a} |Q_t(h,a) − E Q̂_t(σ̂(h),a)|`; empty for policy evaluation.
    pub q_gap: Vec<f64>,
    /// Per stage `max_h |V_t(h) − V^π_t(h)|` for the lifted policy; empty for policy evaluation.
    pub policy_gap: Vec<f64>,
    pub report: Option<BoundReport>,
    /// Number of comparisons exceeding their bound by more than [`CHECK_TOL`].
    pub violations: usize,
}

fn expect_over(sigma: &SparseDist, f: impl Fn(usize) -> f64) -> f64 {
    sigma.iter().map(|&(z, p)| p * f(z)).sum()
}

/// `π(a|h) = Σ_ẑ σ̂(ẑ|h) π̂_t(a|ẑ)`.
pub fn lift_policy(sigma: &SparseDist, policy: &AisPolicy, t: usize, n_actions: usize) -> Result<Vec<f64>> {
    let stage = if policy.len() == 1 { &policy[0] } else {
        policy.get(t - 1).ok_or_else(|| Error::InvalidArgument(format!("policy has no stage {t}")))?
    };
    let mut pi = vec![0.0; n_actions];
    for &(z, p) in sigma {
        let row = stage
            .get(z)
            .ok_or_else(|| Error::InvalidArgument(format!("policy has no row for point {z} at stage {t}")))?;
        for (acc, &q) in pi.iter_mut().zip(row) {
            *acc += p * q;
        }
    }
    Ok(pi)
}

/// Deterministic AIS policy choosing the greedy action of each table.
pub fn greedy_policy(tables: &ValueTables, n_actions: usize) -> AisPolicy {
    tables
        .stages
        .iter()
        .map(|s| {
            s.greedy
                .iter()
                .map(|&a| (0..n_actions).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
                .collect()
        })
        .collect()
}

struct Prepared {
    tree: HistoryTree,
    sigma: Vec<Vec<SparseDist>>,
}

fn prepare(model: &PomdpModel, gen: &AisGenerator, horizon: usize) -> Result<Prepared> {
    let tree = HistoryTree::build_with_caps(model, horizon, horizon.max(1), DEFAULT_NODE_CAP)?;
    let comp = Compressor::new(model, gen)?;
    let sigma = tree
        .stages
        .iter()
        .map(|st| {
            st.iter()
                .map(|n| comp.compress_with_belief(&n.history, Some(n.belief.as_slice())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared { tree, sigma })
}

fn lifted_values(model: &PomdpModel, prep: &Prepared, policy: &AisPolicy) -> Result<ValueTables> {
    let mut table: HashMap<History, Vec<f64>> = HashMap::new();
    for (t, st) in prep.tree.stages.iter().enumerate() {
        for (node, sigma) in st.iter().zip(&prep.sigma[t]) {
            table.insert(node.history.clone(), lift_policy(sigma, policy, t + 1, model.n_actions)?);
        }
    }
    history_policy_eval_on(model, &prep.tree, |h, _| table[h].clone())
}

/// `ρ_TV(V_{t+1})` of the true history values, as needed by the alternative bound.
pub fn history_tv_rho(values: &ValueTables) -> Vec<f64> {
    let n = values.stages.len();
    (0..n)
        .map(|t| {
            if t + 1 >= n {
                return 0.0;
            }
            let v = &values.stages[t + 1].value;
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            (hi - lo) / 2.0
        })
        .collect()
}

/// Checks the value, action-value and lifted greedy policy bounds of a finite
/// generator on every reachable history up to `horizon`.
pub fn check_finite_bounds(
    model: &PomdpModel,
    gen: &AisGenerator,
    cert: &AisCertificate,
    horizon: usize,
    variant: BoundVariant,
) -> Result<BoundCheck> {
    let prep = prepare(model, gen, horizon)?;
    let v = history_dp_on(model, &prep.tree);
    let vhat = ais_dp(gen, horizon)?;
    let true_rho = match variant {
        BoundVariant::Alternative if cert.fclass == FunctionClass::TotalVariation => Some(history_tv_rho(&v)),
        _ => None,
    };
    let report = alpha_bounds(gen, cert, &vhat, variant, true_rho.as_deref())?;
    let greedy = greedy_policy(&vhat, gen.n_actions);
    let vpi = lifted_values(model, &prep, &greedy)?;
    let mut out = BoundCheck::default();
    for t in 0..horizon {
        let (mut vg, mut qg, mut pg) = (0.0f64, 0.0f64, 0.0f64);
        for (i, sigma) in prep.sigma[t].iter().enumerate() {
            let est = expect_over(sigma, |z| vhat.stages[t].value[z]);
            vg = vg.max((v.stages[t].value[i] - est).abs());
            for a in 0..model.n_actions {
                let est = expect_over(sigma, |z| vhat.stages[t].q[z][a]);
                qg = qg.max((v.stages[t].q[i][a] - est).abs());
            }
            pg = pg.max((v.stages[t].value[i] - vpi.stages[t].value[i]).abs());
        }
        let bound = report.alpha[t] + CHECK_TOL;
        out.violations += usize::from(vg > bound) + usize::from(qg > bound);
        out.violations += usize::from(pg > report.policy_bound[t] + CHECK_TOL);
        out.value_gap.push(vg);
        out.q_gap.push(qg);
        out.policy_gap.push(pg);
    }
    out.report = Some(report);
    Ok(out)
}

/// Checks `|V^π_t(h) − E V̂^π̂_t(σ̂(h))| ≤ α#_t` for the policy lifted from `policy`.
pub fn check_policy_eval_bounds(
    model: &PomdpModel,
    gen: &AisGenerator,
    cert: &AisCertificate,
    policy: &AisPolicy,
    horizon: usize,
) -> Result<BoundCheck> {
    let prep = prepare(model, gen, horizon)?;
    let vhat = ais_policy_eval(gen, policy, horizon)?;
    let report = alpha_bounds(gen, cert, &vhat, BoundVariant::Primary, None)?;
    let vpi = lifted_values(model, &prep, policy)?;
    let mut out = BoundCheck::default();
    for t in 0..horizon {
        let mut vg = 0.0f64;
        for (i, sigma) in prep.sigma[t].iter().enumerate() {
            let est = expect_over(sigma, |z| vhat.stages[t].value[z]);
            vg = vg.max((vpi.stages[t].value[i] - est).abs());
        }
        out.violations += usize::from(vg > report.alpha[t] + CHECK_TOL);
        out.value_gap.push(vg);
    }
    out.report = Some(report);
    Ok(out)
}
