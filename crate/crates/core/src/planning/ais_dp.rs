//! Dynamic programs on the AIS spaces of a generator.

use super::{argmax, StageValues, ValueTables};
use crate::ais::AisGenerator;
use crate::error::{Error, Result};
use crate::model::SUM_TOL;
use serde::Serialize;

/// Default sup-norm accuracy for value iteration.
pub const DEFAULT_VI_TOL: f64 = 1e-8;

/// A stochastic AIS policy `policy[t-1][ẑ][a]`; stationary policies hold one stage.
pub type AisPolicy = Vec<Vec<Vec<f64>>>;

fn keys(n: usize) -> Vec<String> {
    (0..n).map(|z| format!("z{z}")).collect()
}

/// `Q̂(ẑ,a) = r̂(ẑ,q_a(a)) + γ Σ P̂(ẑ'|ẑ,q_a(a)) V̂'(ẑ')` for every action.
fn q_row(gen: &AisGenerator, t: usize, z: usize, next: Option<&[f64]>) -> Result<Vec<f64>> {
    let st = gen.stage(t)?;
    Ok((0..gen.n_actions)
        .map(|a| {
            let qa = gen.quantize_action(a);
            let cont: f64 = match next {
                Some(v) => st.kernel[z][qa].iter().map(|&(j, p)| p * v[j]).sum(),
                None => 0.0,
            };
            st.reward[z][qa] + gen.discount * cont
        })
        .collect())
}

fn horizon_check(gen: &AisGenerator, horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if let crate::ais::Horizon::Finite(h) = gen.horizon {
        if horizon > h {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} exceeds the generator horizon {h}"
            )));
        }
    }
    Ok(())
}

/// Backward recursion `V̂_t(ẑ) = max_{a∈Â} Q̂_t(ẑ,a)` with `V̂_{T+1} = 0`.
pub fn ais_dp(gen: &AisGenerator, horizon: usize) -> Result<ValueTables> {
    horizon_check(gen, horizon)?;
    let actions = gen.actions();
    let mut stages: Vec<StageValues> = Vec::with_capacity(horizon);
    for t in (1..=horizon).rev() {
        let next = stages.last().map(|s: &StageValues| s.value.as_slice());
        let n = gen.stage(t)?.n_points;
        let mut st = StageValues { keys: keys(n), ..Default::default() };
        for z in 0..n {
            let q = q_row(gen, t, z, next)?;
            let (g, v) = argmax(&q, &actions);
            st.value.push(v);
            st.greedy.push(g);
            st.q.push(q);
        }
        stages.push(st);
    }
    stages.reverse();
    Ok(ValueTables { stages })
}

fn check_policy_row(row: &[f64], n_actions: usize, t: usize, z: usize) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if row.len() != n_actions || row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidProbability(format!(
            "AIS policy row at stage {t}, point {z} is not a distribution"
        )));
    }
    Ok(())
}

fn policy_row(policy: &AisPolicy, t: usize, z: usize) -> Result<&[f64]> {
    let stage = if policy.len() == 1 { &policy[0] } else {
        policy.get(t - 1).ok_or_else(|| Error::InvalidArgument(format!("policy has no stage {t}")))?
    };
    stage
        .get(z)
        .map(Vec::as_slice)
        .ok_or_else(|| Error::InvalidArgument(format!("policy has no row for point {z} at stage {t}")))
}

/// `V̂^π̂_t(ẑ) = Σ_a π̂(a|ẑ) Q̂^π̂_t(ẑ,a)`; a one-stage policy is reused at every stage.
pub fn ais_policy_eval(gen: &AisGenerator, policy: &AisPolicy, horizon: usize) -> Result<ValueTables> {
    horizon_check(gen, horizon)?;
    let all: Vec<usize> = (0..gen.n_actions).collect();
    let mut stages: Vec<StageValues> = Vec::with_capacity(horizon);
    for t in (1..=horizon).rev() {
        let next = stages.last().map(|s: &StageValues| s.value.as_slice());
        let n = gen.stage(t)?.n_points;
        let mut st = StageValues { keys: keys(n), ..Default::default() };
        for z in 0..n {
            let row = policy_row(policy, t, z)?;
            check_policy_row(row, gen.n_actions, t, z)?;
            let q = q_row(gen, t, z, next)?;
            st.value.push(row.iter().zip(&q).map(|(p, q)| p * q).sum());
            st.greedy.push(argmax(&q, &all).0);
            st.q.push(q);
        }
        stages.push(st);
    }
    stages.reverse();
    Ok(ValueTables { stages })
}

/// `[B̂V](ẑ) = max_{a∈Â} r̂(ẑ,a) + γ Σ P̂(ẑ'|ẑ,a) V(ẑ')` on a stationary generator.
pub fn bellman_ais(gen: &AisGenerator, v: &[f64]) -> Result<Vec<f64>> {
    let actions = gen.actions();
    (0..gen.stages[0].n_points)
        .map(|z| Ok(argmax(&q_row(gen, 1, z, Some(v))?, &actions).1))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ViResult {
    pub tables: ValueTables,
    /// Sup-norm distance between the last two iterates.
    pub residual: f64,
    pub iterations: usize,
    /// `V̂^{(0)} = 0, V̂^{(1)}, …`, ending with the returned values.
    #[serde(skip)]
    pub iterates: Vec<Vec<f64>>,
}

impl ViResult {
    pub fn values(&self) -> &[f64] {
        &self.tables.stages[0].value
    }
}

fn require_stationary(gen: &AisGenerator) -> Result<()> {
    if !gen.is_stationary() {
        return Err(Error::InvalidArgument("value iteration needs a stationary generator".into()));
    }
    if !(gen.discount < 1.0) {
        return Err(Error::Unsupported("infinite horizon needs a discount below 1".into()));
    }
    Ok(())
}

/// Iterates `V̂ ← B̂V̂` from 0 until the residual is at most `tol(1−γ)/(2γ)`, so the
/// returned values are within `tol` of the fixed point in sup norm.
pub fn ais_value_iteration(gen: &AisGenerator, tol: f64) -> Result<ViResult> {
    require_stationary(gen)?;
    let gamma = gen.discount;
    let stop = tol * (1.0 - gamma) / (2.0 * gamma);
    let n = gen.stages[0].n_points;
    let mut iterates = vec![vec![0.0; n]];
    loop {
        let prev = iterates.last().expect("non-empty");
        let next = bellman_ais(gen, prev)?;
        let residual = next.iter().zip(prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        iterates.push(next);
        if residual <= stop || iterates.len() > 1_000_000 {
            let v = iterates.last().expect("non-empty").clone();
            let actions = gen.actions();
            let mut st = StageValues { keys: keys(n), ..Default::default() };
            for z in 0..n {
                let q = q_row(gen, 1, z, Some(&v))?;
                st.greedy.push(argmax(&q, &actions).0);
                st.q.push(q);
            }
            st.value = v;
            return Ok(ViResult {
                tables: ValueTables { stages: vec![st] },
                residual,
                iterations: iterates.len() - 1,
                iterates,
            });
        }
    }
}

/// Fixed point of `V = Σ_a π(a|ẑ)[r̂ + γ P̂ V]` by iteration to sup-norm accuracy `tol`.
pub fn ais_policy_eval_stationary(gen: &AisGenerator, policy: &[Vec<f64>], tol: f64) -> Result<ValueTables> {
    require_stationary(gen)?;
    let gamma = gen.discount;
    let n = gen.stages[0].n_points;
    for (z, row) in policy.iter().enumerate() {
        check_policy_row(row, gen.n_actions, 1, z)?;
    }
    if policy.len() != n {
        return Err(Error::DimensionMismatch { field: "policy".into(), expected: n, got: policy.len() });
    }
    let stop = tol * (1.0 - gamma) / (2.0 * gamma);
    let mut v = vec![0.0; n];
    loop {
        let next: Vec<f64> = (0..n)
            .map(|z| Ok(policy[z].iter().zip(q_row(gen, 1, z, Some(&v))?).map(|(p, q)| p * q).sum()))
            .collect::<Result<_>>()?;
        let residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if residual <= stop {
            break;
        }
    }
    let all: Vec<usize> = (0..gen.n_actions).collect();
    let mut st = StageValues { keys: keys(n), ..Default::default() };
    for z in 0..n {
        let q = q_row(gen, 1, z, Some(&v))?;
        st.greedy.push(argmax(&q, &all).0);
        st.q.push(q);
    }
    st.value = v;
    Ok(ValueTables { stages: vec![st] })
}
