//! Finite POMDP data model, exact Bayes filtering, simulation and file I/O.
//!
//! Timing convention: at stage `t` the agent holds history
//! `h_t = (y_{1:t-1}, a_{1:t-1})`, picks `a_t`, collects `r(s_t, a_t)`, the state
//! moves to `s_{t+1} ~ P(·|s_t, a_t)` and `y_t ~ P^y(·|s_{t+1}, a_t)` is revealed.

mod filter;
mod io;
mod random;
pub(crate) mod simulate;
mod tree;
mod belief_graph;

pub use filter::{belief_of, belief_update, expected_reward, obs_likelihood, predict_state};
pub use random::{random_distribution, random_mdp, random_pomdp};
pub use io::{parse_legacy, parse_model, parse_model_str, to_json};
pub use simulate::{simulate, Trajectory, TrajectoryStep};
pub use belief_graph::{reachable_beliefs, BeliefGraph, BeliefNode};
pub use tree::{HistoryNode, HistoryTree, DEFAULT_HISTORY_CAP, DEFAULT_NODE_CAP};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Deref;

/// Tolerance on row sums of stochastic tables and probability vectors.
pub const SUM_TOL: f64 = 1e-9;
/// Negative entries above `-CLAMP_TOL` are treated as float noise and clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// A probability distribution over `0..len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates and clamps. Entries in `[-1e-12, 0)` become 0.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbability("empty vector".into()));
        }
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidProbability(format!("entry {i} is not finite")));
            }
            if *p < 0.0 {
                if *p < -CLAMP_TOL {
                    return Err(Error::InvalidProbability(format!(
                        "entry {i} is negative ({p})"
                    )));
                }
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidProbability(format!("sums to {sum}, not 1")));
        }
        Ok(ProbVector(probs))
    }

    /// Wraps a vector that the caller knows to be a distribution.
    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        ProbVector(probs)
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        ProbVector(v)
    }

    pub fn uniform(n: usize) -> Self {
        ProbVector(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, f: &[f64]) -> f64 {
        self.0.iter().zip(f).map(|(p, v)| p * v).sum()
    }
}

impl Deref for ProbVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// One step of a history: the action taken and the observation that followed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Step {
    pub action: usize,
    pub observation: usize,
}

/// `h_t = (y_{1:t-1}, a_{1:t-1})`; the empty history is `h_1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct History {
    pub steps: Vec<Step>,
}

impl History {
    pub fn new() -> Self {
        History { steps: Vec::new() }
    }

    /// Stage index `t` of this history (1-based).
    pub fn stage(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn extended(&self, action: usize, observation: usize) -> History {
        let mut steps = Vec::with_capacity(self.steps.len() + 1);
        steps.extend_from_slice(&self.steps);
        steps.push(Step { action, observation });
        History { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for History {
    /// `-` for the empty history, otherwise `a0y1.a2y0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return write!(f, "-");
        }
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "a{}y{}", s.action, s.observation)?;
        }
        Ok(())
    }
}

/// Optional human-readable names.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observations: Vec<String>,
}

/// Finite tabular POMDP.
///
/// Tables: `transition[a][s][s']`, `observation[a][s'][y]`, `reward[s][a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PomdpModel {
    #[serde(rename = "states")]
    pub n_states: usize,
    #[serde(rename = "actions")]
    pub n_actions: usize,
    #[serde(rename = "observations")]
    pub n_observations: usize,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub observation: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    pub initial_belief: ProbVector,
    pub discount: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Labels>,
}

fn check_row(row: &[f64], what: &str) -> Result<()> {
    for (j, &p) in row.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::InvalidModel(format!("{what} entry {j} is not finite")));
        }
        if p < 0.0 {
            return Err(Error::InvalidModel(format!(
                "{what} entry {j} is negative ({p})"
            )));
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidModel(format!(
            "{what}: row not stochastic (sums to {sum})"
        )));
    }
    Ok(())
}

fn check_len(field: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            field: field.to_string(),
            expected,
            got,
        });
    }
    Ok(())
}

impl PomdpModel {
    /// Returns `Ok(())` iff every model invariant holds; otherwise reports the first
    /// violation with its indices.
    pub fn validate(&self) -> Result<()> {
        let (ns, na, ny) = (self.n_states, self.n_actions, self.n_observations);
        if ns == 0 || na == 0 || ny == 0 {
            return Err(Error::InvalidModel(
                "states, actions and observations must be positive".into(),
            ));
        }
        check_len("transition", na, self.transition.len())?;
        for (a, rows) in self.transition.iter().enumerate() {
            check_len(&format!("transition[{a}]"), ns, rows.len())?;
            for (s, row) in rows.iter().enumerate() {
                check_len(&format!("transition[{a}][{s}]"), ns, row.len())?;
                check_row(row, &format!("transition[{a}][{s}]"))?;
            }
        }
        check_len("observation", na, self.observation.len())?;
        for (a, rows) in self.observation.iter().enumerate() {
            check_len(&format!("observation[{a}]"), ns, rows.len())?;
            for (s, row) in rows.iter().enumerate() {
                check_len(&format!("observation[{a}][{s}]"), ny, row.len())?;
                check_row(row, &format!("observation[{a}][{s}]"))?;
            }
        }
        check_len("reward", ns, self.reward.len())?;
        for (s, row) in self.reward.iter().enumerate() {
            check_len(&format!("reward[{s}]"), na, row.len())?;
            if let Some(a) = row.iter().position(|r| !r.is_finite()) {
                return Err(Error::InvalidModel(format!("reward[{s}][{a}] is not finite")));
            }
        }
        check_len("initial_belief", ns, self.initial_belief.len())?;
        check_row(&self.initial_belief, "initial_belief")?;
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::InvalidModel(format!(
                "discount {} outside (0, 1]",
                self.discount
            )));
        }
        if let Some(labels) = &self.labels {
            for (field, names, n) in [
                ("labels.states", &labels.states, ns),
                ("labels.actions", &labels.actions, na),
                ("labels.observations", &labels.observations, ny),
            ] {
                if !names.is_empty() {
                    check_len(field, n, names.len())?;
                }
            }
        }
        Ok(())
    }

    /// Reward column `r(·, a)`.
    pub fn reward_column(&self, a: usize) -> Vec<f64> {
        self.reward.iter().map(|row| row[a]).collect()
    }

    pub fn r_min(&self) -> f64 {
        self.reward.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn r_max(&self) -> f64 {
        self.reward.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `‖r‖_∞`.
    pub fn r_inf_norm(&self) -> f64 {
        self.reward.iter().flatten().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// `Span(r) = r_max − r_min`.
    pub fn r_span(&self) -> f64 {
        self.r_max() - self.r_min()
    }

    /// True when the observation reveals the new state exactly (`y = s'`).
    pub fn is_fully_observed(&self) -> bool {
        self.n_observations == self.n_states
            && self.observation.iter().all(|rows| {
                rows.iter().enumerate().all(|(s, row)| {
                    row.iter()
                        .enumerate()
                        .all(|(y, &p)| if y == s { p == 1.0 } else { p == 0.0 })
                })
            })
    }

    /// Fully observed model (`y = s'`) built from MDP tables.
    pub fn fully_observed(
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
        initial_belief: ProbVector,
        discount: f64,
    ) -> Result<Self> {
        let n_states = reward.len();
        let n_actions = transition.len();
        let identity: Vec<Vec<f64>> = (0..n_states)
            .map(|s| {
                let mut row = vec![0.0; n_states];
                row[s] = 1.0;
                row
            })
            .collect();
        let m = PomdpModel {
            n_states,
            n_actions,
            n_observations: n_states,
            transition,
            observation: vec![identity; n_actions],
            reward,
            initial_belief,
            discount,
            labels: None,
        };
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;

    fn two_state() -> PomdpModel {
        PomdpModel {
            n_states: 2,
            n_actions: 1,
            n_observations: 2,
            transition: vec![vec![vec![0.9, 0.1], vec![0.2, 0.8]]],
            observation: vec![vec![vec![0.7, 0.3], vec![0.4, 0.6]]],
            reward: vec![vec![1.0], vec![-1.0]],
            initial_belief: ProbVector::uniform(2),
            discount: 0.9,
            labels: None,
        }
    }

    #[test]
    fn tiger_validates() {
        envs::tiger().model.validate().unwrap();
    }

    #[test]
    fn non_stochastic_row_rejected() {
        let mut m = two_state();
        m.transition[0][1] = vec![0.2, 0.7];
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("row not stochastic"), "{err}");
        assert!(err.contains("transition[0][1]"), "{err}");
    }

    #[test]
    fn negative_entry_rejected() {
        let mut m = two_state();
        m.observation[0][0] = vec![1.1, -0.1];
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("negative"), "{err}");
    }

    #[test]
    fn prob_vector_clamps_float_noise() {
        let p = ProbVector::new(vec![1.0 + 5e-13, -5e-13]).unwrap();
        assert_eq!(p[1], 0.0);
        assert!(ProbVector::new(vec![1.1, -0.1]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn history_display() {
        let h = History::new().extended(0, 1).extended(2, 0);
        assert_eq!(h.to_string(), "a0y1.a2y0");
        assert_eq!(History::new().to_string(), "-");
        assert_eq!(h.stage(), 3);
    }

    #[test]
    fn reward_summaries() {
        let m = two_state();
        assert_eq!(m.r_min(), -1.0);
        assert_eq!(m.r_max(), 1.0);
        assert_eq!(m.r_span(), 2.0);
        assert_eq!(m.r_inf_norm(), 1.0);
    }
}
