//! Approximate information state (AIS) generators and their `(ε, δ)` certificates.
//!
//! A generator carries, per stage `t`, a finite AIS space `Ẑ_t`, a history
//! compression `σ̂_t`, an approximate kernel `P̂_t(ẑ'|ẑ,a)` into `Ẑ_{t+1}` and an
//! approximate reward `r̂_t(ẑ,a)`. Stationary generators hold a single stage whose
//! kernel maps the space to itself.

mod belief;
mod compress;
mod kernel;
mod lattice;
mod mdp;
mod measure;
mod obs;
mod verify;

pub use belief::{build_belief_quant_ais, build_exact_belief_ais, STATIONARY_POINT_CAP};
pub use compress::Compressor;
pub use kernel::compose_kernel_from_obs_predictor;
pub use lattice::{lattice_key, lattice_quantize, max_l1_error};
pub use mdp::{
    build_aggregated_mdp, certify_action_quantizer, mdp_generator, Aggregated, certify_latent_space, AggregationSpec,
    LatentCertificate, LatentSpec,
};
pub use measure::measure_ais;
pub use obs::compress_observations;
pub use verify::{verify_information_state, InfoStateReport};

use crate::error::{Error, Result};
use crate::metrics::{EmbeddedPoints, FunctionClass, FunctionClassSpec, MetricSpace};
use crate::model::{History, SUM_TOL};
use serde::{Deserialize, Serialize};

/// Sparse distribution: `(index, probability)` pairs.
pub type SparseDist = Vec<(usize, f64)>;

/// Adds `w · q` into `acc`, merging equal indices.
pub(crate) fn add_scaled(acc: &mut SparseDist, q: &[(usize, f64)], w: f64) {
    for &(i, p) in q {
        match acc.iter_mut().find(|(j, _)| *j == i) {
            Some(e) => e.1 += w * p,
            None => acc.push((i, w * p)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Finite(usize),
    Stationary,
}

/// One stage `Ẑ_t` with its tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AisStage {
    pub n_points: usize,
    /// Coordinates of each point when the space is a set of (quantized) beliefs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddedPoints>,
    /// `P̂_t(·|ẑ,a)` as `kernel[ẑ][a]`; empty rows at the last finite stage.
    pub kernel: Vec<Vec<SparseDist>>,
    /// `r̂_t(ẑ,a)` as `reward[ẑ][a]`.
    pub reward: Vec<Vec<f64>>,
    /// `update[ẑ][a][y]`; `None` where the observation predictor puts no mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub update_map: Option<Vec<Vec<Vec<Option<usize>>>>>,
    /// `ν̂^y(y|ẑ,a)` as `obs_predictor[ẑ][a][y]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs_predictor: Option<Vec<Vec<Vec<f64>>>>,
}

/// How histories are mapped to AIS points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compression {
    /// `Q_n(b(h))`, looked up among the stage's lattice points.
    Belief { lattice: usize },
    /// Fold the stage update maps from an initial point.
    Recursive { initial: usize },
    /// `map[y_{t-1}]` for `t ≥ 2` and a fixed distribution at `t = 1`.
    LastObservation { initial: SparseDist, map: Vec<usize> },
    /// Explicit (possibly stochastic) table per stage.
    Table { stages: Vec<Vec<(History, SparseDist)>> },
    /// Stochastic automaton: `transition[ẑ][a][y]` is a distribution over the next point.
    Automaton {
        initial: Vec<f64>,
        transition: Vec<Vec<Vec<Vec<f64>>>>,
    },
    /// Observations pass through `map` before `inner` sees the history.
    ObservationCompressed {
        map: Vec<usize>,
        inner: Box<Compression>,
    },
}

/// Restriction of decisions to a subset `Â` via `q_a : A → Â`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionQuantizer {
    pub map: Vec<usize>,
}

impl ActionQuantizer {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        for (a, &qa) in map.iter().enumerate() {
            if qa >= map.len() {
                return Err(Error::InvalidArgument(format!("q_a({a}) = {qa} out of range")));
            }
            if map[qa] != qa {
                return Err(Error::InvalidArgument(format!(
                    "action quantizer is not idempotent: q_a({qa}) = {} ≠ {qa}",
                    map[qa]
                )));
            }
        }
        Ok(ActionQuantizer { map })
    }

    /// The subset `Â` in increasing order.
    pub fn subset(&self) -> Vec<usize> {
        (0..self.map.len()).filter(|&a| self.map[a] == a).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Recomputed exactly by enumeration.
    Measured,
    /// Closed-form bound claimed by a constructor.
    Declared,
}

/// Per-stage `(ε_t, δ_t)` together with the IPM under which `δ` holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AisCertificate {
    pub fclass: FunctionClass,
    /// Description of the ground metric on the AIS spaces.
    pub ground_metric: String,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    pub kind: CertificateKind,
    pub stationary: bool,
}

impl AisCertificate {
    pub fn eps_max(&self) -> f64 {
        self.eps.iter().fold(0.0, |m, &e| m.max(e))
    }

    pub fn delta_max(&self) -> f64 {
        self.delta.iter().fold(0.0, |m, &d| m.max(d))
    }

    pub fn stages(&self) -> usize {
        self.eps.len()
    }
}

/// A full AIS generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AisGenerator {
    pub horizon: Horizon,
    pub discount: f64,
    pub n_actions: usize,
    pub n_observations: usize,
    pub stages: Vec<AisStage>,
    pub compression: Compression,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_quantizer: Option<ActionQuantizer>,
    /// Name of the ground metric carried by the stages, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_metric: Option<String>,
    /// Bounds claimed by the constructor, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared: Option<AisCertificate>,
}

impl AisGenerator {
    pub fn is_stationary(&self) -> bool {
        self.horizon == Horizon::Stationary
    }

    /// Index into `stages` for stage `t` (1-based).
    pub fn stage_index(&self, t: usize) -> Result<usize> {
        match self.horizon {
            Horizon::Stationary => Ok(0),
            Horizon::Finite(h) if t >= 1 && t <= h => Ok(t - 1),
            Horizon::Finite(h) => Err(Error::InvalidArgument(format!(
                "stage {t} outside the generator horizon {h}"
            ))),
        }
    }

    pub fn stage(&self, t: usize) -> Result<&AisStage> {
        Ok(&self.stages[self.stage_index(t)?])
    }

    /// Stage holding the kernel targets of stage `t`.
    pub fn next_stage(&self, t: usize) -> Result<&AisStage> {
        self.stage(if self.is_stationary() { t } else { t + 1 })
    }

    /// Actions the AIS policy may choose from.
    pub fn actions(&self) -> Vec<usize> {
        match &self.action_quantizer {
            Some(q) => q.subset(),
            None => (0..self.n_actions).collect(),
        }
    }

    /// `q_a(a)`, the identity without a quantizer.
    pub fn quantize_action(&self, a: usize) -> usize {
        self.action_quantizer.as_ref().map(|q| q.map[a]).unwrap_or(a)
    }

    /// Ground space of stage `t` bound to `class`.
    pub fn function_class(&self, class: FunctionClass, t: usize) -> Result<FunctionClassSpec> {
        let st = self.stage(t)?;
        FunctionClassSpec::bind(class, st.metric.as_ref(), st.embedding.as_ref())
    }

    /// Attaches the discrete metric to every stage that has none.
    pub fn with_discrete_metric(mut self) -> Self {
        for st in &mut self.stages {
            if st.metric.is_none() {
                st.metric = Some(MetricSpace::discrete(st.n_points));
            }
        }
        if self.ground_metric.is_none() {
            self.ground_metric = Some("discrete".into());
        }
        self
    }

    /// Restricts decisions to the image of `q`.
    pub fn with_action_quantizer(mut self, q: ActionQuantizer) -> Self {
        self.action_quantizer = Some(q);
        self
    }

    /// Observations are mapped through `map` before the compression sees them.
    pub fn with_observation_compression(mut self, map: Vec<usize>, n_observations: usize) -> Self {
        self.compression = Compression::ObservationCompressed {
            map,
            inner: Box::new(self.compression),
        };
        self.n_observations = n_observations;
        self
    }

    /// Checks table shapes, kernel stochasticity and, where both maps are
    /// present, that the kernel is their composition.
    pub fn validate(&self) -> Result<()> {
        let n_stages = match self.horizon {
            Horizon::Stationary => 1,
            Horizon::Finite(h) => h,
        };
        if self.stages.len() != n_stages {
            return Err(Error::InvalidArgument(format!(
                "generator has {} stages, horizon needs {n_stages}",
                self.stages.len()
            )));
        }
        if let Some(q) = &self.action_quantizer {
            ActionQuantizer::new(q.map.clone())?;
        }
        for (i, st) in self.stages.iter().enumerate() {
            let last = !self.is_stationary() && i + 1 == n_stages;
            let target = if self.is_stationary() {
                st.n_points
            } else if last {
                0
            } else {
                self.stages[i + 1].n_points
            };
            if st.kernel.len() != st.n_points || st.reward.len() != st.n_points {
                return Err(Error::InvalidArgument(format!(
                    "stage {}: table sizes do not match {} points",
                    i + 1,
                    st.n_points
                )));
            }
            for z in 0..st.n_points {
                if st.kernel[z].len() != self.n_actions || st.reward[z].len() != self.n_actions {
                    return Err(Error::InvalidArgument(format!(
                        "stage {}: point {z} tables are not indexed by {} actions",
                        i + 1,
                        self.n_actions
                    )));
                }
                if last {
                    continue;
                }
                for a in self.actions() {
                    let row = &st.kernel[z][a];
                    let sum: f64 = row.iter().map(|e| e.1).sum();
                    if (sum - 1.0).abs() > SUM_TOL
                        || row.iter().any(|&(j, p)| j >= target || p < 0.0)
                    {
                        return Err(Error::InvalidArgument(format!(
                            "stage {}: kernel row ({z},{a}) is not a distribution over {target} points",
                            i + 1
                        )));
                    }
                }
            }
            if let (Some(upd), Some(obs)) = (&st.update_map, &st.obs_predictor) {
                if last {
                    continue;
                }
                let composed = compose_kernel_from_obs_predictor(upd, obs)?;
                for z in 0..st.n_points {
                    for a in self.actions() {
                        let mut diff = composed[z][a].clone();
                        add_scaled(&mut diff, &st.kernel[z][a], -1.0);
                        if diff.iter().any(|e| e.1.abs() > SUM_TOL) {
                            return Err(Error::InvalidArgument(format!(
                                "stage {}: kernel row ({z},{a}) differs from update∘predictor",
                                i + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("generator serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let gen: AisGenerator = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        gen.validate()?;
        Ok(gen)
    }
}
