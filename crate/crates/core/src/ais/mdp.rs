//! Generators for fully observed models: state aggregation, latent embeddings
//! and action quantization.

use super::{ActionQuantizer, AisCertificate, AisGenerator, AisStage, CertificateKind, Compression, Horizon, SparseDist};
use crate::error::{Error, Result};
use crate::metrics::{kantorovich_distance, FunctionClassSpec, MetricSpace};
use crate::model::{PomdpModel, ProbVector, SUM_TOL};
use serde::{Deserialize, Serialize};

fn require_fully_observed(mdp: &PomdpModel) -> Result<()> {
    if !mdp.is_fully_observed() {
        return Err(Error::InvalidArgument(
            "model is not fully observed (observation kernel must be the identity on states)".into(),
        ));
    }
    Ok(())
}

/// Compression `q : S → Ŝ` with per-state weights summing to 1 on each cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregationSpec {
    pub q: Vec<usize>,
    pub w: Vec<f64>,
}

impl AggregationSpec {
    pub fn new(q: Vec<usize>, w: Vec<f64>) -> Result<Self> {
        let spec = AggregationSpec { q, w };
        spec.validate()?;
        Ok(spec)
    }

    /// Uniform weights within each cell.
    pub fn uniform(q: Vec<usize>) -> Result<Self> {
        let n = q.iter().max().map(|m| m + 1).unwrap_or(0);
        let mut size = vec![0usize; n];
        q.iter().for_each(|&c| size[c] += 1);
        let w = q.iter().map(|&c| 1.0 / size[c] as f64).collect();
        Self::new(q, w)
    }

    pub fn n_cells(&self) -> usize {
        self.q.iter().max().map(|m| m + 1).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.len() != self.w.len() {
            return Err(Error::DimensionMismatch {
                field: "w".into(),
                expected: self.q.len(),
                got: self.w.len(),
            });
        }
        let mut sums = vec![0.0; self.n_cells()];
        let mut used = vec![false; self.n_cells()];
        for (s, (&c, &w)) in self.q.iter().zip(&self.w).enumerate() {
            if !(w >= 0.0) {
                return Err(Error::InvalidArgument(format!("weight of state {s} is negative")));
            }
            sums[c] += w;
            used[c] = true;
        }
        for (c, (&sum, &u)) in sums.iter().zip(&used).enumerate() {
            if !u {
                return Err(Error::InvalidArgument(format!("aggregate state {c} has no members")));
            }
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "weights of aggregate state {c} sum to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }
}

/// Output of [`build_aggregated_mdp`].
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregated {
    pub model: PomdpModel,
    pub generator: AisGenerator,
    /// `(ε, ε|Ŝ|)` under total variation, with `ε` the model-similarity constant.
    pub certificate: AisCertificate,
    pub similarity: f64,
}

/// Weighted aggregation `P̂(ŝ'|ŝ,a) = Σ_{s∈ŝ} Σ_{s'∈ŝ'} w(s) P(s'|s,a)`,
/// `r̂(ŝ,a) = Σ_{s∈ŝ} w(s) r(s,a)`.
pub fn build_aggregated_mdp(mdp: &PomdpModel, spec: &AggregationSpec) -> Result<Aggregated> {
    require_fully_observed(mdp)?;
    spec.validate()?;
    if spec.q.len() != mdp.n_states {
        return Err(Error::DimensionMismatch {
            field: "q".into(),
            expected: mdp.n_states,
            got: spec.q.len(),
        });
    }
    let (ns, na, nc) = (mdp.n_states, mdp.n_actions, spec.n_cells());
    // cell_prob[a][s][ĉ] = P(q(S') = ĉ | s, a)
    let cell_prob: Vec<Vec<Vec<f64>>> = (0..na)
        .map(|a| {
            (0..ns)
                .map(|s| {
                    let mut row = vec![0.0; nc];
                    for (s2, &p) in mdp.transition[a][s].iter().enumerate() {
                        row[spec.q[s2]] += p;
                    }
                    row
                })
                .collect()
        })
        .collect();
    let mut p_hat = vec![vec![vec![0.0; nc]; nc]; na];
    let mut r_hat = vec![vec![0.0; na]; nc];
    for s in 0..ns {
        let c = spec.q[s];
        for a in 0..na {
            r_hat[c][a] += spec.w[s] * mdp.reward[s][a];
            for c2 in 0..nc {
                p_hat[a][c][c2] += spec.w[s] * cell_prob[a][s][c2];
            }
        }
    }
    let mut eps: f64 = 0.0;
    for s1 in 0..ns {
        for s2 in s1 + 1..ns {
            if spec.q[s1] != spec.q[s2] {
                continue;
            }
            for a in 0..na {
                eps = eps.max((mdp.reward[s1][a] - mdp.reward[s2][a]).abs());
                for c2 in 0..nc {
                    eps = eps.max((cell_prob[a][s1][c2] - cell_prob[a][s2][c2]).abs());
                }
            }
        }
    }
    let mut init = vec![0.0; nc];
    for (s, &p) in mdp.initial_belief.iter().enumerate() {
        init[spec.q[s]] += p;
    }
    let reward: Vec<Vec<f64>> = r_hat.clone();
    let model = PomdpModel::fully_observed(p_hat.clone(), reward, ProbVector::new(init.clone())?, mdp.discount)?;
    let kernel: Vec<Vec<SparseDist>> = (0..nc)
        .map(|c| {
            (0..na)
                .map(|a| (0..nc).filter(|&c2| p_hat[a][c][c2] > 0.0).map(|c2| (c2, p_hat[a][c][c2])).collect())
                .collect()
        })
        .collect();
    let certificate = AisCertificate {
        fclass: crate::metrics::FunctionClass::TotalVariation,
        ground_metric: "none".into(),
        eps: vec![eps],
        delta: vec![eps * nc as f64],
        kind: CertificateKind::Declared,
        stationary: true,
    };
    let generator = AisGenerator {
        horizon: Horizon::Stationary,
        discount: mdp.discount,
        n_actions: na,
        n_observations: mdp.n_observations,
        stages: vec![AisStage {
            n_points: nc,
            points: None,
            metric: Some(MetricSpace::discrete(nc)),
            embedding: None,
            kernel,
            reward: r_hat,
            update_map: None,
            obs_predictor: None,
        }],
        compression: Compression::LastObservation {
            initial: init.iter().enumerate().filter(|e| *e.1 > 0.0).map(|(c, &p)| (c, p)).collect(),
            map: spec.q.clone(),
        },
        action_quantizer: None,
        ground_metric: Some("discrete".into()),
        declared: Some(certificate.clone()),
    };
    generator.validate()?;
    Ok(Aggregated { model, generator, certificate, similarity: eps })
}

/// A fully observed model as its own stationary generator: `Ẑ = S`, the state
/// is read off the last observation, and the tables are copied.
pub fn mdp_generator(mdp: &PomdpModel) -> Result<AisGenerator> {
    require_fully_observed(mdp)?;
    let (ns, na) = (mdp.n_states, mdp.n_actions);
    let kernel = (0..ns)
        .map(|s| {
            (0..na)
                .map(|a| (0..ns).filter(|&j| mdp.transition[a][s][j] > 0.0).map(|j| (j, mdp.transition[a][s][j])).collect())
                .collect()
        })
        .collect();
    let generator = AisGenerator {
        horizon: Horizon::Stationary,
        discount: mdp.discount,
        n_actions: na,
        n_observations: ns,
        stages: vec![AisStage {
            n_points: ns,
            points: None,
            metric: Some(MetricSpace::discrete(ns)),
            embedding: None,
            kernel,
            reward: mdp.reward.clone(),
            update_map: None,
            obs_predictor: None,
        }],
        compression: Compression::LastObservation {
            initial: mdp.initial_belief.iter().enumerate().filter(|e| *e.1 > 0.0).map(|(s, &p)| (s, p)).collect(),
            map: (0..ns).collect(),
        },
        action_quantizer: None,
        ground_metric: Some("discrete".into()),
        declared: None,
    };
    generator.validate()?;
    Ok(generator)
}

/// A latent model: states are embedded at `points[phi[s]]`, with dynamics
/// `kernel[ẑ][a][ẑ']` and rewards `reward[ẑ][a]` on the latent points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentSpec {
    pub points: Vec<Vec<f64>>,
    pub phi: Vec<usize>,
    pub kernel: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentCertificate {
    pub certificate: AisCertificate,
    /// `L_r / (1 − γ L_p)`, absent when `γ L_p ≥ 1`.
    pub value_lipschitz_bound: Option<f64>,
}

/// `ε = max |r(s,a) − r̂(φ(s),a)|`, `δ = max W(φ#P(·|s,a), P̂(·|φ(s),a))` with the
/// Euclidean metric on the latent points.
pub fn certify_latent_space(mdp: &PomdpModel, spec: &LatentSpec, l_r: f64, l_p: f64) -> Result<LatentCertificate> {
    require_fully_observed(mdp)?;
    let nz = spec.points.len();
    if spec.phi.len() != mdp.n_states {
        return Err(Error::DimensionMismatch { field: "phi".into(), expected: mdp.n_states, got: spec.phi.len() });
    }
    if spec.phi.iter().any(|&z| z >= nz) || spec.kernel.len() != nz || spec.reward.len() != nz {
        return Err(Error::InvalidArgument("latent tables do not match the latent points".into()));
    }
    let metric = MetricSpace::euclidean(&spec.points);
    let (mut eps, mut delta) = (0.0f64, 0.0f64);
    for s in 0..mdp.n_states {
        let z = spec.phi[s];
        for a in 0..mdp.n_actions {
            eps = eps.max((mdp.reward[s][a] - spec.reward[z][a]).abs());
            let mut push = vec![0.0; nz];
            for (s2, &p) in mdp.transition[a][s].iter().enumerate() {
                push[spec.phi[s2]] += p;
            }
            delta = delta.max(kantorovich_distance(&metric, &push, &spec.kernel[z][a])?);
        }
    }
    let g = mdp.discount * l_p;
    Ok(LatentCertificate {
        certificate: AisCertificate {
            fclass: crate::metrics::FunctionClass::Kantorovich,
            ground_metric: "euclidean on latent points".into(),
            eps: vec![eps],
            delta: vec![delta],
            kind: CertificateKind::Measured,
            stationary: true,
        },
        value_lipschitz_bound: (g < 1.0).then(|| l_r / (1.0 - g)),
    })
}

/// `ε = max |r(s,a) − r(s,q_a(a))|`, `δ = max d_𝔉(P(·|s,a), P(·|s,q_a(a)))`.
///
/// `fspec` must be bound to the state space.
pub fn certify_action_quantizer(
    mdp: &PomdpModel,
    subset: &[usize],
    q_a: &[usize],
    fspec: &FunctionClassSpec,
) -> Result<AisCertificate> {
    require_fully_observed(mdp)?;
    if q_a.len() != mdp.n_actions {
        return Err(Error::DimensionMismatch { field: "q_a".into(), expected: mdp.n_actions, got: q_a.len() });
    }
    for &a in subset {
        if a >= mdp.n_actions || q_a[a] != a {
            return Err(Error::InvalidArgument(format!("q_a is not idempotent on the subset: q_a({a}) ≠ {a}")));
        }
    }
    if let Some(a) = (0..mdp.n_actions).find(|&a| !subset.contains(&q_a[a])) {
        return Err(Error::InvalidArgument(format!("q_a({a}) = {} lies outside the subset", q_a[a])));
    }
    let q = ActionQuantizer::new(q_a.to_vec())?;
    debug_assert_eq!(q.subset().len(), subset.len());
    let (mut eps, mut delta) = (0.0f64, 0.0f64);
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let b = q_a[a];
            eps = eps.max((mdp.reward[s][a] - mdp.reward[s][b]).abs());
            delta = delta.max(fspec.distance(&mdp.transition[a][s], &mdp.transition[b][s])?);
        }
    }
    Ok(AisCertificate {
        fclass: fspec.class(),
        ground_metric: "state metric".into(),
        eps: vec![eps],
        delta: vec![delta],
        kind: CertificateKind::Measured,
        stationary: true,
    })
}
