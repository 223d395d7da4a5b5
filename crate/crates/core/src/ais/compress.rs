use super::lattice::lattice_key;
use super::obs::{compose_maps, compress_observations};
use super::{AisGenerator, Compression, SparseDist};
use crate::error::{Error, Result};
use crate::model::{belief_of, History, PomdpModel, Step};
use std::collections::HashMap;

/// Evaluates `σ̂_t(h)` for a generator against a model.
pub struct Compressor<'a> {
    gen: &'a AisGenerator,
    inner: &'a Compression,
    obs_map: Option<Vec<usize>>,
    /// Model seen by the inner compression (observation-compressed when `obs_map` is set).
    model: PomdpModel,
    lattice_index: Vec<HashMap<Vec<u32>, usize>>,
    table: Vec<HashMap<History, SparseDist>>,
}

impl<'a> Compressor<'a> {
    pub fn new(model: &PomdpModel, gen: &'a AisGenerator) -> Result<Self> {
        let mut inner = &gen.compression;
        let mut obs_map: Option<Vec<usize>> = None;
        while let Compression::ObservationCompressed { map, inner: next } = inner {
            obs_map = Some(match obs_map {
                None => map.clone(),
                Some(m) => compose_maps(&m, map)?,
            });
            inner = next;
        }
        let model = match &obs_map {
            Some(m) => compress_observations(model, m)?,
            None => model.clone(),
        };
        let mut lattice_index = Vec::new();
        let mut table = Vec::new();
        match inner {
            Compression::Belief { lattice } => {
                for (i, st) in gen.stages.iter().enumerate() {
                    let pts = st.points.as_ref().ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "belief compression needs point coordinates at stage {}",
                            i + 1
                        ))
                    })?;
                    lattice_index.push(
                        pts.iter()
                            .enumerate()
                            .map(|(z, p)| (lattice_key(p, *lattice), z))
                            .collect(),
                    );
                }
            }
            Compression::Table { stages } => {
                for rows in stages {
                    table.push(rows.iter().cloned().collect());
                }
            }
            _ => {}
        }
        Ok(Compressor { gen, inner, obs_map, model, lattice_index, table })
    }

    fn mapped(&self, h: &History) -> History {
        match &self.obs_map {
            None => h.clone(),
            Some(m) => History {
                steps: h
                    .steps
                    .iter()
                    .map(|s| Step { action: s.action, observation: m[s.observation] })
                    .collect(),
            },
        }
    }

    /// `σ̂_t(h)` as a distribution over `Ẑ_t` with `t = |h| + 1`.
    pub fn compress(&self, h: &History) -> Result<SparseDist> {
        self.compress_with_belief(h, None)
    }

    /// Like [`Compressor::compress`]; `belief` may carry `b(h)` under the original
    /// model to skip refiltering.
    pub fn compress_with_belief(&self, h: &History, belief: Option<&[f64]>) -> Result<SparseDist> {
        let t = h.stage();
        let si = self.gen.stage_index(t)?;
        match self.inner {
            Compression::Belief { lattice } => {
                let key = match (belief, &self.obs_map) {
                    (Some(b), None) => lattice_key(b, *lattice),
                    _ => lattice_key(&belief_of(&self.model, &self.mapped(h))?, *lattice),
                };
                let z = self.lattice_index[si].get(&key).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "history {h} quantizes to a lattice point outside stage {t}"
                    ))
                })?;
                Ok(vec![(z, 1.0)])
            }
            Compression::Recursive { initial } => {
                let h = self.mapped(h);
                let mut z = *initial;
                for (i, s) in h.steps.iter().enumerate() {
                    let st = self.gen.stage(i + 1)?;
                    let upd = st.update_map.as_ref().ok_or_else(|| {
                        Error::InvalidArgument("recursive compression needs an update map".into())
                    })?;
                    z = upd[z][s.action][s.observation].ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "history {h} leaves the support of the observation predictor"
                        ))
                    })?;
                }
                Ok(vec![(z, 1.0)])
            }
            Compression::LastObservation { initial, map } => match h.steps.last() {
                None => Ok(initial.clone()),
                Some(s) => {
                    let y = self.obs_map.as_ref().map(|m| m[s.observation]).unwrap_or(s.observation);
                    Ok(vec![(map[y], 1.0)])
                }
            },
            Compression::Table { .. } => {
                let h = self.mapped(h);
                self.table
                    .get(si)
                    .and_then(|m| m.get(&h))
                    .cloned()
                    .ok_or_else(|| Error::InvalidArgument(format!("no table entry for history {h}")))
            }
            Compression::Automaton { initial, transition } => {
                let h = self.mapped(h);
                let mut dist = initial.clone();
                for s in &h.steps {
                    let mut next = vec![0.0; dist.len()];
                    for (z, &w) in dist.iter().enumerate() {
                        if w > 0.0 {
                            for (z2, &p) in transition[z][s.action][s.observation].iter().enumerate() {
                                next[z2] += w * p;
                            }
                        }
                    }
                    dist = next;
                }
                Ok(dist.into_iter().enumerate().filter(|e| e.1 > 0.0).collect())
            }
            Compression::ObservationCompressed { .. } => unreachable!("flattened in new"),
        }
    }

    /// Deterministic compressions only: the single point `σ̂_t(h)`.
    pub fn compress_point(&self, h: &History) -> Result<usize> {
        let d = self.compress(h)?;
        match d.as_slice() {
            [(z, p)] if (*p - 1.0).abs() < 1e-12 => Ok(*z),
            _ => Err(Error::Unsupported(format!(
                "compression of {h} is stochastic; a point was requested"
            ))),
        }
    }
}
