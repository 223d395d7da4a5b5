//! Where models and AIS generators come from.

use crate::{read_file, usage, CliResult, Failure};
use ais_core::ais::{build_belief_quant_ais, build_exact_belief_ais, AisGenerator, Horizon};
use ais_core::envs::{self, EnvSpec};
use ais_core::model::parse_model_str;
use ais_core::PomdpModel;
use clap::Args;
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Builtin environment: tiger, voicemail, cheese-maze, bandit
    #[arg(long, conflicts_with = "model")]
    pub env: Option<String>,
    /// Model file (JSON or legacy .pomdp)
    #[arg(long)]
    pub model: Option<PathBuf>,
}

pub fn builtin(name: &str) -> CliResult<EnvSpec> {
    envs::by_name(name).ok_or_else(|| {
        Failure::Usage(format!("unknown environment '{name}'; allowed: {}", envs::NAMES.join(", ")))
    })
}

impl ModelArgs {
    pub fn load_optional(&self) -> CliResult<Option<PomdpModel>> {
        match (&self.env, &self.model) {
            (Some(name), _) => Ok(Some(builtin(name)?.model)),
            (None, Some(path)) => Ok(Some(parse_model_str(&read_file(path)?)?)),
            (None, None) => Ok(None),
        }
    }

    pub fn load(&self) -> CliResult<PomdpModel> {
        match self.load_optional()? {
            Some(m) => Ok(m),
            None => usage("give --env or --model"),
        }
    }
}

#[derive(Args, Debug)]
pub struct AisArgs {
    /// AIS construction: exact, belief-quant:n=N
    #[arg(long, conflicts_with = "generator")]
    pub ais: Option<String>,
    /// AIS generator JSON file
    #[arg(long)]
    pub generator: Option<PathBuf>,
}

/// `exact` or `belief-quant:n=N` (also `belief-quant:N`).
fn build(model: &PomdpModel, spec: &str, horizon: Horizon) -> CliResult<AisGenerator> {
    if spec == "exact" {
        return Ok(build_exact_belief_ais(model, horizon)?);
    }
    if let Some(rest) = spec.strip_prefix("belief-quant:") {
        let n: usize = rest
            .trim_start_matches("n=")
            .parse()
            .map_err(|_| Failure::Usage(format!("bad lattice resolution in '{spec}'")))?;
        return Ok(build_belief_quant_ais(model, horizon, n)?);
    }
    usage(format!("unknown AIS '{spec}'; allowed: exact, belief-quant:n=N"))
}

impl AisArgs {
    /// The generator for a finite `horizon`, or a stationary one for `None`.
    pub fn generator(&self, model: &PomdpModel, horizon: Option<usize>) -> CliResult<Option<AisGenerator>> {
        if self.ais.is_none() && self.generator.is_none() {
            return Ok(None);
        }
        self.generator_for(Some(model), horizon).map(Some)
    }

    pub fn generator_for(&self, model: Option<&PomdpModel>, horizon: Option<usize>) -> CliResult<AisGenerator> {
        let kind = match horizon {
            Some(t) => Horizon::Finite(t),
            None => Horizon::Stationary,
        };
        let gen = match (&self.ais, &self.generator, model) {
            (Some(spec), _, Some(m)) => build(m, spec, kind)?,
            (Some(_), _, None) => return usage("--ais needs --env or --model"),
            (None, Some(path), _) => AisGenerator::from_json(&read_file(path)?)?,
            (None, None, _) => return usage("give --ais or --generator"),
        };
        match (gen.horizon, kind) {
            (Horizon::Stationary, Horizon::Stationary) => {}
            (Horizon::Finite(g), Horizon::Finite(t)) if g >= t => {}
            (g, _) => return usage(format!("generator horizon {g:?} does not fit the request {kind:?}")),
        }
        if let Some(m) = model {
            if gen.n_actions != m.n_actions {
                return usage("generator and model disagree on the action count");
            }
        }
        Ok(gen)
    }
}
