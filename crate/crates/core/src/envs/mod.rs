//! Bundled environments.
//!
//! Parameters the original environment descriptions leave open (listen and ask
//! accuracies, the maze start distribution and goal handling) are collected in
//! the constants of each submodule and marked as design choices in the notes.

pub mod cheese_maze;
pub mod tiger;
pub mod voicemail;

use crate::model::{PomdpModel, ProbVector};
use serde::{Deserialize, Serialize};

pub use cheese_maze::cheese_maze;
pub use tiger::tiger;
pub use voicemail::voicemail;

pub const TIGER_JSON: &str = include_str!("../../data/tiger.json");
pub const VOICEMAIL_JSON: &str = include_str!("../../data/voicemail.json");
pub const CHEESE_MAZE_JSON: &str = include_str!("../../data/cheese_maze.json");

/// Where a parameter value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Stated in the environment's published description.
    Published,
    /// Chosen here because the description leaves it open.
    DesignChoice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamNote {
    pub parameter: String,
    pub value: String,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub model: PomdpModel,
    pub notes: Vec<ParamNote>,
}

pub(crate) fn note(parameter: &str, value: impl ToString, provenance: Provenance) -> ParamNote {
    ParamNote {
        parameter: parameter.to_string(),
        value: value.to_string(),
        provenance,
    }
}

/// Two-armed bandit with one state and a single observation: arm 0 pays 1, arm 1 pays 0.
pub fn bandit() -> EnvSpec {
    let model = PomdpModel {
        n_states: 1,
        n_actions: 2,
        n_observations: 1,
        transition: vec![vec![vec![1.0]]; 2],
        observation: vec![vec![vec![1.0]]; 2],
        reward: vec![vec![1.0, 0.0]],
        initial_belief: ProbVector::point(1, 0),
        discount: 0.9,
        labels: None,
    };
    EnvSpec {
        name: "bandit".into(),
        model,
        notes: vec![note("discount", 0.9, Provenance::DesignChoice)],
    }
}

/// Looks up a builtin environment by name.
pub fn by_name(name: &str) -> Option<EnvSpec> {
    match name {
        "tiger" => Some(tiger()),
        "voicemail" => Some(voicemail()),
        "cheese-maze" | "cheese_maze" | "cheesemaze" => Some(cheese_maze()),
        "bandit" => Some(bandit()),
        _ => None,
    }
}

pub const NAMES: [&str; 4] = ["tiger", "voicemail", "cheese-maze", "bandit"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_model_str, to_json, HistoryTree};

    #[test]
    fn all_builtins_validate_and_reachable_beliefs_are_valid() {
        for name in NAMES {
            let env = by_name(name).unwrap();
            env.model.validate().unwrap();
            let horizon = if name == "tiger" || name == "voicemail" { 6 } else { 5 };
            let tree = HistoryTree::build(&env.model, horizon).unwrap();
            for node in tree.stages.iter().flatten() {
                crate::ProbVector::new(node.belief.to_vec()).unwrap();
            }
        }
    }

    #[test]
    fn bundled_json_is_identical_to_constructors() {
        for (json, env) in [
            (TIGER_JSON, tiger()),
            (VOICEMAIL_JSON, voicemail()),
            (CHEESE_MAZE_JSON, cheese_maze()),
        ] {
            assert_eq!(json.trim_end(), to_json(&env.model), "{}", env.name);
            assert_eq!(parse_model_str(json).unwrap(), env.model);
        }
    }

    /// Rewrites the bundled JSON files from the constructors.
    #[test]
    #[ignore]
    fn regenerate_bundled_json() {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
        for (file, env) in [
            ("tiger.json", tiger()),
            ("voicemail.json", voicemail()),
            ("cheese_maze.json", cheese_maze()),
        ] {
            std::fs::write(format!("{dir}/{file}"), to_json(&env.model) + "\n").unwrap();
        }
    }
}
