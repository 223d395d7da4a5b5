//! Voicemail: a dialog manager deciding whether the user wants a message saved
//! or deleted.

use super::{note, EnvSpec, Provenance};
use crate::model::{expected_reward, Labels, PomdpModel, ProbVector};

pub const SAVE_INTENT: usize = 0;
pub const DELETE_INTENT: usize = 1;

pub const ASK: usize = 0;
pub const SAVE: usize = 1;
pub const DELETE: usize = 2;

pub const HEAR_SAVE: usize = 0;
pub const HEAR_DELETE: usize = 1;

/// Probability that asking reveals the true intent. Not given by the published
/// description.
pub const ASK_ACCURACY: f64 = 0.8;

pub const ASK_REWARD: f64 = -1.0;
pub const CORRECT_REWARD: f64 = 5.0;
pub const WRONG_DELETE_REWARD: f64 = -20.0;
pub const WRONG_SAVE_REWARD: f64 = -10.0;
pub const INITIAL_BELIEF: [f64; 2] = [0.65, 0.35];
pub const DISCOUNT: f64 = 0.95;

pub fn voicemail() -> EnvSpec {
    let acc = ASK_ACCURACY;
    let fresh = vec![INITIAL_BELIEF.to_vec(); 2];
    let uninformative = vec![vec![0.5, 0.5]; 2];
    let model = PomdpModel {
        n_states: 2,
        n_actions: 3,
        n_observations: 2,
        transition: vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            fresh.clone(),
            fresh,
        ],
        observation: vec![
            vec![vec![acc, 1.0 - acc], vec![1.0 - acc, acc]],
            uninformative.clone(),
            uninformative,
        ],
        reward: vec![
            vec![ASK_REWARD, CORRECT_REWARD, WRONG_DELETE_REWARD],
            vec![ASK_REWARD, WRONG_SAVE_REWARD, CORRECT_REWARD],
        ],
        initial_belief: ProbVector::from_raw(INITIAL_BELIEF.to_vec()),
        discount: DISCOUNT,
        labels: Some(Labels {
            states: vec!["save-intent".into(), "delete-intent".into()],
            actions: vec!["ask".into(), "save".into(), "delete".into()],
            observations: vec!["hear-save".into(), "hear-delete".into()],
        }),
    };
    debug_assert!((expected_reward(&model, &INITIAL_BELIEF, SAVE) + 0.25).abs() < 1e-12);
    EnvSpec {
        name: "voicemail".into(),
        model,
        notes: vec![
            note("ask reward", ASK_REWARD, Provenance::Published),
            note("correct save/delete reward", CORRECT_REWARD, Provenance::Published),
            note("wrong delete reward", WRONG_DELETE_REWARD, Provenance::Published),
            note("wrong save reward", WRONG_SAVE_REWARD, Provenance::Published),
            note("initial belief", "[0.65, 0.35]", Provenance::Published),
            note("fresh message after save/delete", "[0.65, 0.35]", Provenance::Published),
            note("discount", DISCOUNT, Provenance::Published),
            note("ask accuracy", ASK_ACCURACY, Provenance::DesignChoice),
        ],
    }
}
