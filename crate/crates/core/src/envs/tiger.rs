//! Tiger: two doors, a tiger behind one and treasure behind the other.

use super::{note, EnvSpec, Provenance};
use crate::model::{Labels, PomdpModel, ProbVector};

pub const TIGER_LEFT: usize = 0;
pub const TIGER_RIGHT: usize = 1;

pub const LISTEN: usize = 0;
pub const OPEN_LEFT: usize = 1;
pub const OPEN_RIGHT: usize = 2;

pub const HEAR_LEFT: usize = 0;
pub const HEAR_RIGHT: usize = 1;

/// Probability that listening reports the tiger's true side. Not given by the
/// published description; 0.85 is the customary value.
pub const LISTEN_ACCURACY: f64 = 0.85;

pub const LISTEN_REWARD: f64 = -1.0;
pub const TREASURE_REWARD: f64 = 10.0;
pub const TIGER_REWARD: f64 = -100.0;
pub const DISCOUNT: f64 = 0.95;

pub fn tiger() -> EnvSpec {
    let acc = LISTEN_ACCURACY;
    let reset = vec![vec![0.5, 0.5]; 2];
    let uninformative = vec![vec![0.5, 0.5]; 2];
    let model = PomdpModel {
        n_states: 2,
        n_actions: 3,
        n_observations: 2,
        transition: vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            reset.clone(),
            reset,
        ],
        observation: vec![
            vec![vec![acc, 1.0 - acc], vec![1.0 - acc, acc]],
            uninformative.clone(),
            uninformative,
        ],
        reward: vec![
            vec![LISTEN_REWARD, TIGER_REWARD, TREASURE_REWARD],
            vec![LISTEN_REWARD, TREASURE_REWARD, TIGER_REWARD],
        ],
        initial_belief: ProbVector::uniform(2),
        discount: DISCOUNT,
        labels: Some(Labels {
            states: vec!["tiger-left".into(), "tiger-right".into()],
            actions: vec!["listen".into(), "open-left".into(), "open-right".into()],
            observations: vec!["hear-left".into(), "hear-right".into()],
        }),
    };
    EnvSpec {
        name: "tiger".into(),
        model,
        notes: vec![
            note("listen reward", LISTEN_REWARD, Provenance::Published),
            note("treasure reward", TREASURE_REWARD, Provenance::Published),
            note("tiger reward", TIGER_REWARD, Provenance::Published),
            note("reset after opening", "uniform", Provenance::Published),
            note("discount", DISCOUNT, Provenance::Published),
            note("listen accuracy", LISTEN_ACCURACY, Provenance::DesignChoice),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::belief_update;

    #[test]
    fn rewards_and_discount() {
        let m = tiger().model;
        assert_eq!(m.reward[TIGER_LEFT][LISTEN], -1.0);
        assert_eq!(m.reward[TIGER_RIGHT][OPEN_LEFT], 10.0);
        assert_eq!(m.reward[TIGER_LEFT][OPEN_LEFT], -100.0);
        assert_eq!(m.discount, 0.95);
    }

    #[test]
    fn opening_resets_belief() {
        let m = tiger().model;
        for a in [OPEN_LEFT, OPEN_RIGHT] {
            for y in [HEAR_LEFT, HEAR_RIGHT] {
                let b = belief_update(&m, &[0.97, 0.03], a, y).unwrap();
                assert_eq!(b.as_slice(), m.initial_belief.as_slice());
            }
        }
    }

    #[test]
    fn side_swap_is_an_automorphism() {
        let m = tiger().model;
        let s = |x: usize| 1 - x;
        let y = |x: usize| 1 - x;
        let a = |x: usize| [LISTEN, OPEN_RIGHT, OPEN_LEFT][x];
        for act in 0..3 {
            for s1 in 0..2 {
                assert_eq!(m.reward[s1][act], m.reward[s(s1)][a(act)]);
                for s2 in 0..2 {
                    assert_eq!(m.transition[act][s1][s2], m.transition[a(act)][s(s1)][s(s2)]);
                }
                for obs in 0..2 {
                    assert_eq!(m.observation[act][s1][obs], m.observation[a(act)][s(s1)][y(obs)]);
                }
            }
        }
    }
}
