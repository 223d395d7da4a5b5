//! CheeseMaze: an 11-cell maze with 7 aliased observation labels.
//!
//! ```text
//!   1 2 3 2 4
//!   5 . 5 . 5
//!   6 . 7 . 6
//! ```
//!
//! Label 7 is the goal. Observation index `k` carries label `k + 1`.

use super::{note, EnvSpec, Provenance};
use crate::model::{Labels, PomdpModel, ProbVector};

pub const NORTH: usize = 0;
pub const EAST: usize = 1;
pub const SOUTH: usize = 2;
pub const WEST: usize = 3;

/// `(row, col, label)` for each state index.
pub const CELLS: [(i32, i32, usize); 11] = [
    (0, 0, 1),
    (0, 1, 2),
    (0, 2, 3),
    (0, 3, 2),
    (0, 4, 4),
    (1, 0, 5),
    (1, 2, 5),
    (1, 4, 5),
    (2, 0, 6),
    (2, 2, 7),
    (2, 4, 6),
];

pub const GOAL: usize = 9;
pub const GOAL_REWARD: f64 = 1.0;
pub const DISCOUNT: f64 = 0.7;

fn cell_at(row: i32, col: i32) -> Option<usize> {
    CELLS.iter().position(|&(r, c, _)| r == row && c == col)
}

/// Deterministic move; bumping into a wall leaves the state unchanged and the
/// goal is absorbing.
pub fn step(state: usize, action: usize) -> usize {
    if state == GOAL {
        return GOAL;
    }
    let (r, c, _) = CELLS[state];
    let (dr, dc) = [(-1, 0), (0, 1), (1, 0), (0, -1)][action];
    cell_at(r + dr, c + dc).unwrap_or(state)
}

pub fn cheese_maze() -> EnvSpec {
    let ns = CELLS.len();
    let ny = 7;
    let transition = (0..4)
        .map(|a| {
            (0..ns)
                .map(|s| {
                    let mut row = vec![0.0; ns];
                    row[step(s, a)] = 1.0;
                    row
                })
                .collect()
        })
        .collect();
    let obs_rows: Vec<Vec<f64>> = CELLS
        .iter()
        .map(|&(_, _, label)| {
            let mut row = vec![0.0; ny];
            row[label - 1] = 1.0;
            row
        })
        .collect();
    let reward = (0..ns)
        .map(|s| {
            (0..4)
                .map(|a| if s != GOAL && step(s, a) == GOAL { GOAL_REWARD } else { 0.0 })
                .collect()
        })
        .collect();
    let mut init = vec![1.0 / (ns - 1) as f64; ns];
    init[GOAL] = 0.0;
    let model = PomdpModel {
        n_states: ns,
        n_actions: 4,
        n_observations: ny,
        transition,
        observation: vec![obs_rows; 4],
        reward,
        initial_belief: ProbVector::from_raw(init),
        discount: DISCOUNT,
        labels: Some(Labels {
            states: CELLS.iter().map(|(r, c, _)| format!("r{r}c{c}")).collect(),
            actions: vec!["north".into(), "east".into(), "south".into(), "west".into()],
            observations: (1..=ny).map(|k| k.to_string()).collect(),
        }),
    };
    EnvSpec {
        name: "cheese-maze".into(),
        model,
        notes: vec![
            note("states", 11, Provenance::Published),
            note("observation labels", "grid figure", Provenance::Published),
            note("goal reward", GOAL_REWARD, Provenance::Published),
            note("discount", DISCOUNT, Provenance::Published),
            note("wall bump", "stay in place", Provenance::DesignChoice),
            note("start", "uniform over non-goal cells", Provenance::DesignChoice),
            note("goal", "absorbing with zero reward", Provenance::DesignChoice),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_counts_follow_the_grid() {
        let count = |label: usize| CELLS.iter().filter(|c| c.2 == label).count();
        assert_eq!(
            (1..=7).map(count).collect::<Vec<_>>(),
            vec![1, 2, 1, 1, 3, 2, 1]
        );
    }

    #[test]
    fn reward_only_when_entering_goal() {
        let m = cheese_maze().model;
        for s in 0..11 {
            for a in 0..4 {
                let expect = if s == 6 && a == SOUTH { 1.0 } else { 0.0 };
                assert_eq!(m.reward[s][a], expect, "state {s} action {a}");
            }
        }
    }

    #[test]
    fn walls_keep_state() {
        assert_eq!(step(0, NORTH), 0);
        assert_eq!(step(0, WEST), 0);
        assert_eq!(step(5, EAST), 5);
        assert_eq!(step(1, SOUTH), 1);
        assert_eq!(step(0, SOUTH), 5);
        assert_eq!(step(GOAL, NORTH), GOAL);
    }
}
