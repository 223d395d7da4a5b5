//! Random model generator used by tests, sweeps and benchmarks.

use super::{PomdpModel, ProbVector};
use rand::Rng;

/// Random stochastic row; roughly a quarter of the entries are zeroed so that
/// reachability pruning is exercised.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let mut row: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < 0.25 { 0.0 } else { rng.gen::<f64>() })
            .collect();
        let sum: f64 = row.iter().sum();
        if sum > 1e-3 {
            row.iter_mut().for_each(|p| *p /= sum);
            return row;
        }
    }
}

/// Random POMDP with rewards uniform in `[-1, 1]`.
pub fn random_pomdp<R: Rng + ?Sized>(
    rng: &mut R,
    n_states: usize,
    n_actions: usize,
    n_observations: usize,
    discount: f64,
) -> PomdpModel {
    let transition = (0..n_actions)
        .map(|_| (0..n_states).map(|_| random_distribution(rng, n_states)).collect())
        .collect();
    let observation = (0..n_actions)
        .map(|_| {
            (0..n_states)
                .map(|_| random_distribution(rng, n_observations))
                .collect()
        })
        .collect();
    let reward = (0..n_states)
        .map(|_| (0..n_actions).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    PomdpModel {
        n_states,
        n_actions,
        n_observations,
        transition,
        observation,
        reward,
        initial_belief: ProbVector::from_raw(random_distribution(rng, n_states)),
        discount,
        labels: None,
    }
}

/// Random fully observed MDP.
pub fn random_mdp<R: Rng + ?Sized>(
    rng: &mut R,
    n_states: usize,
    n_actions: usize,
    discount: f64,
) -> PomdpModel {
    let transition = (0..n_actions)
        .map(|_| (0..n_states).map(|_| random_distribution(rng, n_states)).collect())
        .collect();
    let reward = (0..n_states)
        .map(|_| (0..n_actions).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let init = ProbVector::from_raw(random_distribution(rng, n_states));
    PomdpModel::fully_observed(transition, reward, init, discount)
        .expect("random MDP tables are stochastic")
}
