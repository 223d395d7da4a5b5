//! End-to-end runs through several modules.

use ais_core::ais::{build_belief_quant_ais, measure_ais, Compressor, Horizon};
use ais_core::envs;
use ais_core::metrics::FunctionClass;
use ais_core::planning::{
    ais_dp, ais_value_iteration, alpha_bounds, history_dp, stationary_bound_report, BoundVariant,
};
use ais_core::porl::{evaluate_policy, train, TrainConfig};
use ais_core::History;

#[test]
fn finite_pipeline_on_voicemail() {
    let m = envs::voicemail().model;
    let gen = build_belief_quant_ais(&m, Horizon::Finite(3), 6).unwrap();
    let cert = measure_ais(&m, &gen, 3, FunctionClass::Kantorovich).unwrap();
    let vhat = ais_dp(&gen, 3).unwrap();
    let rep = alpha_bounds(&gen, &cert, &vhat, BoundVariant::Primary, None).unwrap();
    let v = history_dp(&m, 3).unwrap();
    let comp = Compressor::new(&m, &gen).unwrap();
    let sigma = comp.compress(&History::new()).unwrap();
    let est: f64 = sigma.iter().map(|&(z, p)| p * vhat.stages[0].value[z]).sum();
    assert!((v.stages[0].value[0] - est).abs() <= rep.alpha[0] + 1e-9);
    // α is non-increasing towards the last stage, where it is ε_T
    assert!(rep.alpha.windows(2).all(|w| w[0] >= w[1] - 1e-12));
    assert!((rep.alpha[2] - rep.eps[2]).abs() < 1e-12);
}

#[test]
fn stationary_pipeline_on_tiger() {
    let m = envs::tiger().model;
    let gen = build_belief_quant_ais(&m, Horizon::Stationary, 10).unwrap();
    let vi = ais_value_iteration(&gen, 1e-8).unwrap();
    let cert = measure_ais(&m, &gen, 30, FunctionClass::TotalVariation).unwrap();
    let rep = stationary_bound_report(&gen, &cert, vi.values()).unwrap();
    let a = rep.stationary_alpha.unwrap();
    let want = (rep.eps[0] + m.discount * rep.rho[0] * rep.delta[0]) / (1.0 - m.discount);
    assert!((a - want).abs() < 1e-9 * want);
    assert!((rep.policy_bound[0] - 2.0 * a).abs() < 1e-9 * a);
}

#[test]
fn learned_automaton_is_a_valid_generator() {
    let m = envs::tiger().model;
    let cfg = TrainConfig { iterations: 300, eval_interval: 300, eval_episodes: 20, eval_horizon: 20, k: 4, ..Default::default() };
    let r = train(&m, &cfg).unwrap();
    let gen = r.ais.to_generator(m.discount);
    gen.validate().unwrap();
    let vi = ais_value_iteration(&gen, 1e-6).unwrap();
    assert_eq!(vi.values().len(), 4);
    let e1 = evaluate_policy(&m, &r.ais, &r.policy, 50, 30, 9).unwrap();
    let e2 = evaluate_policy(&m, &r.ais, &r.policy, 50, 30, 9).unwrap();
    assert_eq!(e1.mean, e2.mean);
    assert_eq!(r.curve.last().unwrap().iteration, 300);
}
