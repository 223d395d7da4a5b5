//! Property checks across modules on random instances.

use ais_core::ais::{build_belief_quant_ais, mdp_generator, measure_ais, AisGenerator, Horizon};
use ais_core::metrics::{
    bounded_lipschitz_distance, kantorovich_distance, mmd_distance, tv_distance, EmbeddedPoints,
    FunctionClass, MetricSpace,
};
use ais_core::model::{parse_model_str, random_distribution, random_mdp, random_pomdp, to_json};
use ais_core::planning::{
    ais_dp, ais_value_iteration, bellman_ais, check_finite_bounds, csv_number, value_norm_bounds,
    BoundVariant,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn span(v: &[f64]) -> f64 {
    v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - v.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn optimal_value_span_within_reward_span_bound(seed in any::<u64>(), ns in 2usize..6, na in 1usize..4, g in 0.1..0.98f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mdp(&mut rng, ns, na, g);
        let vi = ais_value_iteration(&mdp_generator(&m).unwrap(), 1e-10).unwrap();
        let b = value_norm_bounds(&m, None).unwrap();
        prop_assert!(span(vi.values()) <= b.span + 1e-8);
        prop_assert!((b.tv_minkowski - b.span / 2.0).abs() < 1e-12);
    }

    #[test]
    fn bellman_operator_is_a_contraction(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_pomdp(&mut rng, 2, 2, 2, 0.9);
        let gen = build_belief_quant_ais(&m, Horizon::Stationary, n).unwrap();
        let k = gen.stages[0].n_points;
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let (bv, bw) = (bellman_ais(&gen, &v).unwrap(), bellman_ais(&gen, &w).unwrap());
        prop_assert!(sup(&bv, &bw) <= 0.9 * sup(&v, &w) + 1e-12);
    }

    #[test]
    fn ipm_orderings(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)]).collect();
        let metric = MetricSpace::euclidean(&coords);
        let emb = EmbeddedPoints::new(coords).unwrap();
        let (p, q, r) = (random_distribution(&mut rng, n), random_distribution(&mut rng, n), random_distribution(&mut rng, n));
        let tv = tv_distance(&p, &q).unwrap();
        let k = kantorovich_distance(&metric, &p, &q).unwrap();
        let bl = bounded_lipschitz_distance(&metric, &p, &q).unwrap();
        // moving all of the differing mass costs at most the diameter per unit
        prop_assert!(k <= metric.diameter() * tv / 2.0 + 1e-9);
        prop_assert!(bl <= k.min(tv) + 1e-9);
        let k_pr = kantorovich_distance(&metric, &p, &r).unwrap();
        let k_rq = kantorovich_distance(&metric, &r, &q).unwrap();
        prop_assert!(k <= k_pr + k_rq + 1e-9);
        let mmd = mmd_distance(&emb, &p, &q, 1.0).unwrap();
        prop_assert!((mmd - mmd_distance(&emb, &q, &p, 1.0).unwrap()).abs() < 1e-12);
        prop_assert!(mmd_distance(&emb, &p, &p, 1.0).unwrap() < 1e-6);
    }

    #[test]
    fn quantized_certificate_within_declared(seed in any::<u64>(), ns in 2usize..4, n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_pomdp(&mut rng, ns, 2, 2, 0.9);
        let gen = build_belief_quant_ais(&m, Horizon::Finite(3), n).unwrap();
        let decl = gen.declared.clone().unwrap();
        let cert = measure_ais(&m, &gen, 3, FunctionClass::BoundedLipschitz).unwrap();
        for t in 0..3 {
            prop_assert!(cert.eps[t] <= decl.eps[t] + 1e-9);
            prop_assert!(cert.delta[t] <= decl.delta[t] + 1e-9);
        }
    }

    #[test]
    fn csv_numbers_keep_twelve_digits(x in -1e9..1e9f64) {
        let y: f64 = csv_number(x).parse().unwrap();
        prop_assert!((x - y).abs() <= 5e-12 * x.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn alternative_bound_holds(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_pomdp(&mut rng, 3, 2, 2, 0.95);
        let gen = build_belief_quant_ais(&m, Horizon::Finite(3), n).unwrap();
        let cert = measure_ais(&m, &gen, 3, FunctionClass::TotalVariation).unwrap();
        let chk = check_finite_bounds(&m, &gen, &cert, 3, BoundVariant::Alternative).unwrap();
        prop_assert_eq!(chk.violations, 0);
    }
}

#[test]
fn generator_json_round_trip_preserves_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let m = random_pomdp(&mut rng, 3, 2, 3, 0.9);
        let gen = build_belief_quant_ais(&m, Horizon::Finite(3), 4).unwrap();
        let back = AisGenerator::from_json(&gen.to_json()).unwrap();
        assert_eq!(ais_dp(&gen, 3).unwrap(), ais_dp(&back, 3).unwrap());
        let c1 = measure_ais(&m, &gen, 3, FunctionClass::Kantorovich).unwrap();
        let c2 = measure_ais(&m, &back, 3, FunctionClass::Kantorovich).unwrap();
        assert_eq!(c1, c2);
    }
}

#[test]
fn model_json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let m = random_pomdp(&mut rng, 4, 3, 2, 0.8);
        assert_eq!(parse_model_str(&to_json(&m)).unwrap(), m);
    }
}
