//! The α error-bound recursions, closed-form value-norm bounds and the
//! literature comparison scenarios.

use super::{csv_number, ValueTables};
use crate::ais::{AisCertificate, AisGenerator};
use crate::error::{Error, Result};
use crate::metrics::FunctionClass;
use crate::model::PomdpModel;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// `ρ` taken at the approximate values `V̂_{t+1}`.
    Primary,
    /// `ρ` taken at the true values `V_{t+1}`; policy bound `α + α′`.
    Alternative,
}

impl std::str::FromStr for BoundVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primary" => Ok(BoundVariant::Primary),
            "alt" | "alternative" => Ok(BoundVariant::Alternative),
            other => Err(Error::InvalidArgument(format!(
                "unknown bound variant '{other}'; allowed: primary, alt"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub variant: BoundVariant,
    pub fclass: FunctionClass,
    pub discount: f64,
    /// Per stage `t = 1..T`; a stationary report has one entry.
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    /// `ρ_𝔉` of the next-stage values used at stage `t`.
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub policy_bound: Vec<f64>,
    /// `(ε + γρδ)/(1−γ)` when the report is for a stationary generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary_alpha: Option<f64>,
}

impl BoundReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,eps,delta,rho,alpha,policy_bound\n");
        for t in 0..self.alpha.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                t + 1,
                csv_number(self.eps[t]),
                csv_number(self.delta[t]),
                csv_number(self.rho[t]),
                csv_number(self.alpha[t]),
                csv_number(self.policy_bound[t])
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `α_t = ε_t + γ(ρ_t δ_t + α_{t+1})`, `α_{T+1} = 0`; `γ = 1` gives the
/// undiscounted recursion.
pub fn alpha_recursion(eps: &[f64], delta: &[f64], rho: &[f64], discount: f64) -> Result<Vec<f64>> {
    let n = eps.len();
    for (field, len) in [("delta", delta.len()), ("rho", rho.len())] {
        if len != n {
            return Err(Error::DimensionMismatch { field: field.into(), expected: n, got: len });
        }
    }
    let mut alpha = vec![0.0; n];
    let mut next = 0.0;
    for t in (0..n).rev() {
        alpha[t] = eps[t] + discount * (rho[t] * delta[t] + next);
        next = alpha[t];
    }
    Ok(alpha)
}

/// Fixed point `α = (ε + γρδ)/(1−γ)` of the stationary recursion.
pub fn alpha_stationary(eps: f64, delta: f64, rho: f64, discount: f64) -> Result<f64> {
    if !(discount < 1.0) {
        return Err(Error::Unsupported("stationary bound needs a discount below 1".into()));
    }
    Ok((eps + discount * rho * delta) / (1.0 - discount))
}

fn certificate_stage(cert: &AisCertificate, t: usize) -> Result<(f64, f64)> {
    if cert.stationary {
        return Ok((cert.eps_max(), cert.delta_max()));
    }
    match (cert.eps.get(t), cert.delta.get(t)) {
        (Some(&e), Some(&d)) => Ok((e, d)),
        _ => Err(Error::DimensionMismatch {
            field: "certificate stages".into(),
            expected: t + 1,
            got: cert.eps.len().min(cert.delta.len()),
        }),
    }
}

fn reject_mmd(cert: &AisCertificate) -> Result<()> {
    if let FunctionClass::Mmd { .. } = cert.fclass {
        return Err(Error::Unsupported(
            "α bounds need a Minkowski functional, which the MMD class does not provide here".into(),
        ));
    }
    Ok(())
}

/// Finite-horizon α bounds for the stages of `vhat`.
///
/// For [`BoundVariant::Primary`] the next-stage values are `vhat`. For
/// [`BoundVariant::Alternative`] `true_rho[t]` must give `ρ_𝔉(V_{t+2})` of the true
/// history values (0 at the last stage); only total variation is supported since
/// histories carry no ground metric.
pub fn alpha_bounds(
    gen: &AisGenerator,
    cert: &AisCertificate,
    vhat: &ValueTables,
    variant: BoundVariant,
    true_rho: Option<&[f64]>,
) -> Result<BoundReport> {
    reject_mmd(cert)?;
    let horizon = vhat.stages.len();
    if !cert.stationary && cert.stages() != horizon {
        return Err(Error::DimensionMismatch {
            field: "certificate stages".into(),
            expected: horizon,
            got: cert.stages(),
        });
    }
    let mut eps = Vec::with_capacity(horizon);
    let mut delta = Vec::with_capacity(horizon);
    let mut rho_hat = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let (e, d) = certificate_stage(cert, t)?;
        eps.push(e);
        delta.push(d);
        rho_hat.push(if t + 1 < horizon {
            gen.function_class(cert.fclass, t + 2)?.minkowski(&vhat.stages[t + 1].value)?
        } else {
            0.0
        });
    }
    let alpha = alpha_recursion(&eps, &delta, &rho_hat, gen.discount)?;
    let (rho, reported_alpha, policy_bound) = match variant {
        BoundVariant::Primary => {
            let pb = alpha.iter().map(|a| 2.0 * a).collect();
            (rho_hat, alpha, pb)
        }
        BoundVariant::Alternative => {
            if cert.fclass != FunctionClass::TotalVariation {
                return Err(Error::Unsupported(
                    "the alternative bound is available for total variation only".into(),
                ));
            }
            let rho = true_rho
                .ok_or_else(|| Error::InvalidArgument("the alternative bound needs true-value ρ".into()))?
                .to_vec();
            let alt = alpha_recursion(&eps, &delta, &rho, gen.discount)?;
            let pb = alpha.iter().zip(&alt).map(|(a, b)| a + b).collect();
            (rho, alt, pb)
        }
    };
    Ok(BoundReport {
        variant,
        fclass: cert.fclass,
        discount: gen.discount,
        eps,
        delta,
        rho,
        alpha: reported_alpha,
        policy_bound,
        stationary_alpha: None,
    })
}

/// Stationary bound with `ρ_𝔉(V̂*)` from the value-iteration fixed point `vstar`.
pub fn stationary_bound_report(gen: &AisGenerator, cert: &AisCertificate, vstar: &[f64]) -> Result<BoundReport> {
    reject_mmd(cert)?;
    let rho = gen.function_class(cert.fclass, 1)?.minkowski(vstar)?;
    let (e, d) = (cert.eps_max(), cert.delta_max());
    let a = alpha_stationary(e, d, rho, gen.discount)?;
    Ok(BoundReport {
        variant: BoundVariant::Primary,
        fclass: cert.fclass,
        discount: gen.discount,
        eps: vec![e],
        delta: vec![d],
        rho: vec![rho],
        alpha: vec![a],
        policy_bound: vec![2.0 * a],
        stationary_alpha: Some(a),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueNormBounds {
    /// `Span(r)/(1−γ)`.
    pub span: f64,
    /// Total-variation Minkowski bound, half the span bound.
    pub tv_minkowski: f64,
    /// `2‖r‖_∞/(1−γ)`.
    pub bounded_lipschitz: f64,
    /// `L_r/(1−γL_p)` when Lipschitz constants are supplied.
    pub lipschitz: Option<f64>,
}

impl ValueNormBounds {
    pub fn from_rewards(r_span: f64, r_inf: f64, discount: f64, lipschitz: Option<(f64, f64)>) -> Result<Self> {
        if !(discount < 1.0) {
            return Err(Error::Unsupported("value norm bounds need a discount below 1".into()));
        }
        let lip = match lipschitz {
            Some((l_r, l_p)) => Some(lipschitz_value_bound(l_r, l_p, discount)?),
            None => None,
        };
        let span = r_span / (1.0 - discount);
        Ok(ValueNormBounds {
            span,
            tv_minkowski: span / 2.0,
            bounded_lipschitz: 2.0 * r_inf / (1.0 - discount),
            lipschitz: lip,
        })
    }
}

/// `L_r/(1−γL_p)`; errors when `γL_p ≥ 1`.
pub fn lipschitz_value_bound(l_r: f64, l_p: f64, discount: f64) -> Result<f64> {
    if discount * l_p >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz value bound needs γL_p < 1, got {}",
            discount * l_p
        )));
    }
    Ok(l_r / (1.0 - discount * l_p))
}

/// Value norm bounds of a model at its own discount.
pub fn value_norm_bounds(model: &PomdpModel, lipschitz: Option<(f64, f64)>) -> Result<ValueNormBounds> {
    ValueNormBounds::from_rewards(model.r_span(), model.r_inf_norm(), model.discount, lipschitz)
}

/// Parameters of a literature bound and its AIS counterpart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Scenario {
    /// State aggregation with model-similarity error `ε`.
    Abel { eps: f64, discount: f64, n_states: usize, n_abstract: usize, r_inf: f64, r_span: f64 },
    /// Latent space model with Lipschitz constants.
    DeepMdp { eps: f64, delta: f64, discount: f64, l_r: f64, l_p: f64 },
    /// `ε`-sufficient statistic of a POMDP.
    FrancoisLavet { eps: f64, discount: f64, r_inf: f64 },
    /// Action subset with `ρ`-Lipschitz transitions in the action embedding.
    Chandak { rho: f64, eta: f64, discount: f64, r_inf: f64, r_span: f64 },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Abel { .. } => "abel",
            Scenario::DeepMdp { .. } => "deepmdp",
            Scenario::FrancoisLavet { .. } => "francois-lavet",
            Scenario::Chandak { .. } => "chandak",
        }
    }

    /// Default parameters used by the acceptance checks.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "abel" => Ok(Scenario::Abel { eps: 0.1, discount: 0.9, n_states: 4, n_abstract: 2, r_inf: 1.0, r_span: 1.0 }),
            "deepmdp" => Ok(Scenario::DeepMdp { eps: 0.1, delta: 0.05, discount: 0.9, l_r: 1.0, l_p: 0.5 }),
            "francois-lavet" => Ok(Scenario::FrancoisLavet { eps: 0.01, discount: 0.9, r_inf: 1.0 }),
            "chandak" => Ok(Scenario::Chandak { rho: 0.4, eta: 0.5, discount: 0.9, r_inf: 1.0, r_span: 2.0 }),
            other => Err(Error::InvalidArgument(format!(
                "unknown scenario '{other}'; allowed: abel, deepmdp, francois-lavet, chandak"
            ))),
        }
    }

    fn discount(&self) -> f64 {
        match *self {
            Scenario::Abel { discount, .. }
            | Scenario::DeepMdp { discount, .. }
            | Scenario::FrancoisLavet { discount, .. }
            | Scenario::Chandak { discount, .. } => discount,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub scenario: String,
    pub literature: f64,
    pub ais: f64,
    /// `ais / literature`.
    pub ratio: f64,
    pub ais_no_looser: bool,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        format!(
            "scenario,literature,ais,ratio,ais_no_looser\n{},{},{},{},{}\n",
            self.scenario,
            csv_number(self.literature),
            csv_number(self.ais),
            csv_number(self.ratio),
            self.ais_no_looser
        )
    }
}

/// Evaluates the literature bound and the bound obtained from the stationary α.
pub fn compare_bounds(scenario: &Scenario) -> Result<Comparison> {
    let g = scenario.discount();
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::InvalidArgument(format!("discount {g} outside (0, 1)")));
    }
    let (literature, ais) = match *scenario {
        Scenario::Abel { eps, n_states, n_abstract, r_inf, r_span, .. } => {
            let lit = 2.0 * eps / (1.0 - g).powi(2)
                + 2.0 * g * eps * n_states as f64 * r_inf / (1.0 - g).powi(3);
            // (ε, ε|Ŝ|)-AIS under TV with ρ(V̂) ≤ Span(r)/(2(1−γ))
            let rho = r_span / (2.0 * (1.0 - g));
            (lit, 2.0 * alpha_stationary(eps, eps * n_abstract as f64, rho, g)?)
        }
        Scenario::DeepMdp { eps, delta, l_r, l_p, .. } => {
            let rho = lipschitz_value_bound(l_r, l_p, g)?;
            let lit = 2.0 * eps / (1.0 - g) + 2.0 * g * delta * l_r / ((1.0 - g) * (1.0 - g * l_p));
            (lit, 2.0 * alpha_stationary(eps, delta, rho, g)?)
        }
        Scenario::FrancoisLavet { eps, r_inf, .. } => {
            let lit = 2.0 * eps * r_inf / (1.0 - g).powi(3);
            // (ε‖r‖_∞, 3ε)-AIS under BL with ρ(V̂) ≤ 2‖r‖_∞/(1−γ)
            let rho = 2.0 * r_inf / (1.0 - g);
            (lit, 2.0 * alpha_stationary(eps * r_inf, 3.0 * eps, rho, g)?)
        }
        Scenario::Chandak { rho, eta, r_inf, r_span, .. } => {
            let lit = g * rho * eta * r_inf / (1.0 - g).powi(2);
            // (0, ρη) action quantizer under TV; one-sided bound is α itself
            let minkowski = r_span / (2.0 * (1.0 - g));
            (lit, alpha_stationary(0.0, rho * eta, minkowski, g)?)
        }
    };
    Ok(Comparison {
        scenario: scenario.name().into(),
        literature,
        ais,
        ratio: if literature == 0.0 { f64::NAN } else { ais / literature },
        ais_no_looser: ais <= literature * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_stage_recursion() {
        let a = alpha_recursion(&[0.1, 0.1], &[0.05, 0.05], &[1.0, 0.0], 1.0).unwrap();
        assert!((a[1] - 0.1).abs() < 1e-15);
        assert!((a[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_certificate_gives_zero_alpha() {
        let a = alpha_recursion(&[0.0; 5], &[0.0; 5], &[3.0; 5], 0.9).unwrap();
        assert!(a.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn stationary_example() {
        let a = alpha_stationary(0.1, 0.05, 2.0, 0.9).unwrap();
        assert!((a - 1.9).abs() < 1e-12);
        assert!(alpha_stationary(0.1, 0.05, 2.0, 1.0).is_err());
    }

    #[test]
    fn finite_recursion_approaches_stationary_value() {
        let n = 400;
        let a = alpha_recursion(&vec![0.1; n], &vec![0.05; n], &vec![2.0; n], 0.9).unwrap();
        assert!((a[0] - 1.9).abs() < 1e-12);
    }

    #[test]
    fn norm_bound_examples() {
        let b = ValueNormBounds::from_rewards(1.0, 1.0, 0.9, None).unwrap();
        assert!((b.span - 10.0).abs() < 1e-12 && (b.tv_minkowski - 5.0).abs() < 1e-12);
        let b = ValueNormBounds::from_rewards(2.0, 1.0, 0.95, None).unwrap();
        assert!((b.bounded_lipschitz - 40.0).abs() < 1e-9);
        assert!(ValueNormBounds::from_rewards(1.0, 1.0, 0.9, Some((1.0, 1.2))).is_err());
        let l = ValueNormBounds::from_rewards(1.0, 1.0, 0.9, Some((1.0, 0.5))).unwrap();
        assert!((l.lipschitz.unwrap() - 1.0 / 0.55).abs() < 1e-12);
    }

    #[test]
    fn abel_scenario() {
        let c = compare_bounds(&Scenario::preset("abel").unwrap()).unwrap();
        assert!((c.literature - 740.0).abs() < 1e-9);
        // 2·0.1/0.1 + 0.9·0.1·2·1/0.01
        assert!((c.ais - 20.0).abs() < 1e-9);
        assert!(c.ais_no_looser && c.ratio < 1.0);
    }

    #[test]
    fn deepmdp_scenario_agrees() {
        for (eps, delta, g, lr, lp) in [(0.1, 0.05, 0.9, 1.0, 0.5), (0.3, 0.2, 0.5, 2.0, 1.5), (0.0, 1.0, 0.99, 0.1, 1.0)] {
            let s = Scenario::DeepMdp { eps, delta, discount: g, l_r: lr, l_p: lp };
            let c = compare_bounds(&s).unwrap();
            assert!((c.ais - c.literature).abs() <= 1e-12 * c.literature.max(1.0));
        }
        let bad = Scenario::DeepMdp { eps: 0.1, delta: 0.1, discount: 0.9, l_r: 1.0, l_p: 2.0 };
        assert!(compare_bounds(&bad).is_err());
    }

    #[test]
    fn francois_lavet_scenario() {
        let c = compare_bounds(&Scenario::preset("francois-lavet").unwrap()).unwrap();
        assert!((c.literature - 20.0).abs() < 1e-9);
        // 2·0.01/0.1 + 12·0.9·0.01/0.01
        assert!((c.ais - 11.0).abs() < 1e-9);
        assert!(c.ais_no_looser);
    }

    #[test]
    fn chandak_symmetric_rewards_match() {
        let c = compare_bounds(&Scenario::preset("chandak").unwrap()).unwrap();
        assert!((c.ais - c.literature).abs() < 1e-12);
        let s = Scenario::Chandak { rho: 0.4, eta: 0.5, discount: 0.9, r_inf: 1.0, r_span: 1.0 };
        assert!((compare_bounds(&s).unwrap().ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unknown_preset_errors() {
        assert!(Scenario::preset("nope").is_err());
        assert!("alt".parse::<BoundVariant>().is_ok());
        assert!("x".parse::<BoundVariant>().is_err());
    }

    proptest! {
        #[test]
        fn abel_ais_never_looser(eps in 0.0..1.0f64, g in 0.01..0.99f64, n in 1usize..20, k in 1usize..20, rinf in 0.01..10.0f64, frac in 0.0..1.0f64) {
            let k = k.min(n);
            let s = Scenario::Abel { eps, discount: g, n_states: n, n_abstract: k, r_inf: rinf, r_span: 2.0 * rinf * frac };
            prop_assert!(compare_bounds(&s).unwrap().ais_no_looser);
        }

        #[test]
        fn francois_lavet_ratio(eps in 1e-6..1.0f64, g in 0.01..0.99f64, rinf in 0.01..10.0f64) {
            let c = compare_bounds(&Scenario::FrancoisLavet { eps, discount: g, r_inf: rinf }).unwrap();
            // ratio = (1−γ)(1 + 5γ), below 1 once γ is away from 0
            let want = (1.0 - g) * (1.0 - g + 6.0 * g);
            prop_assert!((c.ratio - want).abs() < 1e-9);
        }

        #[test]
        fn alpha_nonincreasing_for_constant_inputs(e in 0.0..1.0f64, d in 0.0..1.0f64, r in 0.0..10.0f64, g in 0.0..=1.0f64, n in 1usize..30) {
            let a = alpha_recursion(&vec![e; n], &vec![d; n], &vec![r; n], g).unwrap();
            prop_assert!(a.iter().all(|&x| x >= 0.0));
            for w in a.windows(2) {
                prop_assert!(w[0] + 1e-12 >= w[1]);
            }
        }
    }
}
