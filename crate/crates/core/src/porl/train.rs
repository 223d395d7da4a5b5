//! Training loop, rollouts and Monte Carlo evaluation.

use super::loss::ais_loss_baselined;
use super::{
    gpomdp_gradient_with_baseline, td_loss, AgentStep, Critic, LearnedAis, LossKind, SoftmaxPolicy,
};
use crate::error::{Error, Result};
use crate::model::simulate::sample_index;
use crate::model::{simulate, PomdpModel};
use crate::planning::csv_number;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Training aborts once the joint parameter norm exceeds this.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// Step size `base/(1+k)^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub base: f64,
    pub exponent: f64,
}

impl Schedule {
    pub fn rate(&self, k: usize) -> f64 {
        self.base / (1.0 + k as f64).powf(self.exponent)
    }

    /// `Σ rate = ∞` and `Σ rate² < ∞`.
    pub fn is_robbins_monro(&self) -> bool {
        self.exponent > 0.5 && self.exponent <= 1.0
    }
}

pub const AIS_EXPONENT: f64 = 0.6;
pub const POLICY_EXPONENT: f64 = 0.8;
pub const CRITIC_EXPONENT: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// AIS alphabet size.
    pub k: usize,
    /// Weight of the reward term in the AIS loss.
    pub lambda: f64,
    pub loss: LossKind,
    /// Steps per training rollout.
    pub rollout_len: usize,
    pub iterations: usize,
    /// Base step size of the AIS parameters.
    pub a0: f64,
    /// Base step size of the policy.
    pub b0: f64,
    /// Base step size of the critic.
    pub c0: f64,
    pub critic: bool,
    /// Subtract running-average baselines in the score-function estimates.
    pub baseline: bool,
    /// Standard deviation of the initial AIS logits.
    pub init_scale: f64,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub eval_horizon: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 8,
            lambda: 0.5,
            loss: LossKind::CrossEntropy,
            rollout_len: 50,
            iterations: 5000,
            a0: 0.5,
            b0: 0.05,
            c0: 0.2,
            critic: false,
            baseline: true,
            init_scale: 0.1,
            eval_interval: 500,
            eval_episodes: 100,
            eval_horizon: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn schedules(&self) -> (Schedule, Schedule, Schedule) {
        (
            Schedule { base: self.a0, exponent: AIS_EXPONENT },
            Schedule { base: self.b0, exponent: POLICY_EXPONENT },
            Schedule { base: self.c0, exponent: CRITIC_EXPONENT },
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} outside [0, 1]", self.lambda));
        }
        for (name, v) in [("a0", self.a0), ("b0", self.b0), ("c0", self.c0), ("init_scale", self.init_scale)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if self.k == 0 || self.rollout_len == 0 || self.eval_interval == 0 || self.eval_episodes == 0 || self.eval_horizon == 0 {
            return bad("k, rollout_len, eval_interval, eval_episodes and eval_horizon must be positive".into());
        }
        if self.critic && self.rollout_len < 2 {
            return bad("the critic needs rollouts of at least two steps".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub mean_return: f64,
    pub stderr: f64,
    /// Mean training AIS loss since the previous point.
    pub ais_loss: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainResult {
    pub ais: LearnedAis,
    pub policy: SoftmaxPolicy,
    pub critic: Option<Critic>,
    pub curve: Vec<CurvePoint>,
}

impl TrainResult {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("iteration,mean_return,stderr,ais_loss\n");
        for p in &self.curve {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                p.iteration,
                csv_number(p.mean_return),
                csv_number(p.stderr),
                csv_number(p.ais_loss)
            );
        }
        out
    }

    /// Checkpoint: the AIS generator document plus the raw learned tables.
    pub fn checkpoint_json(&self, discount: f64) -> String {
        let doc = serde_json::json!({
            "generator": self.ais.to_generator(discount),
            "ais": self.ais,
            "policy": self.policy,
            "critic": self.critic,
        });
        serde_json::to_string_pretty(&doc).expect("checkpoint serializes")
    }
}

/// Samples `len` steps of agent–environment interaction from the initial belief.
pub fn rollout<R: Rng + ?Sized>(model: &PomdpModel, ais: &LearnedAis, policy: &SoftmaxPolicy, len: usize, rng: &mut R) -> Vec<AgentStep> {
    let mut s = sample_index(rng, &model.initial_belief);
    let mut z = sample_index(rng, &ais.initial());
    let mut steps = Vec::with_capacity(len);
    for _ in 0..len {
        let a = sample_index(rng, &policy.probs(z));
        let reward = model.reward[s][a];
        let s2 = sample_index(rng, &model.transition[a][s]);
        let y = sample_index(rng, &model.observation[a][s2]);
        steps.push(AgentStep { z, action: a, reward, observation: y });
        z = sample_index(rng, &ais.transition(z, a, y));
        s = s2;
    }
    steps
}

/// `Σ_ẑ q(ẑ) π(·|ẑ)`.
pub fn marginal_action_probs(policy: &SoftmaxPolicy, q: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; policy.n_actions];
    for (z, &w) in q.iter().enumerate() {
        if w > 0.0 {
            for (acc, x) in p.iter_mut().zip(policy.probs(z)) {
                *acc += w * x;
            }
        }
    }
    p
}

/// Symbol distribution after acting `a` and observing `y`.
fn filter_symbols(ais: &LearnedAis, policy: &SoftmaxPolicy, q: &[f64], a: usize, y: usize) -> Vec<f64> {
    let mut next = vec![0.0; ais.k];
    let mut norm = 0.0;
    for (z, &w) in q.iter().enumerate() {
        let w = w * policy.probs(z)[a];
        if w > 0.0 {
            norm += w;
            for (n, t) in next.iter_mut().zip(ais.transition(z, a, y)) {
                *n += w * t;
            }
        }
    }
    if norm > 0.0 {
        next.iter_mut().for_each(|x| *x /= norm);
    }
    next
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalResult {
    pub mean: f64,
    pub stderr: f64,
    pub episodes: usize,
}

/// Mean discounted return over `episodes` rollouts of `horizon` steps. The agent's
/// symbol is marginalized by a forward filter rather than sampled.
pub fn evaluate_policy(
    model: &PomdpModel,
    ais: &LearnedAis,
    policy: &SoftmaxPolicy,
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<EvalResult> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("need at least one episode".into()));
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut q = ais.initial();
        let mut seen = 0;
        let traj = simulate(
            model,
            |h| {
                while seen < h.steps.len() {
                    let st = h.steps[seen];
                    q = filter_symbols(ais, policy, &q, st.action, st.observation);
                    seen += 1;
                }
                marginal_action_probs(policy, &q)
            },
            horizon,
            seeds.gen(),
        )?;
        returns.push(traj.discounted_return(model.discount));
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let stderr = if returns.len() > 1 {
        (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(EvalResult { mean, stderr, episodes })
}

fn norm(xs: &[&[f64]]) -> f64 {
    xs.iter().flat_map(|v| v.iter()).map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs the two- (or three-) timescale stochastic-gradient loop: after each rollout
/// the AIS descends its loss, the policy ascends its GPOMDP or critic-weighted
/// gradient, and the critic descends its TD loss.
pub fn train(model: &PomdpModel, cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    model.validate()?;
    let (na, ny) = (model.n_actions, model.n_observations);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ais = LearnedAis::random(&mut rng, cfg.k, na, ny, cfg.init_scale);
    let mut policy = SoftmaxPolicy::uniform(cfg.k, na);
    let mut critic = cfg.critic.then(|| Critic::zeros(cfg.k, na));
    let (sa, sb, sc) = cfg.schedules();
    let gamma = model.discount;
    let mut eval_seeds = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let mut ais_base: Option<f64> = None;
    let mut reward_base: Vec<Option<f64>> = vec![None; cfg.rollout_len];
    let mut curve = Vec::new();
    let mut loss_acc = (0.0, 0usize);
    let mut record = |it: usize, ais: &LearnedAis, policy: &SoftmaxPolicy, acc: &mut (f64, usize), seeds: &mut ChaCha8Rng| -> Result<()> {
        let e = evaluate_policy(model, ais, policy, cfg.eval_episodes, cfg.eval_horizon, seeds.gen())?;
        curve.push(CurvePoint {
            iteration: it,
            mean_return: e.mean,
            stderr: e.stderr,
            ais_loss: if acc.1 == 0 { f64::NAN } else { acc.0 / acc.1 as f64 },
        });
        *acc = (0.0, 0);
        Ok(())
    };
    record(0, &ais, &policy, &mut loss_acc, &mut eval_seeds)?;
    for it in 0..cfg.iterations {
        let steps = rollout(model, &ais, &policy, cfg.rollout_len, &mut rng);
        let b = if cfg.baseline { ais_base.unwrap_or(0.0) } else { 0.0 };
        let g_ais = ais_loss_baselined(&steps, &ais, cfg.lambda, cfg.loss, b)?;
        let g_pol = match &critic {
            Some(c) => {
                let mut g = vec![0.0; policy.logits.len()];
                for (t, s) in steps.iter().enumerate() {
                    let p = policy.probs(s.z);
                    // advantage: the expected Q under π is a baseline depending on ẑ only
                    let v: f64 = p.iter().enumerate().map(|(a, pa)| pa * c.value(s.z, a)).sum();
                    let w = gamma.powi(t as i32) * (c.value(s.z, s.action) - v);
                    super::add_log_softmax_grad(&mut g[s.z * na..(s.z + 1) * na], &p, s.action, w);
                }
                g
            }
            None => {
                let base: Vec<f64> = if cfg.baseline { reward_base.iter().map(|b| b.unwrap_or(0.0)).collect() } else { Vec::new() };
                gpomdp_gradient_with_baseline(&steps, gamma, &policy, &base)
            }
        };
        let g_td = match &critic {
            Some(c) => Some(td_loss(&steps, c, c, gamma)?.1),
            None => None,
        };
        let (ra, rb, rc) = (sa.rate(it), sb.rate(it), sc.rate(it));
        ais.params.iter_mut().zip(&g_ais.grad).for_each(|(p, g)| *p -= ra * g);
        policy.logits.iter_mut().zip(&g_pol).for_each(|(p, g)| *p += rb * g);
        if let (Some(c), Some(g)) = (critic.as_mut(), g_td) {
            c.q.iter_mut().zip(&g).for_each(|(p, g)| *p -= rc * g);
        }
        let n = norm(&[&ais.params, &policy.logits, critic.as_ref().map(|c| c.q.as_slice()).unwrap_or(&[])]);
        if !(n <= DIVERGENCE_NORM) {
            return Err(Error::Diverged { iteration: it + 1, norm: n });
        }
        ais_base = Some(ais_base.map_or(g_ais.loss, |m| 0.95 * m + 0.05 * g_ais.loss));
        for (b, s) in reward_base.iter_mut().zip(&steps) {
            *b = Some(b.map_or(s.reward, |m| 0.95 * m + 0.05 * s.reward));
        }
        loss_acc.0 += g_ais.loss;
        loss_acc.1 += 1;
        if (it + 1) % cfg.eval_interval == 0 || it + 1 == cfg.iterations {
            record(it + 1, &ais, &policy, &mut loss_acc, &mut eval_seeds)?;
        }
    }
    Ok(TrainResult { ais, policy, critic, curve })
}
