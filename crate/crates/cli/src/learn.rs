//! `ais learn`: TOML config plus flag overrides, one training run per seed.

use crate::source::ModelArgs;
use crate::{emit, read_file, usage, CliResult, Failure};
use ais_core::planning::csv_number;
use ais_core::porl::{marginal_action_probs, train, LossKind, TrainConfig, TrainResult};
use ais_core::PomdpModel;
use clap::Args;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Args, Debug)]
pub struct LearnArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// TOML file whose keys are the long flag names (either - or _); flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// AIS alphabet size
    #[arg(long)]
    k: Option<usize>,
    /// Weight of the reward term in the AIS loss, in [0, 1]
    #[arg(long)]
    lambda: Option<f64>,
    /// AIS loss: cross-entropy or mmd2
    #[arg(long)]
    loss: Option<String>,
    /// Steps per training rollout
    #[arg(long)]
    rollout_len: Option<usize>,
    /// Training iterations, one rollout each
    #[arg(long)]
    iterations: Option<usize>,
    /// Base step size of the AIS parameters
    #[arg(long)]
    a0: Option<f64>,
    /// Base step size of the policy
    #[arg(long)]
    b0: Option<f64>,
    /// Base step size of the critic
    #[arg(long)]
    c0: Option<f64>,
    /// Train a tabular critic and use it in the policy update
    #[arg(long)]
    critic: Option<bool>,
    /// Subtract running-average baselines
    #[arg(long)]
    baseline: Option<bool>,
    /// Standard deviation of the initial AIS logits
    #[arg(long)]
    init_scale: Option<f64>,
    /// Iterations between two points of the learning curve
    #[arg(long)]
    eval_interval: Option<usize>,
    /// Episodes per curve point
    #[arg(long)]
    eval_episodes: Option<usize>,
    /// Steps per evaluation episode
    #[arg(long)]
    eval_horizon: Option<usize>,
    /// Single seed
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seeds
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads across seeds
    #[arg(long)]
    jobs: Option<usize>,
    /// Write curve-seed<S>.csv and checkpoint-seed<S>.json here and print a summary
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Everything a run needs after merging the file and the flags.
#[derive(Debug)]
struct Plan {
    model: PomdpModel,
    cfg: TrainConfig,
    seeds: Vec<u64>,
    jobs: usize,
    out_dir: Option<PathBuf>,
}

fn toml_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn plan(args: &LearnArgs) -> CliResult<Plan> {
    let mut file_env: Option<String> = None;
    let mut file_model: Option<PathBuf> = None;
    let mut file_seeds: Option<Vec<u64>> = None;
    let mut file_jobs: Option<usize> = None;
    let mut file_out: Option<PathBuf> = None;
    let mut cfg = TrainConfig::default();
    if let Some(path) = &args.config {
        let table: toml::Table = read_file(path)?.parse().map_err(|e| toml_error(path, e))?;
        let mut rest = toml::Table::new();
        for (key, value) in table {
            let key = key.replace('-', "_");
            let bad = |what: &str| toml_error(path, format!("'{key}' must be {what}"));
            match key.as_str() {
                "env" => file_env = Some(value.as_str().ok_or_else(|| bad("a string"))?.to_string()),
                "model" => file_model = Some(value.as_str().ok_or_else(|| bad("a string"))?.into()),
                "out_dir" => file_out = Some(value.as_str().ok_or_else(|| bad("a string"))?.into()),
                "jobs" => {
                    let j = value.as_integer().ok_or_else(|| bad("an integer"))?;
                    file_jobs = Some(usize::try_from(j).map_err(|_| bad("non-negative"))?);
                }
                "seeds" => {
                    let arr = value.as_array().ok_or_else(|| bad("an array of integers"))?;
                    let seeds = arr
                        .iter()
                        .map(|v| v.as_integer().and_then(|i| u64::try_from(i).ok()))
                        .collect::<Option<Vec<u64>>>()
                        .ok_or_else(|| bad("an array of non-negative integers"))?;
                    file_seeds = Some(seeds);
                }
                _ => {
                    rest.insert(key, value);
                }
            }
        }
        cfg = toml::Value::Table(rest).try_into().map_err(|e| toml_error(path, e))?;
    }
    macro_rules! set {
        ($($f:ident),*) => {$(if let Some(v) = args.$f.clone() { cfg.$f = v; })*};
    }
    set!(k, lambda, rollout_len, iterations, a0, b0, c0, critic, baseline, init_scale, eval_interval, eval_episodes, eval_horizon);
    if let Some(l) = &args.loss {
        cfg.loss = l.parse::<LossKind>()?;
    }
    let seeds = match (&args.seeds, args.seed, file_seeds) {
        (Some(s), _, _) => s.clone(),
        (None, Some(s), _) => vec![s],
        (None, None, Some(s)) => s,
        (None, None, None) => vec![cfg.seed],
    };
    if seeds.is_empty() {
        return usage("no seeds given");
    }
    cfg.validate()?;
    let model = if args.model.env.is_some() || args.model.model.is_some() {
        args.model.load()?
    } else {
        ModelArgs { env: file_env, model: file_model }.load()?
    };
    let jobs = args.jobs.or(file_jobs).unwrap_or(1);
    if jobs == 0 {
        return usage("--jobs must be positive");
    }
    let out_dir = args.out_dir.clone().or(file_out);
    if out_dir.is_none() && seeds.len() > 1 {
        return usage("several seeds need --out-dir");
    }
    Ok(Plan { model, cfg, seeds, jobs, out_dir })
}

/// Runs every seed on up to `jobs` threads; results come back in seed order.
fn run_seeds(plan: &Plan) -> Vec<ais_core::Result<TrainResult>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<ais_core::Result<TrainResult>>>> =
        Mutex::new((0..plan.seeds.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..plan.jobs.min(plan.seeds.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= plan.seeds.len() {
                    break;
                }
                let cfg = TrainConfig { seed: plan.seeds[i], ..plan.cfg.clone() };
                let res = train(&plan.model, &cfg);
                slots.lock().expect("no poisoned lock")[i] = Some(res);
            });
        }
    });
    slots
        .into_inner()
        .expect("no poisoned lock")
        .into_iter()
        .map(|r| r.expect("every seed ran"))
        .collect()
}

pub fn cmd_learn(args: &LearnArgs) -> CliResult<()> {
    let plan = plan(args)?;
    let results = run_seeds(&plan);
    let Some(dir) = &plan.out_dir else {
        let res = results.into_iter().next().expect("one seed")?;
        return emit(&res.curve_csv(), None);
    };
    std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let mut summary = String::from("seed,final_return,stderr,ais_loss,initial_max_action_prob\n");
    let mut failure = None;
    for (seed, res) in plan.seeds.iter().zip(results) {
        match res {
            Ok(r) => {
                emit(&r.curve_csv(), Some(&dir.join(format!("curve-seed{seed}.csv"))))?;
                emit(
                    &r.checkpoint_json(plan.model.discount),
                    Some(&dir.join(format!("checkpoint-seed{seed}.json"))),
                )?;
                let last = r.curve.last().expect("curve has the initial point");
                let p = marginal_action_probs(&r.policy, &r.ais.initial());
                let _ = writeln!(
                    summary,
                    "{seed},{},{},{},{}",
                    csv_number(last.mean_return),
                    csv_number(last.stderr),
                    csv_number(last.ais_loss),
                    csv_number(p.iter().copied().fold(0.0, f64::max))
                );
            }
            Err(e) => {
                eprintln!("seed {seed}: {e}");
                failure.get_or_insert(Failure::from(e));
            }
        }
    }
    emit(&summary, None)?;
    failure.map_or(Ok(()), Err)
}
