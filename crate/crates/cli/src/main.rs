//! `ais`: command-line harness over `ais-core`.
//!
//! Exit codes: 0 success, 1 a check failed (bound violation, measured certificate
//! above the declared one, diverged training), 2 usage or input error.

mod learn;
mod source;

use ais_core::ais::measure_ais;
use ais_core::metrics::FunctionClass;
use ais_core::planning::{
    ais_dp, ais_value_iteration, alpha_bounds, check_finite_bounds, compare_bounds, csv_number,
    history_dp, history_tv_rho, stationary_bound_report, BoundVariant, Scenario, ValueTables,
    CHECK_TOL,
};
use ais_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use source::{AisArgs, ModelArgs};

#[derive(Parser, Debug)]
#[command(name = "ais", version, about = "Planning and learning with approximate information states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the history or AIS dynamic program and print values with the greedy policy
    Solve(SolveArgs),
    /// Measure the (ε_t, δ_t) certificate of an AIS generator
    Measure(MeasureArgs),
    /// Compute α bounds from a certificate and AIS values, or a literature comparison
    Bound(BoundArgs),
    /// Compare every literature bound preset with its AIS counterpart
    Compare(CompareArgs),
    /// Check the value and policy bounds against exact history dynamic programming
    Check(CheckArgs),
    /// Train an AIS and a policy from simulated interaction
    Learn(learn::LearnArgs),
    /// Builtin environments
    Env {
        #[command(subcommand)]
        command: EnvCommand,
    },
}

#[derive(Subcommand, Debug)]
enum EnvCommand {
    /// List builtin environment names
    List,
    /// Print the JSON model of a builtin environment
    Export {
        /// Environment name
        name: String,
        /// Write to this file instead of stdout
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    ais: AisArgs,
    /// Planning horizon T
    #[arg(long, conflicts_with = "infinite", required_unless_present = "infinite")]
    horizon: Option<usize>,
    /// Discounted infinite horizon by value iteration (needs a stationary AIS)
    #[arg(long)]
    infinite: bool,
    /// Sup-norm tolerance of value iteration
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    ais: AisArgs,
    /// Stages to measure (depth of the reachable belief graph for stationary generators)
    #[arg(long)]
    horizon: usize,
    /// Measure a stationary generator
    #[arg(long)]
    infinite: bool,
    /// Function class: tv, kantorovich, bl, mmd[:p]
    #[arg(long, default_value = "tv")]
    fclass: String,
    /// Exit 1 when a measured value exceeds the generator's declared certificate
    #[arg(long)]
    check_declared: bool,
    /// Write the certificate JSON to this file
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Literature scenario: abel, deepmdp, francois-lavet, chandak
    #[arg(long, conflicts_with_all = ["certificate", "values"])]
    scenario: Option<String>,
    #[command(flatten)]
    params: ScenarioParams,
    /// Certificate JSON from `measure`
    #[arg(long, requires = "values")]
    certificate: Option<PathBuf>,
    /// AIS value tables JSON from `solve --format json`
    #[arg(long, requires = "certificate")]
    values: Option<PathBuf>,
    /// Bound variant: primary or alt
    #[arg(long, default_value = "primary")]
    variant: String,
    /// True history values JSON for the alternative variant (computed from the model when absent)
    #[arg(long)]
    true_values: Option<PathBuf>,
    /// Stationary bound from a stationary certificate and the value-iteration fixed point
    #[arg(long)]
    infinite: bool,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    ais: AisArgs,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Overrides of the scenario preset.
#[derive(Args, Debug, Default)]
struct ScenarioParams {
    /// Reward error ε (abel, deepmdp, francois-lavet)
    #[arg(long)]
    eps: Option<f64>,
    /// Transition error δ (deepmdp)
    #[arg(long)]
    delta: Option<f64>,
    /// Discount γ
    #[arg(long)]
    discount: Option<f64>,
    /// State count (abel)
    #[arg(long)]
    n_states: Option<usize>,
    /// Abstract state count (abel)
    #[arg(long)]
    n_abstract: Option<usize>,
    /// ‖r‖_∞
    #[arg(long)]
    r_inf: Option<f64>,
    /// Span of the reward
    #[arg(long)]
    r_span: Option<f64>,
    /// Reward Lipschitz constant (deepmdp)
    #[arg(long)]
    l_r: Option<f64>,
    /// Transition Lipschitz constant (deepmdp)
    #[arg(long)]
    l_p: Option<f64>,
    /// Action-embedding Lipschitz constant ρ (chandak)
    #[arg(long)]
    rho: Option<f64>,
    /// Action-embedding radius η (chandak)
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    ais: AisArgs,
    /// Planning horizon T
    #[arg(long)]
    horizon: usize,
    /// Function class: tv, kantorovich, bl
    #[arg(long, default_value = "tv")]
    fclass: String,
    /// Bound variant: primary or alt
    #[arg(long, default_value = "primary")]
    variant: String,
}

/// Failure with its exit code.
#[derive(Debug)]
pub(crate) enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged { .. } => Failure::Check(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

pub(crate) type CliResult<T> = std::result::Result<T, Failure>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

pub(crate) fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Failure::Usage(format!("file not found: {}", path.display()))
        } else {
            Failure::Usage(format!("cannot read {}: {e}", path.display()))
        }
    })
}

pub(crate) fn emit(text: &str, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_file(path)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_solve(args: &SolveArgs) -> CliResult<()> {
    let model = args.model.load()?;
    let out = args.output.as_deref();
    if args.infinite {
        let Some(gen) = args.ais.generator(&model, None)? else {
            return usage("--infinite needs --ais or --generator");
        };
        let vi = ais_value_iteration(&gen, args.tol)?;
        eprintln!("residual,{}\niterations,{}", csv_number(vi.residual), vi.iterations);
        return match args.format {
            Format::Csv => emit(&vi.tables.to_csv(), out),
            Format::Json => emit(&serde_json::to_string_pretty(&vi).expect("serializes"), out),
        };
    }
    let horizon = args.horizon.expect("clap requires horizon");
    let tables = match args.ais.generator(&model, Some(horizon))? {
        Some(gen) => ais_dp(&gen, horizon)?,
        None => history_dp(&model, horizon)?,
    };
    match args.format {
        Format::Csv => emit(&tables.to_csv(), out),
        Format::Json => emit(&tables.to_json(), out),
    }
}

fn parse_fclass(s: &str) -> CliResult<FunctionClass> {
    Ok(s.parse::<FunctionClass>()?)
}

fn cmd_measure(args: &MeasureArgs) -> CliResult<()> {
    let fclass = parse_fclass(&args.fclass)?;
    let model = args.model.load()?;
    let stage_horizon = if args.infinite { None } else { Some(args.horizon) };
    let Some(gen) = args.ais.generator(&model, stage_horizon)? else {
        return usage("measure needs --ais or --generator");
    };
    let cert = measure_ais(&model, &gen, args.horizon, fclass)?;
    let mut table = String::from("stage,eps,delta\n");
    for t in 0..cert.stages() {
        let _ = writeln!(table, "{},{},{}", t + 1, csv_number(cert.eps[t]), csv_number(cert.delta[t]));
    }
    print!("{table}");
    if let Some(p) = &args.output {
        emit(&serde_json::to_string_pretty(&cert).expect("serializes"), Some(p))?;
    }
    if args.check_declared {
        let Some(decl) = &gen.declared else {
            return usage("the generator declares no certificate");
        };
        if decl.fclass != cert.fclass {
            return usage(format!("declared certificate is for {}, measured {}", decl.fclass, cert.fclass));
        }
        let over: Vec<usize> = (0..cert.stages())
            .filter(|&t| {
                let (e, d) = (decl.eps[t.min(decl.eps.len() - 1)], decl.delta[t.min(decl.delta.len() - 1)]);
                cert.eps[t] > e + CHECK_TOL || cert.delta[t] > d + CHECK_TOL
            })
            .map(|t| t + 1)
            .collect();
        if !over.is_empty() {
            return Err(Failure::Check(format!("measured certificate exceeds the declared one at stages {over:?}")));
        }
    }
    Ok(())
}

fn scenario_with(name: &str, p: &ScenarioParams) -> CliResult<Scenario> {
    let mut s = Scenario::preset(name)?;
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    let unused: Vec<&str>;
    match &mut s {
        Scenario::Abel { eps, discount, n_states, n_abstract, r_inf, r_span } => {
            set(eps, p.eps);
            set(discount, p.discount);
            set(r_inf, p.r_inf);
            set(r_span, p.r_span);
            *n_states = p.n_states.unwrap_or(*n_states);
            *n_abstract = p.n_abstract.unwrap_or(*n_abstract);
            unused = [("delta", p.delta.is_some()), ("l-r", p.l_r.is_some()), ("l-p", p.l_p.is_some()), ("rho", p.rho.is_some()), ("eta", p.eta.is_some())]
                .iter().filter(|x| x.1).map(|x| x.0).collect();
        }
        Scenario::DeepMdp { eps, delta, discount, l_r, l_p } => {
            set(eps, p.eps);
            set(delta, p.delta);
            set(discount, p.discount);
            set(l_r, p.l_r);
            set(l_p, p.l_p);
            unused = [("n-states", p.n_states.is_some()), ("n-abstract", p.n_abstract.is_some()), ("r-inf", p.r_inf.is_some()), ("r-span", p.r_span.is_some()), ("rho", p.rho.is_some()), ("eta", p.eta.is_some())]
                .iter().filter(|x| x.1).map(|x| x.0).collect();
        }
        Scenario::FrancoisLavet { eps, discount, r_inf } => {
            set(eps, p.eps);
            set(discount, p.discount);
            set(r_inf, p.r_inf);
            unused = [("delta", p.delta.is_some()), ("n-states", p.n_states.is_some()), ("n-abstract", p.n_abstract.is_some()), ("r-span", p.r_span.is_some()), ("l-r", p.l_r.is_some()), ("l-p", p.l_p.is_some()), ("rho", p.rho.is_some()), ("eta", p.eta.is_some())]
                .iter().filter(|x| x.1).map(|x| x.0).collect();
        }
        Scenario::Chandak { rho, eta, discount, r_inf, r_span } => {
            set(rho, p.rho);
            set(eta, p.eta);
            set(discount, p.discount);
            set(r_inf, p.r_inf);
            set(r_span, p.r_span);
            unused = [("eps", p.eps.is_some()), ("delta", p.delta.is_some()), ("n-states", p.n_states.is_some()), ("n-abstract", p.n_abstract.is_some()), ("l-r", p.l_r.is_some()), ("l-p", p.l_p.is_some())]
                .iter().filter(|x| x.1).map(|x| x.0).collect();
        }
    }
    if !unused.is_empty() {
        return usage(format!("scenario {name} does not take --{}", unused.join(", --")));
    }
    Ok(s)
}

fn cmd_bound(args: &BoundArgs) -> CliResult<()> {
    let out = args.output.as_deref();
    if let Some(name) = &args.scenario {
        let c = compare_bounds(&scenario_with(name, &args.params)?)?;
        return match args.format {
            Format::Csv => emit(&c.to_csv(), out),
            Format::Json => emit(&serde_json::to_string_pretty(&c).expect("serializes"), out),
        };
    }
    let (Some(cert_path), Some(values_path)) = (&args.certificate, &args.values) else {
        return usage("bound needs --scenario, or --certificate with --values");
    };
    let variant: BoundVariant = args.variant.parse()?;
    let cert: ais_core::ais::AisCertificate = parse_json(cert_path)?;
    if cert.eps.len() != cert.delta.len() {
        return usage(format!(
            "certificate has {} ε stages but {} δ stages",
            cert.eps.len(),
            cert.delta.len()
        ));
    }
    // `solve --infinite --format json` wraps the tables with the residual
    let mut doc: serde_json::Value = parse_json(values_path)?;
    if let Some(t) = doc.get_mut("tables") {
        doc = t.take();
    }
    let vhat: ValueTables = serde_json::from_value(doc)
        .map_err(|e| Failure::Usage(format!("{}: {e}", values_path.display())))?;
    let horizon = vhat.stages.len();
    if horizon == 0 {
        return usage("value tables hold no stage");
    }
    let stationary = args.infinite;
    if stationary && (!cert.stationary || horizon != 1) {
        return usage("--infinite needs a stationary certificate and one-stage values");
    }
    let model = args.model.load_optional()?;
    let gen = args.ais.generator_for(model.as_ref(), if stationary { None } else { Some(horizon) })?;
    let report = if stationary {
        if variant != BoundVariant::Primary {
            return usage("the stationary bound has the primary variant only");
        }
        stationary_bound_report(&gen, &cert, &vhat.stages[0].value)?
    } else {
        let true_rho = match variant {
            BoundVariant::Primary => None,
            BoundVariant::Alternative => {
                let v: ValueTables = match (&args.true_values, &model) {
                    (Some(p), _) => parse_json(p)?,
                    (None, Some(m)) => history_dp(m, horizon)?,
                    (None, None) => return usage("--variant alt needs --true-values or a model"),
                };
                if v.stages.len() != horizon {
                    return usage(format!("true values have {} stages, AIS values {horizon}", v.stages.len()));
                }
                Some(history_tv_rho(&v))
            }
        };
        alpha_bounds(&gen, &cert, &vhat, variant, true_rho.as_deref())?
    };
    match args.format {
        Format::Csv => emit(&report.to_csv(), out),
        Format::Json => emit(&report.to_json(), out),
    }
}

fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    let mut rows = Vec::new();
    for name in ["abel", "deepmdp", "francois-lavet", "chandak"] {
        rows.push(compare_bounds(&Scenario::preset(name)?)?);
    }
    match args.format {
        Format::Json => emit(&serde_json::to_string_pretty(&rows).expect("serializes"), None),
        Format::Csv => {
            let mut out = String::from("scenario,literature,ais,ratio,ais_no_looser\n");
            for c in &rows {
                out.push_str(c.to_csv().lines().nth(1).expect("data row"));
                out.push('\n');
            }
            emit(&out, None)
        }
    }
}

fn cmd_check(args: &CheckArgs) -> CliResult<()> {
    let fclass = parse_fclass(&args.fclass)?;
    let variant: BoundVariant = args.variant.parse()?;
    let model = args.model.load()?;
    let Some(gen) = args.ais.generator(&model, Some(args.horizon))? else {
        return usage("check needs --ais or --generator");
    };
    let cert = measure_ais(&model, &gen, args.horizon, fclass)?;
    let chk = check_finite_bounds(&model, &gen, &cert, args.horizon, variant)?;
    let report = chk.report.as_ref().expect("finite check carries a report");
    let mut out = String::from("stage,value_gap,q_gap,policy_gap,alpha,policy_bound\n");
    for t in 0..args.horizon {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            t + 1,
            csv_number(chk.value_gap[t]),
            csv_number(chk.q_gap[t]),
            csv_number(chk.policy_gap[t]),
            csv_number(report.alpha[t]),
            csv_number(report.policy_bound[t])
        );
    }
    emit(&out, None)?;
    if chk.violations > 0 {
        return Err(Failure::Check(format!("{} bound violations", chk.violations)));
    }
    Ok(())
}

fn cmd_env(cmd: &EnvCommand) -> CliResult<()> {
    match cmd {
        EnvCommand::List => emit(&format!("{}\n", ais_core::envs::NAMES.join("\n")), None),
        EnvCommand::Export { name, output } => {
            let env = source::builtin(name)?;
            let mut text = ais_core::model::to_json(&env.model);
            text.push('\n');
            emit(&text, output.as_deref())
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Measure(a) => cmd_measure(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Check(a) => cmd_check(a),
        Command::Learn(a) => learn::cmd_learn(a),
        Command::Env { command } => cmd_env(command),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
