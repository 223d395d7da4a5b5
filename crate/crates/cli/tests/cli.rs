use ais_core::envs;
use ais_core::planning::{csv_number, history_dp};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ais(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ais")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

const HELP_PAGES: [&[&str]; 10] = [
    &["--help"],
    &["solve", "--help"],
    &["measure", "--help"],
    &["bound", "--help"],
    &["compare", "--help"],
    &["check", "--help"],
    &["learn", "--help"],
    &["env", "--help"],
    &["env", "list", "--help"],
    &["env", "export", "--help"],
];

/// Set `UPDATE_GOLDEN=1` to rewrite the files after an intended change.
#[test]
fn help_matches_golden_files() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for args in HELP_PAGES {
        let o = ais(args);
        assert!(o.status.success());
        let name = format!("help-{}.txt", args[..args.len() - 1].join("-")).replace("help-.txt", "help.txt");
        let path = dir.join(name);
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &o.stdout).unwrap();
        }
        let golden = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        assert_eq!(stdout(&o), golden, "{}", path.display());
    }
}

#[test]
fn solve_finite_matches_history_dp() {
    let o = ais(&["solve", "--env", "tiger", "--horizon", "3"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let v = history_dp(&envs::tiger().model, 3).unwrap();
    assert_eq!(rows[0][0], "1");
    assert_eq!(rows[0][2], csv_number(v.stages[0].value[0]));
}

#[test]
fn solve_infinite_reports_residual() {
    let o = ais(&["solve", "--env", "tiger", "--infinite", "--ais", "belief-quant:n=20"]);
    assert!(o.status.success());
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    let residual: f64 = err.lines().find_map(|l| l.strip_prefix("residual,")).unwrap().parse().unwrap();
    assert!(residual < 1e-8);
    assert_eq!(csv_rows(&stdout(&o)).len(), 17);
}

#[test]
fn missing_model_file_is_usage_error() {
    let o = ais(&["solve", "--model", "/nonexistent/model.json", "--horizon", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("file not found"));
}

#[test]
fn exact_belief_certificate_is_zero() {
    let o = ais(&["measure", "--env", "tiger", "--ais", "exact", "--horizon", "3"]);
    assert!(o.status.success());
    for row in csv_rows(&stdout(&o)) {
        assert_eq!((row[1].as_str(), row[2].as_str()), ("0", "0"));
    }
}

#[test]
fn quantized_certificate_within_declared() {
    let o = ais(&[
        "measure", "--env", "tiger", "--ais", "belief-quant:n=5", "--horizon", "3", "--fclass", "bl",
        "--check-declared",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(csv_rows(&stdout(&o)).len(), 3);
}

#[test]
fn unknown_fclass_lists_allowed_values() {
    let o = ais(&["measure", "--env", "tiger", "--ais", "exact", "--horizon", "2", "--fclass", "hellinger"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("tv") && err.contains("kantorovich") && err.contains("bl") && err.contains("mmd"));
}

fn write_cert(dir: &Path, name: &str, stages: usize) -> PathBuf {
    let path = dir.join(name);
    let cert = serde_json::json!({
        "fclass": {"kind": "total_variation"},
        "ground_metric": "none",
        "eps": vec![0.0; stages],
        "delta": vec![0.0; stages],
        "kind": "measured",
        "stationary": false,
    });
    std::fs::write(&path, cert.to_string()).unwrap();
    path
}

#[test]
fn zero_certificate_gives_zero_alpha() {
    let dir = scratch("zero-cert");
    let values = dir.join("v.json");
    let o = ais(&[
        "solve", "--env", "tiger", "--horizon", "3", "--ais", "belief-quant:n=5", "--format", "json", "-o",
        values.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let cert = write_cert(&dir, "c.json", 3);
    let o = ais(&[
        "bound", "--certificate", cert.to_str().unwrap(), "--values", values.to_str().unwrap(), "--env",
        "tiger", "--ais", "belief-quant:n=5",
    ]);
    assert!(o.status.success());
    for row in csv_rows(&stdout(&o)) {
        assert_eq!((row[4].as_str(), row[5].as_str()), ("0", "0"));
    }
    let short = write_cert(&dir, "short.json", 2);
    let o = ais(&[
        "bound", "--certificate", short.to_str().unwrap(), "--values", values.to_str().unwrap(), "--env",
        "tiger", "--ais", "belief-quant:n=5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn abel_scenario_prints_both_bounds() {
    let o = ais(&["bound", "--scenario", "abel"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][..4], ["abel", "740", "20", &csv_number(20.0 / 740.0)]);
    let o = ais(&["bound", "--scenario", "abel", "--eps", "0.2"]);
    assert_eq!(csv_rows(&stdout(&o))[0][1], "1480");
}

#[test]
fn check_reports_no_violation() {
    let o = ais(&["check", "--env", "tiger", "--ais", "belief-quant:n=5", "--horizon", "3"]);
    assert_eq!(o.status.code(), Some(0));
    for row in csv_rows(&stdout(&o)) {
        let v: Vec<f64> = row[1..].iter().map(|x| x.parse().unwrap()).collect();
        assert!(v[0] <= v[3] + 1e-9 && v[2] <= v[4] + 1e-9);
    }
}

fn bandit_config(dir: &Path) -> PathBuf {
    let path = dir.join("bandit.toml");
    std::fs::write(
        &path,
        "env = \"bandit\"\nrollout-len = 5\niterations = 5000\nb0 = 2.0\neval_interval = 1000\n",
    )
    .unwrap();
    path
}

#[test]
fn learn_bandit_reaches_greedy_arm() {
    let dir = scratch("learn-bandit");
    let cfg = bandit_config(&dir);
    let out = dir.join("out");
    let o = ais(&[
        "learn", "--config", cfg.to_str().unwrap(), "--seeds", "0,1,2,3,4", "--jobs", "3", "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert!(row[4].parse::<f64>().unwrap() >= 0.95, "{row:?}");
    }
    let curve = std::fs::read_to_string(out.join("curve-seed2.csv")).unwrap();
    let single = ais(&["learn", "--config", cfg.to_str().unwrap(), "--seed", "2"]);
    assert_eq!(stdout(&single), curve);
    assert!(out.join("checkpoint-seed2.json").exists());
}

#[test]
fn learn_is_deterministic_and_flags_override_file() {
    let dir = scratch("learn-flags");
    let cfg = bandit_config(&dir);
    let run = |extra: &[&str]| {
        let mut args = vec!["learn", "--config", cfg.to_str().unwrap(), "--iterations", "200", "--eval-interval", "100"];
        args.extend_from_slice(extra);
        ais(&args)
    };
    let a = run(&["--seed", "7"]);
    let b = run(&["--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(csv_rows(&stdout(&a)).last().unwrap()[0], "200");
    assert_eq!(run(&["--lambda", "1.5"]).status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = scratch("learn-bad-key");
    let path = dir.join("bad.toml");
    std::fs::write(&path, "env = \"bandit\"\nlearning_rate = 0.1\n").unwrap();
    assert_eq!(ais(&["learn", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn env_export_round_trips() {
    for name in envs::NAMES {
        let o = ais(&["env", "export", name]);
        assert!(o.status.success());
        let m = ais_core::model::parse_model_str(&stdout(&o)).unwrap();
        assert_eq!(m, envs::by_name(name).unwrap().model);
    }
    assert_eq!(ais(&["env", "export", "rocksample"]).status.code(), Some(2));
}

#[test]
fn stationary_bound_from_value_iteration_output() {
    let dir = scratch("stationary-bound");
    let (vi, cert) = (dir.join("vi.json"), dir.join("c.json"));
    let spec = ["--env", "tiger", "--ais", "belief-quant:n=20"];
    let mut solve = vec!["solve", "--infinite", "--format", "json", "-o", vi.to_str().unwrap()];
    solve.extend(spec);
    assert!(ais(&solve).status.success());
    let mut measure = vec!["measure", "--infinite", "--horizon", "20", "-o", cert.to_str().unwrap()];
    measure.extend(spec);
    assert!(ais(&measure).status.success());
    let mut bound = vec!["bound", "--infinite", "--certificate", cert.to_str().unwrap(), "--values", vi.to_str().unwrap()];
    bound.extend(spec);
    let o = ais(&bound);
    assert!(o.status.success());
    let row = &csv_rows(&stdout(&o))[0];
    let v: Vec<f64> = row.iter().map(|x| x.parse().unwrap()).collect();
    let alpha = (v[1] + 0.95 * v[3] * v[2]) / 0.05;
    assert!((v[4] - alpha).abs() < 1e-6 * alpha && (v[5] - 2.0 * v[4]).abs() < 1e-6 * alpha);
}
