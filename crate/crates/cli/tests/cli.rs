//! End-to-end tests of the `kwe` binary: exit codes, artifact layout,
//! byte-level determinism, and config validation.
//!
//! Each test drives the compiled binary in its own scratch directory under
//! the cargo test tmpdir, so tests stay independent and re-runnable.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const DIAGNOSTICS_HEADER: &str =
    "t,dt,mass,energy,entropy,min_N,max_N,sup_DN,seminorm_beta,extrapolated_fraction";

const EVOLVE_CONFIG: &str = r#"
experiment = "evolve"
seed = 3

[params]
beta = 0.0

[grid]
omega_min = 0.3
omega_max = 3.0
nodes = 48

[quadrature]
panels_per_decade = 2
order = 6

[initial]
kind = "equilibrium"
c1 = 1.0
c2 = 0.0
form = "n"
extrapolation = "power-law-fit"

[evolve]
horizon = 0.05
snapshot_times = [0.025]
"#;

const ORACLE_CONFIG: &str = r#"
experiment = "oracle"
seed = 5

[params]
beta = 0.0

[initial]
kind = "bump"
center = 1.0
width = 0.35
amplitude = 1.0
form = "n"

[oracle]
omega = 1.0
delta = 1e-2
samples = 10000
"#;

fn case_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn kwe(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kwe"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("binary should exit, not be killed")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json_file(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// `run.json` with the wall-clock field removed: everything that must be
/// reproducible across reruns of the same config and seed.
fn run_json_deterministic_part(dir: &Path) -> serde_json::Value {
    let mut v = json_file(&dir.join("run.json"));
    let obj = v.as_object_mut().unwrap();
    assert!(obj.remove("wall_clock_seconds").is_some());
    v
}

#[test]
fn evolve_writes_artifacts_and_reruns_identically() {
    let dir = case_dir("evolve-determinism");
    let config = write_config(&dir, EVOLVE_CONFIG);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let run = kwe(&config, out, &[]);
        assert_eq!(exit_code(&run), 0, "stderr: {}", stderr(&run));
    }

    let diag = fs::read_to_string(out_a.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().next().unwrap(), DIAGNOSTICS_HEADER);
    assert!(diag.lines().count() > 2, "expected several accepted steps");

    let run = json_file(&out_a.join("run.json"));
    assert_eq!(run["experiment"], "evolve");
    assert_eq!(run["seed"], 3);
    assert_eq!(run["result"]["status"], "completed");
    let hash = run["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));

    let snaps = ["snap_t0.000000.csv", "snap_t0.025000.csv", "snap_t0.050000.csv"];
    for name in snaps {
        let snap = fs::read_to_string(out_a.join(name)).unwrap();
        assert_eq!(snap.lines().next().unwrap(), "omega,value,form,beta");
        assert_eq!(snap.lines().count(), 49, "{name} should hold one row per node");
    }

    // Identical config and seed must reproduce every artifact byte for byte
    // (modulo the wall-clock entry of run.json).
    for name in snaps.iter().copied().chain(["diagnostics.csv"]) {
        assert_eq!(
            fs::read(out_a.join(name)).unwrap(),
            fs::read(out_b.join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
    assert_eq!(
        run_json_deterministic_part(&out_a),
        run_json_deterministic_part(&out_b)
    );
}

#[test]
fn evolve_blow_up_exits_two() {
    let dir = case_dir("evolve-blow-up");
    let config = write_config(
        &dir,
        r#"
experiment = "evolve"

[params]
beta = 0.0

[grid]
omega_min = 0.1
omega_max = 10.0
nodes = 48

[quadrature]
panels_per_decade = 2
order = 6

[initial]
kind = "bump"
center = 1.0
width = 0.5
amplitude = 50.0
form = "N"
floor = 1e-4
extrapolation = "constant"

[controller]
dt_init = 1.0
dt_min = 1.0
dt_max = 1.0

[evolve]
horizon = 10.0
"#,
    );
    let out = dir.join("out");
    let run = kwe(&config, &out, &[]);
    assert_eq!(exit_code(&run), 2, "stderr: {}", stderr(&run));
    let result = &json_file(&out.join("run.json"))["result"];
    assert_eq!(result["status"], "blow-up-suspected");
    assert!(result["final_time"].as_f64().unwrap() < 10.0);
}

#[test]
fn missing_grid_section_is_a_config_error() {
    let dir = case_dir("missing-grid");
    let mut text = String::new();
    for line in EVOLVE_CONFIG.lines() {
        if line.starts_with("[grid]") {
            text.push_str("[grid_misnamed]\n");
        } else {
            text.push_str(line);
            text.push('\n');
        }
    }
    let config = write_config(&dir, &text);
    let run = kwe(&config, &dir.join("out"), &[]);
    assert_eq!(exit_code(&run), 64);
    assert!(stderr(&run).contains("grid"), "stderr: {}", stderr(&run));
}

#[test]
fn verify_writes_flat_check_map() {
    let dir = case_dir("verify-resonance");
    let config = write_config(
        &dir,
        r#"
experiment = "verify"

[verify]
suites = ["resonance"]
"#,
    );
    let out = dir.join("out");
    let run = kwe(&config, &out, &[]);
    assert_eq!(exit_code(&run), 0, "stderr: {}", stderr(&run));
    let stdout = String::from_utf8_lossy(&run.stdout).into_owned();
    assert!(stdout.contains("ok "), "stdout: {stdout}");

    let checks = json_file(&out.join("verify.json"));
    let map = checks.as_object().unwrap();
    assert!(!map.is_empty());
    for (name, entry) in map {
        assert!(entry["value"].is_number(), "{name} has no value");
        assert!(entry["tolerance"].is_number(), "{name} has no tolerance");
        assert_eq!(entry["pass"], true, "{name} failed: {entry}");
    }
}

#[test]
fn unknown_verify_suite_is_a_config_error() {
    let dir = case_dir("verify-unknown-suite");
    let config = write_config(
        &dir,
        r#"
experiment = "verify"

[verify]
suites = ["no-such-suite"]
"#,
    );
    let run = kwe(&config, &dir.join("out"), &[]);
    assert_eq!(exit_code(&run), 64);
    assert!(
        stderr(&run).contains("no-such-suite"),
        "stderr: {}",
        stderr(&run)
    );
}

#[test]
fn oracle_is_deterministic_and_seed_flag_wins() {
    let dir = case_dir("oracle-determinism");
    let config = write_config(&dir, ORACLE_CONFIG);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let run = kwe(&config, out, &[]);
        assert_eq!(exit_code(&run), 0, "stderr: {}", stderr(&run));
    }
    assert_eq!(
        fs::read(out_a.join("oracle.json")).unwrap(),
        fs::read(out_b.join("oracle.json")).unwrap()
    );

    let estimate = json_file(&out_a.join("oracle.json"));
    for key in ["omega", "beta", "delta", "mean", "std_error"] {
        assert!(estimate[key].is_number(), "oracle.json lacks {key}");
    }
    assert_eq!(estimate["seed"], 5);
    assert!(estimate["samples"].as_u64().unwrap() >= 10_000);

    // A different seed must change the estimate; the --seed flag overrides
    // the seed in the config file.
    let out_c = dir.join("c");
    let run = kwe(&config, &out_c, &["--seed", "11"]);
    assert_eq!(exit_code(&run), 0, "stderr: {}", stderr(&run));
    let other = json_file(&out_c.join("oracle.json"));
    assert_eq!(other["seed"], 11);
    assert_eq!(json_file(&out_c.join("run.json"))["seed"], 11);
    assert_ne!(other["mean"], estimate["mean"]);
}

#[test]
fn oracle_rejects_undersized_sample_budget() {
    let dir = case_dir("oracle-small-budget");
    let config = write_config(&dir, &ORACLE_CONFIG.replace("samples = 10000", "samples = 5000"));
    let run = kwe(&config, &dir.join("out"), &[]);
    assert_eq!(exit_code(&run), 64);
    assert!(stderr(&run).contains("samples"), "stderr: {}", stderr(&run));
}

#[test]
fn concentration_reports_norm_curve_and_slope() {
    let dir = case_dir("concentration-smoke");
    let config = write_config(
        &dir,
        r#"
experiment = "concentration"

[params]
beta = 0.0

[concentration]
p = 2.0
eps = [0.1, 0.05]
budget = 100000000
"#,
    );
    let out = dir.join("out");
    let run = kwe(&config, &out, &[]);
    assert_eq!(exit_code(&run), 0, "stderr: {}", stderr(&run));

    let table = fs::read_to_string(out.join("concentration.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "eps,c_norm,f_norm");
    assert_eq!(lines.count(), 2);
    for idx in 0..2 {
        let curve = fs::read_to_string(out.join(format!("curve_{idx}.csv"))).unwrap();
        assert_eq!(curve.lines().next().unwrap(), "omega,value");
    }
    let summary = json_file(&out.join("concentration.json"));
    assert_eq!(summary["p"], 2.0);
    assert!(summary["slope"].is_number());
    assert_eq!(summary["points"].as_array().unwrap().len(), 2);
}

#[test]
fn sweep_runs_children_and_indexes_them() {
    let dir = case_dir("sweep-children");
    let config = write_config(
        &dir,
        &format!(
            "{EVOLVE_CONFIG}\n[sweep]\nexperiment = \"evolve\"\nruns = [\n  {{ seed = 1 }},\n  {{ params = {{ beta = 0.25, epsilon = 1e-3 }} }},\n]\n"
        ),
    );
    let out = dir.join("out");
    let run = kwe(&config, &out, &["sweep"]);
    assert_eq!(exit_code(&run), 0, "stderr: {}", stderr(&run));

    let index = fs::read_to_string(out.join("index.csv")).unwrap();
    let lines: Vec<&str> = index.lines().collect();
    assert_eq!(lines[0], "run,exit,directory,summary,overrides");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("run_000,0,run_000,"));
    assert!(lines[2].starts_with("run_001,0,run_001,"));

    for (idx, seed) in [(0, 1u64), (1, 3)] {
        let child = json_file(&out.join(format!("run_{idx:03}/run.json")));
        assert_eq!(child["experiment"], "evolve");
        assert_eq!(child["seed"], seed);
        assert_eq!(child["result"]["status"], "completed");
    }
    let parent = json_file(&out.join("run.json"));
    assert_eq!(parent["result"]["children"], 2);
    assert_eq!(parent["result"]["failures"], 0);
}

#[test]
fn sweep_without_runs_is_a_config_error() {
    let dir = case_dir("sweep-empty");
    let config = write_config(
        &dir,
        &format!("{EVOLVE_CONFIG}\n[sweep]\nexperiment = \"evolve\"\nruns = []\n"),
    );
    let run = kwe(&config, &dir.join("out"), &["sweep"]);
    assert_eq!(exit_code(&run), 64);
}

#[test]
fn positional_experiment_overrides_config() {
    let dir = case_dir("positional-override");
    let config = write_config(
        &dir,
        &format!("{EVOLVE_CONFIG}\n[verify]\nsuites = [\"resonance\"]\n"),
    );
    let out = dir.join("out");
    let run = kwe(&config, &out, &["verify"]);
    assert_eq!(exit_code(&run), 0, "stderr: {}", stderr(&run));
    assert!(out.join("verify.json").exists());
    assert!(!out.join("diagnostics.csv").exists());
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let dir = case_dir("unknown-experiment");
    let config = write_config(&dir, EVOLVE_CONFIG);
    let run = kwe(&config, &dir.join("out"), &["frobnicate"]);
    assert_eq!(exit_code(&run), 64);
    assert!(
        stderr(&run).contains("frobnicate"),
        "stderr: {}",
        stderr(&run)
    );
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = case_dir("missing-config");
    let run = kwe(&dir.join("nope.toml"), &dir.join("out"), &[]);
    assert_eq!(exit_code(&run), 64);
}

#[test]
fn invalid_threads_env_is_a_config_error() {
    let dir = case_dir("threads-env");
    let config = write_config(&dir, EVOLVE_CONFIG);
    let run = Command::new(env!("CARGO_BIN_EXE_kwe"))
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .env("THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(exit_code(&run), 64);
    assert!(stderr(&run).contains("THREADS"), "stderr: {}", stderr(&run));
}

#[test]
fn help_prints_usage_and_exits_zero() {
    let run = Command::new(env!("CARGO_BIN_EXE_kwe"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(exit_code(&run), 0);
    assert!(String::from_utf8_lossy(&run.stdout).contains("Usage"));
}
