//! The experiments behind the command line: time evolution, verification
//! suites, Monte Carlo oracle estimates, concentration probes, and
//! parameter sweeps.  Each experiment fills one output directory with its
//! data files plus a `run.json` that echoes the full configuration, the
//! seed, and a content hash, so any result can be reproduced from its
//! output directory alone.

use std::path::Path;
use std::time::Instant;

use kwe_core::analytic::AnalyticSpectrum;
use kwe_core::checks;
use kwe_core::collision::EvaluatorKind;
use kwe_core::concentration::{self, ConcentrationOutcome};
use kwe_core::evolution::{self, TrajectoryStatus};
use kwe_core::field::{SpectralForm, SpectrumField};
use kwe_core::io;
use kwe_core::numerics::fit_line;
use kwe_core::oracle;
use kwe_core::params::ModelParams;
use kwe_core::KweError;
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};
use toml::Value;

use crate::config::{
    merge_value, parse_extrapolation, parse_form, AppError, AppResult, Config, Section,
};

/// Experiment names the dispatcher understands.
pub const EXPERIMENTS: &[&str] = &["evolve", "verify", "oracle", "concentration", "sweep"];

/// Run the experiment a configuration selects.  Returns the process exit
/// code (0 success, 1 failed checks or failed children, 2 suspected
/// blow-up) and a one-line summary of the headline result.
pub fn dispatch(cfg: &Config) -> AppResult<(i32, String)> {
    match cfg.experiment.as_str() {
        "evolve" => run_evolve(cfg),
        "verify" => run_verify(cfg),
        "oracle" => run_oracle(cfg),
        "concentration" => run_concentration(cfg),
        "sweep" => run_sweep(cfg),
        other => Err(AppError::config(format!(
            "unknown experiment {other:?} (expected one of: {})",
            EXPERIMENTS.join(", ")
        ))),
    }
}

fn runtime(context: &str, e: impl std::fmt::Display) -> AppError {
    AppError::runtime(format!("{context}: {e}"))
}

fn ensure_dir(dir: &Path) -> AppResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| AppError::runtime(format!("cannot create {}: {e}", dir.display())))
}

// ---------------------------------------------------------------------
// run.json
// ---------------------------------------------------------------------

/// TOML -> JSON with object keys in sorted order, so serialized configs
/// and their hashes are stable across runs.
fn toml_to_json(v: &Value) -> Json {
    match v {
        Value::String(s) => Json::String(s.clone()),
        Value::Integer(i) => Json::from(*i),
        Value::Float(f) => Json::from(*f),
        Value::Boolean(b) => Json::Bool(*b),
        Value::Datetime(d) => Json::String(d.to_string()),
        Value::Array(a) => Json::Array(a.iter().map(toml_to_json).collect()),
        Value::Table(t) => Json::Object(
            t.iter()
                .map(|(k, v)| (k.clone(), toml_to_json(v)))
                .collect(),
        ),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_json(path: &Path, value: &Json) -> AppResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::runtime(format!("cannot serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| AppError::runtime(format!("cannot write {}: {e}", path.display())))
}

/// Write the reproducibility record.  `wall_clock_seconds` is the only
/// field that varies between reruns of an identical configuration.
fn write_run_json(dir: &Path, cfg: &Config, result: Json, wall_clock: f64) -> AppResult<()> {
    let config_json = toml_to_json(cfg.raw());
    let fingerprint = json!({
        "config": &config_json,
        "experiment": cfg.experiment,
        "seed": cfg.seed,
    });
    let encoded = serde_json::to_string(&fingerprint)
        .map_err(|e| AppError::runtime(format!("cannot hash config: {e}")))?;
    let run = json!({
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "config_hash": sha256_hex(encoded.as_bytes()),
        "wall_clock_seconds": wall_clock,
        "config": config_json,
        "result": result,
    });
    write_json(&dir.join("run.json"), &run)
}

// ---------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------

fn analytic_spectrum(sec: &Section) -> AppResult<AnalyticSpectrum> {
    let spectrum = match sec.str("kind")? {
        "equilibrium" => AnalyticSpectrum::RayleighJeans {
            c1: sec.f64_or("c1", 1.0)?,
            c2: sec.f64_or("c2", 0.0)?,
        },
        "power-law" => AnalyticSpectrum::PowerLaw {
            exponent: sec.f64("exponent")?,
        },
        "bump" => AnalyticSpectrum::GaussianBumpInLogOmega {
            center: sec.f64("center")?,
            width: sec.f64("width")?,
            amplitude: sec.f64("amplitude")?,
        },
        "kz-mass" => AnalyticSpectrum::KolmogorovZakharovMass,
        "kz-energy" => AnalyticSpectrum::KolmogorovZakharovEnergy,
        other => {
            return Err(AppError::config(format!(
                "initial.kind: unknown profile {other:?} (expected equilibrium, \
                 power-law, bump, kz-mass, or kz-energy)"
            )))
        }
    };
    spectrum
        .validate()
        .map_err(|e| AppError::config(format!("initial: {e}")))
}

/// Build the gridded initial state: either a spectrum file or a tabulated
/// closed-form profile (optionally lifted by a constant floor).
fn initial_field(cfg: &Config, params: &ModelParams) -> AppResult<SpectrumField> {
    let sec = cfg.section("initial")?;
    let extrapolation = parse_extrapolation(
        sec.str_or("extrapolation", "constant")?,
        "initial.extrapolation",
    )?;
    if let Some(path) = sec.opt_str("path")? {
        let (field, file_beta) = io::read_spectrum(Path::new(path), extrapolation)
            .map_err(|e| AppError::config(format!("initial.path: {e}")))?;
        if file_beta != params.beta() {
            return Err(AppError::config(format!(
                "initial.path: file declares beta = {file_beta}, but params.beta = {}",
                params.beta()
            )));
        }
        return Ok(field);
    }
    let spectrum = analytic_spectrum(&sec)?;
    let form = parse_form(sec.str_or("form", "N")?, "initial.form")?;
    let floor = sec.f64_or("floor", 0.0)?;
    if !(floor.is_finite() && floor >= 0.0) {
        return Err(AppError::config(format!(
            "initial.floor: must be finite and nonnegative, got {floor}"
        )));
    }
    let grid = cfg.grid()?;
    let beta = params.beta();
    SpectrumField::tabulate(grid, form, extrapolation, |w| floor + spectrum.value(w, beta))
        .map_err(|e| AppError::config(format!("initial: {e}")))
}

// ---------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------

fn run_evolve(cfg: &Config) -> AppResult<(i32, String)> {
    let start = Instant::now();
    let params = cfg.model_params()?;
    let controller = cfg.controller()?;
    let quad = cfg.quadrature(&params)?;
    let field0 = initial_field(cfg, &params)?;
    let sec = cfg.section("evolve")?;
    let horizon = sec.f64("horizon")?;
    let snapshot_times = sec.f64_array_or("snapshot_times", &[])?;
    let evaluator = EvaluatorKind::parse(sec.str_or("evaluator", "split")?)
        .map_err(|e| AppError::config(format!("evolve.evaluator: {e}")))?;

    ensure_dir(&cfg.out_dir)?;
    let trajectory = evolution::integrate(
        &field0,
        &params,
        horizon,
        &controller,
        &quad,
        evaluator,
        &snapshot_times,
    )
    .map_err(|e| match e {
        KweError::Invalid(_) | KweError::Domain(_) => AppError::config(format!("evolve: {e}")),
        e => runtime("evolve", e),
    })?;

    io::write_diagnostics(&cfg.out_dir.join("diagnostics.csv"), &trajectory.steps)
        .map_err(|e| runtime("diagnostics.csv", e))?;
    for (t, snap) in trajectory.times.iter().zip(&trajectory.snapshots) {
        let name = format!("snap_t{t:.6}.csv");
        io::write_spectrum(&cfg.out_dir.join(&name), snap, params.beta())
            .map_err(|e| runtime(&name, e))?;
    }

    let status = match trajectory.status {
        TrajectoryStatus::Completed => "completed",
        TrajectoryStatus::BlowUpSuspected => "blow-up-suspected",
    };
    let last = trajectory.final_record();
    let summary = format!(
        "status={status} t={:.6} mass={:.6e} energy={:.6e}",
        last.t, last.mass, last.energy
    );
    let result = json!({
        "status": status,
        "final_time": last.t,
        "accepted_steps": trajectory.accepted,
        "rejected_error": trajectory.rejected_error,
        "rejected_positivity": trajectory.rejected_positivity,
        "final_mass": last.mass,
        "final_energy": last.energy,
        "extrapolated_fraction": trajectory.extrapolated_fraction,
        "snapshot_times": trajectory.times,
    });
    write_run_json(&cfg.out_dir, cfg, result, start.elapsed().as_secs_f64())?;
    let code = match trajectory.status {
        TrajectoryStatus::Completed => 0,
        TrajectoryStatus::BlowUpSuspected => 2,
    };
    Ok((code, summary))
}

// ---------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------

fn run_verify(cfg: &Config) -> AppResult<(i32, String)> {
    let start = Instant::now();
    let suites = match cfg.opt_section("verify")? {
        Some(sec) => sec.str_array_or("suites", &["all"])?,
        None => vec!["all".to_string()],
    };
    let mut names: Vec<String> = Vec::new();
    for s in suites {
        if !names.contains(&s) {
            names.push(s);
        }
    }

    let mut report = serde_json::Map::new();
    for suite in &names {
        let results = checks::run_suite(suite, cfg.seed).map_err(|e| match e {
            KweError::UnknownSuite(_) => AppError::config(format!("verify.suites: {e}")),
            e => runtime("verify", e),
        })?;
        for check in results {
            println!(
                "{:6} {}  value {:.3e}  tolerance {:.3e}",
                if check.pass { "ok" } else { "FAIL" },
                check.name,
                check.value,
                check.tolerance
            );
            report.insert(
                check.name,
                json!({
                    "value": check.value,
                    "tolerance": check.tolerance,
                    "pass": check.pass,
                }),
            );
        }
    }
    let total = report.len();
    let failures = report
        .values()
        .filter(|v| v["pass"] != Json::Bool(true))
        .count();

    ensure_dir(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("verify.json"), &Json::Object(report))?;
    let summary = format!("checks={total} failures={failures}");
    let result = json!({ "checks": total, "failures": failures });
    write_run_json(&cfg.out_dir, cfg, result, start.elapsed().as_secs_f64())?;
    Ok((if failures == 0 { 0 } else { 1 }, summary))
}

// ---------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------

/// Minimum Monte Carlo budget per sign family accepted for production
/// estimates; tiny budgets give error bars too wide to report.
const ORACLE_MIN_SAMPLES: u64 = 10_000;

fn run_oracle(cfg: &Config) -> AppResult<(i32, String)> {
    let start = Instant::now();
    let params = cfg.model_params()?;
    let sec = cfg.section("oracle")?;
    let omega = sec.f64("omega")?;
    let delta = sec.f64_or("delta", 1e-3)?;
    let samples = sec.u64_or("samples", 250_000)?;
    if samples < ORACLE_MIN_SAMPLES {
        return Err(AppError::config(format!(
            "oracle.samples: need at least {ORACLE_MIN_SAMPLES} draws per family, got {samples}"
        )));
    }

    let init = cfg.section("initial")?;
    if init.opt_str("path")?.is_some() {
        return Err(AppError::config(
            "initial.path: the sampling oracle needs a closed-form spectrum (give initial.kind)",
        ));
    }
    let form = parse_form(init.str_or("form", "n")?, "initial.form")?;
    if form != SpectralForm::Occupation {
        return Err(AppError::config(
            "initial.form: the sampling oracle integrates occupation spectra (form \"n\")",
        ));
    }
    let floor = init.f64_or("floor", 0.0)?;
    if floor != 0.0 {
        return Err(AppError::config(
            "initial.floor: the sampling oracle needs unlifted closed-form data (floor must be 0)",
        ));
    }
    let spectrum = analytic_spectrum(&init)?;

    let estimate = oracle::mc_collision(&spectrum, omega, &params, delta, samples, cfg.seed)
        .map_err(|e| match e {
            KweError::Domain(_) | KweError::EmptySupport => {
                AppError::config(format!("oracle: {e}"))
            }
            e => runtime("oracle", e),
        })?;

    ensure_dir(&cfg.out_dir)?;
    let report = json!({
        "omega": omega,
        "beta": params.beta(),
        "delta": estimate.delta,
        "samples": estimate.samples,
        "mean": estimate.mean,
        "std_error": estimate.std_error,
        "seed": cfg.seed,
    });
    write_json(&cfg.out_dir.join("oracle.json"), &report)?;
    let summary = format!(
        "mean={:.6e} std_error={:.6e}",
        estimate.mean, estimate.std_error
    );
    write_run_json(&cfg.out_dir, cfg, report, start.elapsed().as_secs_f64())?;
    Ok((0, summary))
}

// ---------------------------------------------------------------------
// concentration
// ---------------------------------------------------------------------

fn run_concentration(cfg: &Config) -> AppResult<(i32, String)> {
    let start = Instant::now();
    let params = cfg.model_params()?;
    let sec = cfg.section("concentration")?;
    let p = sec.f64_or("p", 2.0)?;
    let eps = sec.f64_array("eps")?;
    if eps.is_empty() {
        return Err(AppError::config(
            "concentration.eps: need at least one concentration scale",
        ));
    }
    let budget = sec.u64_or("budget", 1_000_000_000)? as usize;

    let outcomes =
        concentration::concentration_sweep(p, &eps, &params, budget).map_err(|e| match e {
            KweError::Domain(_) | KweError::CannotResolve { .. } => {
                AppError::config(format!("concentration: {e}"))
            }
            e => runtime("concentration", e),
        })?;

    ensure_dir(&cfg.out_dir)?;
    let mut table = String::from("eps,c_norm,f_norm\n");
    for o in &outcomes {
        table.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            o.eps, o.c_norm, o.f_norm
        ));
    }
    std::fs::write(cfg.out_dir.join("concentration.csv"), table)
        .map_err(|e| runtime("concentration.csv", e))?;
    for (idx, o) in outcomes.iter().enumerate() {
        let name = format!("curve_{idx}.csv");
        io::write_xy(&cfg.out_dir.join(&name), ("omega", "value"), &o.curve)
            .map_err(|e| runtime(&name, e))?;
    }

    let slope = fitted_slope(&outcomes);
    let points: Vec<Json> = outcomes
        .iter()
        .map(|o| json!({ "eps": o.eps, "c_norm": o.c_norm, "f_norm": o.f_norm }))
        .collect();
    let report = json!({ "p": p, "slope": slope, "points": points });
    write_json(&cfg.out_dir.join("concentration.json"), &report)?;
    let summary = match slope {
        Some(s) => format!("slope={s:.4}"),
        None => "slope=undefined".to_string(),
    };
    write_run_json(&cfg.out_dir, cfg, report, start.elapsed().as_secs_f64())?;
    Ok((0, summary))
}

/// Log-log slope of the output norm against the concentration scale;
/// defined only for two or more scales with nonzero norms.
fn fitted_slope(outcomes: &[ConcentrationOutcome]) -> Option<f64> {
    if outcomes.len() < 2 || outcomes.iter().any(|o| !(o.c_norm > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = outcomes.iter().map(|o| o.eps.ln()).collect();
    let ys: Vec<f64> = outcomes.iter().map(|o| o.c_norm.ln()).collect();
    Some(fit_line(&xs, &ys).0)
}

// ---------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------

fn run_sweep(cfg: &Config) -> AppResult<(i32, String)> {
    let start = Instant::now();
    let sec = cfg.section("sweep")?;
    let child_experiment = sec.str("experiment")?;
    if child_experiment == "sweep" {
        return Err(AppError::config("sweep.experiment: sweeps do not nest"));
    }
    if !EXPERIMENTS.contains(&child_experiment) {
        return Err(AppError::config(format!(
            "sweep.experiment: unknown experiment {child_experiment:?}"
        )));
    }
    let runs = sec.array("runs")?;
    if runs.is_empty() {
        return Err(AppError::config("sweep.runs: need at least one run"));
    }
    for (idx, over) in runs.iter().enumerate() {
        if !over.is_table() {
            return Err(AppError::config(format!(
                "sweep.runs[{idx}]: must be a table of overrides"
            )));
        }
    }

    ensure_dir(&cfg.out_dir)?;
    let mut index = String::from("run,exit,directory,summary,overrides\n");
    let mut failures = 0usize;
    for (idx, over) in runs.iter().enumerate() {
        let run_id = format!("run_{idx:03}");
        let child_dir = cfg.out_dir.join(&run_id);
        let (code, summary) = match run_child(cfg, child_experiment, over, &child_dir) {
            Ok(outcome) => outcome,
            Err(AppError::Config(m)) => (64, format!("config error: {m}")),
            Err(AppError::Runtime(m)) => (1, format!("error: {m}")),
        };
        if code != 0 {
            failures += 1;
        }
        let overrides = serde_json::to_string(&toml_to_json(over))
            .map_err(|e| runtime("sweep overrides", e))?;
        index.push_str(&format!(
            "{},{code},{},{},{}\n",
            csv_field(&run_id),
            csv_field(&run_id),
            csv_field(&summary),
            csv_field(&overrides)
        ));
        println!("{run_id}: exit {code} ({summary})");
    }
    std::fs::write(cfg.out_dir.join("index.csv"), index)
        .map_err(|e| runtime("index.csv", e))?;

    let summary = format!("children={} failures={failures}", runs.len());
    let result = json!({
        "experiment": child_experiment,
        "children": runs.len(),
        "failures": failures,
    });
    write_run_json(&cfg.out_dir, cfg, result, start.elapsed().as_secs_f64())?;
    Ok((if failures == 0 { 0 } else { 1 }, summary))
}

/// Build and run one sweep child: the parent configuration minus the
/// `sweep` table, with the child experiment and effective seed written in
/// and the run's override table deep-merged on top.
fn run_child(
    cfg: &Config,
    experiment: &str,
    over: &Value,
    child_dir: &Path,
) -> AppResult<(i32, String)> {
    let mut root = cfg.raw().clone();
    let table = root.as_table_mut().expect("config root is a table");
    table.remove("sweep");
    table.insert("experiment".into(), Value::String(experiment.into()));
    let mut seed_override = None;
    match i64::try_from(cfg.seed) {
        Ok(seed) => {
            table.insert("seed".into(), Value::Integer(seed));
        }
        // A command-line seed beyond the integer range of the config format
        // cannot be written back; carry it as an override instead.
        Err(_) => seed_override = Some(cfg.seed),
    }
    merge_value(&mut root, over);
    if over.as_table().is_some_and(|t| t.contains_key("seed")) {
        seed_override = None;
    }
    let child = Config::from_value(root, None, Some(child_dir), seed_override)?;
    dispatch(&child)
}

/// Quote a CSV field when it contains a comma, quote, or newline.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
