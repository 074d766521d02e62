//! Command-line driver for the kinetic wave equation laboratory.
//!
//! ```text
//! kwe [experiment] --config <path> [--out <dir>] [--seed <u64>]
//! ```
//!
//! The experiment (`evolve`, `verify`, `oracle`, `concentration`, or
//! `sweep`) comes from the command line or from the config's `experiment`
//! field.  Exit codes: 0 success, 1 runtime error or failed checks,
//! 2 suspected blow-up of a time evolution, 64 configuration error.
//! Identical configurations and seeds produce byte-identical output files,
//! except for the wall-clock field of `run.json`.

mod config;
mod experiments;

use std::path::PathBuf;

use clap::Parser;
use config::{AppError, AppResult, Config};

/// Exit code for configuration and usage errors.
const EXIT_CONFIG: i32 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "kwe",
    version,
    about = "Numerical laboratory for the MMT kinetic wave equation"
)]
struct Cli {
    /// Experiment to run: evolve, verify, oracle, concentration, or sweep
    /// (overrides the config's `experiment` field).
    experiment: Option<String>,

    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory (overrides the config's `output.dir`; default "out").
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Random seed (overrides the config's `seed`; default 0).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; any other parse
            // failure is a usage error and shares the configuration-error
            // exit code so it cannot be mistaken for a blow-up report.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(AppError::Config(msg)) => {
            eprintln!("config error: {msg}");
            EXIT_CONFIG
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn execute(cli: Cli) -> AppResult<i32> {
    init_threads()?;
    let cfg = Config::load(
        &cli.config,
        cli.experiment.as_deref(),
        cli.out.as_deref(),
        cli.seed,
    )?;
    let (code, summary) = experiments::dispatch(&cfg)?;
    println!("{}: {summary} -> {}", cfg.experiment, cfg.out_dir.display());
    Ok(code)
}

/// Honor the THREADS environment variable as a cap on worker threads;
/// the default is one worker per core.
fn init_threads() -> AppResult<()> {
    let Ok(raw) = std::env::var("THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| AppError::Config(format!("THREADS must be a positive integer, got {raw:?}")))?;
    if threads == 0 {
        return Err(AppError::Config("THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| AppError::Runtime(format!("cannot configure the thread pool: {e}")))
}
