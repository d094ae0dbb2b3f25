//! `coupler`: runs a configured pipeline into a result bundle, lists the pipelines,
//! and verifies existing bundles.
//!
//! Exit codes: 0 success, 1 verification failure or I/O error, 2 invalid input,
//! 3 numerical failure.

mod bundle;
mod config;
mod pipelines;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Pipeline};
use pipelines::{RunError, LISTINGS};

#[derive(Parser)]
#[command(name = "coupler", version, about = "Driven-resonator coupler experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline described by a JSON config.
    Run {
        config: PathBuf,
        /// Worker threads for the sweep points; defaults to all cores.
        #[arg(long)]
        workers: Option<usize>,
        /// Output root; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List pipelines, or describe one.
    List { pipeline: Option<String> },
    /// Re-check a result bundle directory.
    Verify { dir: PathBuf },
}

const EXIT_FAIL: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, workers, out } => run(&config, workers, out),
        Command::List { pipeline } => list(pipeline.as_deref()),
        Command::Verify { dir } => verify(&dir),
    }
}

fn run(path: &Path, workers: Option<usize>, out: Option<PathBuf>) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", path.display());
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    if workers == Some(0) {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(EXIT_INVALID);
    }
    if let Some(n) = workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    }
    let start = Instant::now();
    let mut outcome = match pipelines::run(&cfg) {
        Ok(o) => o,
        Err(RunError::Validation(e)) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
        Err(RunError::Numerical(e)) => {
            eprintln!("error: numerical failure: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    outcome.log.push(format!("elapsed {:.2} s", start.elapsed().as_secs_f64()));
    let root = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
    let dir = root.join(cfg.pipeline.name()).join(cfg.hash());
    let summary = match bundle::write(&dir, &cfg, &text, &outcome) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_FAIL);
        }
    };
    let passed = summary.checks.iter().filter(|c| c.pass).count();
    println!("{}", dir.display());
    println!("checks: {passed} of {} within tolerance", summary.checks.len());
    for w in &summary.warnings {
        println!("warning: {w}");
    }
    if summary.partial {
        for f in &summary.failures {
            eprintln!("failed {f}");
        }
        return ExitCode::from(EXIT_NUMERICAL);
    }
    ExitCode::SUCCESS
}

fn list(name: Option<&str>) -> ExitCode {
    let selected: Vec<_> = match name {
        None => LISTINGS.iter().collect(),
        Some(n) => match Pipeline::from_name(n) {
            Some(p) => LISTINGS.iter().filter(|l| l.pipeline == p).collect(),
            None => {
                eprintln!("error: unknown pipeline `{n}`");
                return ExitCode::from(EXIT_INVALID);
            }
        },
    };
    println!("{:<14} {:<15} {:<10} {:<9} params", "pipeline", "figure", "sweeps", "runtime");
    for l in selected {
        println!(
            "{:<14} {:<15} {:<10} {:<9} {}",
            l.pipeline.name(),
            l.figure,
            l.pipeline.sweep_variable(),
            l.runtime,
            l.params
        );
    }
    ExitCode::SUCCESS
}

fn verify(dir: &Path) -> ExitCode {
    match bundle::verify(dir) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            if report.problems == 0 {
                println!("verify: pass");
                ExitCode::SUCCESS
            } else {
                println!("verify: fail ({} problems)", report.problems);
                ExitCode::from(EXIT_FAIL)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
