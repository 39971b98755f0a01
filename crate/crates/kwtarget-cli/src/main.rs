//! Command-line frontend for keyword targeting optimization: synthetic
//! dataset generation, posterior estimation, the branch-and-bound
//! optimizer and its baselines, report collation, and small-instance
//! verification against the exhaustive oracle.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use config::RunConfig;

#[derive(Parser)]
#[command(name = "kwtarget", version, about = "Keyword selection and matching optimizer")]
struct Cli {
    /// Seed for all randomized steps (falls back to KWTARGET_SEED, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic campaign dataset with a ground-truth sidecar.
    Synth {
        /// Benchmark preset: `s` (5 ad-groups × 10 keywords) or `l`
        /// (34 ad-groups, 627 keywords).
        #[arg(long, default_value = "s")]
        benchmark: String,
        /// Override the number of logged days per keyword.
        #[arg(long)]
        days: Option<usize>,
    },
    /// Estimate per-ad-group posteriors from a dataset.
    Estimate {
        #[arg(long)]
        data: PathBuf,
    },
    /// Optimize keyword targeting across the budget sweep.
    Optimize {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        posterior: PathBuf,
        /// Restrict the sweep to these budgets (repeatable).
        #[arg(long)]
        budget: Vec<f64>,
    },
    /// Run one baseline strategy across the budget sweep.
    Baseline {
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        data: PathBuf,
        /// Posterior file; required for BASE6 and BASE7.
        #[arg(long)]
        posterior: Option<PathBuf>,
        #[arg(long)]
        budget: Vec<f64>,
    },
    /// Collate solution reports into the four figure-style CSV tables.
    Report {
        /// Directory containing report_*.json files.
        #[arg(long)]
        runs: PathBuf,
    },
    /// Verify the solver against exhaustive enumeration on a small
    /// instance truncated from the dataset.
    Oracle {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        posterior: PathBuf,
        /// Keywords to keep (at most 12).
        #[arg(long, default_value_t = 8)]
        keywords: usize,
        #[arg(long)]
        budget: Option<f64>,
    },
}

/// Errors carry an exit class: 2 for validation problems (bad input,
/// bad flags, malformed files), 3 for runtime failures.
#[derive(Debug)]
pub struct CliError {
    kind: ErrorKind,
    message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
enum ErrorKind {
    Validation,
    Runtime,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> CliError {
        CliError { kind: ErrorKind::Validation, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> CliError {
        CliError { kind: ErrorKind::Runtime, message: message.into() }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Validation => 2,
            ErrorKind::Runtime => 3,
        }
    }
}

#[derive(Serialize)]
struct ErrorJson<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: ErrorKind,
    message: &'a str,
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("KWTARGET_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| CliError::validation(format!("KWTARGET_SEED '{v}' is not a u64"))),
        Err(_) => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<(), CliError> {
        let seed = resolve_seed(cli.seed)?;
        let run_cfg = RunConfig::load(cli.config.as_deref())?;
        std::fs::create_dir_all(&cli.out)
            .map_err(|e| CliError::runtime(format!("cannot create {:?}: {e}", cli.out)))?;
        match cli.command {
            Command::Synth { benchmark, days } => {
                commands::synth(&cli.out, seed, &benchmark, days)
            }
            Command::Estimate { data } => commands::estimate(&cli.out, seed, &run_cfg, &data),
            Command::Optimize { data, posterior, budget } => {
                commands::optimize(&cli.out, seed, &run_cfg, &data, &posterior, &budget)
            }
            Command::Baseline { strategy, data, posterior, budget } => commands::baseline(
                &cli.out,
                seed,
                &run_cfg,
                &strategy,
                &data,
                posterior.as_deref(),
                &budget,
            ),
            Command::Report { runs } => commands::report(&cli.out, &runs),
            Command::Oracle { data, posterior, keywords, budget } => {
                commands::oracle(&cli.out, seed, &run_cfg, &data, &posterior, keywords, budget)
            }
        }
    })();

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let json = serde_json::to_string(&ErrorJson {
                error: ErrorBody { kind: err.kind, message: &err.message },
            })
            .unwrap_or_else(|_| format!("{{\"error\":{{\"message\":\"{}\"}}}}", err.message));
            eprintln!("{json}");
            ExitCode::from(err.exit_code())
        }
    }
}
