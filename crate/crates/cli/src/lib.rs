//! Experiment driver for the `growthlab` library: configuration, dispatch to
//! the scans, and `summary.json` / `rows.csv` emission.

use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

mod commands;
pub mod config;
pub mod report;

pub use config::{parse_args, Command, Experiment, ExperimentConfig, SpectralCheck, Target};
pub use report::{CsvTable, Report, Status, Verdict};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("experiment failed: {0}")]
    Experiment(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) => 2,
            _ => 4,
        }
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs one experiment on a worker pool of `config.threads` threads (the
/// global pool when unset). Nothing is written to disk.
pub fn run(config: &ExperimentConfig) -> Result<Report, CliError> {
    let targets = config.targets()?;
    let started_unix = now();
    let outcome = match config.threads {
        Some(0) => return Err(CliError::ConfigInvalid("--threads must be positive".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Experiment(e.to_string()))?
            .install(|| commands::dispatch(config, &targets))?,
        None => commands::dispatch(config, &targets)?,
    };
    Ok(Report {
        config: config.clone(),
        fields: outcome.fields,
        started_unix,
        finished_unix: now(),
        verdicts: outcome.verdicts,
        summary: outcome.summary,
        table: outcome.table,
        truncated: outcome.truncated,
    })
}
