//! Configuration-driven front end to the `cpnlab` experiments.

pub mod config;
pub mod experiments;
pub mod record;

use std::io::Write;

pub use config::{validate_config, ConfigError, Experiment, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, Outcome};
pub use record::{parse_record, Record};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigError>),
    #[error("experiment failed: {0}")]
    Run(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Validates `text`, runs it on a pool of `workers` threads and writes the
/// records to `out`. The worker count never changes the output bytes.
pub fn run_config_text(text: &str, workers: usize, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let cfg = validate_config(text).map_err(CliError::Config)?;
    log::info!("running {} with seed {}", cfg.kind.name(), cfg.seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Run(e.to_string()))?;
    let outcome = pool.install(|| run_experiment(&cfg)).map_err(CliError::Run)?;
    for r in &outcome.records {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    log::info!("wrote {} records", outcome.records.len());
    Ok(outcome)
}
