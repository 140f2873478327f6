//! Experiment harness: parses a JSON config, runs one of the report
//! commands and writes CSV/JSON tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

pub use commands::{execute, Command, Context};
pub use config::{Format, LoadedConfig};
pub use error::CliError;
pub use output::Report;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: u64,
}

/// Loads the config, runs `command`, writes the report files and returns
/// the report. Invariant violations are left in `report.violations`.
pub fn run(command: Command, config: &Path, opts: &RunOptions) -> Result<Report, CliError> {
    let cfg = LoadedConfig::from_path(config)?;
    let ctx = Context::build(&cfg, opts.seed)?;
    let report = execute(command, &ctx)?;
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qsm-out"));
    let format = opts.format.or(cfg.config.output.format).unwrap_or(Format::Both);
    report.write(&dir, format)?;
    Ok(report)
}
