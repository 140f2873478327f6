use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qsm_cli::{run, CliError, Command, Format, RunOptions};

#[derive(Parser)]
#[command(name = "qsm", version, about = "Mean entropy, pressure and typical projections on finite spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed for random-element sweeps.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Sub {
    /// Mean-entropy sweep and subadditivity check.
    Entropy(Common),
    /// Typical-projection report per volume.
    Typicality(Common),
    /// Lower- and upper-deviation inequality chains.
    Deviation(Common),
    /// Finite-volume pressure sweep with oracle gaps.
    Pressure(Common),
    /// Variational inequality table and Gibbs lower bound.
    Variational(Common),
    /// Structural checks of the chain model.
    Validate(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Entropy(c) => (Command::Entropy, c),
        Sub::Typicality(c) => (Command::Typicality, c),
        Sub::Deviation(c) => (Command::Deviation, c),
        Sub::Pressure(c) => (Command::Pressure, c),
        Sub::Variational(c) => (Command::Variational, c),
        Sub::Validate(c) => (Command::Validate, c),
    };
    if let Some(k) = common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot configure {k} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let opts = RunOptions { out: common.out, format: common.format, seed: common.seed };
    let result = run(command, &common.config, &opts).and_then(|report| {
        for line in &report.lines {
            println!("{line}");
        }
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        if report.violations.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invariant(report.violations))
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
