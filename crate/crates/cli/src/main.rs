//! `qew`: simulate, bound, enumerate, verify and sweep from a JSON config.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;
use output::{require_dir, Outputs};

#[derive(Debug, Parser)]
#[command(
    name = "qew",
    version,
    about = "Interface depinning experiments and discrete oracle checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Existing directory for the output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Replaces the seed list and the oracle seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Velocity records per seed and an across-seed summary.
    Simulate,
    /// The lower bound V(F) over a force grid.
    Bound,
    /// Admissible profiles, minimal average velocity and Y for one instance.
    Enumerate,
    /// The oracle check suite.
    Verify,
    /// Measured velocity and V(F) over a force grid.
    Sweep,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let out_dir = cli
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("--out is required".into()))?;
    require_dir(out_dir)?;
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = cli.seed_override {
        config.override_seed(seed);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers: must be >= 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    let (outputs, passed): (Outputs, bool) = pool.install(|| match cli.command {
        Command::Simulate => commands::simulate(&config).map(|o| (o, true)),
        Command::Bound => commands::bound(&config).map(|o| (o, true)),
        Command::Enumerate => commands::enumerate(&config).map(|o| (o, true)),
        Command::Verify => commands::verify(&config),
        Command::Sweep => commands::sweep(&config).map(|o| (o, true)),
    })?;
    for path in outputs.write(out_dir)? {
        println!("{}", path.display());
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::Failed("one or more checks failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qew: {e}");
            e.exit_code()
        }
    }
}
