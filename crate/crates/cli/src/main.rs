//! Command-line front end: configuration, orchestration, and reproducible
//! artifacts for the simulation and verification harnesses.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Outcome;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "sgs",
    about = "Spectral Galerkin simulation and statistical verification of stochastic evolution equations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the JSON run configuration (or a manifest embedding one).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configuration's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Overrides the configuration's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the model contracts and write the assumption report.
    CheckModel,
    /// Integrate one seeded trajectory and write its artifacts.
    Simulate,
    /// Monte Carlo uniform-moment ladder over Galerkin dimensions.
    Ensemble,
    /// Pairwise same-noise convergence diagnostic.
    Convergence,
    /// Same-noise uniqueness twins.
    Uniqueness,
    /// Stochastic-integral convergence ladder.
    Integral,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: could not size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }

    let Some(config_path) = cli.config.as_ref() else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(2);
    };
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(out) = cli.out {
        config.output_dir = out.display().to_string();
    }
    let out_dir = PathBuf::from(&config.output_dir);

    let result = match cli.command {
        Command::CheckModel => commands::cmd_check_model(&config, &out_dir),
        Command::Simulate => commands::cmd_simulate(&config, &out_dir),
        Command::Ensemble => commands::cmd_ensemble(&config, &out_dir),
        Command::Convergence => commands::cmd_convergence(&config, &out_dir),
        Command::Uniqueness => commands::cmd_uniqueness(&config, &out_dir),
        Command::Integral => commands::cmd_integral(&config, &out_dir),
    };

    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::VerdictFail(msg)) => {
            eprintln!("verdict: {msg}");
            ExitCode::from(1)
        }
        Ok(Outcome::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
