//! Command-line front end for the matmeans hierarchical-Bayes library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use matmeans_cli::commands;
use matmeans_cli::config::{KeyValues, RunConfig};

#[derive(Parser)]
#[command(
    name = "matmeans",
    about = "Hierarchical Bayes for the exchangeable matrix-of-means model: \
             hyperprior diagnostics, MCMC sampling, and risk simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat key-value config file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config's `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the propriety gate of `sample` (loudly logged).
    #[arg(long, global = true)]
    force: bool,

    /// Worker threads for grid cells / replicates.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the configured hyperprior: posterior propriety and
    /// admissibility of the posterior mean.
    Check,
    /// Run one MCMC chain on the configured data; write chain + summary.
    Sample,
    /// Average-nonmove benchmark over a (k, m) grid with synthetic data.
    Table1,
    /// Numerical divergence probes and spherical-trend diagnostics.
    Probe,
    /// Frequentist risk comparison: maximum likelihood vs hierarchical Bayes.
    Risk,
}

fn build_config(cli: &Cli) -> Result<RunConfig, commands::CliError> {
    let mut kv = match &cli.config {
        Some(path) => KeyValues::from_file(path)?,
        None => KeyValues::default(),
    };
    if let Some(seed) = cli.seed {
        kv.set("seed", seed.to_string());
    }
    if let Some(out) = &cli.out {
        kv.set("out", out.display().to_string());
    }
    if let Some(w) = cli.workers {
        kv.set("workers", w.to_string());
    }
    if cli.force {
        kv.set("force", "true".to_string());
    }
    Ok(RunConfig::resolve(kv)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match cli.command {
        Command::Check => commands::check::run(&cfg),
        Command::Sample => commands::sample::run(&cfg),
        Command::Table1 => commands::table1::run(&cfg),
        Command::Probe => commands::probe::run(&cfg),
        Command::Risk => commands::risk::run(&cfg),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
