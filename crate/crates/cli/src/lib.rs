//! Reproducible experiment runs over `brc-core`: solve an agent, simulate datasets,
//! infer boundedness parameters, and export belief traces. Every command writes a
//! manifest with content hashes of its outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod tables;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "brc", version, about = "Bounded rational control: solve, simulate, infer, trace")]
pub struct Cli {
    /// Upper bound on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal policies and export value tables and policy curves.
    Solve(SolveArgs),
    /// Sample trajectories from a solved agent in the configured environment.
    Simulate(SimulateArgs),
    /// Sample the posterior over descriptive parameters given a dataset.
    Infer(InferArgs),
    /// Export the agent's belief trajectory for every trajectory in a dataset.
    Trace(TraceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// Lattice resolution (overrides the config).
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Sup-norm stopping tolerance (overrides the config).
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// JSON run config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory written by `solve`.
    #[arg(long)]
    pub agent: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of trajectories (overrides the config).
    #[arg(long)]
    pub n: Option<usize>,
    /// Master seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON-lines dataset.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated targets: log_alpha, log_beta, log_eta, incorrect_reward.
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    /// Run the reward-learning baseline instead of the descriptive targets.
    #[arg(long)]
    pub baseline_irl: bool,
    /// Independent chains, run in parallel.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub agent: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> CliResult<manifest::RunManifest> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Solve(args) => commands::solve(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Infer(args) => commands::infer(&args),
        Command::Trace(args) => commands::trace(&args),
    })
}
