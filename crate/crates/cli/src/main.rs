//! `lcop`: simulate, fit and compare two-class latent-class ordinal probit
//! models from the command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or configuration,
//! 3 numerical failure.

mod commands;
mod config;
mod error;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "lcop", version, about = "Bayesian latent-class ordinal probit estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known truth.
    Simulate(SimulateArgs),
    /// Fit a model by MCMC and summarize the posterior.
    Fit(FitArgs),
    /// Class-conditional effects of moving one ordinal-layer covariate.
    Effects(EffectsArgs),
    /// Per-draw average class-conditional category probabilities.
    Avgprob(AvgProbArgs),
    /// Marginal likelihoods and Bayes factors of several specifications.
    Compare(CompareArgs),
    /// Autocorrelations and effective sample sizes of a draws file.
    Diag(DiagArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in design (1: separated class means, 2: overlapping class means).
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub setting: Option<u32>,
    /// JSON simulation design.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Overrides the design's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the design's sample size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Collapsed,
    Full,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// JSON configuration; defaults apply to every omitted field.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "collapsed")]
    pub sampler: SamplerArg,
    /// Overrides the configuration's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EffectsArgs {
    /// `draws.csv` written by `fit` (its manifest must sit beside it).
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Ordinal-layer covariate column name, e.g. `x2`.
    #[arg(long)]
    pub covariate: String,
    /// Move the covariate by this amount instead of one standard deviation.
    #[arg(long, conflicts_with = "set", allow_hyphen_values = true)]
    pub shift: Option<f64>,
    /// Move every observation from the first value to the second, e.g. `0,1`.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    pub set: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AvgProbArgs {
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// One configuration per candidate specification (repeat the flag).
    #[arg(long = "config", required = true, num_args = 1)]
    pub configs: Vec<PathBuf>,
    /// Master seed; model `i` runs with a seed derived from it and `i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagArgs {
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate::run(&a),
        Command::Fit(a) => commands::fit::run(&a),
        Command::Effects(a) => commands::effects::run(&a),
        Command::Avgprob(a) => commands::avgprob::run(&a),
        Command::Compare(a) => commands::compare::run(&a),
        Command::Diag(a) => commands::diag::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
