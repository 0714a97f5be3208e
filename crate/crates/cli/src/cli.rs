use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use heterojive::sim::Method;

#[derive(Debug, Parser)]
#[command(name = "jive", version, about = "Joint subspace estimation across heterogeneous views")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one synthetic data set and its ground truth from a config.
    Generate(GenerateArgs),
    /// Estimate the joint subspace from view files.
    Estimate(EstimateArgs),
    /// Compute data-driven view weights only.
    Weights(WeightsArgs),
    /// Run a replicated simulation grid.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of views; defaults to the first `k_grid` entry.
    #[arg(long)]
    pub num_views: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub replicate: usize,
}

#[derive(Debug, Args)]
pub struct ViewArgs {
    /// Glob matching one CSV per view, taken in natural order.
    #[arg(long)]
    pub views: String,
    /// Joint rank followed by one individual rank per view: `r,r1,...,rK`.
    #[arg(long)]
    pub ranks: String,
}

#[derive(Debug, Args)]
pub struct ReweightArgs {
    #[arg(long, default_value_t = 20)]
    pub t_max: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Re-estimate the plug-in maps after every reweighting step.
    #[arg(long)]
    pub refresh: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: ViewArgs,
    #[arg(long, default_value = "heterojive")]
    pub method: Method,
    /// Fixed weights `w1,...,wK` summing to one; HeteroJIVE and Stack-SVD only.
    #[arg(long)]
    pub weights: Option<String>,
    /// Ground-truth directory holding `U.csv`; prints the subspace error.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub reweight: ReweightArgs,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[command(flatten)]
    pub input: ViewArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub reweight: ReweightArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}
