use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use critscan::powerlaw::{Resampling, XMaxPolicy};
use critscan::ZeroPolicy;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "critscan",
    version,
    about = "Signatures of statistical criticality in sets of binary time series",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every analysis step on one input and write a summary with verdicts
    Pipeline(PipelineArgs),
    /// Entropy pair H[s], H[K] versus subset size and the undersampling threshold
    Significance(SignificanceArgs),
    /// Response function R(T) of the rescaled distribution and its peak
    Response(ResponseArgs),
    /// Bootstrap KS test of Zipf's law for configuration ranks
    Zipf(ZipfArgs),
    /// Entropy versus log-likelihood and the slope of their linear relation
    Linearity(LinearityArgs),
    /// Fit a pairwise maximum-entropy model by regularized pseudo-likelihood
    Infer(InferArgs),
    /// Sample configurations from a pairwise model with Glauber dynamics
    Simulate(SimulateArgs),
    /// Exact response curve and divergence benchmark of the periodic Ising lattice
    Ising(IsingArgs),
    /// Peak location over a sliding window of rows
    Sliding(SlidingArgs),
    /// Two-replica overlap and log-likelihood variances of a pairwise model
    Overlap(OverlapArgs),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Pipeline(a) => &a.common,
            Command::Significance(a) => &a.common,
            Command::Response(a) => &a.common,
            Command::Zipf(a) => &a.common,
            Command::Linearity(a) => &a.common,
            Command::Infer(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Ising(a) => &a.common,
            Command::Sliding(a) => &a.common,
            Command::Overlap(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        self != Format::Json
    }

    pub fn json(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    /// Spins when every entry is ±1, prices otherwise
    Auto,
    Prices,
    Returns,
    Spins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum XMaxArg {
    /// Number of distinct observed configurations
    Observed,
    /// All 2^N configurations
    All,
}

impl From<XMaxArg> for XMaxPolicy {
    fn from(a: XMaxArg) -> Self {
        match a {
            XMaxArg::Observed => XMaxPolicy::ObservedDistinct,
            XMaxArg::All => XMaxPolicy::AllConfigurations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResamplingArg {
    Plain,
    Reranked,
}

impl From<ResamplingArg> for Resampling {
    fn from(a: ResamplingArg) -> Self {
        match a {
            ResamplingArg::Plain => Resampling::Plain,
            ResamplingArg::Reranked => Resampling::Reranked,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Flat `key = value` file of flag defaults; command-line flags win
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Directory receiving the output files
    #[arg(long, default_value = "critscan-out")]
    #[serde(skip)]
    pub output_dir: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// CSV with one column per entity and an optional leading `t` column
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_enum, default_value_t = InputKind::Auto)]
    pub input_kind: InputKind,

    /// Spin assigned to a zero return: carry, down, up or drop-row
    #[arg(long, default_value_t = ZeroPolicy::Carry)]
    pub zero_policy: ZeroPolicy,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeedArg {
    /// Seed of every random stream
    #[arg(long, env = "CRITSCAN_SEED")]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Lower end of the log-spaced temperature grid
    #[arg(long, default_value_t = 0.2)]
    pub t_min: f64,

    #[arg(long, default_value_t = 5.0)]
    pub t_max: f64,

    #[arg(long, default_value_t = 200)]
    pub t_points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub grid: GridArgs,

    /// Random subsets per size
    #[arg(long, default_value_t = 50)]
    pub subsets: usize,

    /// Bootstrap replicates of the Zipf test
    #[arg(long, default_value_t = 1000)]
    pub n_boot: usize,

    /// Penalty weight of the pseudo-likelihood fit
    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,

    /// Side of the periodic Ising benchmark lattice
    #[arg(long, default_value_t = 3)]
    pub lattice: usize,

    /// Equilibration sweeps of the cross-check simulation
    #[arg(long, default_value_t = 1000)]
    pub n_equil: usize,

    /// Energy bins of the linearity step
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SignificanceArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub seed: SeedArg,

    #[arg(long, default_value_t = 100)]
    pub subsets: usize,

    /// Largest subset size (default: all entities)
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ResponseArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,

    /// Seed of the subset draws; required with --size
    #[arg(long, env = "CRITSCAN_SEED")]
    pub seed: Option<u64>,

    /// Also scan T_max over random subsets of sizes 2..=SIZE
    #[arg(long)]
    pub size: Option<usize>,

    #[arg(long, default_value_t = 100)]
    pub subsets: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ZipfArgs {
    #[command(flatten)]
    pub common: Common,

    /// Spin CSV, or a single column of positive integers tested directly
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_enum, default_value_t = InputKind::Auto)]
    pub input_kind: InputKind,

    #[arg(long, default_value_t = ZeroPolicy::Carry)]
    pub zero_policy: ZeroPolicy,

    #[command(flatten)]
    pub seed: SeedArg,

    #[arg(long, default_value_t = 1000)]
    pub n_boot: usize,

    /// Test a random subset of this many entities instead of all of them
    #[arg(long)]
    pub size: Option<usize>,

    /// Upper bound of the rank support
    #[arg(long, value_enum, default_value_t = XMaxArg::Observed)]
    pub x_max_policy: XMaxArg,

    /// Upper bound for an integer sample (default: its maximum)
    #[arg(long)]
    pub x_max: Option<u32>,

    /// Treatment of synthetic rank samples
    #[arg(long, value_enum, default_value_t = ResamplingArg::Reranked)]
    pub resampling: ResamplingArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LinearityArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, default_value_t = 30)]
    pub bins: usize,

    /// Restrict the fit to bins with -U at or above this value
    #[arg(long)]
    pub fit_min: Option<f64>,

    #[arg(long)]
    pub fit_max: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InferArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,

    /// Convergence threshold on the gradient max-norm
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,

    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub seed: SeedArg,

    /// Model JSON as written by `infer`
    #[arg(long)]
    pub model: PathBuf,

    /// Temperature of the chain
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,

    /// Recorded Monte Carlo steps, one row each
    #[arg(long, default_value_t = 2560)]
    pub rows: usize,

    #[arg(long, default_value_t = 1000)]
    pub n_equil: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IsingArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridArgs,

    /// Side L of the L x L periodic lattice
    #[arg(long, default_value_t = 3)]
    pub lattice: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SlidingArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,

    /// Window length is 2^(N + WINDOW_EXP) rows
    #[arg(long, default_value_t = 2)]
    pub window_exp: usize,

    /// Rows between consecutive windows
    #[arg(long, default_value_t = 1)]
    pub step: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OverlapArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub grid: GridArgs,

    #[arg(long)]
    pub model: PathBuf,

    /// Recorded steps per replica and temperature
    #[arg(long, default_value_t = 10_000)]
    pub rows: usize,

    #[arg(long, default_value_t = 1000)]
    pub n_equil: usize,
}
