use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "oneshotstl",
    version,
    about = "Streaming seasonal-trend decomposition"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a series into trend, seasonal and residual.
    Decompose(SeriesArgs),
    /// Decompose and score residuals with the n-sigma rule.
    Detect(SeriesArgs),
    /// Consume a series, then print seasonal-naive forecasts.
    Forecast(ForecastArgs),
    /// Measure per-point update latency across periods.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SeriesArgs {
    /// Samples per seasonal cycle.
    #[arg(long, conflicts_with = "auto_period")]
    pub period: Option<usize>,
    /// Estimate the period by autocorrelation.
    #[arg(long)]
    pub auto_period: bool,
    /// Sets both trend penalties.
    #[arg(long, conflicts_with = "tune_lambda")]
    pub lambda: Option<f64>,
    #[arg(long, conflicts_with = "tune_lambda")]
    pub lambda1: Option<f64>,
    #[arg(long, conflicts_with = "tune_lambda")]
    pub lambda2: Option<f64>,
    /// Pick λ from {1, 10, 100, 1000, 10000} on the init window.
    #[arg(long)]
    pub tune_lambda: bool,
    #[arg(long, default_value_t = 8)]
    pub iters: usize,
    /// Largest phase displacement tried by the shift search (capped at T − 1).
    #[arg(long, default_value_t = 20)]
    pub shift_window: usize,
    #[arg(long, default_value_t = 5.0)]
    pub nsigma: f64,
    /// Points used for the batch initialization (default 4·T).
    #[arg(long)]
    pub init_len: Option<usize>,
    /// Input files (default standard input). Several files need --output
    /// to name a directory.
    #[arg(long, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Output file, or directory when several inputs are given.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Emit each record as soon as its input line is read.
    #[arg(long)]
    pub stream: bool,
    /// Also emit the init window with its batch decomposition.
    #[arg(long)]
    pub emit_init: bool,
    /// Continue from a saved state instead of initializing.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Write the final state here.
    #[arg(long)]
    pub save_state: Option<PathBuf>,
    /// Worker threads for several input files.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Steps to forecast after the last input point.
    #[arg(long)]
    pub horizon: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Comma-separated periods.
    #[arg(long, value_delimiter = ',', default_values_t = oneshotstl::latency::DEFAULT_PERIODS)]
    pub periods: Vec<usize>,
    #[arg(long, default_value_t = 200_000)]
    pub points: usize,
    /// Leading fraction of points excluded from the statistics.
    #[arg(long, default_value_t = 0.05)]
    pub warmup: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 8)]
    pub iters: usize,
    #[arg(long, default_value_t = 20)]
    pub shift_window: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Time the full-rebuild reference recursion instead.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}
