//! Command-line argument definitions.

use std::num::NonZeroUsize;
use std::path::PathBuf;

use cellfclust::datagen::Preset;
use cellfclust::tuning::DEFAULT_WA_THRESHOLD;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Fuzzy clustering with cellwise outlier detection and imputation.
#[derive(Debug, Parser)]
#[command(name = "cellfclust", version, about, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    /// The worker-thread cap requested by the active subcommand, if any.
    pub fn thread_cap(&self) -> Option<NonZeroUsize> {
        match &self.command {
            Command::Fit(a) => a.io.threads,
            Command::Tune(a) => a.io.threads,
            Command::Datagen(_) => None,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to a data file and write the result bundle.
    Fit(FitArgs),
    /// Scan cluster counts and trimming levels; write plot-ready diagnostics.
    Tune(TuneArgs),
    /// Generate a synthetic data set with known ground truth.
    Datagen(DatagenArgs),
}

/// Flags shared by every command that reads a data file and writes a bundle.
#[derive(Debug, Clone, Args)]
pub struct IoArgs {
    /// Input data file: delimited text with a header row.
    pub input: PathBuf,

    /// Token marking a missing cell.
    #[arg(long, default_value = "NA")]
    pub na_token: String,

    /// Field delimiter (one ASCII character).
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,

    /// Directory the output bundle is written into (created if absent).
    #[arg(long)]
    pub out: PathBuf,

    /// Cap the number of worker threads (default: one per core).
    #[arg(long)]
    pub threads: Option<NonZeroUsize>,
}

/// Column-wise preprocessing applied before fitting.
#[derive(Debug, Clone, Args)]
pub struct PreprocessArgs {
    /// Center each column at its median and divide by its median absolute
    /// deviation (observed cells only) before fitting.
    #[arg(long)]
    pub robust_standardize: bool,

    /// Multiply every value by this factor after any standardization.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

/// Model and optimizer settings shared by fit and tune.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Expected fraction of unreliable cells per variable, in [0, 0.5].
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,

    /// Bound on the ratio between the largest and smallest covariance
    /// eigenvalues across clusters.
    #[arg(long, default_value_t = 1e12)]
    pub c: f64,

    /// Fuzziness exponent; 1 fits crisp assignments.
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,

    /// Fix all cluster weights to 1/K instead of estimating them.
    #[arg(long)]
    pub equal_weights: bool,

    /// Stop once the objective gain per iteration drops below this.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,

    /// Iteration cap per start.
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,

    /// Number of random initializations.
    #[arg(long, default_value_t = 20)]
    pub starts: usize,

    /// Base random seed; start s draws from seed + s.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub io: IoArgs,

    /// Number of clusters.
    #[arg(long)]
    pub k: usize,

    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub preprocess: PreprocessArgs,

    /// Best-membership level under which a unit counts as weakly assigned.
    #[arg(long, default_value_t = DEFAULT_WA_THRESHOLD)]
    pub wa_threshold: f64,
}

/// Which tuning diagnostic to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TuneMode {
    /// Attained objective at every (K, alpha) grid point -> curves.csv.
    Curves,
    /// Per-variable score-curve knees across trimming levels -> knee.csv.
    Knee,
    /// Hard/weak assignment percentages over the grid -> stats.csv.
    #[value(name = "ha_wa")]
    HaWa,
    /// Sorted per-variable cell scores at one fitted state -> delta.csv.
    Delta,
}

impl TuneMode {
    pub fn name(&self) -> &'static str {
        match self {
            TuneMode::Curves => "curves",
            TuneMode::Knee => "knee",
            TuneMode::HaWa => "ha_wa",
            TuneMode::Delta => "delta",
        }
    }
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub io: IoArgs,

    /// Which diagnostic to produce.
    #[arg(long, value_enum)]
    pub mode: TuneMode,

    /// Cluster count for the knee and delta modes.
    #[arg(long)]
    pub k: Option<usize>,

    /// Comma-separated cluster counts for the curves and ha_wa grids.
    #[arg(long, value_delimiter = ',')]
    pub k_list: Vec<usize>,

    /// Comma-separated trimming levels for curves, knee, and ha_wa scans.
    #[arg(long, value_delimiter = ',')]
    pub alpha_list: Vec<f64>,

    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub preprocess: PreprocessArgs,

    /// Best-membership level under which a unit counts as weakly assigned.
    #[arg(long, default_value_t = DEFAULT_WA_THRESHOLD)]
    pub wa_threshold: f64,
}

#[derive(Debug, Args)]
pub struct DatagenArgs {
    /// Built-in design to generate.
    #[arg(long, value_parser = parse_preset, conflicts_with = "spec",
          required_unless_present = "spec")]
    pub preset: Option<Preset>,

    /// JSON file describing the data set to generate.
    #[arg(long)]
    pub spec: Option<PathBuf>,

    /// Overrides the seed carried by the preset or spec file.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Directory the generated files are written into (created if absent).
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: cellfclust::Error| e.to_string())
}
