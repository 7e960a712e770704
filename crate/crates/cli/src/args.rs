use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use minkdetect::stats::KlDirection;
use minkdetect::Norm;

#[derive(Debug, Parser)]
#[command(
    name = "minkdetect",
    version,
    about = "Minkowski-distance hallucination analysis and detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic train/test embedding files.
    Synth(SynthArgs),
    /// Compare hallucinated and genuine intra-class distance distributions.
    Analyze(AnalyzeArgs),
    /// Classify test embeddings with class-conditional KDEs.
    Detect(DetectArgs),
    /// Run analysis and detection over a grid of cells.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Output directory, replaced atomically on success.
    #[arg(long)]
    pub out: PathBuf,

    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads, 0 for one per core.
    #[arg(long, env = "MINKDETECT_THREADS", default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Training responses per question per class (comma list).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub r: Vec<usize>,

    /// Test responses per question per class. Overrides the standard pairing with r.
    #[arg(long)]
    pub t: Option<usize>,

    /// Keywords per response (comma list).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub n: Vec<u8>,

    /// Minkowski orders (comma list).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub p: Vec<Norm>,

    /// Full grid: every standard r, n in 1..=10, p in {0.5, 1, 2}.
    #[arg(long, conflicts_with_all = ["r", "n", "p"])]
    pub all: bool,

    /// Number of questions. Defaults to the count found in the training file.
    #[arg(long)]
    pub q: Option<usize>,

    /// Required vector dimension. Defaults to the file manifest or first record.
    #[arg(long)]
    pub dim: Option<usize>,

    /// Process (r, n) groups concurrently.
    #[arg(long)]
    pub parallel_cells: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KlDirectionArg {
    HallGen,
    GenHall,
}

impl From<KlDirectionArg> for KlDirection {
    fn from(d: KlDirectionArg) -> Self {
        match d {
            KlDirectionArg::HallGen => KlDirection::HallGen,
            KlDirectionArg::GenHall => KlDirection::GenHall,
        }
    }
}

#[derive(Debug, Args)]
pub struct KlArgs {
    /// Histogram bins for the KL estimate.
    #[arg(long, default_value_t = minkdetect::stats::DEFAULT_KL_BINS)]
    pub kl_bins: usize,

    /// Probability floor for empty bins.
    #[arg(long, default_value_t = minkdetect::stats::DEFAULT_KL_EPSILON)]
    pub kl_epsilon: f64,

    #[arg(long, value_enum, default_value_t = KlDirectionArg::HallGen)]
    pub kl_direction: KlDirectionArg,
}

#[derive(Debug, Args)]
pub struct KdeArgs {
    /// Bandwidth rule: scott, silverman or fixed.
    #[arg(long)]
    pub kde_rule: Option<String>,

    /// Fixed bandwidth; implies --kde-rule fixed.
    #[arg(long)]
    pub kde_bandwidth: Option<f64>,

    /// Write fitted models to this directory.
    #[arg(long)]
    pub save_models: Option<PathBuf>,

    /// Read models from this directory instead of fitting them.
    #[arg(long, conflicts_with_all = ["kde_rule", "kde_bandwidth"])]
    pub load_models: Option<PathBuf>,

    /// Write per-test-point scores for every cell.
    #[arg(long)]
    pub dump_scores: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Training embeddings (JSONL).
    #[arg(long, visible_alias = "train")]
    pub embeddings: PathBuf,

    /// Write the intra-class distance samples to this directory.
    #[arg(long)]
    pub dump_distances: Option<PathBuf>,

    #[command(flatten)]
    pub grid: GridArgs,

    #[command(flatten)]
    pub kl: KlArgs,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Training embeddings (JSONL).
    #[arg(long, visible_alias = "embeddings")]
    pub train: PathBuf,

    /// Test embeddings (JSONL).
    #[arg(long)]
    pub test: PathBuf,

    /// Write the intra-class distance samples to this directory.
    #[arg(long)]
    pub dump_distances: Option<PathBuf>,

    #[command(flatten)]
    pub grid: GridArgs,

    #[command(flatten)]
    pub kde: KdeArgs,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Training embeddings (JSONL).
    #[arg(long, visible_alias = "embeddings")]
    pub train: PathBuf,

    /// Test embeddings (JSONL).
    #[arg(long)]
    pub test: PathBuf,

    /// Write the intra-class distance samples to this directory.
    #[arg(long)]
    pub dump_distances: Option<PathBuf>,

    #[command(flatten)]
    pub grid: GridArgs,

    #[command(flatten)]
    pub kl: KlArgs,

    #[command(flatten)]
    pub kde: KdeArgs,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Vector dimension.
    #[arg(long, default_value_t = 8)]
    pub d: usize,

    #[arg(long, default_value_t = 16)]
    pub q: u32,

    #[arg(long, default_value_t = 8)]
    pub r: u32,

    /// Test responses per question per class. Defaults to the standard pairing with r.
    #[arg(long)]
    pub t: Option<u32>,

    /// Keyword counts to emit (comma list).
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "1,2,3,4,5,6,7,8,9,10")]
    pub n: Vec<u8>,

    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub hall_mean: f64,

    #[arg(long, default_value_t = 2.0)]
    pub hall_sd: f64,

    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gen_mean: f64,

    #[arg(long, default_value_t = 1.0)]
    pub gen_sd: f64,

    #[command(flatten)]
    pub common: CommonArgs,
}
