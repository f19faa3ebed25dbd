use std::path::PathBuf;

use binemb_core::autoencoder::BinarizeMode;
use binemb_core::Method;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "binemb",
    version,
    about = "Binary sentence codes: fit, encode, search and evaluate"
)]
pub struct Cli {
    /// Seed for every random choice (training, projections, sampling).
    #[arg(long, global = true, env = "BINEMB_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Log more to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a clustered synthetic embedding corpus.
    Synth(SynthArgs),
    /// Fit a binarizer and save it.
    Fit(FitArgs),
    /// Binarize embeddings with a saved model.
    Encode(EncodeArgs),
    /// Exact k-nearest-neighbor search over codes or embeddings.
    Knn(KnnArgs),
    /// Score codes against gold pairs and a nearest-neighbor oracle.
    Eval(EvalArgs),
    /// Time Hamming against cosine pair scoring.
    Bench(BenchArgs),
    /// Fit, encode and evaluate over a grid of methods, widths and lambda_sp.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10_000)]
    pub points: usize,
    #[arg(long, default_value_t = 512)]
    pub dim: usize,
    #[arg(long, default_value_t = 50)]
    pub clusters: usize,
    /// Noise standard deviation around each cluster center.
    #[arg(long, default_value_t = 0.3)]
    pub spread: f64,
    /// Embeddings file to write.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write a scored pair file.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub n_pairs: usize,
    /// Fraction of sampled pairs drawn from the same cluster.
    #[arg(long, default_value_t = 0.5)]
    pub same_fraction: f64,
    /// Also write one cluster id per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Deterministic,
    Stochastic,
}

impl From<ModeArg> for BinarizeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Deterministic => BinarizeMode::Deterministic,
            ModeArg::Stochastic => BinarizeMode::Stochastic,
        }
    }
}

/// Hyperparameters shared by `fit` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Weight of the semantic-preserving term (ae-sp only; default 0.8).
    #[arg(long)]
    pub lambda_sp: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Thresholding used while training the autoencoder.
    #[arg(long, value_enum, default_value_t = ModeArg::Deterministic)]
    pub mode: ModeArg,
    /// Stop when the epoch-mean loss improves by less than this fraction.
    #[arg(long, default_value_t = 1e-3)]
    pub early_stop: f64,
    /// Always run every epoch.
    #[arg(long)]
    pub no_early_stop: bool,
    /// Hard-threshold value s (ht only).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub threshold: f32,
    /// Pick the hard threshold from {0, 0.01, 0.1} by Spearman correlation
    /// on these validation pairs instead of using --threshold.
    #[arg(long)]
    pub validation_pairs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Embeddings file (BEMB).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Model file to write (BMDL).
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    /// Code width. Defaults to 2048, or the input width for ht.
    #[arg(long)]
    pub bits: Option<usize>,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Write the per-step training losses as JSON lines.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(short, long)]
    pub model: PathBuf,
    #[arg(short, long)]
    pub input: PathBuf,
    /// Codes file to write (BCOD).
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct KnnArgs {
    /// Codes (BCOD) or embeddings (BEMB) to search.
    #[arg(short, long)]
    pub database: PathBuf,
    /// Query file of the same kind. Defaults to the database itself, in
    /// which case each row's own entry is skipped.
    #[arg(short, long)]
    pub queries: Option<PathBuf>,
    #[arg(short, long, default_value_t = 10)]
    pub k: usize,
    /// Keep self-matches when querying the database against itself.
    #[arg(long)]
    pub include_self: bool,
    /// Write the neighbor lists here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Evaluation inputs shared by `eval` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct EvalOptions {
    /// Scored pairs (TSV: index_a, index_b, score).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Recall cutoffs.
    #[arg(short, long, value_delimiter = ',', default_value = "10")]
    pub k: Vec<usize>,
    /// Use only the first N rows as retrieval queries.
    #[arg(long)]
    pub max_queries: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Codes to evaluate (BCOD).
    #[arg(short, long)]
    pub codes: PathBuf,
    /// Continuous embeddings (BEMB) for the cosine baseline and oracle.
    #[arg(short, long)]
    pub embeddings: Option<PathBuf>,
    /// Nearest-neighbor reference (BEMB or BCOD); defaults to --embeddings.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    #[command(flatten)]
    pub eval: EvalOptions,
    /// Configuration recorded in the report.
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    #[arg(long)]
    pub lambda_sp: Option<f64>,
    /// Also write the report here.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Print a table instead of JSON.
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 4096)]
    pub bits: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n_pairs: usize,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Embeddings file (BEMB).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Directory for per-cell reports and the combined CSV.
    #[arg(short, long)]
    pub out_dir: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "ae-sp")]
    pub methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_value = "512,1024,2048,4096")]
    pub bits: Vec<usize>,
    /// lambda_sp values for ae-sp cells.
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.5,0.8,1.0")]
    pub lambda_grid: Vec<f64>,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub eval: EvalOptions,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: binemb_core::Error| e.to_string())
}
