//! Command-line grammar.

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use edfilter_core::cardinality::Labeler;
use edfilter_core::search::{Algorithm, MovePolicy};

#[derive(Debug, Parser)]
#[command(
    name = "edfilter",
    version,
    about = "Informed feature-subset selection for keyword-count data"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Input CSV: integer keyword counts with a final `y` label column.
    #[arg(long, global = true, value_name = "CSV")]
    pub data: Option<PathBuf>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Seed for the command's randomness (cross-validation folds, synthetic
    /// data, training or the benchmark suite).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "K", default_value_t = 5)]
    pub cv_folds: usize,
    /// Laplace smoothing constant.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub alpha: f64,
    /// Repeat for more detail on stderr.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic count matrix.
    Synth(SynthArgs),
    /// Rank single features by information gain.
    Rank(RankArgs),
    /// Select a feature subset.
    Select(SelectArgs),
    /// Train the cardinality model on chunks of a matrix.
    Train(TrainArgs),
    /// Score every subset and return the best one.
    Oracle(OracleArgs),
    /// Run the greedy/hybrid/exact comparison suite.
    Benchmark(BenchmarkArgs),
    /// Re-run the command recorded in a report.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Where to write the generated CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: PathBuf,
    /// JSON file with generator fields; excludes the individual flags.
    #[arg(long, value_name = "JSON", conflicts_with_all = [
        "n_features", "n_informative", "n_rows", "n_classes", "noise_rate", "max_count"
    ])]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_features: Option<usize>,
    #[arg(long)]
    pub n_informative: Option<usize>,
    #[arg(long)]
    pub n_rows: Option<usize>,
    #[arg(long)]
    pub n_classes: Option<usize>,
    #[arg(long)]
    pub noise_rate: Option<f64>,
    #[arg(long)]
    pub max_count: Option<u32>,
}

#[derive(Debug, Args, Default)]
pub struct DiscretizationArgs {
    /// Equal-width bins instead of the zero/one/many presence bins.
    #[arg(long, value_name = "N")]
    pub bins: Option<u32>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub discretization: DiscretizationArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Exact,
    Greedy,
    Hybrid,
    Oracle,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Exact => Algorithm::Exact,
            AlgorithmArg::Greedy => Algorithm::Greedy,
            AlgorithmArg::Hybrid => Algorithm::Hybrid,
            AlgorithmArg::Oracle => Algorithm::Oracle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MovesArg {
    Best,
    All,
}

impl From<MovesArg> for MovePolicy {
    fn from(m: MovesArg) -> Self {
        match m {
            MovesArg::Best => MovePolicy::Best,
            MovesArg::All => MovePolicy::All,
        }
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Disable bound-based pruning.
    #[arg(long)]
    pub no_prune: bool,
    /// Number of seed singletons for greedy and hybrid.
    #[arg(long, default_value_t = 5)]
    pub seed_size: usize,
    /// Stop after this many heap pops and return the best subset so far.
    #[arg(long)]
    pub max_expansions: Option<usize>,
    /// Soft wall-clock limit; results depend on timing once it fires.
    #[arg(long, value_name = "MS")]
    pub time_budget_ms: Option<u64>,
    /// Improving neighbours pushed per pop by greedy and hybrid.
    #[arg(long, value_enum, default_value_t = MovesArg::Best)]
    pub moves: MovesArg,
    /// Use the last popped accuracy as threshold and result.
    #[arg(long, hide = true)]
    pub literal_updates: bool,
    #[command(flatten)]
    pub discretization: DiscretizationArgs,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long, value_enum)]
    pub algorithm: AlgorithmArg,
    /// Cardinality model file; required by the hybrid algorithm.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Feature cap for the oracle algorithm.
    #[arg(long, default_value_t = edfilter_core::search::DEFAULT_ORACLE_CAP)]
    pub max_features: usize,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = edfilter_core::search::DEFAULT_ORACLE_CAP)]
    pub max_features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelerArg {
    Oracle,
    Exact,
    Auto,
}

impl From<LabelerArg> for Labeler {
    fn from(l: LabelerArg) -> Self {
        match l {
            LabelerArg::Oracle => Labeler::Oracle,
            LabelerArg::Exact => Labeler::Exact,
            LabelerArg::Auto => Labeler::Auto,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Where to write the model.
    #[arg(long, value_name = "PATH")]
    pub model_out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub chunk_size: usize,
    /// How each chunk's best cardinality is found.
    #[arg(long, value_enum, default_value_t = LabelerArg::Auto)]
    pub labeler: LabelerArg,
    /// Heap-pop budget for the exact labeler.
    #[arg(long, default_value_t = 2000)]
    pub label_max_expansions: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.2)]
    pub validation_fraction: f64,
    /// Largest supported feature count.
    #[arg(long, default_value_t = edfilter_core::cardinality::DEFAULT_N_MAX)]
    pub n_max: usize,
    #[arg(long, num_args = 2, value_names = ["H1", "H2"], default_values_t = [64, 32])]
    pub hidden: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// JSON suite description; excludes the individual suite flags.
    #[arg(long, value_name = "JSON", conflicts_with_all = [
        "sample_sizes", "feature_counts", "algorithms", "repeats", "cell_timeout_ms"
    ])]
    pub config: Option<PathBuf>,
    /// Where to write the per-cell CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub sample_sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub feature_counts: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_enum)]
    pub algorithms: Option<Vec<AlgorithmArg>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Soft per-search time limit.
    #[arg(long, value_name = "MS")]
    pub cell_timeout_ms: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A report previously written by any command.
    pub report: PathBuf,
}
