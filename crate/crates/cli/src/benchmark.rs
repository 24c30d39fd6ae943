//! Greedy/hybrid/exact comparison suite over synthetic matrices.
//!
//! Cells are the cross product of sample sizes, feature counts and repeats.
//! Each cell draws its own matrix and runs every requested algorithm on it.
//! The hybrid algorithm uses one cardinality model trained beforehand on
//! separate synthetic matrices, one per feature count.

use std::path::Path;

use edfilter_core::cardinality::{
    gen_training_data, predict_cardinality, train_with_summary, CardinalityModel, Labeler,
    TrainConfig, TrainSummary, TrainingExample,
};
use edfilter_core::dataset::{synth_generate, FeatureMatrix, SynthSpec};
use edfilter_core::search::{
    brute_force_oracle, exact_search, greedy_search, hybrid_search_with_cap, Algorithm,
    SearchConfig, SelectionResult, DEFAULT_ORACLE_CAP,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Column order of the per-cell CSV. Stable across releases.
pub const CSV_COLUMNS: [&str; 12] = [
    "algorithm",
    "n_rows",
    "n_features",
    "theta",
    "runtime_ms",
    "evaluations",
    "repeat",
    "seed",
    "expansions",
    "subset_size",
    "cardinality_cap",
    "budget_exhausted",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSetup {
    /// Rows of each offline training matrix.
    pub offline_rows: usize,
    pub chunk_size: usize,
    /// Added to the suite seed for the offline matrices.
    pub seed_offset: u64,
    /// Heap-pop budget when chunks are too wide for the oracle.
    pub label_max_expansions: usize,
    pub train: TrainConfig,
}

impl Default for ModelSetup {
    fn default() -> Self {
        ModelSetup {
            offline_rows: 2000,
            chunk_size: 200,
            seed_offset: 1_000_000,
            label_max_expansions: 2000,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSuiteConfig {
    pub sample_sizes: Vec<usize>,
    pub feature_counts: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub repeats: usize,
    pub seed: u64,
    pub n_informative: usize,
    pub n_classes: usize,
    pub noise_rate: f64,
    pub max_count: u32,
    pub search: SearchConfig,
    /// Soft limit per search; a search that hits it keeps its best subset
    /// and is flagged `budget_exhausted`.
    pub cell_timeout_ms: Option<u64>,
    pub model: ModelSetup,
}

impl Default for BenchmarkSuiteConfig {
    fn default() -> Self {
        BenchmarkSuiteConfig {
            sample_sizes: vec![500, 1000, 1500, 2000],
            feature_counts: vec![15, 25],
            algorithms: vec![Algorithm::Greedy, Algorithm::Hybrid],
            repeats: 1,
            seed: 7,
            n_informative: 5,
            n_classes: 4,
            noise_rate: 0.1,
            max_count: 8,
            search: SearchConfig::default(),
            cell_timeout_ms: None,
            model: ModelSetup::default(),
        }
    }
}

impl BenchmarkSuiteConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.sample_sizes.is_empty() || self.feature_counts.is_empty() {
            return Err("sample_sizes and feature_counts must not be empty".into());
        }
        if self.sample_sizes.contains(&0) || self.feature_counts.contains(&0) {
            return Err("sample sizes and feature counts must be positive".into());
        }
        if self.algorithms.is_empty() {
            return Err("at least one algorithm is required".into());
        }
        if self.repeats == 0 {
            return Err("repeats must be at least 1".into());
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for repeat in 0..self.repeats {
            for &n_rows in &self.sample_sizes {
                for &n_features in &self.feature_counts {
                    let seed = self
                        .seed
                        .wrapping_add(repeat as u64 * 1_000_003)
                        .wrapping_add((n_rows * 31 + n_features) as u64);
                    cells.push(Cell {
                        n_rows,
                        n_features,
                        repeat,
                        seed,
                    });
                }
            }
        }
        cells
    }

    fn spec(&self, n_rows: usize, n_features: usize, seed: u64) -> SynthSpec {
        SynthSpec {
            n_features,
            n_informative: self.n_informative.min(n_features),
            n_rows,
            n_classes: self.n_classes,
            noise_rate: self.noise_rate,
            max_count: self.max_count,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    n_rows: usize,
    n_features: usize,
    repeat: usize,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub algorithm: Algorithm,
    pub n_rows: usize,
    pub n_features: usize,
    pub theta: Option<f64>,
    pub runtime_ms: f64,
    pub evaluations: Option<usize>,
    pub repeat: usize,
    pub seed: u64,
    pub expansions: Option<usize>,
    pub subset_size: Option<usize>,
    pub cardinality_cap: Option<usize>,
    pub budget_exhausted: bool,
    /// Why the cell has no result, if it has none.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Greedy minus hybrid accuracy in percentage points over matched cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub pairs: usize,
    /// Largest gap.
    pub max_gap_pp: f64,
    /// Smallest gap.
    pub min_gap_pp: f64,
    pub mean_gap_pp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub examples: usize,
    /// Number of examples per cardinality, index 0 meaning one feature.
    pub label_histogram: Vec<usize>,
    pub summary: TrainSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub columns: Vec<String>,
    pub rows: Vec<BenchmarkRow>,
    pub greedy_vs_hybrid: Option<GapSummary>,
    pub model: Option<ModelReport>,
}

fn train_suite_model(
    cfg: &BenchmarkSuiteConfig,
) -> edfilter_core::Result<(CardinalityModel, ModelReport)> {
    let setup = &cfg.model;
    let label_search = SearchConfig {
        max_expansions: Some(setup.label_max_expansions),
        time_budget_ms: None,
        ..cfg.search.clone()
    };
    let per_count: Vec<edfilter_core::Result<Vec<TrainingExample>>> = cfg
        .feature_counts
        .par_iter()
        .map(|&n_features| {
            let seed = cfg
                .seed
                .wrapping_add(setup.seed_offset)
                .wrapping_add(n_features as u64);
            let m = synth_generate(&cfg.spec(setup.offline_rows, n_features, seed))?;
            log::info!("labeling offline chunks with {n_features} features");
            gen_training_data(
                &m,
                setup.chunk_size,
                seed,
                Labeler::Auto,
                &label_search,
                setup.train.n_max,
            )
        })
        .collect();
    let mut examples = Vec::new();
    for part in per_count {
        examples.extend(part?);
    }
    let mut label_histogram = vec![0; setup.train.n_max];
    for e in &examples {
        label_histogram[e.label] += 1;
    }
    let (model, summary) = train_with_summary(&examples, &setup.train)?;
    Ok((
        model,
        ModelReport {
            examples: examples.len(),
            label_histogram,
            summary,
        },
    ))
}

fn run_cell(
    cfg: &BenchmarkSuiteConfig,
    model: Option<&CardinalityModel>,
    cell: Cell,
) -> Vec<BenchmarkRow> {
    let search = SearchConfig {
        time_budget_ms: cfg.cell_timeout_ms,
        ..cfg.search.clone()
    };
    let matrix = synth_generate(&cfg.spec(cell.n_rows, cell.n_features, cell.seed));
    cfg.algorithms
        .iter()
        .map(|&algorithm| {
            let start = std::time::Instant::now();
            let outcome = matrix
                .as_ref()
                .map_err(ToString::to_string)
                .and_then(|m| run_algorithm(m, algorithm, model, &search));
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            match outcome {
                Ok((r, cap)) => BenchmarkRow {
                    algorithm,
                    n_rows: cell.n_rows,
                    n_features: cell.n_features,
                    theta: Some(r.theta),
                    runtime_ms: r.runtime_ms,
                    evaluations: Some(r.evaluations),
                    repeat: cell.repeat,
                    seed: cell.seed,
                    expansions: Some(r.expansions),
                    subset_size: Some(r.indices.len()),
                    cardinality_cap: cap,
                    budget_exhausted: r.budget_exhausted,
                    error: None,
                },
                Err(error) => {
                    log::warn!(
                        "{algorithm} on {}x{}: {error}",
                        cell.n_rows,
                        cell.n_features
                    );
                    BenchmarkRow {
                        algorithm,
                        n_rows: cell.n_rows,
                        n_features: cell.n_features,
                        theta: None,
                        runtime_ms: elapsed,
                        evaluations: None,
                        repeat: cell.repeat,
                        seed: cell.seed,
                        expansions: None,
                        subset_size: None,
                        cardinality_cap: None,
                        budget_exhausted: false,
                        error: Some(error),
                    }
                }
            }
        })
        .collect()
}

fn run_algorithm(
    m: &FeatureMatrix,
    algorithm: Algorithm,
    model: Option<&CardinalityModel>,
    search: &SearchConfig,
) -> Result<(SelectionResult, Option<usize>), String> {
    let result = match algorithm {
        Algorithm::Exact => exact_search(m, search).map(|r| (r, None)),
        Algorithm::Greedy => greedy_search(m, search).map(|r| (r, None)),
        Algorithm::Oracle => brute_force_oracle(m, DEFAULT_ORACLE_CAP, search).map(|r| (r, None)),
        Algorithm::Hybrid => {
            let model = model.ok_or("no cardinality model")?;
            predict_cardinality(model, m)
                .and_then(|cap| hybrid_search_with_cap(m, cap, search).map(|r| (r, Some(cap))))
        }
    };
    result.map_err(|e| e.to_string())
}

fn gaps(rows: &[BenchmarkRow]) -> Option<GapSummary> {
    let theta_of = |algorithm: Algorithm, r: &BenchmarkRow| {
        rows.iter()
            .find(|o| {
                o.algorithm == algorithm
                    && (o.n_rows, o.n_features, o.repeat) == (r.n_rows, r.n_features, r.repeat)
            })
            .and_then(|o| o.theta)
    };
    let diffs: Vec<f64> = rows
        .iter()
        .filter(|r| r.algorithm == Algorithm::Greedy)
        .filter_map(|r| Some(100.0 * (r.theta? - theta_of(Algorithm::Hybrid, r)?)))
        .collect();
    if diffs.is_empty() {
        return None;
    }
    Some(GapSummary {
        pairs: diffs.len(),
        max_gap_pp: diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_gap_pp: diffs.iter().copied().fold(f64::INFINITY, f64::min),
        mean_gap_pp: diffs.iter().sum::<f64>() / diffs.len() as f64,
    })
}

/// Runs the suite; cells run on the current rayon pool and rows come back
/// in cell order.
pub fn run_benchmark(cfg: &BenchmarkSuiteConfig) -> edfilter_core::Result<BenchmarkReport> {
    let (model, model_report) = if cfg.algorithms.contains(&Algorithm::Hybrid) {
        let (m, r) = train_suite_model(cfg)?;
        (Some(m), Some(r))
    } else {
        (None, None)
    };
    let rows: Vec<BenchmarkRow> = cfg
        .cells()
        .into_par_iter()
        .flat_map_iter(|cell| run_cell(cfg, model.as_ref(), cell))
        .collect();
    Ok(BenchmarkReport {
        columns: CSV_COLUMNS.iter().map(|c| c.to_string()).collect(),
        greedy_vs_hybrid: gaps(&rows),
        rows,
        model: model_report,
    })
}

pub fn write_csv(report: &BenchmarkReport, path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in &report.rows {
        w.write_record([
            r.algorithm.to_string(),
            r.n_rows.to_string(),
            r.n_features.to_string(),
            opt(r.theta.map(|t| t.to_string())),
            r.runtime_ms.to_string(),
            opt(r.evaluations.map(|e| e.to_string())),
            r.repeat.to_string(),
            r.seed.to_string(),
            opt(r.expansions.map(|e| e.to_string())),
            opt(r.subset_size.map(|s| s.to_string())),
            opt(r.cardinality_cap.map(|c| c.to_string())),
            r.budget_exhausted.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
