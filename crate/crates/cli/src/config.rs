//! Fully resolved command configurations.
//!
//! Every report embeds the configuration it was produced from; replaying
//! that configuration reruns exactly the same work.

use std::path::PathBuf;

use edfilter_core::cardinality::{Labeler, TrainConfig};
use edfilter_core::classifier::CvConfig;
use edfilter_core::dataset::SynthSpec;
use edfilter_core::info_theory::Discretization;
use edfilter_core::search::{Algorithm, MovePolicy, SearchConfig};
use serde::{Deserialize, Serialize};

use crate::benchmark::BenchmarkSuiteConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "settings", rename_all = "lowercase")]
pub enum CommandConfig {
    Synth(SynthConfig),
    Rank(RankConfig),
    Select(SelectConfig),
    Train(TrainCommandConfig),
    Oracle(OracleConfig),
    Benchmark(BenchmarkSuiteConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub spec: SynthSpec,
    pub csv: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankConfig {
    pub data: PathBuf,
    pub discretization: Discretization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectConfig {
    pub data: PathBuf,
    pub algorithm: Algorithm,
    pub model: Option<PathBuf>,
    /// Feature cap when `algorithm` is the oracle.
    pub max_features: usize,
    pub search: SearchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub data: PathBuf,
    pub max_features: usize,
    pub cv: CvConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCommandConfig {
    pub data: PathBuf,
    pub model_out: PathBuf,
    pub chunk_size: usize,
    /// Seeds the chunking as well as training.
    pub seed: u64,
    pub labeler: Labeler,
    /// Used by the labeler; its expansion budget bounds exact labeling.
    pub search: SearchConfig,
    pub train: TrainConfig,
}

fn path(p: &std::path::Path) -> String {
    p.display().to_string()
}

fn cv_flags(cv: &CvConfig, argv: &mut Vec<String>) {
    argv.extend([
        "--seed".into(),
        cv.seed.to_string(),
        "--cv-folds".into(),
        cv.k.to_string(),
        "--alpha".into(),
        cv.alpha.to_string(),
    ]);
}

fn discretization_flags(d: Discretization, argv: &mut Vec<String>) {
    if let Discretization::EqualWidth { bins } = d {
        argv.extend(["--bins".into(), bins.to_string()]);
    }
}

fn search_flags(s: &SearchConfig, argv: &mut Vec<String>) {
    cv_flags(&s.cv, argv);
    argv.extend(["--seed-size".into(), s.seed_size.to_string()]);
    if !s.prune {
        argv.push("--no-prune".into());
    }
    if let Some(n) = s.max_expansions {
        argv.extend(["--max-expansions".into(), n.to_string()]);
    }
    if let Some(ms) = s.time_budget_ms {
        argv.extend(["--time-budget-ms".into(), ms.to_string()]);
    }
    if s.moves == MovePolicy::All {
        argv.extend(["--moves".into(), "all".into()]);
    }
    if s.literal_updates {
        argv.push("--literal-updates".into());
    }
    discretization_flags(s.discretization, argv);
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::Synth(_) => "synth",
            CommandConfig::Rank(_) => "rank",
            CommandConfig::Select(_) => "select",
            CommandConfig::Train(_) => "train",
            CommandConfig::Oracle(_) => "oracle",
            CommandConfig::Benchmark(_) => "benchmark",
        }
    }

    /// Command line that reproduces this configuration.
    pub fn argv(&self) -> Vec<String> {
        let mut argv = vec!["edfilter".to_string(), self.name().to_string()];
        match self {
            CommandConfig::Synth(c) => {
                let s = &c.spec;
                argv.extend([
                    "--csv".into(),
                    path(&c.csv),
                    "--n-features".into(),
                    s.n_features.to_string(),
                    "--n-informative".into(),
                    s.n_informative.to_string(),
                    "--n-rows".into(),
                    s.n_rows.to_string(),
                    "--n-classes".into(),
                    s.n_classes.to_string(),
                    "--noise-rate".into(),
                    s.noise_rate.to_string(),
                    "--max-count".into(),
                    s.max_count.to_string(),
                    "--seed".into(),
                    s.seed.to_string(),
                ]);
            }
            CommandConfig::Rank(c) => {
                argv.extend(["--data".into(), path(&c.data)]);
                discretization_flags(c.discretization, &mut argv);
            }
            CommandConfig::Select(c) => {
                argv.extend([
                    "--data".into(),
                    path(&c.data),
                    "--algorithm".into(),
                    c.algorithm.to_string(),
                ]);
                if let Some(m) = &c.model {
                    argv.extend(["--model".into(), path(m)]);
                }
                if c.algorithm == Algorithm::Oracle {
                    argv.extend(["--max-features".into(), c.max_features.to_string()]);
                }
                search_flags(&c.search, &mut argv);
            }
            CommandConfig::Oracle(c) => {
                argv.extend([
                    "--data".into(),
                    path(&c.data),
                    "--max-features".into(),
                    c.max_features.to_string(),
                ]);
                cv_flags(&c.cv, &mut argv);
            }
            CommandConfig::Train(c) => {
                let t = &c.train;
                argv.extend([
                    "--data".into(),
                    path(&c.data),
                    "--model-out".into(),
                    path(&c.model_out),
                    "--chunk-size".into(),
                    c.chunk_size.to_string(),
                    "--labeler".into(),
                    serde_json::to_value(c.labeler)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                    "--epochs".into(),
                    t.epochs.to_string(),
                    "--batch-size".into(),
                    t.batch_size.to_string(),
                    "--learning-rate".into(),
                    t.learning_rate.to_string(),
                    "--validation-fraction".into(),
                    t.validation_fraction.to_string(),
                    "--n-max".into(),
                    t.n_max.to_string(),
                    "--hidden".into(),
                    t.hidden[0].to_string(),
                    t.hidden[1].to_string(),
                ]);
                if let Some(n) = c.search.max_expansions {
                    argv.extend(["--label-max-expansions".into(), n.to_string()]);
                }
                argv.extend(["--seed".into(), c.seed.to_string()]);
                argv.extend([
                    "--cv-folds".into(),
                    c.search.cv.k.to_string(),
                    "--alpha".into(),
                    c.search.cv.alpha.to_string(),
                ]);
            }
            CommandConfig::Benchmark(c) => {
                argv.extend([
                    "--sample-sizes".into(),
                    join(&c.sample_sizes),
                    "--feature-counts".into(),
                    join(&c.feature_counts),
                    "--algorithms".into(),
                    join(&c.algorithms),
                    "--repeats".into(),
                    c.repeats.to_string(),
                    "--seed".into(),
                    c.seed.to_string(),
                ]);
                argv.extend([
                    "--cv-folds".into(),
                    c.search.cv.k.to_string(),
                    "--alpha".into(),
                    c.search.cv.alpha.to_string(),
                ]);
                if let Some(ms) = c.cell_timeout_ms {
                    argv.extend(["--cell-timeout-ms".into(), ms.to_string()]);
                }
            }
        }
        argv
    }
}
