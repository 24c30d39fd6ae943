//! Flag resolution and command execution.

use std::path::{Path, PathBuf};

use edfilter_core::cardinality::{
    gen_training_data, load_model, predict_cardinality, save_model, train_with_summary,
};
use edfilter_core::classifier::{CvConfig, DEFAULT_CV_SEED};
use edfilter_core::dataset::{load_csv, save_csv, synth_generate, SynthSpec};
use edfilter_core::info_theory::{rank_features_with, Discretization, InfoGainCache};
use edfilter_core::search::{
    brute_force_oracle, exact_search, greedy_search, hybrid_search_with_cap, Algorithm,
    SearchConfig, SelectionResult,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    BenchmarkArgs, Command, DiscretizationArgs, GlobalArgs, OracleArgs, RankArgs, SearchArgs,
    SelectArgs, SynthArgs, TrainArgs,
};
use crate::benchmark::{run_benchmark, BenchmarkReport, BenchmarkSuiteConfig};
use crate::config::{
    CommandConfig, OracleConfig, RankConfig, SelectConfig, SynthConfig, TrainCommandConfig,
};
use crate::error::{CliError, Result};

/// What a command produced: the payload and optional extra detail.
#[derive(Debug)]
pub struct Outcome {
    pub result: Value,
    pub diagnostics: Option<Value>,
    pub benchmark: Option<BenchmarkReport>,
}

fn require_data(global: &GlobalArgs) -> Result<PathBuf> {
    global
        .data
        .clone()
        .ok_or_else(|| CliError::Usage("--data is required for this command".into()))
}

fn cv(global: &GlobalArgs) -> CvConfig {
    CvConfig {
        k: global.cv_folds,
        seed: global.seed.unwrap_or(DEFAULT_CV_SEED),
        alpha: global.alpha,
    }
}

fn discretization(args: &DiscretizationArgs) -> Result<Discretization> {
    match args.bins {
        None => Ok(Discretization::Presence),
        Some(0) => Err(CliError::Usage("--bins must be at least 1".into())),
        Some(bins) => Ok(Discretization::EqualWidth { bins }),
    }
}

fn search_config(global: &GlobalArgs, args: &SearchArgs) -> Result<SearchConfig> {
    if args.seed_size == 0 {
        return Err(CliError::Usage("--seed-size must be at least 1".into()));
    }
    Ok(SearchConfig {
        cv: cv(global),
        seed_size: args.seed_size,
        prune: !args.no_prune,
        max_expansions: args.max_expansions,
        time_budget_ms: args.time_budget_ms,
        literal_updates: args.literal_updates,
        discretization: discretization(&args.discretization)?,
        moves: args.moves.into(),
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn resolve_synth(global: &GlobalArgs, args: &SynthArgs) -> Result<CommandConfig> {
    let mut spec: SynthSpec = match &args.config {
        Some(path) => read_json(path)?,
        None => {
            let d = SynthSpec::default();
            SynthSpec {
                n_features: args.n_features.unwrap_or(d.n_features),
                n_informative: args.n_informative.unwrap_or(d.n_informative),
                n_rows: args.n_rows.unwrap_or(d.n_rows),
                n_classes: args.n_classes.unwrap_or(d.n_classes),
                noise_rate: args.noise_rate.unwrap_or(d.noise_rate),
                max_count: args.max_count.unwrap_or(d.max_count),
                seed: d.seed,
            }
        }
    };
    if let Some(seed) = global.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(CommandConfig::Synth(SynthConfig {
        spec,
        csv: args.csv.clone(),
    }))
}

fn resolve_select(global: &GlobalArgs, args: &SelectArgs) -> Result<CommandConfig> {
    let data = require_data(global)?;
    let algorithm: Algorithm = args.algorithm.into();
    if algorithm == Algorithm::Hybrid && args.model.is_none() {
        return Err(CliError::Usage(
            "--algorithm hybrid requires --model <PATH>".into(),
        ));
    }
    let search = search_config(global, &args.search)?;
    search.cv.validate()?;
    Ok(CommandConfig::Select(SelectConfig {
        data,
        algorithm,
        model: args.model.clone(),
        max_features: args.max_features,
        search,
    }))
}

fn resolve_train(global: &GlobalArgs, args: &TrainArgs) -> Result<CommandConfig> {
    let data = require_data(global)?;
    let seed = global.seed.unwrap_or(0);
    let train = edfilter_core::cardinality::TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        seed,
        validation_fraction: args.validation_fraction,
        hidden: [args.hidden[0], args.hidden[1]],
        n_max: args.n_max,
        ..Default::default()
    };
    train.validate()?;
    let search = SearchConfig {
        cv: CvConfig {
            seed: DEFAULT_CV_SEED,
            ..cv(global)
        },
        max_expansions: Some(args.label_max_expansions),
        ..SearchConfig::default()
    };
    search.cv.validate()?;
    if args.chunk_size == 0 {
        return Err(CliError::Usage("--chunk-size must be positive".into()));
    }
    Ok(CommandConfig::Train(TrainCommandConfig {
        data,
        model_out: args.model_out.clone(),
        chunk_size: args.chunk_size,
        seed,
        labeler: args.labeler.into(),
        search,
        train,
    }))
}

fn resolve_benchmark(global: &GlobalArgs, args: &BenchmarkArgs) -> Result<CommandConfig> {
    let mut cfg: BenchmarkSuiteConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => {
            let mut c = BenchmarkSuiteConfig::default();
            if let Some(v) = &args.sample_sizes {
                c.sample_sizes.clone_from(v);
            }
            if let Some(v) = &args.feature_counts {
                c.feature_counts.clone_from(v);
            }
            if let Some(v) = &args.algorithms {
                c.algorithms = v.iter().map(|&a| a.into()).collect();
            }
            if let Some(r) = args.repeats {
                c.repeats = r;
            }
            c.cell_timeout_ms = args.cell_timeout_ms;
            c.search.cv.k = global.cv_folds;
            c.search.cv.alpha = global.alpha;
            c
        }
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(CliError::Usage)?;
    cfg.search.cv.validate()?;
    cfg.model.train.validate()?;
    Ok(CommandConfig::Benchmark(cfg))
}

/// Turns parsed flags into a fully resolved configuration.
pub fn resolve(global: &GlobalArgs, command: &Command) -> Result<CommandConfig> {
    match command {
        Command::Synth(a) => resolve_synth(global, a),
        Command::Rank(RankArgs { discretization: d }) => Ok(CommandConfig::Rank(RankConfig {
            data: require_data(global)?,
            discretization: discretization(d)?,
        })),
        Command::Select(a) => resolve_select(global, a),
        Command::Train(a) => resolve_train(global, a),
        Command::Oracle(OracleArgs { max_features }) => {
            let cv = cv(global);
            cv.validate()?;
            Ok(CommandConfig::Oracle(OracleConfig {
                data: require_data(global)?,
                max_features: *max_features,
                cv,
            }))
        }
        Command::Benchmark(a) => resolve_benchmark(global, a),
        Command::Replay(_) => Err(CliError::Usage("replay has no configuration".into())),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn selection_outcome(
    m: &edfilter_core::dataset::FeatureMatrix,
    r: &SelectionResult,
    discretization: Discretization,
) -> Outcome {
    let (violations, pairs) = r.trace.fano_violations(m.n_classes());
    let entropy = InfoGainCache::new(m, discretization).label_entropy();
    Outcome {
        result: to_value(r),
        diagnostics: Some(json!({
            "n_rows": m.n_rows(),
            "n_features": m.n_features(),
            "n_classes": m.n_classes(),
            "label_entropy_bits": entropy,
            "cardinality_cap": r.trace.cardinality_cap,
            "bound_violations": violations,
            "bound_checks": pairs,
        })),
        benchmark: None,
    }
}

/// Runs a resolved configuration.
pub fn execute(cfg: &CommandConfig) -> Result<Outcome> {
    match cfg {
        CommandConfig::Synth(c) => {
            let m = synth_generate(&c.spec)?;
            save_csv(&m, &c.csv)?;
            log::info!("wrote {} rows to {}", m.n_rows(), c.csv.display());
            Ok(Outcome {
                result: json!({
                    "csv": c.csv,
                    "n_rows": m.n_rows(),
                    "n_features": m.n_features(),
                    "n_classes": m.n_classes(),
                    "class_counts": m.class_counts(),
                    "informative_features": m.feature_names()[c.spec.informative_features()],
                }),
                diagnostics: None,
                benchmark: None,
            })
        }
        CommandConfig::Rank(c) => {
            let m = load_csv(&c.data)?;
            let ranked = rank_features_with(&m, c.discretization);
            let pairs: Vec<Value> = ranked
                .ranked()
                .map(|(f, score)| json!({"feature": m.feature_names()[f], "score": score}))
                .collect();
            Ok(Outcome {
                result: Value::Array(pairs),
                diagnostics: None,
                benchmark: None,
            })
        }
        CommandConfig::Select(c) => {
            let m = load_csv(&c.data)?;
            let r = match c.algorithm {
                Algorithm::Exact => exact_search(&m, &c.search)?,
                Algorithm::Greedy => greedy_search(&m, &c.search)?,
                Algorithm::Oracle => brute_force_oracle(&m, c.max_features, &c.search)?,
                Algorithm::Hybrid => {
                    let path = c.model.as_ref().ok_or_else(|| {
                        CliError::Usage("--algorithm hybrid requires --model <PATH>".into())
                    })?;
                    let model = load_model(path)?;
                    let cap = predict_cardinality(&model, &m)?;
                    log::info!("predicted cardinality cap {cap}");
                    hybrid_search_with_cap(&m, cap, &c.search)?
                }
            };
            Ok(selection_outcome(&m, &r, c.search.discretization))
        }
        CommandConfig::Oracle(c) => {
            let m = load_csv(&c.data)?;
            let search = SearchConfig {
                cv: c.cv,
                ..SearchConfig::default()
            };
            let r = brute_force_oracle(&m, c.max_features, &search)?;
            Ok(selection_outcome(&m, &r, search.discretization))
        }
        CommandConfig::Train(c) => {
            let m = load_csv(&c.data)?;
            let examples = gen_training_data(
                &m,
                c.chunk_size,
                c.seed,
                c.labeler,
                &c.search,
                c.train.n_max,
            )?;
            log::info!("labeled {} chunks", examples.len());
            let mut histogram = vec![0usize; c.train.n_max];
            for e in &examples {
                histogram[e.label] += 1;
            }
            let (model, summary) = train_with_summary(&examples, &c.train)?;
            save_model(&model, &c.model_out)?;
            Ok(Outcome {
                result: json!({
                    "model_out": c.model_out,
                    "examples": examples.len(),
                    "label_histogram": histogram,
                    "summary": summary,
                }),
                diagnostics: None,
                benchmark: None,
            })
        }
        CommandConfig::Benchmark(c) => {
            let report = run_benchmark(c)?;
            Ok(Outcome {
                result: to_value(&report),
                diagnostics: None,
                benchmark: Some(report),
            })
        }
    }
}
