mod common;

use common::{label_copy_matrix, three_indicator_matrix};
use edfilter_core::cardinality::{
    encode_input, gen_training_data, input_dim, load_model, predict_cardinality, save_model, train,
    train_with_summary, CardinalityModel, Labeler, TrainConfig, TrainingExample,
};
use edfilter_core::dataset::{synth_generate, FeatureMatrix, SynthSpec};
use edfilter_core::search::SearchConfig;
use edfilter_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;
/// Denominator floor for the relative error, below the gradients' scale.
const FD_FLOOR: f64 = 1e-6;
const SOFTMAX_TOL: f64 = 1e-9;

fn random_example(rng: &mut ChaCha8Rng, n_max: usize) -> TrainingExample {
    TrainingExample {
        input: (0..input_dim(n_max))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
        label: rng.random_range(0..n_max),
    }
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let n_max = 8;
    let mut worst: f64 = 0.0;
    for point in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + point);
        let mut model = CardinalityModel::new(input_dim(n_max), [16, 12], n_max, point);
        let jitter: Vec<f64> = model
            .parameters()
            .iter()
            .map(|p| p + rng.random_range(-0.1..0.1))
            .collect();
        model.set_parameters(&jitter);
        let batch: Vec<_> = (0..3).map(|_| random_example(&mut rng, n_max)).collect();

        let (_, analytic) = model.loss_and_gradient(&batch);
        let base = model.parameters();
        let mut probe = model.clone();
        for (i, &a) in analytic.iter().enumerate() {
            let mut p = base.clone();
            p[i] = base[i] + FD_STEP;
            probe.set_parameters(&p);
            let up = probe.loss(&batch);
            p[i] = base[i] - FD_STEP;
            probe.set_parameters(&p);
            let down = probe.loss(&batch);
            let numeric = (up - down) / (2.0 * FD_STEP);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_FLOOR);
            worst = worst.max(rel);
        }
    }
    assert!(worst < FD_REL_TOL, "max relative error {worst:e}");
}

#[test]
fn softmax_outputs_are_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = CardinalityModel::new(input_dim(32), [64, 32], 32, 5);
    for _ in 0..100 {
        let x: Vec<f64> = (0..input_dim(32))
            .map(|_| rng.random_range(-3.0..3.0))
            .collect();
        let p = model.probabilities(&x);
        assert_eq!(p.len(), 32);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < SOFTMAX_TOL);
    }
}

#[test]
fn memorizes_a_repeated_example() {
    let m = synth_generate(&SynthSpec::default()).unwrap();
    let example = TrainingExample {
        input: encode_input(&m, 32).unwrap(),
        label: 5,
    };
    // Four copies: one batch, and a 0.2 split of four rows holds nothing out.
    let examples = vec![example; 4];
    let (model, summary) = train_with_summary(&examples, &TrainConfig::default()).unwrap();
    assert_eq!(summary.n_validation, 0);
    let last = *summary.train_losses.last().unwrap();
    assert!(last < 0.01, "final loss {last}");
    assert!(summary.train_losses.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(predict_cardinality(&model, &m).unwrap(), 6);
}

#[test]
fn separable_clusters_validate_perfectly() {
    let n_max = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let examples: Vec<_> = (0..60)
        .map(|i| {
            let label = i % 2;
            let sign = if label == 0 { -1.0 } else { 1.0 };
            let input = (0..input_dim(n_max))
                .map(|j| {
                    let centre = if j < 2 { sign } else { 0.0 };
                    centre + rng.random_range(-0.3..0.3)
                })
                .collect();
            TrainingExample { input, label }
        })
        .collect();
    let cfg = TrainConfig {
        n_max,
        seed: 3,
        ..TrainConfig::default()
    };
    let (_, summary) = train_with_summary(&examples, &cfg).unwrap();
    assert_eq!(summary.n_validation, 12);
    assert_eq!(summary.validation_accuracy, Some(1.0));
}

#[test]
fn training_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let examples: Vec<_> = (0..20).map(|_| random_example(&mut rng, 6)).collect();
    let cfg = TrainConfig {
        n_max: 6,
        epochs: 20,
        seed: 8,
        ..TrainConfig::default()
    };
    assert_eq!(
        train(&examples, &cfg).unwrap(),
        train(&examples, &cfg).unwrap()
    );
}

#[test]
fn constant_features_encode_to_zero_gain() {
    let labels: Vec<usize> = (0..40).map(|r| r % 4).collect();
    let names = (0..5).map(|i| format!("z{i}")).collect();
    let m = FeatureMatrix::from_dense_labels(names, vec![vec![2; 5]; 40], labels).unwrap();
    let x = encode_input(&m, 32).unwrap();
    assert_eq!(x.len(), 42);
    assert!(x[..32].iter().all(|&v| v == 0.0));
    assert_eq!(&x[32..36], &[0.25; 4]);
}

#[test]
fn one_example_per_chunk() {
    let m = synth_generate(&SynthSpec {
        n_rows: 1000,
        ..SynthSpec::default()
    })
    .unwrap();
    let examples =
        gen_training_data(&m, 200, 1, Labeler::Oracle, &SearchConfig::default(), 32).unwrap();
    assert_eq!(examples.len(), 5);
    assert!(examples.iter().all(|e| e.input.len() == 42));
}

#[test]
fn seed7_chunk_labels_anchor() {
    let m = synth_generate(&SynthSpec::default()).unwrap();
    let cfg = SearchConfig::default();
    let oracle = gen_training_data(&m, 100, 7, Labeler::Oracle, &cfg, 32).unwrap();
    let labels: Vec<usize> = oracle.iter().map(|e| e.label).collect();
    assert_eq!(labels, [6, 5, 6, 6, 5]);
    let auto = gen_training_data(&m, 100, 7, Labeler::Auto, &cfg, 32).unwrap();
    assert_eq!(auto, oracle);
}

#[test]
fn label_copy_chunks_need_two_features() {
    let m = label_copy_matrix(400, 4, 3);
    let examples =
        gen_training_data(&m, 100, 0, Labeler::Oracle, &SearchConfig::default(), 32).unwrap();
    assert_eq!(examples.len(), 4);
    assert!(examples.iter().all(|e| e.label == 1));
}

#[test]
fn chunks_too_small_for_cross_validation() {
    let m = synth_generate(&SynthSpec::default()).unwrap();
    let err = gen_training_data(&m, 12, 0, Labeler::Oracle, &SearchConfig::default(), 32);
    assert!(matches!(err, Err(Error::ClassTooSmall { .. })));
}

#[test]
fn learns_a_fixed_cardinality() {
    let m = three_indicator_matrix(2000, 3, 21);
    let cfg = SearchConfig::default();
    let examples = gen_training_data(&m, 200, 4, Labeler::Oracle, &cfg, 32).unwrap();
    assert_eq!(examples.len(), 10);
    assert!(examples.iter().all(|e| e.label == 2));
    let model = train(&examples, &TrainConfig::default()).unwrap();
    let sibling = three_indicator_matrix(200, 3, 99);
    assert_eq!(predict_cardinality(&model, &sibling).unwrap(), 3);
}

#[test]
fn save_load_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let examples: Vec<_> = (0..30).map(|_| random_example(&mut rng, 32)).collect();
    let cfg = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    let model = train(&examples, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);
    for _ in 0..100 {
        let x: Vec<f64> = (0..input_dim(32))
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        assert_eq!(loaded.probabilities(&x), model.probabilities(&x));
    }
    let text = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["layers"][0]["weights"][0].is_string());
    assert_eq!(v["layers"][0]["rows"], 64);
    assert_eq!(v["layers"][0]["cols"], 42);
}

#[test]
fn load_rejects_bad_files() {
    let model = CardinalityModel::new(input_dim(32), [64, 32], 32, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();

    std::fs::write(&path, &text[..text.len() / 3]).unwrap();
    assert!(matches!(load_model(&path), Err(Error::ModelFormat(_))));

    let bumped = text.replacen("\"encoding_version\": 1", "\"encoding_version\": 7", 1);
    std::fs::write(&path, bumped).unwrap();
    assert!(matches!(load_model(&path), Err(Error::EncodingMismatch(_))));

    assert!(matches!(
        load_model(dir.path().join("missing.json")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn too_many_features_for_the_encoding() {
    let model = CardinalityModel::new(input_dim(4), [8, 8], 4, 1);
    let m = synth_generate(&SynthSpec::default()).unwrap();
    assert!(matches!(
        predict_cardinality(&model, &m),
        Err(Error::TooManyFeatures { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn prediction_is_clamped(seed in any::<u64>(), n_features in 1usize..6) {
        let m = synth_generate(&SynthSpec {
            n_features,
            n_informative: 1,
            n_rows: 60,
            seed,
            ..SynthSpec::default()
        })
        .unwrap();
        let model = CardinalityModel::new(input_dim(32), [16, 8], 32, seed);
        let c = predict_cardinality(&model, &m).unwrap();
        prop_assert!((1..=n_features).contains(&c));
        prop_assert_eq!(c, predict_cardinality(&model, &m).unwrap());
    }
}
