mod common;

use common::{label_copy_matrix, naive_optimum, naive_theta, suite_matrix, three_indicator_matrix};
use edfilter_core::classifier::{accuracy, CvConfig};
use edfilter_core::dataset::{synth_generate, FeatureMatrix, SynthSpec};
use edfilter_core::search::{
    brute_force_oracle, exact_search, greedy_search, hybrid_search_with_cap, is_local_optimum,
    is_local_optimum_capped, Algorithm, MovePolicy, SearchConfig, SelectionResult,
};
use edfilter_core::FeatureSubset;
use proptest::prelude::*;

fn seed7() -> FeatureMatrix {
    synth_generate(&SynthSpec::default()).unwrap()
}

fn unpruned() -> SearchConfig {
    SearchConfig {
        prune: false,
        ..SearchConfig::default()
    }
}

/// Everything except wall-clock time.
fn same_outcome(a: &SelectionResult, b: &SelectionResult) -> bool {
    (
        &a.indices,
        a.theta,
        a.evaluations,
        a.prunes,
        a.expansions,
        a.budget_exhausted,
    ) == (
        &b.indices,
        b.theta,
        b.evaluations,
        b.prunes,
        b.expansions,
        b.budget_exhausted,
    )
}

#[test]
fn seed7_oracle_anchor() {
    let m = seed7();
    let (naive_subset, naive_best) = naive_optimum(&m, 5, 42);
    let oracle = brute_force_oracle(&m, 12, &SearchConfig::default()).unwrap();
    assert_eq!(oracle.indices, naive_subset);
    assert_eq!(oracle.theta, naive_best);
    assert_eq!(oracle.evaluations, 1023);
    // Frozen after the two enumerations above agreed.
    assert_eq!(oracle.indices, FeatureSubset::new([0, 1, 2, 3, 7, 8]));
    assert_eq!(oracle.theta, 345.0 / 500.0);
}

#[test]
fn seed7_informative_accuracy_anchor() {
    let m = seed7();
    let theta = accuracy(&m, &FeatureSubset::new([0, 1, 2]), &CvConfig::default()).unwrap();
    assert_eq!(theta, naive_theta(&m, &[0, 1, 2], 5, 42, 1.0));
    assert_eq!(theta, 292.0 / 500.0);
}

#[test]
fn seed7_unpruned_exact_matches_oracle() {
    let m = seed7();
    let exact = exact_search(&m, &unpruned()).unwrap();
    let oracle = brute_force_oracle(&m, 12, &SearchConfig::default()).unwrap();
    assert_eq!(exact.indices, oracle.indices);
    assert_eq!(exact.theta, oracle.theta);
    assert_eq!(exact.evaluations, 1023);
    assert_eq!(exact.prunes, 0);
}

#[test]
fn unpruned_exact_matches_oracle_on_suite() {
    for i in 0..20 {
        let m = suite_matrix(i);
        let exact = exact_search(&m, &unpruned()).unwrap();
        let oracle = brute_force_oracle(&m, 12, &SearchConfig::default()).unwrap();
        assert_eq!(exact.theta, oracle.theta, "matrix {i}");
        assert_eq!(exact.indices, oracle.indices, "matrix {i}");
        assert_eq!(exact.evaluations, (1 << m.n_features()) - 1, "matrix {i}");
    }
}

#[test]
fn pruned_exact_is_bracketed_by_greedy_and_oracle() {
    for i in 0..20 {
        let m = suite_matrix(i);
        let cfg = SearchConfig::default();
        let exact = exact_search(&m, &cfg).unwrap();
        let oracle = brute_force_oracle(&m, 12, &cfg).unwrap();
        let greedy = greedy_search(&m, &cfg).unwrap();
        assert!(exact.theta <= oracle.theta, "matrix {i}");
        assert!(exact.theta >= greedy.theta, "matrix {i}");
    }
}

#[test]
fn returned_theta_reproduces_accuracy() {
    let m = seed7();
    let cfg = SearchConfig::default();
    for r in [
        exact_search(&m, &cfg).unwrap(),
        greedy_search(&m, &cfg).unwrap(),
        hybrid_search_with_cap(&m, 3, &cfg).unwrap(),
    ] {
        assert_eq!(
            r.theta,
            accuracy(&m, &r.indices, &cfg.cv).unwrap(),
            "{}",
            r.algorithm
        );
        assert!(r.evaluations >= r.indices.len());
    }
}

#[test]
fn label_copy_reaches_perfect_accuracy() {
    let m = label_copy_matrix(200, 4, 3);
    let cfg = SearchConfig::default();
    let oracle = brute_force_oracle(&m, 12, &cfg).unwrap();
    assert_eq!(oracle.theta, 1.0);
    // A lone feature carries no evidence under MNB; the copy needs a partner.
    assert_eq!(oracle.indices, FeatureSubset::new([0, 1]));
    for r in [
        exact_search(&m, &cfg).unwrap(),
        greedy_search(&m, &cfg).unwrap(),
    ] {
        assert_eq!(r.theta, 1.0, "{}", r.algorithm);
        assert!(r.indices.contains(0), "{}", r.algorithm);
    }
}

#[test]
fn uninformative_features_give_a_singleton() {
    let labels: Vec<usize> = (0..120).map(|r| r % 4).collect();
    let rows = vec![vec![1, 3, 2, 5]; 120];
    let names = (0..4).map(|i| format!("n{i}")).collect();
    let m = FeatureMatrix::from_dense_labels(names, rows, labels).unwrap();
    let cfg = SearchConfig::default();
    let greedy = greedy_search(&m, &cfg).unwrap();
    assert_eq!(greedy.indices, FeatureSubset::singleton(0));
    assert!(is_local_optimum(&m, &greedy.indices, &cfg.cv).unwrap());
}

#[test]
fn greedy_climbs_the_indicator_chain() {
    for seed in 0..5 {
        let m = three_indicator_matrix(200, 3, seed);
        let cfg = SearchConfig::default();
        let greedy = greedy_search(&m, &cfg).unwrap();
        let oracle = brute_force_oracle(&m, 12, &cfg).unwrap();
        assert_eq!(greedy.indices, FeatureSubset::new([0, 1, 2]));
        assert_eq!(greedy.indices, oracle.indices);
        assert_eq!(greedy.theta, 1.0);
    }
}

#[test]
fn local_optimum_examples() {
    let m = seed7();
    let cv = CvConfig::default();
    let optimum = FeatureSubset::new([0, 1, 2, 3, 7, 8]);
    assert!(is_local_optimum(&m, &optimum, &cv).unwrap());
    // Dropping feature 2 from the optimum costs accuracy, so adding it back
    // is an improving move.
    let missing = optimum.without(2);
    assert!(accuracy(&m, &missing, &cv).unwrap() < accuracy(&m, &optimum, &cv).unwrap());
    assert!(!is_local_optimum(&m, &missing, &cv).unwrap());
}

#[test]
fn uncapped_hybrid_is_greedy() {
    for i in 0..6 {
        let m = suite_matrix(i);
        let cfg = SearchConfig::default();
        let greedy = greedy_search(&m, &cfg).unwrap();
        let hybrid = hybrid_search_with_cap(&m, m.n_features(), &cfg).unwrap();
        assert_eq!(hybrid.algorithm, Algorithm::Hybrid);
        assert!(same_outcome(&greedy, &hybrid), "matrix {i}");
    }
}

#[test]
fn cap_one_returns_best_seed_singleton() {
    let m = seed7();
    let cfg = SearchConfig::default();
    let hybrid = hybrid_search_with_cap(&m, 1, &cfg).unwrap();
    let mut best = (0, f64::NEG_INFINITY);
    for f in 0..m.n_features() {
        let theta = accuracy(&m, &FeatureSubset::singleton(f), &cfg.cv).unwrap();
        if theta > best.1 {
            best = (f, theta);
        }
    }
    assert_eq!(hybrid.indices, FeatureSubset::singleton(best.0));
    assert_eq!(hybrid.theta, best.1);
}

#[test]
fn searches_are_deterministic() {
    let m = suite_matrix(6);
    let cfg = SearchConfig::default();
    let runs = |f: &dyn Fn() -> SelectionResult| (f(), f());
    let (a, b) = runs(&|| exact_search(&m, &cfg).unwrap());
    assert!(same_outcome(&a, &b));
    assert_eq!(a.trace, b.trace);
    let (a, b) = runs(&|| greedy_search(&m, &cfg).unwrap());
    assert!(same_outcome(&a, &b));
    let (a, b) = runs(&|| hybrid_search_with_cap(&m, 4, &cfg).unwrap());
    assert!(same_outcome(&a, &b));
}

#[test]
fn selection_result_json_fields() {
    let m = seed7();
    let r = greedy_search(&m, &SearchConfig::default()).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "algorithm",
            "budget_exhausted",
            "evaluations",
            "expansions",
            "features",
            "indices",
            "prunes",
            "runtime_ms",
            "theta"
        ]
    );
    assert_eq!(v["algorithm"], "greedy");
    assert_eq!(v["features"][0], m.feature_names()[r.indices.indices()[0]]);
}

fn small_matrix() -> impl Strategy<Value = FeatureMatrix> {
    (3usize..8, 120usize..260, 3usize..5, any::<u64>()).prop_map(|(nf, rows, classes, seed)| {
        synth_generate(&SynthSpec {
            n_features: nf,
            n_informative: 2.min(nf),
            n_rows: rows,
            n_classes: classes,
            seed,
            ..SynthSpec::default()
        })
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn greedy_result_is_a_local_optimum(m in small_matrix(), seeds in 1usize..6) {
        let cfg = SearchConfig { seed_size: seeds, ..SearchConfig::default() };
        let r = greedy_search(&m, &cfg).unwrap();
        prop_assert!(is_local_optimum(&m, &r.indices, &cfg.cv).unwrap());
    }

    #[test]
    fn hybrid_result_is_a_capped_local_optimum(m in small_matrix(), cap in 1usize..5) {
        let cfg = SearchConfig::default();
        let r = hybrid_search_with_cap(&m, cap, &cfg).unwrap();
        prop_assert!(r.indices.len() <= cap);
        prop_assert!(is_local_optimum_capped(&m, &r.indices, &cfg.cv, Some(cap)).unwrap());
    }

    #[test]
    fn all_moves_variant_is_a_local_optimum(m in small_matrix()) {
        let cfg = SearchConfig { moves: MovePolicy::All, ..SearchConfig::default() };
        let r = greedy_search(&m, &cfg).unwrap();
        prop_assert!(is_local_optimum(&m, &r.indices, &cfg.cv).unwrap());
    }

    #[test]
    fn pruned_exact_never_exceeds_oracle(m in small_matrix()) {
        let cfg = SearchConfig::default();
        let exact = exact_search(&m, &cfg).unwrap();
        let oracle = brute_force_oracle(&m, 12, &cfg).unwrap();
        prop_assert!(exact.theta <= oracle.theta);
        prop_assert!(exact.evaluations <= oracle.evaluations);
    }
}
