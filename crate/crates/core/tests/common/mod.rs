//! Reference implementations used as test oracles.

#![allow(dead_code)]

use edfilter_core::dataset::{stratified_folds, synth_generate, FeatureMatrix, SynthSpec};
use edfilter_core::FeatureSubset;

/// Cross-validated MNB accuracy, written out with plain loops.
pub fn naive_theta(m: &FeatureMatrix, subset: &[usize], k: usize, seed: u64, alpha: f64) -> f64 {
    let folds = stratified_folds(m, k, seed).unwrap();
    let n_classes = m.n_classes();
    let mut correct = 0;
    for fold in 0..k {
        let mut rows_per_class = vec![0.0; n_classes];
        let mut counts = vec![vec![0.0; subset.len()]; n_classes];
        for r in 0..m.n_rows() {
            if folds.fold_of_row[r] == fold {
                continue;
            }
            let y = m.labels()[r];
            rows_per_class[y] += 1.0;
            for (j, &f) in subset.iter().enumerate() {
                counts[y][j] += m.row(r)[f] as f64;
            }
        }
        let n_train: f64 = rows_per_class.iter().sum();
        for r in 0..m.n_rows() {
            if folds.fold_of_row[r] != fold {
                continue;
            }
            let mut best = (0, f64::NEG_INFINITY);
            for c in 0..n_classes {
                let total: f64 = counts[c].iter().sum();
                let mut score = (rows_per_class[c] / n_train).ln();
                for (j, &f) in subset.iter().enumerate() {
                    let p = (alpha + counts[c][j]) / (alpha * subset.len() as f64 + total);
                    score += m.row(r)[f] as f64 * p.ln();
                }
                if score > best.1 {
                    best = (c, score);
                }
            }
            if best.0 == m.labels()[r] {
                correct += 1;
            }
        }
    }
    correct as f64 / m.n_rows() as f64
}

/// Best subset by exhaustive enumeration with the naive evaluator:
/// highest θ, then fewer features, then lexicographically smaller.
pub fn naive_optimum(m: &FeatureMatrix, k: usize, seed: u64) -> (FeatureSubset, f64) {
    let n = m.n_features();
    let mut best: Option<(FeatureSubset, f64)> = None;
    for mask in 1u64..(1 << n) {
        let s = FeatureSubset::from_mask(mask);
        let theta = naive_theta(m, s.indices(), k, seed, 1.0);
        let replace = match &best {
            None => true,
            Some((b, t)) => theta > *t || (theta == *t && (s.len(), &s) < (b.len(), b)),
        };
        if replace {
            best = Some((s, theta));
        }
    }
    best.unwrap()
}

/// The suite-1 style matrix for a seed: 4 classes, 4..=10 features,
/// 300..=800 rows.
pub fn suite_matrix(i: u64) -> FeatureMatrix {
    let n_features = 4 + (i % 7) as usize;
    synth_generate(&SynthSpec {
        n_features,
        n_informative: 3.min(n_features),
        n_rows: 300 + (i as usize * 97) % 501,
        n_classes: 4,
        seed: 1000 + i,
        ..SynthSpec::default()
    })
    .unwrap()
}

/// Feature 0 copies the label as `3y`, feature 1 is its complement
/// `3(n_classes - 1 - y)`, and `extra` further features are constant.
pub fn label_copy_matrix(n_rows: usize, n_classes: usize, extra: usize) -> FeatureMatrix {
    let labels: Vec<usize> = (0..n_rows).map(|r| r % n_classes).collect();
    let rows = labels
        .iter()
        .map(|&y| {
            let mut row = vec![3 * y as u32, 3 * (n_classes - 1 - y) as u32];
            row.extend(std::iter::repeat_n(2, extra));
            row
        })
        .collect();
    let names = (0..2 + extra).map(|i| format!("k{i}")).collect();
    FeatureMatrix::from_dense_labels(names, rows, labels).unwrap()
}

/// Four classes; feature `c` fires only on class `c` for c < 3 and the
/// majority class 3 fires none of them. `noise` further features are small
/// counts drawn independently of the label. The three indicator features
/// together separate the classes; no smaller subset does.
pub fn three_indicator_matrix(n_rows: usize, noise: usize, seed: u64) -> FeatureMatrix {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n_rows).map(|r| (r % 5).min(3)).collect();
    let rows = labels
        .iter()
        .map(|&y| {
            let mut row = vec![0u32; 3 + noise];
            if y < 3 {
                row[y] = rng.random_range(2..=4);
            }
            for v in &mut row[3..] {
                *v = rng.random_range(0..=2);
            }
            row
        })
        .collect();
    let names = (0..3 + noise).map(|i| format!("w{i}")).collect();
    FeatureMatrix::from_dense_labels(names, rows, labels).unwrap()
}
