use edfilter_core::dataset::{synth_generate, FeatureMatrix, SynthSpec};
use edfilter_core::info_theory::{entropy, info_gain, rank_features};
use edfilter_core::FeatureSubset;
use proptest::prelude::*;

const EXACT: f64 = 1e-9;

fn matrix(columns: &[Vec<u32>], labels: Vec<usize>) -> FeatureMatrix {
    let rows = (0..labels.len())
        .map(|r| columns.iter().map(|c| c[r]).collect())
        .collect();
    let names = (0..columns.len()).map(|i| format!("c{i}")).collect();
    FeatureMatrix::from_dense_labels(names, rows, labels).unwrap()
}

#[test]
fn uniform_label_entropies() {
    let two: Vec<usize> = (0..64).map(|r| r % 2).collect();
    let four: Vec<usize> = (0..64).map(|r| r % 4).collect();
    assert!((entropy(&two).unwrap() - 1.0).abs() < EXACT);
    assert!((entropy(&four).unwrap() - 2.0).abs() < EXACT);
}

#[test]
fn label_copy_and_constant_columns() {
    // Counts 0, 1 and 2 fall into distinct bins, so the copy is lossless.
    let labels: Vec<usize> = (0..45).map(|r| r % 3).collect();
    let copy: Vec<u32> = labels.iter().map(|&y| y as u32).collect();
    let m = matrix(&[copy, vec![5; 45]], labels.clone());
    let h = entropy(&labels).unwrap();
    let ig = info_gain(&m, &FeatureSubset::singleton(0)).unwrap();
    assert!((ig - h).abs() < EXACT);
    assert!(info_gain(&m, &FeatureSubset::singleton(1)).unwrap().abs() < EXACT);
    let joint = info_gain(&m, &FeatureSubset::new([0, 1])).unwrap();
    assert!((joint - h).abs() < EXACT);
}

#[test]
fn informative_features_rank_first() {
    let spec = SynthSpec::default();
    let m = synth_generate(&spec).unwrap();
    let ranked = rank_features(&m);
    let mut top: Vec<usize> = ranked.order[..spec.n_informative].to_vec();
    top.sort_unstable();
    assert_eq!(top, spec.informative_features().collect::<Vec<_>>());
    assert!(ranked
        .ranked()
        .zip(ranked.ranked().skip(1))
        .all(|(a, b)| a.1 >= b.1));
}

proptest! {
    #[test]
    fn joint_gain_grows_with_the_subset(
        seed in any::<u64>(),
        n_features in 2usize..7,
        mask in 1u64..64,
        extra in 0usize..7,
    ) {
        let m = synth_generate(&SynthSpec {
            n_features,
            n_informative: 2,
            n_rows: 150,
            seed,
            ..SynthSpec::default()
        })
        .unwrap();
        let base = FeatureSubset::new(
            FeatureSubset::from_mask(mask).iter().map(|f| f % n_features),
        );
        let grown = base.with(extra % n_features);
        let a = info_gain(&m, &base).unwrap();
        let b = info_gain(&m, &grown).unwrap();
        prop_assert!(b >= a - EXACT);
        prop_assert!(b <= entropy(m.labels()).unwrap() + EXACT);
    }
}
