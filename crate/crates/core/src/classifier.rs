//! Multinomial naive Bayes wrapper evaluator.
//!
//! The accuracy of a subset is the pooled fraction of correct predictions
//! over stratified k-fold cross-validation. For single-label prediction every
//! prediction is exactly one true or one false positive, so this is also the
//! micro-averaged `TP / (TP + FP)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_folds, FeatureMatrix, FoldAssignment};
use crate::{Error, FeatureSubset, Result};

pub const DEFAULT_CV_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 5,
            seed: DEFAULT_CV_SEED,
            alpha: 1.0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidCvConfig(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidCvConfig(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// A fitted multinomial naive Bayes model restricted to one feature subset.
#[derive(Debug, Clone, PartialEq)]
pub struct MnbModel {
    pub log_priors: Vec<f64>,
    /// `log_likelihoods[c][j]` is for the `j`-th feature of `subset`.
    pub log_likelihoods: Vec<Vec<f64>>,
    pub alpha: f64,
    pub subset: FeatureSubset,
}

impl MnbModel {
    /// `class_rows[c]` training rows of class `c`; `sums[c][j]` total count of
    /// the `j`-th subset feature over those rows.
    fn from_sums(
        class_rows: &[usize],
        sums: &[Vec<u64>],
        alpha: f64,
        subset: &FeatureSubset,
    ) -> Result<MnbModel> {
        let n: usize = class_rows.iter().sum();
        if n == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let present = class_rows.iter().filter(|&&c| c > 0).count();
        if present < class_rows.len() {
            return Err(Error::MissingClasses {
                present,
                n_classes: class_rows.len(),
            });
        }
        let log_priors = class_rows
            .iter()
            .map(|&c| (c as f64 / n as f64).ln())
            .collect();
        let width = subset.len() as f64;
        let log_likelihoods = sums
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                let denom = alpha * width + total as f64;
                row.iter()
                    .map(|&s| ((alpha + s as f64) / denom).ln())
                    .collect()
            })
            .collect();
        Ok(MnbModel {
            log_priors,
            log_likelihoods,
            alpha,
            subset: subset.clone(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.log_priors.len()
    }

    /// Unnormalized log posterior of every class for a full-width row.
    pub fn joint_log_likelihood(&self, row: &[u32]) -> Vec<f64> {
        self.log_priors
            .iter()
            .zip(&self.log_likelihoods)
            .map(|(&prior, lik)| {
                prior
                    + self
                        .subset
                        .iter()
                        .zip(lik)
                        .map(|(f, &l)| f64::from(row[f]) * l)
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Fits on `train_rows`; every class of the matrix must occur in them.
pub fn mnb_fit(
    m: &FeatureMatrix,
    subset: &FeatureSubset,
    train_rows: &[usize],
    alpha: f64,
) -> Result<MnbModel> {
    subset.validate(m.n_features())?;
    if train_rows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut class_rows = vec![0usize; m.n_classes()];
    let mut sums = vec![vec![0u64; subset.len()]; m.n_classes()];
    for &r in train_rows {
        let y = m.labels()[r];
        class_rows[y] += 1;
        for (j, f) in subset.iter().enumerate() {
            sums[y][j] += u64::from(m.row(r)[f]);
        }
    }
    MnbModel::from_sums(&class_rows, &sums, alpha, subset)
}

/// Highest log posterior wins; exact ties go to the lowest class id.
pub fn mnb_predict(model: &MnbModel, row: &[u32]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (c, (&prior, lik)) in model
        .log_priors
        .iter()
        .zip(&model.log_likelihoods)
        .enumerate()
    {
        let score = prior
            + model
                .subset
                .iter()
                .zip(lik)
                .map(|(f, &l)| f64::from(row[f]) * l)
                .sum::<f64>();
        if c == 0 || score > best.1 {
            best = (c, score);
        }
    }
    best.0
}

/// Cross-validated accuracy of one subset. Builds a fresh evaluator; use
/// [`CvEvaluator`] directly to score many subsets of the same matrix.
pub fn accuracy(m: &FeatureMatrix, subset: &FeatureSubset, cv: &CvConfig) -> Result<f64> {
    subset.validate(m.n_features())?;
    CvEvaluator::new(m, *cv)?.accuracy(subset)
}

/// Memoized stratified k-fold accuracy over one matrix.
///
/// Per-fold class totals are precomputed, so fitting a fold only subtracts the
/// held-out totals from the matrix totals. The resulting models are identical
/// to fitting with [`mnb_fit`] on the training rows.
#[derive(Debug)]
pub struct CvEvaluator<'a> {
    matrix: &'a FeatureMatrix,
    cv: CvConfig,
    folds: FoldAssignment,
    test_rows: Vec<Vec<usize>>,
    /// [fold][class] rows held out.
    fold_class_rows: Vec<Vec<usize>>,
    /// [fold][class][feature] count totals held out.
    fold_sums: Vec<Vec<Vec<u64>>>,
    class_rows: Vec<usize>,
    total_sums: Vec<Vec<u64>>,
    memo: HashMap<FeatureSubset, f64>,
}

impl<'a> CvEvaluator<'a> {
    pub fn new(matrix: &'a FeatureMatrix, cv: CvConfig) -> Result<Self> {
        cv.validate()?;
        let folds = stratified_folds(matrix, cv.k, cv.seed)?;
        let (n_classes, n_features) = (matrix.n_classes(), matrix.n_features());
        let mut test_rows = vec![Vec::new(); cv.k];
        let mut fold_class_rows = vec![vec![0usize; n_classes]; cv.k];
        let mut fold_sums = vec![vec![vec![0u64; n_features]; n_classes]; cv.k];
        for (r, &fold) in folds.fold_of_row.iter().enumerate() {
            let y = matrix.labels()[r];
            test_rows[fold].push(r);
            fold_class_rows[fold][y] += 1;
            for (s, &v) in fold_sums[fold][y].iter_mut().zip(matrix.row(r)) {
                *s += u64::from(v);
            }
        }
        let class_rows = matrix.class_counts();
        let mut total_sums = vec![vec![0u64; n_features]; n_classes];
        for fold in &fold_sums {
            for (total, part) in total_sums.iter_mut().zip(fold) {
                for (t, p) in total.iter_mut().zip(part) {
                    *t += p;
                }
            }
        }
        Ok(CvEvaluator {
            matrix,
            cv,
            folds,
            test_rows,
            fold_class_rows,
            fold_sums,
            class_rows,
            total_sums,
            memo: HashMap::new(),
        })
    }

    pub fn matrix(&self) -> &'a FeatureMatrix {
        self.matrix
    }

    pub fn config(&self) -> &CvConfig {
        &self.cv
    }

    pub fn folds(&self) -> &FoldAssignment {
        &self.folds
    }

    /// Number of distinct subsets scored so far.
    pub fn evaluations(&self) -> usize {
        self.memo.len()
    }

    pub fn accuracy(&mut self, subset: &FeatureSubset) -> Result<f64> {
        if let Some(&theta) = self.memo.get(subset) {
            return Ok(theta);
        }
        subset.validate(self.matrix.n_features())?;
        let mut correct = 0usize;
        for fold in 0..self.cv.k {
            let class_rows: Vec<usize> = self
                .class_rows
                .iter()
                .zip(&self.fold_class_rows[fold])
                .map(|(t, h)| t - h)
                .collect();
            let sums: Vec<Vec<u64>> = self
                .total_sums
                .iter()
                .zip(&self.fold_sums[fold])
                .map(|(t, h)| subset.iter().map(|f| t[f] - h[f]).collect())
                .collect();
            let model = MnbModel::from_sums(&class_rows, &sums, self.cv.alpha, subset)?;
            correct += self.test_rows[fold]
                .iter()
                .filter(|&&r| mnb_predict(&model, self.matrix.row(r)) == self.matrix.labels()[r])
                .count();
        }
        let theta = correct as f64 / self.matrix.n_rows() as f64;
        self.memo.insert(subset.clone(), theta);
        Ok(theta)
    }
}
