//! Plug-in entropy, conditional entropy and information gain, all in bits.
//!
//! Counts are discretized before any probability is estimated. The default
//! scheme keeps the three levels that matter for sparse keyword counts:
//! absent (0), once (1), repeated (2 or more). Feature sets are scored by
//! encoding each row's tuple of codes as one categorical value, which makes
//! [`info_gain`] the literal plug-in estimate of `I(Y; F_subset)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::{Error, FeatureSubset, Result};

/// Values this far below zero are float noise and are clamped to zero.
const NEGATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum Discretization {
    /// 0 -> 0, 1 -> 1, >=2 -> 2.
    #[default]
    Presence,
    /// `bins` equal-width bins over the column's observed range.
    EqualWidth { bins: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretizedColumn {
    pub values: Vec<u32>,
    pub n_bins: u32,
}

pub fn discretize(column: &[u32], scheme: Discretization) -> DiscretizedColumn {
    match scheme {
        Discretization::Presence => DiscretizedColumn {
            values: column.iter().map(|&v| v.min(2)).collect(),
            n_bins: 3,
        },
        Discretization::EqualWidth { bins } => {
            let bins = bins.max(1);
            let lo = column.iter().copied().min().unwrap_or(0);
            let hi = column.iter().copied().max().unwrap_or(0);
            let width = f64::from(hi - lo) / f64::from(bins);
            let values = column
                .iter()
                .map(|&v| {
                    if width == 0.0 {
                        0
                    } else {
                        ((f64::from(v - lo) / width).floor() as u32).min(bins - 1)
                    }
                })
                .collect();
            DiscretizedColumn {
                values,
                n_bins: bins,
            }
        }
    }
}

fn entropy_of_counts(counts: impl IntoIterator<Item = usize>, total: usize) -> f64 {
    let total = total as f64;
    -counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            p * p.log2()
        })
        .sum::<f64>()
}

/// `H(Y)` from empirical label frequencies.
pub fn entropy(labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut counts = vec![0usize; n];
    for &y in labels {
        counts[y] += 1;
    }
    Ok(entropy_of_counts(counts, labels.len()).max(0.0))
}

/// `H(Y|F)`: label entropy inside each value of the column, weighted by the
/// value's frequency.
pub fn conditional_entropy(col: &DiscretizedColumn, labels: &[usize]) -> Result<f64> {
    if col.values.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: col.values.len(),
            right: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n_classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let n_bins = col.values.iter().copied().max().unwrap_or(0) as usize + 1;
    let mut joint = vec![0usize; n_bins * n_classes];
    for (&f, &y) in col.values.iter().zip(labels) {
        joint[f as usize * n_classes + y] += 1;
    }
    let total = labels.len() as f64;
    let h = joint
        .chunks(n_classes)
        .map(|row| {
            let nf: usize = row.iter().sum();
            if nf == 0 {
                0.0
            } else {
                nf as f64 / total * entropy_of_counts(row.iter().copied(), nf)
            }
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Maps each row's tuple of codes to a single code, numbered by first
/// appearance. Distinct observed tuples get distinct codes.
pub fn joint_encode(cols: &[&DiscretizedColumn]) -> Result<DiscretizedColumn> {
    let first = cols.first().ok_or(Error::EmptyInput)?;
    let len = first.values.len();
    if let Some(c) = cols.iter().find(|c| c.values.len() != len) {
        return Err(Error::LengthMismatch {
            left: len,
            right: c.values.len(),
        });
    }
    if cols.len() == 1 {
        return Ok((*first).clone());
    }
    let width = |c: &DiscretizedColumn| {
        let max = c.values.iter().copied().max().unwrap_or(0);
        c.n_bins.max(max + 1) as usize
    };
    let mut values = first.values.clone();
    let mut n_codes = width(first);
    // Re-code one column at a time; the pair (prefix code, value) indexes a
    // dense table and fresh codes are handed out by first appearance.
    for col in &cols[1..] {
        let w = width(col);
        let mut table = vec![u32::MAX; n_codes * w];
        let mut next = 0u32;
        for (code, &v) in values.iter_mut().zip(&col.values) {
            let slot = &mut table[*code as usize * w + v as usize];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
            *code = *slot;
        }
        n_codes = next as usize;
    }
    Ok(DiscretizedColumn {
        values,
        n_bins: n_codes as u32,
    })
}

/// `IG(Y; F) = H(Y) - H(Y|F)` for a feature subset under the default scheme.
pub fn info_gain(m: &FeatureMatrix, subset: &FeatureSubset) -> Result<f64> {
    info_gain_with(m, subset, Discretization::default())
}

pub fn info_gain_with(
    m: &FeatureMatrix,
    subset: &FeatureSubset,
    scheme: Discretization,
) -> Result<f64> {
    subset.validate(m.n_features())?;
    let cols: Vec<DiscretizedColumn> = subset
        .iter()
        .map(|f| discretize(&m.column(f), scheme))
        .collect();
    let refs: Vec<&DiscretizedColumn> = cols.iter().collect();
    gain_from_columns(&refs, m.labels(), entropy(m.labels())?)
}

fn gain_from_columns(cols: &[&DiscretizedColumn], labels: &[usize], h_y: f64) -> Result<f64> {
    let joint = joint_encode(cols)?;
    let ig = h_y - conditional_entropy(&joint, labels)?;
    Ok(if (-NEGATIVE_SLACK..0.0).contains(&ig) {
        0.0
    } else {
        ig
    })
}

/// Single features ordered by information gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeatures {
    pub order: Vec<usize>,
    /// Indexed by feature, not by rank.
    pub scores: Vec<f64>,
}

impl RankedFeatures {
    /// `(feature, score)` pairs in rank order.
    pub fn ranked(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.order.iter().map(|&f| (f, self.scores[f]))
    }
}

/// Ranks features by singleton IG, descending, ties to the lower index.
pub fn rank_features(m: &FeatureMatrix) -> RankedFeatures {
    rank_features_with(m, Discretization::default())
}

pub fn rank_features_with(m: &FeatureMatrix, scheme: Discretization) -> RankedFeatures {
    let mut cache = InfoGainCache::new(m, scheme);
    let scores: Vec<f64> = (0..m.n_features())
        .map(|f| cache.info_gain(&FeatureSubset::singleton(f)))
        .collect();
    let mut order: Vec<usize> = (0..m.n_features()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    RankedFeatures { order, scores }
}

/// Memoized IG over one matrix with columns discretized once.
#[derive(Debug)]
pub struct InfoGainCache<'a> {
    matrix: &'a FeatureMatrix,
    columns: Vec<DiscretizedColumn>,
    label_entropy: f64,
    memo: HashMap<FeatureSubset, f64>,
}

impl<'a> InfoGainCache<'a> {
    pub fn new(matrix: &'a FeatureMatrix, scheme: Discretization) -> Self {
        let columns = (0..matrix.n_features())
            .map(|f| discretize(&matrix.column(f), scheme))
            .collect();
        // A FeatureMatrix always has at least one row per class.
        let label_entropy = entropy(matrix.labels()).unwrap_or(0.0);
        InfoGainCache {
            matrix,
            columns,
            label_entropy,
            memo: HashMap::new(),
        }
    }

    pub fn label_entropy(&self) -> f64 {
        self.label_entropy
    }

    /// IG of a subset; the subset must be valid for the matrix.
    pub fn info_gain(&mut self, subset: &FeatureSubset) -> f64 {
        if let Some(&ig) = self.memo.get(subset) {
            return ig;
        }
        let cols: Vec<&DiscretizedColumn> = subset.iter().map(|f| &self.columns[f]).collect();
        let ig = gain_from_columns(&cols, self.matrix.labels(), self.label_entropy)
            .expect("subset validated by caller");
        self.memo.insert(subset.clone(), ig);
        ig
    }
}
