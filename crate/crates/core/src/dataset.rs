//! Keyword-count classification data: construction, CSV I/O, synthesis,
//! chunking and stratified folds.
//!
//! A [`FeatureMatrix`] holds one row per user. Each cell is the number of
//! times any keyword mapped to that feature occurred in the user's posts; the
//! label is a dense class id in `0..n_classes`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Name of the label column in the CSV format.
pub const LABEL_COLUMN: &str = "y";

/// Non-negative count matrix with one class label per row.
///
/// Immutable after construction; the constructor enforces that every row has
/// `n_features` entries and that every class in `0..n_classes` occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMatrix {
    feature_names: Vec<String>,
    rows: Vec<Vec<u32>>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl FeatureMatrix {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<u32>>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::SingleClass(n_classes));
        }
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        let n_features = feature_names.len();
        if let Some((r, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_features) {
            return Err(Error::InvalidMatrix(format!(
                "row {r} has {} entries, expected {n_features}",
                row.len()
            )));
        }
        let mut seen = vec![false; n_classes];
        for (r, &y) in labels.iter().enumerate() {
            if y >= n_classes {
                return Err(Error::InvalidMatrix(format!(
                    "row {r} has label {y}, outside 0..{n_classes}"
                )));
            }
            seen[y] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::LabelGap {
                missing,
                max: n_classes - 1,
            });
        }
        Ok(FeatureMatrix {
            feature_names,
            rows,
            labels,
            n_classes,
        })
    }

    /// Builds a matrix taking `n_classes = 1 + max(label)`.
    pub fn from_dense_labels(
        feature_names: Vec<String>,
        rows: Vec<Vec<u32>>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let max = labels.iter().copied().max().ok_or(Error::EmptyInput)?;
        if max == 0 {
            return Err(Error::SingleClass(1));
        }
        FeatureMatrix::new(feature_names, rows, labels, max + 1)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn column(&self, feature: usize) -> Vec<u32> {
        self.rows.iter().map(|r| r[feature]).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Copies the given rows into a new matrix with the same class count.
    ///
    /// Fails when the selection misses a class.
    pub fn select_rows(&self, rows: &[usize]) -> Result<FeatureMatrix> {
        FeatureMatrix::new(
            self.feature_names.clone(),
            rows.iter().map(|&r| self.rows[r].clone()).collect(),
            rows.iter().map(|&r| self.labels[r]).collect(),
            self.n_classes,
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(LABEL_COLUMN);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for (row, y) in self.rows.iter().zip(&self.labels) {
            record.clear();
            record.extend(row.iter().map(u32::to_string));
            record.push(y.to_string());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<FeatureMatrix> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut records = reader.records();

        let header = match records.next() {
            Some(h) => h?,
            None => return Err(Error::MissingHeader),
        };
        let last = header.get(header.len().saturating_sub(1)).unwrap_or("");
        if last != LABEL_COLUMN {
            // A first line made of numbers is a body row, not a bad header.
            if header.iter().all(|c| c.parse::<i64>().is_ok()) {
                return Err(Error::MissingHeader);
            }
            return Err(Error::MissingLabelColumn(last.to_string()));
        }
        let feature_names: Vec<String> = header
            .iter()
            .take(header.len() - 1)
            .map(str::to_string)
            .collect();
        let width = header.len();

        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for record in records {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != width {
                return Err(Error::RaggedRow {
                    line,
                    expected: width,
                    found: record.len(),
                });
            }
            let mut values = Vec::with_capacity(width);
            for (column, cell) in record.iter().enumerate() {
                let v: i64 = cell.parse().map_err(|_| Error::NonInteger {
                    line,
                    column: column + 1,
                    value: cell.to_string(),
                })?;
                if v < 0 {
                    return Err(Error::NegativeCount {
                        line,
                        column: column + 1,
                        value: v,
                    });
                }
                values.push(v);
            }
            let y = values.pop().unwrap_or_default() as usize;
            let row = values
                .into_iter()
                .enumerate()
                .map(|(column, v)| {
                    u32::try_from(v).map_err(|_| Error::NonInteger {
                        line,
                        column: column + 1,
                        value: v.to_string(),
                    })
                })
                .collect::<Result<Vec<u32>>>()?;
            rows.push(row);
            labels.push(y);
        }

        let max = labels.iter().copied().max().ok_or(Error::SingleClass(0))?;
        let mut seen = vec![false; max + 1];
        for &y in &labels {
            seen[y] = true;
        }
        if max == 0 {
            return Err(Error::SingleClass(1));
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::LabelGap { missing, max });
        }
        FeatureMatrix::new(feature_names, rows, labels, max + 1)
    }
}

/// Reads a matrix from a CSV file whose last column is the label `y`.
pub fn load_csv(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    FeatureMatrix::read_csv(std::io::BufReader::new(file))
}

pub fn save_csv(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    m.write_csv(std::io::BufWriter::new(file))
}

/// Feature name to keyword list, in feature order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordMap {
    entries: Vec<(String, Vec<String>)>,
}

impl KeywordMap {
    /// Keywords are lower-cased; every feature needs at least one non-empty keyword.
    pub fn new<N, K>(entries: impl IntoIterator<Item = (N, Vec<K>)>) -> Result<Self>
    where
        N: Into<String>,
        K: AsRef<str>,
    {
        let entries: Vec<(String, Vec<String>)> = entries
            .into_iter()
            .map(|(name, kws)| {
                (
                    name.into(),
                    kws.iter().map(|k| k.as_ref().to_lowercase()).collect(),
                )
            })
            .collect();
        if entries.is_empty() {
            return Err(Error::InvalidKeywordMap("no features".into()));
        }
        for (name, kws) in &entries {
            if kws.is_empty() {
                return Err(Error::InvalidKeywordMap(format!(
                    "feature {name:?} has no keywords"
                )));
            }
            if kws.iter().any(|k| k.is_empty()) {
                return Err(Error::InvalidKeywordMap(format!(
                    "feature {name:?} has an empty keyword"
                )));
            }
        }
        Ok(KeywordMap { entries })
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sums keyword occurrences per feature for each user.
///
/// `user_posts[u]` is the list of posts of user `u`, each a token sequence.
/// Tokens match keywords by whole-token, case-insensitive equality. A keyword
/// listed under several features counts towards each of them.
pub fn build_counts<T: AsRef<str>>(
    user_posts: &[Vec<Vec<T>>],
    km: &KeywordMap,
    labels: &[usize],
) -> Result<FeatureMatrix> {
    if km.is_empty() {
        return Err(Error::InvalidKeywordMap("no features".into()));
    }
    if user_posts.len() != labels.len() {
        return Err(Error::LabelCount {
            expected: user_posts.len(),
            got: labels.len(),
        });
    }
    let mut features_of: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, (_, kws)) in km.entries.iter().enumerate() {
        for k in kws {
            features_of.entry(k.as_str()).or_default().push(i);
        }
    }
    let rows = user_posts
        .iter()
        .map(|posts| {
            let mut row = vec![0u32; km.len()];
            for token in posts.iter().flatten() {
                let token = token.as_ref().to_lowercase();
                if let Some(fs) = features_of.get(token.as_str()) {
                    for &f in fs {
                        row[f] += 1;
                    }
                }
            }
            row
        })
        .collect();
    FeatureMatrix::from_dense_labels(
        km.feature_names().map(str::to_string).collect(),
        rows,
        labels.to_vec(),
    )
}

/// Parameters of the synthetic count generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_features: usize,
    pub n_informative: usize,
    pub n_rows: usize,
    pub n_classes: usize,
    pub noise_rate: f64,
    pub max_count: u32,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_features: 10,
            n_informative: 3,
            n_rows: 500,
            n_classes: 4,
            noise_rate: 0.1,
            max_count: 8,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSynthSpec(msg));
        if self.n_features == 0 || self.n_rows == 0 || self.max_count == 0 {
            return bad("n_features, n_rows and max_count must be positive".into());
        }
        if self.n_informative > self.n_features {
            return bad(format!(
                "n_informative {} exceeds n_features {}",
                self.n_informative, self.n_features
            ));
        }
        if self.n_classes < 2 {
            return bad(format!(
                "n_classes must be at least 2, got {}",
                self.n_classes
            ));
        }
        if self.n_rows < self.n_classes {
            return bad(format!(
                "n_rows {} is smaller than n_classes {}",
                self.n_rows, self.n_classes
            ));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return bad(format!("noise_rate {} outside [0, 1]", self.noise_rate));
        }
        Ok(())
    }

    /// Indices of the class-dependent features; they come first.
    pub fn informative_features(&self) -> std::ops::Range<usize> {
        0..self.n_informative
    }
}

/// Generates a sparse keyword-count matrix with planted class signal.
///
/// Features `0..n_informative` share a class-conditional multinomial: each
/// row draws a token budget in `1..=max_count` and spreads it over the
/// informative features plus an "unmapped" bucket. Class `c` has its mode on
/// bucket `c mod (n_informative + 1)`. With probability `noise_rate` a row is
/// generated from a uniformly drawn class instead of its label. The other
/// features are class-independent Poisson counts. Every cell is at most
/// `max_count`, and labels are balanced to within one row.
pub fn synth_generate(spec: &SynthSpec) -> Result<FeatureMatrix> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_inf = spec.n_informative;
    let buckets = n_inf + 1;

    let profiles = (0..spec.n_classes)
        .map(|c| {
            let weights: Vec<f64> = (0..buckets)
                .map(|b| {
                    let base = rng.random_range(0.1..1.0);
                    if b == c % buckets {
                        base + 3.0
                    } else {
                        base
                    }
                })
                .collect();
            WeightedIndex::new(weights).expect("positive weights")
        })
        .collect::<Vec<_>>();
    let noise_rates: Vec<Poisson<f64>> = (n_inf..spec.n_features)
        .map(|_| Poisson::new(rng.random_range(0.2..1.5)).expect("positive rate"))
        .collect();

    let mut labels: Vec<usize> = (0..spec.n_rows).map(|r| r % spec.n_classes).collect();
    labels.shuffle(&mut rng);

    let rows = labels
        .iter()
        .map(|&y| {
            let mut row = vec![0u32; spec.n_features];
            let source = if spec.noise_rate > 0.0 && rng.random_bool(spec.noise_rate) {
                rng.random_range(0..spec.n_classes)
            } else {
                y
            };
            if n_inf > 0 {
                let budget = rng.random_range(1..=spec.max_count);
                for _ in 0..budget {
                    let b = profiles[source].sample(&mut rng);
                    if b < n_inf {
                        row[b] += 1;
                    }
                }
            }
            for (j, dist) in noise_rates.iter().enumerate() {
                let v: f64 = dist.sample(&mut rng);
                row[n_inf + j] = (v as u32).min(spec.max_count);
            }
            row
        })
        .collect();

    let names = (1..=spec.n_features).map(|i| format!("f{i}")).collect();
    FeatureMatrix::new(names, rows, labels, spec.n_classes)
}

/// Splits a seeded shuffle of the rows into consecutive chunks of
/// `chunk_size`; a chunk (including the short remainder) is kept only if it
/// contains every class. Rows keep their original relative order inside a
/// chunk.
pub fn chunk(m: &FeatureMatrix, chunk_size: usize, seed: u64) -> Result<Vec<FeatureMatrix>> {
    if chunk_size < m.n_classes() || chunk_size > m.n_rows() {
        return Err(Error::ChunkSize {
            chunk_size,
            n_rows: m.n_rows(),
            n_classes: m.n_classes(),
        });
    }
    let mut order: Vec<usize> = (0..m.n_rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut kept = Vec::new();
    for piece in order.chunks(chunk_size) {
        let mut rows = piece.to_vec();
        rows.sort_unstable();
        let mut seen = vec![false; m.n_classes()];
        for &r in &rows {
            seen[m.labels()[r]] = true;
        }
        if seen.iter().all(|&s| s) {
            kept.push(m.select_rows(&rows)?);
        }
    }
    Ok(kept)
}

/// Fold index of every row for stratified k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of_row: Vec<usize>,
    pub k: usize,
}

impl FoldAssignment {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_row.len())
            .filter(|&r| self.fold_of_row[r] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_row.len())
            .filter(|&r| self.fold_of_row[r] != fold)
            .collect()
    }
}

/// Seeded stratified fold assignment.
///
/// Each class's rows are shuffled and dealt round-robin across folds, starting
/// where the previous class stopped so overall fold sizes also stay within
/// one of each other.
pub fn stratified_folds(m: &FeatureMatrix, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidCvConfig(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); m.n_classes()];
    for (r, &y) in m.labels().iter().enumerate() {
        by_class[y].push(r);
    }
    if let Some((class, rows)) = by_class.iter().enumerate().find(|(_, rows)| rows.len() < k) {
        return Err(Error::ClassTooSmall {
            class,
            count: rows.len(),
            k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of_row = vec![0; m.n_rows()];
    let mut offset = 0;
    for rows in &mut by_class {
        rows.shuffle(&mut rng);
        for (p, &r) in rows.iter().enumerate() {
            fold_of_row[r] = (offset + p) % k;
        }
        offset = (offset + rows.len()) % k;
    }
    Ok(FoldAssignment { fold_of_row, k })
}
