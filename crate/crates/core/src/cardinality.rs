//! Feature-cardinality detector.
//!
//! A two-hidden-layer perceptron (ReLU, ReLU, softmax) reads a fixed-length
//! summary of a matrix and classifies the size of its best feature subset.
//! Class `j` means cardinality `j + 1`. Training uses mean sparse categorical
//! cross-entropy and Adam with bias correction.
//!
//! The input encoding is:
//!
//! ```text
//! [IG of feature 0 .. IG of feature n-1, 0 ... 0]   n_max slots
//! [class frequency 0 .. class frequency 7]           8 slots
//! [n_features / n_max, log2(n_rows) / 16]            2 slots
//! ```

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{chunk, FeatureMatrix};
use crate::info_theory::{rank_features_with, Discretization};
use crate::search::{brute_force_oracle, exact_search, SearchConfig, DEFAULT_ORACLE_CAP};
use crate::{Error, Result};

pub const ENCODING_VERSION: u32 = 1;
pub const DEFAULT_N_MAX: usize = 32;
const HISTOGRAM_SLOTS: usize = 8;
const SUMMARY_SLOTS: usize = 2;

pub fn input_dim(n_max: usize) -> usize {
    n_max + HISTOGRAM_SLOTS + SUMMARY_SLOTS
}

/// Fixed-length model input for a matrix.
pub fn encode_input(m: &FeatureMatrix, n_max: usize) -> Result<Vec<f64>> {
    encode_input_with(m, n_max, Discretization::default())
}

pub fn encode_input_with(
    m: &FeatureMatrix,
    n_max: usize,
    scheme: Discretization,
) -> Result<Vec<f64>> {
    if m.n_features() > n_max {
        return Err(Error::TooManyFeatures {
            n_features: m.n_features(),
            max: n_max,
        });
    }
    if m.n_classes() > HISTOGRAM_SLOTS {
        return Err(Error::TooManyClasses {
            n_classes: m.n_classes(),
        });
    }
    let mut x = vec![0.0; input_dim(n_max)];
    let scores = rank_features_with(m, scheme).scores;
    x[..scores.len()].copy_from_slice(&scores);
    let n = m.n_rows() as f64;
    for (c, count) in m.class_counts().into_iter().enumerate() {
        x[n_max + c] = count as f64 / n;
    }
    x[n_max + HISTOGRAM_SLOTS] = m.n_features() as f64 / n_max as f64;
    x[n_max + HISTOGRAM_SLOTS + 1] = n.log2() / 16.0;
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub input: Vec<f64>,
    /// Optimal cardinality minus one.
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Labeler {
    /// Brute force; limited to small feature counts.
    Oracle,
    Exact,
    /// Oracle up to the oracle cap, exact search above it.
    Auto,
}

/// One example per kept chunk, labeled with the chunk's best cardinality.
pub fn gen_training_data(
    m: &FeatureMatrix,
    chunk_size: usize,
    seed: u64,
    labeler: Labeler,
    search: &SearchConfig,
    n_max: usize,
) -> Result<Vec<TrainingExample>> {
    let use_oracle = match labeler {
        Labeler::Oracle => true,
        Labeler::Exact => false,
        Labeler::Auto => m.n_features() <= DEFAULT_ORACLE_CAP,
    };
    chunk(m, chunk_size, seed)?
        .iter()
        .map(|part| {
            let best = if use_oracle {
                brute_force_oracle(part, DEFAULT_ORACLE_CAP, search)?
            } else {
                exact_search(part, search)?
            };
            let label = best.indices.len() - 1;
            if label >= n_max {
                return Err(Error::InvalidTrainingData(format!(
                    "cardinality {} exceeds n_max {n_max}",
                    label + 1
                )));
            }
            Ok(TrainingExample {
                input: encode_input_with(part, n_max, search.discretization)?,
                label,
            })
        })
        .collect()
}

/// Fully connected layer, `rows` outputs by `cols` inputs, row-major weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn he_init(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = (2.0 / cols as f64).sqrt();
        let weights = (0..rows * cols)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * scale
            })
            .collect();
        DenseLayer {
            rows,
            cols,
            weights,
            bias: vec![0.0; rows],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks(self.cols)
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CardinalityModel {
    pub encoding_version: u32,
    pub n_max: usize,
    pub input_dim: usize,
    /// input -> h1 -> h2 -> n_max outputs.
    pub layers: Vec<DenseLayer>,
}

struct Activations {
    /// Pre-activations of the two hidden layers.
    hidden_pre: [Vec<f64>; 2],
    hidden: [Vec<f64>; 2],
    probs: Vec<f64>,
}

fn relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0)).collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn log_softmax_at(z: &[f64], i: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z[i] - lse
}

impl CardinalityModel {
    /// He-initialized network for `input_dim` inputs and `n_max` classes.
    pub fn new(input_dim: usize, hidden: [usize; 2], n_max: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = vec![
            DenseLayer::he_init(hidden[0], input_dim, &mut rng),
            DenseLayer::he_init(hidden[1], hidden[0], &mut rng),
            DenseLayer::he_init(n_max, hidden[1], &mut rng),
        ];
        CardinalityModel {
            encoding_version: ENCODING_VERSION,
            n_max,
            input_dim,
            layers,
        }
    }

    pub fn hidden_sizes(&self) -> [usize; 2] {
        [self.layers[0].rows, self.layers[1].rows]
    }

    fn forward(&self, x: &[f64]) -> (Activations, Vec<f64>) {
        let z1 = self.layers[0].apply(x);
        let a1 = relu(z1.clone());
        let z2 = self.layers[1].apply(&a1);
        let a2 = relu(z2.clone());
        let logits = self.layers[2].apply(&a2);
        let probs = softmax(&logits);
        (
            Activations {
                hidden_pre: [z1, z2],
                hidden: [a1, a2],
                probs,
            },
            logits,
        )
    }

    /// Softmax output over cardinality classes.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).0.probs
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, batch: &[TrainingExample]) -> f64 {
        batch
            .iter()
            .map(|ex| -log_softmax_at(&self.forward(&ex.input).1, ex.label))
            .sum::<f64>()
            / batch.len() as f64
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::n_params).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.bias);
        }
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.n_params(), "parameter vector length");
        let mut rest = params;
        for l in &mut self.layers {
            let (w, r) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, r) = r.split_at(l.bias.len());
            l.bias.copy_from_slice(b);
            rest = r;
        }
    }

    /// Mean loss and its gradient, flattened like [`Self::parameters`].
    pub fn loss_and_gradient(&self, batch: &[TrainingExample]) -> (f64, Vec<f64>) {
        let scale = 1.0 / batch.len() as f64;
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
            .collect();
        let mut loss = 0.0;
        for ex in batch {
            let (act, logits) = self.forward(&ex.input);
            loss -= log_softmax_at(&logits, ex.label);

            let mut delta: Vec<f64> = act.probs.iter().map(|p| p * scale).collect();
            delta[ex.label] -= scale;
            let inputs: [&[f64]; 3] = [&ex.input, &act.hidden[0], &act.hidden[1]];
            for li in (0..3).rev() {
                let layer = &self.layers[li];
                let (gw, gb) = &mut grads[li];
                for (r, &d) in delta.iter().enumerate() {
                    gb[r] += d;
                    if d != 0.0 {
                        for (g, &a) in gw[r * layer.cols..(r + 1) * layer.cols]
                            .iter_mut()
                            .zip(inputs[li])
                        {
                            *g += d * a;
                        }
                    }
                }
                if li > 0 {
                    let pre = &act.hidden_pre[li - 1];
                    delta = (0..layer.cols)
                        .map(|c| {
                            if pre[c] <= 0.0 {
                                return 0.0;
                            }
                            delta
                                .iter()
                                .enumerate()
                                .map(|(r, d)| d * layer.weights[r * layer.cols + c])
                                .sum()
                        })
                        .collect();
                }
            }
        }
        let flat = grads
            .into_iter()
            .flat_map(|(w, b)| w.into_iter().chain(b))
            .collect();
        (loss * scale, flat)
    }

    fn check_compatible(&self, n_max: usize) -> Result<()> {
        if self.encoding_version != ENCODING_VERSION {
            return Err(Error::EncodingMismatch(format!(
                "model encoding version {}, expected {ENCODING_VERSION}",
                self.encoding_version
            )));
        }
        if self.n_max != n_max || self.input_dim != input_dim(n_max) {
            return Err(Error::EncodingMismatch(format!(
                "model expects n_max {} and input_dim {}",
                self.n_max, self.input_dim
            )));
        }
        Ok(())
    }
}

/// Cardinality cap for a matrix: `1 + argmax` of the softmax output,
/// ties to the smaller cardinality, clamped to `1..=n_features`.
pub fn predict_cardinality(model: &CardinalityModel, m: &FeatureMatrix) -> Result<usize> {
    model.check_compatible(model.n_max)?;
    let x = encode_input(m, model.n_max)?;
    let probs = model.probabilities(&x);
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    Ok((best + 1).clamp(1, m.n_features().max(1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub validation_fraction: f64,
    pub hidden: [usize; 2],
    pub n_max: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            validation_fraction: 0.2,
            hidden: [64, 32],
            n_max: DEFAULT_N_MAX,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidTrainConfig(m.to_string()));
        if self.epochs == 0 || self.batch_size == 0 || self.n_max == 0 {
            return bad("epochs, batch_size and n_max must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        if !(self.learning_rate > 0.0 && self.epsilon > 0.0) {
            return bad("learning_rate and epsilon must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub n_train: usize,
    pub n_validation: usize,
    pub epochs: usize,
    /// Epoch (1-based) whose weights were kept.
    pub best_epoch: usize,
    /// Validation loss of the kept weights, or training loss without a
    /// validation split.
    pub best_loss: f64,
    /// Training-set loss after each epoch.
    pub train_losses: Vec<f64>,
    pub validation_losses: Vec<f64>,
    pub validation_accuracy: Option<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

pub fn train(examples: &[TrainingExample], cfg: &TrainConfig) -> Result<CardinalityModel> {
    train_with_summary(examples, cfg).map(|(model, _)| model)
}

/// Trains with seeded shuffling and keeps the epoch with the lowest
/// validation loss.
pub fn train_with_summary(
    examples: &[TrainingExample],
    cfg: &TrainConfig,
) -> Result<(CardinalityModel, TrainSummary)> {
    cfg.validate()?;
    if examples.len() < 2 {
        return Err(Error::InvalidTrainingData(format!(
            "need at least 2 examples, got {}",
            examples.len()
        )));
    }
    let dim = input_dim(cfg.n_max);
    for (i, ex) in examples.iter().enumerate() {
        if ex.input.len() != dim {
            return Err(Error::InvalidTrainingData(format!(
                "example {i} has {} inputs, expected {dim}",
                ex.input.len()
            )));
        }
        if ex.label >= cfg.n_max {
            return Err(Error::InvalidTrainingData(format!(
                "example {i} has label {} outside 0..{}",
                ex.label, cfg.n_max
            )));
        }
        if ex.input.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTrainingData(format!(
                "example {i} has non-finite input"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = CardinalityModel::new(dim, cfg.hidden, cfg.n_max, cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((examples.len() as f64 * cfg.validation_fraction).floor() as usize)
        .min(examples.len() - 1);
    let validation: Vec<TrainingExample> = order[..n_val]
        .iter()
        .map(|&i| examples[i].clone())
        .collect();
    let mut training: Vec<TrainingExample> = order[n_val..]
        .iter()
        .map(|&i| examples[i].clone())
        .collect();

    let mut adam = Adam::new(model.n_params());
    let mut params = model.parameters();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut train_losses = Vec::with_capacity(cfg.epochs);
    let mut validation_losses = Vec::new();

    for epoch in 1..=cfg.epochs {
        training.shuffle(&mut rng);
        for batch in training.chunks(cfg.batch_size) {
            let (loss, grad) = model.loss_and_gradient(batch);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            adam.step(&mut params, &grad, cfg);
            model.set_parameters(&params);
        }
        let train_loss = model.loss(&training);
        if !train_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        train_losses.push(train_loss);
        let score = if validation.is_empty() {
            train_loss
        } else {
            let v = model.loss(&validation);
            validation_losses.push(v);
            v
        };
        if best.as_ref().is_none_or(|(b, _, _)| score < *b) {
            best = Some((score, epoch, params.clone()));
        }
    }

    let (best_loss, best_epoch, best_params) = best.expect("at least one epoch");
    model.set_parameters(&best_params);
    let validation_accuracy = (!validation.is_empty()).then(|| {
        let hits = validation
            .iter()
            .filter(|ex| argmax(&model.probabilities(&ex.input)) == ex.label)
            .count();
        hits as f64 / validation.len() as f64
    });
    log::debug!("trained cardinality model: best epoch {best_epoch}, loss {best_loss:.5}");
    Ok((
        model,
        TrainSummary {
            n_train: training.len(),
            n_validation: validation.len(),
            epochs: cfg.epochs,
            best_epoch,
            best_loss,
            train_losses,
            validation_losses,
            validation_accuracy,
        },
    ))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

// On-disk format. Floats are shortest round-trip decimal strings.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    rows: usize,
    cols: usize,
    weights: Vec<String>,
    bias: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    encoding_version: u32,
    n_max: usize,
    input_dim: usize,
    layers: Vec<LayerFile>,
}

fn parse_floats(values: &[String], what: &str) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::ModelFormat(format!("{what}: {s:?} is not a finite number")))
        })
        .collect()
}

impl CardinalityModel {
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            encoding_version: self.encoding_version,
            n_max: self.n_max,
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    rows: l.rows,
                    cols: l.cols,
                    weights: l.weights.iter().map(f64::to_string).collect(),
                    bias: l.bias.iter().map(f64::to_string).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.encoding_version != ENCODING_VERSION {
            return Err(Error::EncodingMismatch(format!(
                "file has encoding version {}, expected {ENCODING_VERSION}",
                file.encoding_version
            )));
        }
        if file.input_dim != input_dim(file.n_max) {
            return Err(Error::EncodingMismatch(format!(
                "input_dim {} does not match n_max {}",
                file.input_dim, file.n_max
            )));
        }
        if file.layers.len() != 3 {
            return Err(Error::ModelFormat(format!(
                "expected 3 layers, found {}",
                file.layers.len()
            )));
        }
        let mut expected_cols = file.input_dim;
        let mut layers = Vec::with_capacity(3);
        for (i, l) in file.layers.iter().enumerate() {
            if l.cols != expected_cols
                || l.weights.len() != l.rows * l.cols
                || l.bias.len() != l.rows
                || l.rows == 0
            {
                return Err(Error::ModelFormat(format!(
                    "layer {i} has inconsistent shape"
                )));
            }
            layers.push(DenseLayer {
                rows: l.rows,
                cols: l.cols,
                weights: parse_floats(&l.weights, "weights")?,
                bias: parse_floats(&l.bias, "bias")?,
            });
            expected_cols = l.rows;
        }
        if expected_cols != file.n_max {
            return Err(Error::ModelFormat(format!(
                "output width {expected_cols} differs from n_max {}",
                file.n_max
            )));
        }
        Ok(CardinalityModel {
            encoding_version: file.encoding_version,
            n_max: file.n_max,
            input_dim: file.input_dim,
            layers,
        })
    }
}

pub fn save_model(model: &CardinalityModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CardinalityModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CardinalityModel::from_json(&text)
}
