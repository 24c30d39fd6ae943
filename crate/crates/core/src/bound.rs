//! Accuracy upper bound from information gain.
//!
//! Fano's inequality over an `n`-class label alphabet, with accuracy `θ` and
//! binary entropy `H2`, reads
//!
//! ```text
//! log2(n) - H2(θ) - (1 - θ) log2(n - 1) <= IG(Y; F)
//! ```
//!
//! Bounding `H2(θ)` by its maximum of one bit and solving for `θ` gives
//!
//! ```text
//! θ <= (IG - log2(n) + 1) / log2(n - 1) + 1
//! ```
//!
//! which is the bound the searches prune with. For two classes the
//! denominator vanishes; the bound is then taken as 1, which never prunes.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Slack on every bound comparison.
pub const BOUND_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Unclamped value; `+inf` for two classes.
    pub raw_bound: f64,
    /// `raw_bound` clamped into `[0, 1]`.
    pub clamped_bound: f64,
    pub n_classes: usize,
    pub ig_bits: f64,
}

pub fn accuracy_upper_bound(ig_bits: f64, n_classes: usize) -> Result<BoundReport> {
    if n_classes < 2 {
        return Err(Error::TooFewClasses(n_classes));
    }
    let raw_bound = if n_classes == 2 {
        f64::INFINITY
    } else {
        let n = n_classes as f64;
        (ig_bits - n.log2() + 1.0) / (n - 1.0).log2() + 1.0
    };
    Ok(BoundReport {
        raw_bound,
        clamped_bound: raw_bound.clamp(0.0, 1.0),
        n_classes,
        ig_bits,
    })
}

/// Binary entropy in bits, with `H2(0) = H2(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Left-hand side of Fano's inequality for accuracy `theta`.
pub fn fano_lhs(theta: f64, n_classes: usize) -> f64 {
    let n = n_classes as f64;
    n.log2() - binary_entropy(theta) - (1.0 - theta) * (n - 1.0).log2()
}

/// Whether `(theta, ig_bits)` is consistent with Fano's inequality.
pub fn fano_check(theta: f64, ig_bits: f64, n_classes: usize) -> bool {
    fano_lhs(theta, n_classes) <= ig_bits + BOUND_EPSILON
}
