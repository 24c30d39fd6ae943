//! Feature-subset selection for keyword-count classification data.
//!
//! The crate is organised the way the pipeline runs:
//!
//! * [`dataset`] builds, loads, synthesizes, chunks and folds count matrices.
//! * [`info_theory`] computes plug-in entropies and information gain, and
//!   ranks single features (the filter phase).
//! * [`classifier`] is the multinomial naive Bayes wrapper that measures the
//!   cross-validated accuracy of a subset.
//! * [`bound`] turns information gain into an upper bound on accuracy.
//! * [`search`] holds the exact branch-and-bound, greedy and hybrid searches,
//!   plus the brute-force oracle and the local-optimality checker.
//! * [`cardinality`] is the small MLP that predicts how many features the
//!   hybrid search may grow a subset to.

pub mod bound;
pub mod cardinality;
pub mod classifier;
pub mod dataset;
mod error;
pub mod info_theory;
pub mod search;
mod subset;

pub use error::{Error, Result};
pub use subset::FeatureSubset;
