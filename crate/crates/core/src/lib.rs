//! Unsupervised training of sequence classifiers by matching the expected
//! N-gram statistics of their outputs to a prior language model.

// Validation uses negated comparisons such as `!(x > 0.0)` on purpose: they
// also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod cost;
pub mod error;
pub mod experiment;
pub mod landscape;
mod kernel;
pub mod model;
pub mod rng;
pub mod spdg;
pub mod synthdata;
pub mod tuple;

#[cfg(test)]
mod testutil;

pub use corpus::{NGramModel, Vocabulary};
pub use error::{Error, Result};
pub use model::LinearClassifier;
pub use synthdata::{SequenceDataset, Window};
