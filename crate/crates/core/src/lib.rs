//! Coarse-grained partitions of semantic paths.
//!
//! A text is turned into a path of word embeddings; consecutive words are
//! grouped into n-grams whose concatenated vectors are clustered with
//! Wishart's mode analysis. Two corpora (say, human-written and
//! machine-generated) are then compared cluster by cluster: eight per-cluster
//! metrics give eight pairs of samples, each tested with Mann-Whitney U and
//! corrected for multiplicity with Holm's step-down procedure.
//!
//! Pipeline: [`corpus`] → [`embeddings`] → [`ngram`] → [`wishart`] /
//! [`validity`] → [`metrics`] → [`stats`]; [`subset`] picks a representative
//! dataset size and [`projection`] exports a 2-D view.

pub mod config;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod knn;
pub mod linalg;
pub mod metrics;
pub mod ngram;
pub mod projection;
pub mod stats;
pub mod subset;
pub mod synth;
pub mod validity;
pub mod wishart;

pub use error::{Error, Result};
