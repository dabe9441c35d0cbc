//! Stylometric text classification: symbol extraction, sparse feature
//! pipelines, from-scratch classifiers and evaluation metrics.

pub mod annotate;
pub mod classifiers;
pub(crate) mod codec;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod report;
pub mod rng;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
