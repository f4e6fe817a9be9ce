//! Image-based punch wear classification: a from-scratch CNN engine, a
//! procedural workpiece-image generator, training with early stopping,
//! Bayesian hyperparameter search and Welch-test model comparison.

pub mod cli;
pub mod data;
pub mod error;
pub mod hpo;
pub mod network;
pub mod seed;
pub mod stats;
pub mod synthgen;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
