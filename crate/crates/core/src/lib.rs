//! Explicit-feedback recommender built on alternating least squares.
//!
//! The pipeline is: [`ingest`] ratings into dual CSR matrices, [`engine`]
//! trains biases and latent traits, [`evaluation`] scores the result,
//! [`experiments`] sweeps hyperparameters, [`analysis`] inspects item
//! geometry and [`recommend`] folds in new users for cold-start serving.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod ingest;
pub mod model_io;
pub mod recommend;

pub use error::{Error, Result};
