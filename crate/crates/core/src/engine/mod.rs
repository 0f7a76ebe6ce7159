//! Bias-only and bias + trait models trained by alternating closed-form
//! updates.
//!
//! An epoch visits every user row (item parameters frozen) and then every
//! item row (user parameters frozen). Each visit first sets the row's bias to
//! its exact minimizer given the current trait vector, then solves the ridge
//! system for the trait vector with the new bias. Both sub-updates minimize
//! the regularized objective exactly over their block, so the objective can
//! only go down.

mod linalg;
mod params;
mod steps;
mod train;

pub use linalg::cholesky_solve;
pub use params::{init_params, predict, FactorMatrix, ModelParams};
pub use steps::{als_item_step, als_user_step, bias_item_step, bias_user_step, objective};
pub(crate) use steps::{visit_row, RowScratch};
pub use train::{train, EpochRecord, TrainHistory, TrainOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Latent dimension; 0 trains the bias-only model.
    pub k: usize,
    /// Weight on the squared rating error.
    pub lambda: f64,
    /// L2 penalty on biases and trait vectors.
    pub tau: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Hyperparams {
    pub fn new(k: usize, lambda: f64, tau: f64, epochs: usize, seed: u64) -> Result<Self> {
        let h = Self {
            k,
            lambda,
            tau,
            epochs,
            seed,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be > 0, got {}", self.lambda)));
        }
        // tau > 0 keeps every k×k system positive definite
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        Ok(())
    }
}
