use std::io::Write;
use std::path::Path;
use std::time::Instant;

use super::{als_item_step, als_user_step, bias_item_step, bias_user_step, init_params, objective, Hyperparams, ModelParams};
use crate::error::{Error, Result};
use crate::evaluation::rmse;
use crate::ingest::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainOptions {
    /// Worker threads for the row updates; 0 uses the rayon default.
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub objective: f64,
    pub train_rmse: f64,
    /// `None` when the test split is empty.
    pub test_rmse: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    /// Objective never rises by more than `rel_tol` of its previous value.
    pub fn is_monotone(&self, rel_tol: f64) -> bool {
        self.epochs
            .windows(2)
            .all(|w| w[1].objective <= w[0].objective + rel_tol * w[0].objective.abs())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "epoch,objective,train_rmse,test_rmse,seconds")?;
        for e in &self.epochs {
            let test = e.test_rmse.map(|x| format!("{x:.6}")).unwrap_or_default();
            writeln!(
                out,
                "{},{:.6},{:.6},{},{:.3}",
                e.epoch, e.objective, e.train_rmse, test, e.seconds
            )?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }
}

/// Trains for `h.epochs` epochs: every epoch runs the user half-step then the
/// item half-step (bias-only steps when `h.k == 0`). `μ` is the training
/// mean and stays fixed.
pub fn train(data: &Dataset, h: &Hyperparams, opts: TrainOptions) -> Result<(ModelParams, TrainHistory)> {
    h.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;

    let mu = data.train_mean()?;
    let mut params = init_params(h, data.n_users(), data.n_items(), mu);
    let mut history = TrainHistory::default();

    for epoch in 1..=h.epochs {
        let start = Instant::now();
        pool.install(|| -> Result<()> {
            if h.k == 0 {
                bias_user_step(&mut params, &data.train_by_user, h)?;
                bias_item_step(&mut params, &data.train_by_item, h)
            } else {
                als_user_step(&mut params, &data.train_by_user, h)?;
                als_item_step(&mut params, &data.train_by_item, h)
            }
        })?;
        let seconds = start.elapsed().as_secs_f64();
        let test_rmse = if data.test_by_user.nnz() > 0 {
            Some(rmse(&params, &data.test_by_user)?)
        } else {
            None
        };
        history.epochs.push(EpochRecord {
            epoch,
            objective: objective(&params, &data.train_by_user, h),
            train_rmse: rmse(&params, &data.train_by_user)?,
            test_rmse,
            seconds,
        });
    }
    Ok((params, history))
}
