use rayon::prelude::*;

use super::linalg::cholesky_solve;
use super::params::{dot, FactorMatrix, ModelParams};
use super::Hyperparams;
use crate::error::{Error, Result};
use crate::ingest::{CsrMatrix, Orientation, Row};

/// Per-worker buffers for the `k × k` system.
pub(crate) struct RowScratch {
    gram: Vec<f64>,
    rhs: Vec<f64>,
}

impl RowScratch {
    pub(crate) fn new(k: usize) -> Self {
        Self {
            gram: vec![0.0; k * k],
            rhs: vec![0.0; k],
        }
    }
}

/// Frozen parameters of the opposite side during a half-step.
struct Opposite<'a> {
    mu: f64,
    bias: &'a [f64],
    factors: &'a FactorMatrix,
}

fn bias_update(row: Row<'_>, opp: &Opposite<'_>, own_vec: &[f64], lambda: f64, tau: f64) -> f64 {
    let mut num = 0.0;
    for (j, r) in row.iter() {
        let j = j as usize;
        num += r - opp.mu - opp.bias[j] - dot(own_vec, opp.factors.row(j));
    }
    lambda * num / (tau + lambda * row.len() as f64)
}

/// One row visit: the bias minimizer given the current trait vector, then the
/// ridge solve for the trait vector given the new bias. Returns the bias and
/// overwrites `own_vec` (left untouched when `train_traits` is false).
fn visit(
    row: Row<'_>,
    opp: &Opposite<'_>,
    own_vec: &mut [f64],
    lambda: f64,
    tau: f64,
    train_traits: bool,
    scratch: &mut RowScratch,
) -> Result<f64> {
    let bias = bias_update(row, opp, own_vec, lambda, tau);
    let k = own_vec.len();
    if !train_traits || k == 0 {
        return Ok(bias);
    }

    let RowScratch { gram, rhs } = scratch;
    gram.fill(0.0);
    rhs.fill(0.0);
    for (j, r) in row.iter() {
        let j = j as usize;
        let v = opp.factors.row(j);
        let resid = r - opp.mu - bias - opp.bias[j];
        for a in 0..k {
            rhs[a] += v[a] * resid;
            for b in 0..=a {
                gram[a * k + b] += v[a] * v[b];
            }
        }
    }
    for a in 0..k {
        rhs[a] *= lambda;
        for b in 0..=a {
            gram[a * k + b] *= lambda;
        }
        gram[a * k + a] += tau;
    }
    cholesky_solve(gram, rhs, k)?;
    own_vec.copy_from_slice(rhs);
    Ok(bias)
}

/// Visits one row as the user (or item) half-step would, for a row that is
/// not stored in the model. Used by cold-start fold-in.
pub(crate) fn visit_row(
    params: &ModelParams,
    side: Orientation,
    row: Row<'_>,
    own_vec: &mut [f64],
    h: &Hyperparams,
    scratch: &mut RowScratch,
) -> Result<f64> {
    let opp = match side {
        Orientation::ByUser => Opposite {
            mu: params.mu,
            bias: &params.item_bias,
            factors: &params.item_factors,
        },
        Orientation::ByItem => Opposite {
            mu: params.mu,
            bias: &params.user_bias,
            factors: &params.user_factors,
        },
    };
    visit(row, &opp, own_vec, h.lambda, h.tau, true, scratch)
}

fn half_step(
    params: &mut ModelParams,
    csr: &CsrMatrix,
    side: Orientation,
    h: &Hyperparams,
    train_traits: bool,
) -> Result<()> {
    if csr.orientation() != side {
        return Err(Error::InvalidArgument(format!(
            "expected a {side:?} matrix, got {:?}",
            csr.orientation()
        )));
    }
    if csr.n_users() != params.n_users() || csr.n_items() != params.n_items() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, model is {}x{}",
            csr.n_users(),
            csr.n_items(),
            params.n_users(),
            params.n_items()
        )));
    }
    let k = params.k();
    let ModelParams {
        mu,
        user_bias,
        item_bias,
        user_factors,
        item_factors,
    } = params;
    let (own_bias, own_factors, opp, name) = match side {
        Orientation::ByUser => (
            user_bias,
            user_factors,
            Opposite {
                mu: *mu,
                bias: item_bias,
                factors: item_factors,
            },
            "user",
        ),
        Orientation::ByItem => (
            item_bias,
            item_factors,
            Opposite {
                mu: *mu,
                bias: user_bias,
                factors: user_factors,
            },
            "item",
        ),
    };
    let (lambda, tau) = (h.lambda, h.tau);

    // Each row reads only the frozen opposite block and writes only itself, so
    // the result is independent of scheduling.
    let update = |r: usize, b: &mut f64, vec: &mut [f64], scratch: &mut RowScratch| -> Result<()> {
        let nb = visit(csr.row(r), &opp, vec, lambda, tau, train_traits, scratch)
            .map_err(|_| Error::NonFinite { side: name, row: r })?;
        if !nb.is_finite() || vec.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { side: name, row: r });
        }
        *b = nb;
        Ok(())
    };

    if k == 0 {
        own_bias
            .par_iter_mut()
            .enumerate()
            .try_for_each_init(|| RowScratch::new(0), |s, (r, b)| update(r, b, &mut [], s))
    } else {
        own_bias
            .par_iter_mut()
            .zip(own_factors.as_mut_slice().par_chunks_mut(k))
            .enumerate()
            .try_for_each_init(|| RowScratch::new(k), |s, (r, (b, vec))| update(r, b, vec, s))
    }
}

/// Closed-form user-bias update with item parameters and trait vectors fixed.
pub fn bias_user_step(params: &mut ModelParams, by_user: &CsrMatrix, h: &Hyperparams) -> Result<()> {
    half_step(params, by_user, Orientation::ByUser, h, false)
}

/// Closed-form item-bias update with user parameters and trait vectors fixed.
pub fn bias_item_step(params: &mut ModelParams, by_item: &CsrMatrix, h: &Hyperparams) -> Result<()> {
    half_step(params, by_item, Orientation::ByItem, h, false)
}

/// Updates every `b_u` and then `u_u` with all item parameters frozen.
pub fn als_user_step(params: &mut ModelParams, by_user: &CsrMatrix, h: &Hyperparams) -> Result<()> {
    half_step(params, by_user, Orientation::ByUser, h, true)
}

/// Updates every `b_i` and then `v_i` with all user parameters frozen.
pub fn als_item_step(params: &mut ModelParams, by_item: &CsrMatrix, h: &Hyperparams) -> Result<()> {
    half_step(params, by_item, Orientation::ByItem, h, true)
}

/// `λ·Σ(r − r̂)² + τ·(‖b_user‖² + ‖b_item‖² + ‖U‖² + ‖V‖²)` over the
/// entries of `data` (either orientation).
pub fn objective(params: &ModelParams, data: &CsrMatrix, h: &Hyperparams) -> f64 {
    let mut sse = 0.0;
    for r in 0..data.rows() {
        for (c, v) in data.row(r).iter() {
            let (u, i) = match data.orientation() {
                Orientation::ByUser => (r, c as usize),
                Orientation::ByItem => (c as usize, r),
            };
            let e = v - params.raw_predict(u, i);
            sse += e * e;
        }
    }
    let sq = |b: &[f64]| b.iter().map(|x| x * x).sum::<f64>();
    let penalty = sq(&params.user_bias)
        + sq(&params.item_bias)
        + params.user_factors.frobenius_sq()
        + params.item_factors.frobenius_sq();
    h.lambda * sse + h.tau * penalty
}
