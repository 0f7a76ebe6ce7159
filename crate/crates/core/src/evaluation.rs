//! Rating accuracy (RMSE) and top-K ranking quality (Precision@K, Recall@K).

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::ModelParams;
use crate::error::{Error, Result};
use crate::ingest::{is_half_star, CsrMatrix, Dataset, Orientation, Row};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Length of each recommendation list.
    pub k: usize,
    /// Test ratings at or above this count as relevant.
    pub threshold: f64,
    /// Users sampled for the ranking metrics.
    pub sample_users: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 10,
            threshold: 3.5,
            sample_users: 3000,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("K must be >= 1".into()));
        }
        if !is_half_star(self.threshold) {
            return Err(Error::InvalidArgument(format!(
                "relevance threshold {} not on the half-star grid",
                self.threshold
            )));
        }
        if self.sample_users == 0 {
            return Err(Error::InvalidArgument("sample_users must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopKMetrics {
    pub precision: f64,
    pub recall: f64,
    pub users_evaluated: usize,
    /// Users with at least one relevant test item (the recall denominator).
    pub users_with_relevant: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub rmse_train: f64,
    pub rmse_test: f64,
    pub precision_at_k: f64,
    pub recall_at_k: f64,
    pub users_evaluated: usize,
}

/// Root mean squared error of unclipped predictions over every entry.
pub fn rmse(params: &ModelParams, data: &CsrMatrix) -> Result<f64> {
    if data.nnz() == 0 {
        return Err(Error::Empty("rmse over an empty rating set"));
    }
    if data.n_users() != params.n_users() || data.n_items() != params.n_items() {
        return Err(Error::InvalidArgument("data and model index spaces differ".into()));
    }
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
    Ok((sse / data.nnz() as f64).sqrt())
}

/// Orders by descending score, ties by ascending item id.
pub fn rank_order(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Top-`k` item ids for `user` by predicted rating, skipping every item in
/// `masked` (the user's training row).
pub fn top_k_items(params: &ModelParams, user: usize, masked: Row<'_>, k: usize) -> Vec<u32> {
    let mut scored: Vec<(f64, u32)> = (0..params.n_items() as u32)
        .filter(|i| masked.get(*i).is_none())
        .map(|i| (params.raw_predict(user, i as usize), i))
        .collect();
    take_top(&mut scored, k);
    scored.into_iter().map(|(_, i)| i).collect()
}

/// Truncates `scored` to its best `k` entries in rank order.
pub(crate) fn take_top(scored: &mut Vec<(f64, u32)>, k: usize) {
    if scored.len() > k {
        scored.select_nth_unstable_by(k, rank_order);
        scored.truncate(k);
    }
    scored.sort_by(rank_order);
}

/// Users with at least one test rating, seeded sample without replacement,
/// returned in ascending order.
pub fn sample_users(test: &CsrMatrix, amount: usize, seed: u64) -> Vec<usize> {
    let pool: Vec<usize> = (0..test.rows()).filter(|&u| test.row_len(u) > 0).collect();
    if amount >= pool.len() {
        return pool;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, pool.len(), amount)
        .into_iter()
        .map(|p| pool[p])
        .collect();
    picked.sort_unstable();
    picked
}

/// Precision@K and Recall@K averaged per user over a seeded sample of test
/// users. A hit is a top-K item whose held-out rating is at or above the
/// threshold; items outside the user's test row never count as hits.
pub fn topk_metrics(params: &ModelParams, train: &CsrMatrix, test: &CsrMatrix, cfg: &EvalConfig) -> Result<TopKMetrics> {
    cfg.validate()?;
    for m in [train, test] {
        if m.orientation() != Orientation::ByUser {
            return Err(Error::InvalidArgument("ranking metrics need ByUser matrices".into()));
        }
        if m.rows() != params.n_users() || m.cols() != params.n_items() {
            return Err(Error::InvalidArgument("data and model index spaces differ".into()));
        }
    }
    let users = sample_users(test, cfg.sample_users, cfg.seed);

    let per_user: Vec<(usize, usize)> = users
        .par_iter()
        .map(|&u| {
            let held_out = test.row(u);
            let hits = top_k_items(params, u, train.row(u), cfg.k)
                .into_iter()
                .filter(|&i| held_out.get(i).is_some_and(|r| r >= cfg.threshold))
                .count();
            let relevant = held_out.values.iter().filter(|&&r| r >= cfg.threshold).count();
            (hits, relevant)
        })
        .collect();

    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut with_relevant = 0;
    for &(hits, relevant) in &per_user {
        precision += hits as f64 / cfg.k as f64;
        if relevant > 0 {
            recall += hits as f64 / relevant as f64;
            with_relevant += 1;
        }
    }
    let n = per_user.len();
    Ok(TopKMetrics {
        precision: if n > 0 { precision / n as f64 } else { 0.0 },
        recall: if with_relevant > 0 { recall / with_relevant as f64 } else { 0.0 },
        users_evaluated: n,
        users_with_relevant: with_relevant,
    })
}

/// Train/test RMSE plus ranking metrics for a trained model.
pub fn evaluate(params: &ModelParams, data: &Dataset, cfg: &EvalConfig) -> Result<EvalReport> {
    let ranking = topk_metrics(params, &data.train_by_user, &data.test_by_user, cfg)?;
    Ok(EvalReport {
        rmse_train: rmse(params, &data.train_by_user)?,
        rmse_test: rmse(params, &data.test_by_user)?,
        precision_at_k: ranking.precision,
        recall_at_k: ranking.recall,
        users_evaluated: ranking.users_evaluated,
    })
}
