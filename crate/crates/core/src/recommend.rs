//! Cold-start recommendations: fold a new user's ratings into the frozen item
//! model with one user-step visit, then rank items by
//! `α·(μ + b_i) + u_uᵀv_i`.

use serde::Serialize;

use crate::engine::{visit_row, Hyperparams, ModelParams, RowScratch};
use crate::error::{Error, Result};
use crate::evaluation::take_top;
use crate::ingest::{is_half_star, Orientation, Row};

pub const DEFAULT_MIN_RATINGS: u32 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct FoldInRequest {
    /// `(dense item id, stars)` pairs.
    pub ratings: Vec<(u32, f64)>,
    /// Weight on the item popularity baseline `μ + b_i`.
    pub alpha: f64,
    pub top_k: usize,
    /// Items with fewer training ratings are never recommended.
    pub min_ratings: u32,
}

/// A folded-in user. The bias is computed for completeness but does not
/// enter the serving score.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldIn {
    pub factors: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredItem {
    pub item: u32,
    /// Always `popularity_part + affinity_part`.
    pub score: f64,
    pub popularity_part: f64,
    pub affinity_part: f64,
}

/// Computes `(u_u, b_u)` for an unseen user exactly as one user half-step
/// visit would, starting from a zero trait vector.
pub fn fold_in_user(ratings: &[(u32, f64)], params: &ModelParams, h: &Hyperparams) -> Result<FoldIn> {
    if h.k != params.k() {
        return Err(Error::InvalidArgument(format!(
            "hyperparameters say k={} but the model has k={}",
            h.k,
            params.k()
        )));
    }
    let mut sorted = ratings.to_vec();
    sorted.sort_by_key(|&(i, _)| i);
    for w in sorted.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::InvalidArgument(format!("item {} rated twice", w[0].0)));
        }
    }
    for &(i, stars) in &sorted {
        if i as usize >= params.n_items() {
            return Err(Error::UnknownId {
                kind: "item",
                id: i as u64,
            });
        }
        if !is_half_star(stars) {
            return Err(Error::InvalidArgument(format!("rating {stars} not on half-star grid")));
        }
    }
    let (indices, values): (Vec<u32>, Vec<f64>) = sorted.into_iter().unzip();
    let row = Row {
        indices: &indices,
        values: &values,
    };
    let mut factors = vec![0.0; params.k()];
    let bias = visit_row(params, Orientation::ByUser, row, &mut factors, h, &mut RowScratch::new(params.k()))?;
    Ok(FoldIn { factors, bias })
}

/// Ranks eligible items by `α·(μ + b_i) + u_uᵀv_i`, descending, ties by
/// ascending id. Rated items and items below `min_ratings` training ratings
/// are excluded.
pub fn score_items(user: &FoldIn, params: &ModelParams, req: &FoldInRequest, item_counts: &[u32]) -> Result<Vec<ScoredItem>> {
    if req.top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be >= 1".into()));
    }
    if !(req.alpha >= 0.0 && req.alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be finite and >= 0, got {}", req.alpha)));
    }
    if item_counts.len() != params.n_items() {
        return Err(Error::InvalidArgument("item_counts length does not match the model".into()));
    }
    if user.factors.len() != params.k() {
        return Err(Error::InvalidArgument("user vector has the wrong dimension".into()));
    }
    let mut rated: Vec<u32> = req.ratings.iter().map(|&(i, _)| i).collect();
    rated.sort_unstable();

    let parts = |i: usize| {
        let popularity = req.alpha * (params.mu + params.item_bias[i]);
        let affinity: f64 = user.factors.iter().zip(params.item_factors.row(i)).map(|(a, b)| a * b).sum();
        (popularity, affinity)
    };
    let mut ranked: Vec<(f64, u32)> = (0..params.n_items())
        .filter(|&i| item_counts[i] >= req.min_ratings && rated.binary_search(&(i as u32)).is_err())
        .map(|i| {
            let (popularity, affinity) = parts(i);
            (popularity + affinity, i as u32)
        })
        .collect();
    take_top(&mut ranked, req.top_k);
    Ok(ranked
        .into_iter()
        .map(|(score, item)| {
            let (popularity_part, affinity_part) = parts(item as usize);
            ScoredItem {
                item,
                score,
                popularity_part,
                affinity_part,
            }
        })
        .collect())
}

/// Fold-in followed by scoring.
pub fn recommend(params: &ModelParams, h: &Hyperparams, req: &FoldInRequest, item_counts: &[u32]) -> Result<Vec<ScoredItem>> {
    let user = fold_in_user(&req.ratings, params, h)?;
    score_items(&user, params, req, item_counts)
}
