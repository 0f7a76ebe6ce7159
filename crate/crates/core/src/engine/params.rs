use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Hyperparams;
use crate::error::{Error, Result};

/// Dense row-major `rows × k` matrix of trait vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    k: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, k: usize) -> Self {
        Self {
            rows,
            k,
            data: vec![0.0; rows * k],
        }
    }

    pub fn from_vec(rows: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * k {
            return Err(Error::InvalidArgument(format!(
                "{} values for a {rows}x{k} factor matrix",
                data.len()
            )));
        }
        Ok(Self { rows, k, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.k..(r + 1) * self.k]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.k..(r + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// Trained (or initialized) model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Global mean rating, fixed before training.
    pub mu: f64,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    pub user_factors: FactorMatrix,
    pub item_factors: FactorMatrix,
}

impl ModelParams {
    pub fn zeros(n_users: usize, n_items: usize, k: usize, mu: f64) -> Self {
        Self {
            mu,
            user_bias: vec![0.0; n_users],
            item_bias: vec![0.0; n_items],
            user_factors: FactorMatrix::zeros(n_users, k),
            item_factors: FactorMatrix::zeros(n_items, k),
        }
    }

    pub fn k(&self) -> usize {
        self.user_factors.k()
    }

    pub fn n_users(&self) -> usize {
        self.user_bias.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_bias.len()
    }

    pub fn is_finite(&self) -> bool {
        self.mu.is_finite()
            && self.user_bias.iter().all(|x| x.is_finite())
            && self.item_bias.iter().all(|x| x.is_finite())
            && self.user_factors.as_slice().iter().all(|x| x.is_finite())
            && self.item_factors.as_slice().iter().all(|x| x.is_finite())
    }

    /// Unchecked `μ + b_u + b_i + u_uᵀv_i`.
    #[inline]
    pub(crate) fn raw_predict(&self, u: usize, i: usize) -> f64 {
        self.mu + self.user_bias[u] + self.item_bias[i] + dot(self.user_factors.row(u), self.item_factors.row(i))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Zero biases and i.i.d. `N(0, 1/√k)` trait entries.
///
/// Every row draws from its own ChaCha stream keyed by `(side, row)`, so
/// initialization does not depend on generation order.
pub fn init_params(h: &Hyperparams, n_users: usize, n_items: usize, mu: f64) -> ModelParams {
    let mut params = ModelParams::zeros(n_users, n_items, h.k, mu);
    if h.k == 0 {
        return params;
    }
    let normal = Normal::new(0.0, 1.0 / (h.k as f64).sqrt()).expect("finite std");
    for (side, factors) in [(0u64, &mut params.user_factors), (1u64, &mut params.item_factors)] {
        for r in 0..factors.rows() {
            let mut rng = ChaCha8Rng::seed_from_u64(h.seed);
            rng.set_stream((r as u64) << 1 | side);
            for x in factors.row_mut(r) {
                *x = normal.sample(&mut rng);
            }
        }
    }
    params
}

/// `μ + b_u + b_i + u_uᵀv_i`, clamped to `[0.5, 5.0]` when `clip` is set.
pub fn predict(params: &ModelParams, u: usize, i: usize, clip: bool) -> Result<f64> {
    if u >= params.n_users() {
        return Err(Error::UnknownId {
            kind: "user",
            id: u as u64,
        });
    }
    if i >= params.n_items() {
        return Err(Error::UnknownId {
            kind: "item",
            id: i as u64,
        });
    }
    let p = params.raw_predict(u, i);
    Ok(if clip { p.clamp(0.5, 5.0) } else { p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(k: usize, seed: u64) -> Hyperparams {
        Hyperparams::new(k, 0.1, 0.25, 1, seed).unwrap()
    }

    #[test]
    fn bias_only_init_is_empty() {
        let p = init_params(&h(0, 1), 4, 5, 3.5);
        assert!(p.user_factors.as_slice().is_empty());
        assert!(p.item_factors.as_slice().is_empty());
        assert!(p.user_bias.iter().chain(&p.item_bias).all(|&b| b == 0.0));
        assert_eq!(p.mu, 3.5);
    }

    #[test]
    fn init_std_is_inverse_sqrt_k() {
        // 2 sides x 125k rows x k=4 = 10^6 draws
        let p = init_params(&h(4, 9), 125_000, 125_000, 0.0);
        let all: Vec<f64> = p
            .user_factors
            .as_slice()
            .iter()
            .chain(p.item_factors.as_slice())
            .copied()
            .collect();
        assert_eq!(all.len(), 1_000_000);
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let std = (all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((std - 0.5).abs() < 0.005, "std {std}");
        assert!(mean.abs() < 0.005);
    }

    #[test]
    fn init_is_deterministic() {
        assert_eq!(init_params(&h(3, 42), 7, 9, 1.0), init_params(&h(3, 42), 7, 9, 1.0));
        assert_ne!(init_params(&h(3, 42), 7, 9, 1.0), init_params(&h(3, 43), 7, 9, 1.0));
    }

    #[test]
    fn init_rows_do_not_depend_on_shape() {
        let small = init_params(&h(3, 42), 2, 2, 0.0);
        let large = init_params(&h(3, 42), 50, 60, 0.0);
        assert_eq!(small.user_factors.row(1), large.user_factors.row(1));
        assert_eq!(small.item_factors.row(0), large.item_factors.row(0));
    }

    #[test]
    fn prediction_rule() {
        let p = ModelParams::zeros(3, 3, 2, 3.53);
        assert_eq!(predict(&p, 2, 1, false).unwrap(), 3.53);

        let mut p = ModelParams::zeros(1, 1, 2, 3.5);
        p.user_bias[0] = 0.5;
        p.item_bias[0] = -0.25;
        p.user_factors.row_mut(0).copy_from_slice(&[0.5, 0.5]);
        p.item_factors.row_mut(0).copy_from_slice(&[0.1, 0.1]);
        assert!((predict(&p, 0, 0, false).unwrap() - 3.85).abs() < 1e-12);
    }

    #[test]
    fn clipping() {
        let mut p = ModelParams::zeros(1, 1, 0, 5.0);
        p.user_bias[0] = 0.7;
        assert!((predict(&p, 0, 0, false).unwrap() - 5.7).abs() < 1e-12);
        assert_eq!(predict(&p, 0, 0, true).unwrap(), 5.0);
        p.user_bias[0] = -6.0;
        assert_eq!(predict(&p, 0, 0, true).unwrap(), 0.5);
    }

    #[test]
    fn out_of_range_ids() {
        let p = ModelParams::zeros(2, 2, 1, 3.0);
        assert!(predict(&p, 2, 0, false).is_err());
        assert!(predict(&p, 0, 2, false).is_err());
    }
}
