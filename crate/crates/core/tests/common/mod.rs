//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use als_core::engine::{FactorMatrix, Hyperparams, ModelParams};
use als_core::ingest::{train_count, CsrMatrix, Dataset, Orientation};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random sparse instance with half-star ratings.
pub struct Instance {
    pub n_users: usize,
    pub n_items: usize,
    pub by_user: CsrMatrix,
    pub by_item: CsrMatrix,
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_users: usize, max_items: usize, density: f64) -> Instance {
    let n_users = rng.random_range(1..=max_users);
    let n_items = rng.random_range(1..=max_items);
    let mut triples = Vec::new();
    for u in 0..n_users as u32 {
        for i in 0..n_items as u32 {
            if rng.random_bool(density) {
                triples.push((u, i, rng.random_range(1..=10) as f64 * 0.5));
            }
        }
    }
    let by_user = CsrMatrix::from_triples(n_users, n_items, &triples, Orientation::ByUser).unwrap();
    Instance {
        n_users,
        n_items,
        by_item: by_user.transpose(),
        by_user,
    }
}

pub fn random_params(rng: &mut ChaCha8Rng, n_users: usize, n_items: usize, k: usize) -> ModelParams {
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    ModelParams {
        mu: 3.0 + draw(1)[0],
        user_bias: draw(n_users),
        item_bias: draw(n_items),
        user_factors: FactorMatrix::from_vec(n_users, k, draw(n_users * k)).unwrap(),
        item_factors: FactorMatrix::from_vec(n_items, k, draw(n_items * k)).unwrap(),
    }
}

/// Objective by a plain loop over the listed ratings.
pub fn naive_objective(p: &ModelParams, triples: &[(u32, u32, f64)], h: &Hyperparams) -> f64 {
    let k = p.k();
    let mut sse = 0.0;
    for &(u, i, r) in triples {
        let mut pred = p.mu + p.user_bias[u as usize] + p.item_bias[i as usize];
        for d in 0..k {
            pred += p.user_factors.row(u as usize)[d] * p.item_factors.row(i as usize)[d];
        }
        sse += (r - pred) * (r - pred);
    }
    let mut reg = 0.0;
    for b in p.user_bias.iter().chain(&p.item_bias) {
        reg += b * b;
    }
    for x in p.user_factors.as_slice().iter().chain(p.item_factors.as_slice()) {
        reg += x * x;
    }
    h.lambda * sse + h.tau * reg
}

#[derive(Clone, Copy, Debug)]
pub enum Side {
    User,
    Item,
}

/// Dense oracle for one row visit: bias from the current trait vector, then
/// the ridge system `(λ VᵀV + τI) x = λ Vᵀ(r − μ − b − b_opp)` solved by LU.
pub fn dense_row_update(p: &ModelParams, data: &CsrMatrix, side: Side, row: usize, h: &Hyperparams) -> (f64, Vec<f64>) {
    let k = p.k();
    let (own_vec, opp_bias, opp_factors) = match side {
        Side::User => (p.user_factors.row(row).to_vec(), &p.item_bias, &p.item_factors),
        Side::Item => (p.item_factors.row(row).to_vec(), &p.user_bias, &p.user_factors),
    };
    let entries: Vec<(usize, f64)> = data
        .triples()
        .into_iter()
        .filter_map(|(u, i, r)| match side {
            Side::User if u as usize == row => Some((i as usize, r)),
            Side::Item if i as usize == row => Some((u as usize, r)),
            _ => None,
        })
        .collect();
    let n = entries.len();
    let v = DMatrix::from_fn(n, k, |a, d| opp_factors.row(entries[a].0)[d]);
    let r = DVector::from_fn(n, |a, _| entries[a].1);
    let b_opp = DVector::from_fn(n, |a, _| opp_bias[entries[a].0]);
    let own = DVector::from_vec(own_vec);
    let mu = DVector::from_element(n, p.mu);

    let resid = &r - &mu - &b_opp - &v * &own;
    let bias = h.lambda * resid.sum() / (h.tau + h.lambda * n as f64);
    if k == 0 {
        return (bias, vec![]);
    }
    let a = v.transpose() * &v * h.lambda + DMatrix::identity(k, k) * h.tau;
    let rhs = v.transpose() * (&r - &mu - &b_opp - DVector::from_element(n, bias)) * h.lambda;
    let x = a.lu().solve(&rhs).expect("tau > 0 makes the system nonsingular");
    (bias, x.iter().copied().collect())
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_diff(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            probe[j] = x[j] + step;
            let up = f(&probe);
            probe[j] = x[j] - step;
            let down = f(&probe);
            probe[j] = x[j];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Planted low-rank ratings on a continuous scale (no grid rounding), split
/// 80/20 per user.
pub fn planted(seed: u64, n_users: usize, n_items: usize, k: usize, density: f64, sigma: f64) -> Dataset {
    let mut rng = rng(seed);
    let bias = Normal::new(0.0, 0.1).unwrap();
    let trait_dist = Normal::new(0.0, 1.0 / (k as f64).sqrt()).unwrap();
    let noise = Normal::new(0.0, sigma).unwrap();
    let bu: Vec<f64> = (0..n_users).map(|_| bias.sample(&mut rng)).collect();
    let bi: Vec<f64> = (0..n_items).map(|_| bias.sample(&mut rng)).collect();
    let uf: Vec<f64> = (0..n_users * k).map(|_| trait_dist.sample(&mut rng)).collect();
    let vf: Vec<f64> = (0..n_items * k).map(|_| trait_dist.sample(&mut rng)).collect();

    let mut train = Vec::new();
    let mut test = Vec::new();
    for u in 0..n_users {
        let mut row: Vec<(u32, u32, f64)> = Vec::new();
        for i in 0..n_items {
            if rng.random_bool(density) {
                let dot: f64 = (0..k).map(|d| uf[u * k + d] * vf[i * k + d]).sum();
                row.push((u as u32, i as u32, 3.5 + bu[u] + bi[i] + dot + noise.sample(&mut rng)));
            }
        }
        if row.is_empty() {
            continue;
        }
        row.shuffle(&mut rng);
        let n_train = train_count(row.len(), 0.8);
        test.extend_from_slice(&row[n_train..]);
        row.truncate(n_train);
        train.extend(row);
    }
    let to_csr = |t: &[(u32, u32, f64)]| CsrMatrix::from_triples(n_users, n_items, t, Orientation::ByUser).unwrap();
    Dataset::from_dense(to_csr(&train), to_csr(&test)).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `planted` with every rating rounded onto the half-star grid in [0.5, 5].
pub fn planted_half_stars(seed: u64, n_users: usize, n_items: usize, k: usize, density: f64) -> Dataset {
    let d = planted(seed, n_users, n_items, k, density, 0.3);
    let snap = |m: &CsrMatrix| {
        let t: Vec<(u32, u32, f64)> = m
            .triples()
            .into_iter()
            .map(|(u, i, r)| (u, i, ((r * 2.0).round() / 2.0).clamp(0.5, 5.0)))
            .collect();
        CsrMatrix::from_triples(n_users, n_items, &t, Orientation::ByUser).unwrap()
    };
    Dataset::from_dense(snap(&d.train_by_user), snap(&d.test_by_user)).unwrap()
}
