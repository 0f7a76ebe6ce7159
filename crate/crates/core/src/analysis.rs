//! Latent-space geometry of item trait vectors: 2-D PCA projection and
//! nearest-neighbor queries.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::engine::FactorMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection2D {
    pub items: Vec<u32>,
    pub coords: Vec<[f64; 2]>,
    /// Share of total variance captured by each component, non-increasing.
    pub explained_variance_ratio: [f64; 2],
    /// Orthonormal principal directions, each `k` long.
    pub components: [Vec<f64>; 2],
}

/// Projects item vectors (all of them, or `subset`) onto their top two
/// principal directions, computed by SVD of the mean-centered rows. Each
/// direction is signed so its largest-magnitude entry is positive.
pub fn pca_project(factors: &FactorMatrix, subset: Option<&[u32]>) -> Result<Projection2D> {
    let k = factors.k();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("PCA to 2-D needs k >= 2, got {k}")));
    }
    let items: Vec<u32> = match subset {
        Some(ids) => ids.to_vec(),
        None => (0..factors.rows() as u32).collect(),
    };
    if items.len() < 2 {
        return Err(Error::InvalidArgument("PCA needs at least 2 items".into()));
    }
    if let Some(&bad) = items.iter().find(|&&i| i as usize >= factors.rows()) {
        return Err(Error::UnknownId {
            kind: "item",
            id: bad as u64,
        });
    }

    let n = items.len();
    let mut x = DMatrix::from_fn(n, k, |r, c| factors.row(items[r] as usize)[c]);
    let mean = x.row_mean();
    for mut row in x.row_iter_mut() {
        row -= &mean;
    }

    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let mut components: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut ratio = [0.0; 2];
    for (slot, &j) in order.iter().take(2).enumerate() {
        let mut dir: Vec<f64> = v_t.row(j).iter().copied().collect();
        let pivot = dir
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(p, _)| p)
            .unwrap_or(0);
        if dir[pivot] < 0.0 {
            dir.iter_mut().for_each(|d| *d = -*d);
        }
        let s = svd.singular_values[j];
        ratio[slot] = if total > 0.0 { s * s / total } else { 0.0 };
        components[slot] = dir;
    }

    let coords = (0..n)
        .map(|r| {
            let row = x.row(r);
            let proj = |c: &[f64]| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            [proj(&components[0]), proj(&components[1])]
        })
        .collect();
    Ok(Projection2D {
        items,
        coords,
        explained_variance_ratio: ratio,
        components,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
    Euclidean,
}

/// The `n` items closest to `item` (excluding itself), nearest first, ties
/// by ascending id. Cosine ranks by descending similarity; a zero vector has
/// similarity 0 to everything.
pub fn nearest_neighbors(factors: &FactorMatrix, item: u32, n: usize, metric: Metric) -> Result<Vec<u32>> {
    let rows = factors.rows();
    if item as usize >= rows {
        return Err(Error::UnknownId {
            kind: "item",
            id: item as u64,
        });
    }
    if n >= rows {
        return Err(Error::InvalidArgument(format!("asked for {n} neighbors among {rows} items")));
    }
    let q = factors.row(item as usize);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let qn = norm(q);
    let mut keyed: Vec<(f64, u32)> = (0..rows as u32)
        .filter(|&j| j != item)
        .map(|j| {
            let v = factors.row(j as usize);
            let key = match metric {
                Metric::Euclidean => q.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
                Metric::Cosine => {
                    let d = qn * norm(v);
                    let sim = if d > 0.0 { q.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / d } else { 0.0 };
                    -sim
                }
            };
            (key, j)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().take(n).map(|(_, j)| j).collect())
}
