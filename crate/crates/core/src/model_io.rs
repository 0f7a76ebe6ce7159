//! Versioned binary model file.
//!
//! Layout (little-endian): magic `ALSM`, format version `u32`, `n_users u64`,
//! `n_items u64`, `k u32`, `μ f64`, user biases, item biases, user factors
//! (row-major), item factors (row-major), all `f64`; the rest of the file is a
//! UTF-8 JSON trailer holding [`ModelMeta`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{FactorMatrix, Hyperparams, ModelParams};
use crate::error::{Error, Result};
use crate::ingest::IndexMap;

pub const MAGIC: &[u8; 4] = b"ALSM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub hyperparams: Hyperparams,
    pub user_raw_ids: Vec<u32>,
    pub item_raw_ids: Vec<u32>,
    /// Training ratings per dense item id.
    #[serde(default)]
    pub item_counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: ModelParams,
    pub meta: ModelMeta,
}

impl SavedModel {
    pub fn index(&self) -> Result<IndexMap> {
        IndexMap::from_raw_ids(self.meta.user_raw_ids.clone(), self.meta.item_raw_ids.clone())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let p = &self.params;
        check_meta(p, &self.meta)?;
        let n_floats = 1 + p.n_users() + p.n_items() + p.user_factors.as_slice().len() + p.item_factors.as_slice().len();
        let mut out = Vec::with_capacity(28 + 8 * n_floats);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(p.n_users() as u64).to_le_bytes());
        out.extend_from_slice(&(p.n_items() as u64).to_le_bytes());
        out.extend_from_slice(&(p.k() as u32).to_le_bytes());
        out.extend_from_slice(&p.mu.to_le_bytes());
        for block in [
            &p.user_bias[..],
            &p.item_bias[..],
            p.user_factors.as_slice(),
            p.item_factors.as_slice(),
        ] {
            for x in block {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        serde_json::to_writer(&mut out, &self.meta)?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic, not an ALSM model".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let n_users = r.u64()? as usize;
        let n_items = r.u64()? as usize;
        let k = r.u32()? as usize;
        let mu = r.f64()?;
        let user_bias = r.f64s(n_users)?;
        let item_bias = r.f64s(n_items)?;
        let user_factors = FactorMatrix::from_vec(n_users, k, r.f64s(n_users.saturating_mul(k))?)?;
        let item_factors = FactorMatrix::from_vec(n_items, k, r.f64s(n_items.saturating_mul(k))?)?;
        let meta: ModelMeta = serde_json::from_slice(&bytes[r.pos..])?;
        let params = ModelParams {
            mu,
            user_bias,
            item_bias,
            user_factors,
            item_factors,
        };
        check_meta(&params, &meta)?;
        Ok(Self { params, meta })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn check_meta(p: &ModelParams, meta: &ModelMeta) -> Result<()> {
    if meta.hyperparams.k != p.k() {
        return Err(Error::Format(format!("trailer k={} but factors have k={}", meta.hyperparams.k, p.k())));
    }
    if meta.user_raw_ids.len() != p.n_users() || meta.item_raw_ids.len() != p.n_items() {
        return Err(Error::Format("index arrays do not match parameter counts".into()));
    }
    if !meta.item_counts.is_empty() && meta.item_counts.len() != p.n_items() {
        return Err(Error::Format("item_counts length does not match n_items".into()));
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}
