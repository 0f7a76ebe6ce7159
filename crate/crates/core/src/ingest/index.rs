use std::collections::HashMap;

use super::RatingsTable;
use crate::error::{Error, Result};

/// Bijection between raw dataset identifiers and contiguous dense indices.
///
/// Dense ids follow ascending raw-id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    user_fwd: HashMap<u32, u32>,
    user_rev: Vec<u32>,
    item_fwd: HashMap<u32, u32>,
    item_rev: Vec<u32>,
}

pub fn build_index(table: &RatingsTable) -> Result<IndexMap> {
    if table.is_empty() {
        return Err(Error::Empty("cannot index an empty ratings table"));
    }
    let mut users: Vec<u32> = table.records().iter().map(|r| r.user).collect();
    let mut items: Vec<u32> = table.records().iter().map(|r| r.item).collect();
    users.sort_unstable();
    users.dedup();
    items.sort_unstable();
    items.dedup();
    IndexMap::from_raw_ids(users, items)
}

impl IndexMap {
    /// Rebuilds a map from the dense→raw arrays (as stored in a model file).
    pub fn from_raw_ids(user_rev: Vec<u32>, item_rev: Vec<u32>) -> Result<Self> {
        let user_fwd = invert(&user_rev, "user")?;
        let item_fwd = invert(&item_rev, "item")?;
        Ok(Self {
            user_fwd,
            user_rev,
            item_fwd,
            item_rev,
        })
    }

    pub fn n_users(&self) -> usize {
        self.user_rev.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_rev.len()
    }

    pub fn user(&self, raw: u32) -> Option<u32> {
        self.user_fwd.get(&raw).copied()
    }

    pub fn item(&self, raw: u32) -> Option<u32> {
        self.item_fwd.get(&raw).copied()
    }

    pub fn user_raw(&self, dense: u32) -> u32 {
        self.user_rev[dense as usize]
    }

    pub fn item_raw(&self, dense: u32) -> u32 {
        self.item_rev[dense as usize]
    }

    pub fn user_raw_ids(&self) -> &[u32] {
        &self.user_rev
    }

    pub fn item_raw_ids(&self) -> &[u32] {
        &self.item_rev
    }
}

fn invert(rev: &[u32], kind: &'static str) -> Result<HashMap<u32, u32>> {
    let mut fwd = HashMap::with_capacity(rev.len());
    for (dense, &raw) in rev.iter().enumerate() {
        if fwd.insert(raw, dense as u32).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate raw {kind} id {raw}")));
        }
    }
    Ok(fwd)
}
