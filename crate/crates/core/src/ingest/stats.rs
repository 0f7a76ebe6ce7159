use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::RatingsTable;
use crate::error::{Error, Result};

/// Summary statistics of a ratings table. Count distributions are sorted
/// descending (rank/frequency order, ready for a log-log plot).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
    pub global_mean: f64,
    /// Keyed by the rating formatted with one decimal ("0.5" .. "5.0").
    pub rating_histogram: BTreeMap<String, u64>,
    pub user_count_distribution: Vec<u64>,
    pub item_count_distribution: Vec<u64>,
}

pub fn dataset_stats(table: &RatingsTable) -> Result<StatsReport> {
    if table.is_empty() {
        return Err(Error::Empty("no ratings to summarize"));
    }
    let mut halves = [0u64; 11];
    let mut users: HashMap<u32, u64> = HashMap::new();
    let mut items: HashMap<u32, u64> = HashMap::new();
    let mut sum = 0.0;
    for r in table.records() {
        halves[(r.stars * 2.0) as usize] += 1;
        *users.entry(r.user).or_default() += 1;
        *items.entry(r.item).or_default() += 1;
        sum += r.stars;
    }
    let rating_histogram = halves
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(h, &c)| (format!("{:.1}", h as f64 / 2.0), c))
        .collect();
    let descending = |m: HashMap<u32, u64>| {
        let mut v: Vec<u64> = m.into_values().collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    };
    Ok(StatsReport {
        n_users: users.len(),
        n_items: items.len(),
        n_ratings: table.len(),
        global_mean: sum / table.len() as f64,
        rating_histogram,
        user_count_distribution: descending(users),
        item_count_distribution: descending(items),
    })
}
