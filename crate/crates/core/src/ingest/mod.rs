//! Rating ingestion: parsing, identifier remapping, the per-user split and
//! the dual compressed sparse row layout used by the trainer.

mod csr;
mod dataset;
mod index;
mod parse;
mod split;
mod stats;

pub use csr::{build_csr, CsrMatrix, Orientation, Row};
pub use dataset::{load_split, write_split, Dataset, SplitMeta};
pub use index::{build_index, IndexMap};
pub use parse::{
    parse_movies, parse_ratings, read_movies, read_ratings, write_ratings, Movie,
    RATINGS_HEADER,
};
pub use split::{stratified_split, train_count, SplitPair};
pub use stats::{dataset_stats, StatsReport};

use crate::error::{Error, Result};

/// One explicit rating keyed by raw (dataset) identifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: u32,
    pub item: u32,
    pub stars: f64,
    pub timestamp: i64,
}

/// True when `stars` lies on the 0.5..=5.0 half-star grid.
pub fn is_half_star(stars: f64) -> bool {
    (0.5..=5.0).contains(&stars) && (stars * 2.0).fract() == 0.0
}

/// Validated collection of ratings in input order.
///
/// Every rating is on the half-star grid and no (user, item) pair repeats.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingsTable {
    records: Vec<Rating>,
}

impl RatingsTable {
    pub fn new(records: Vec<Rating>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(records.len());
        for (n, r) in records.iter().enumerate() {
            if !is_half_star(r.stars) {
                return Err(Error::OffGrid {
                    line: n as u64 + 1,
                    value: r.stars,
                });
            }
            if !seen.insert((r.user, r.item)) {
                return Err(Error::DuplicatePair {
                    user: r.user,
                    item: r.item,
                });
            }
        }
        Ok(Self { records })
    }

    /// Caller guarantees the invariants already hold (e.g. a subset of a
    /// validated table).
    pub(crate) fn from_trusted(records: Vec<Rating>) -> Self {
        Self { records }
    }

    pub fn records(&self) -> &[Rating] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Concatenation of two tables; fails if they share a (user, item) pair.
    pub fn concat(&self, other: &RatingsTable) -> Result<RatingsTable> {
        let mut records = self.records.clone();
        records.extend_from_slice(&other.records);
        RatingsTable::new(records)
    }
}
