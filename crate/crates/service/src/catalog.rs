//! Movie catalog for search: titles and genres from `movies.csv` joined with
//! per-movie rating counts and means from `counts.csv`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use als_core::ingest::{Movie, RatingsTable};
use serde::Serialize;

use crate::fixed;

pub const COUNTS_HEADER: [&str; 3] = ["movieId", "count", "mean_rating"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingSummary {
    pub count: u64,
    pub mean: f64,
}

/// Count and mean rating per raw movie id.
pub fn summarize(table: &RatingsTable) -> BTreeMap<u32, RatingSummary> {
    let mut sums: BTreeMap<u32, (u64, f64)> = BTreeMap::new();
    for r in table.records() {
        let e = sums.entry(r.item).or_default();
        e.0 += 1;
        e.1 += r.stars;
    }
    sums.into_iter()
        .map(|(id, (count, total))| (id, RatingSummary { count, mean: total / count as f64 }))
        .collect()
}

pub fn write_counts(path: &Path, counts: &BTreeMap<u32, RatingSummary>) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(COUNTS_HEADER)?;
    for (id, s) in counts {
        w.write_record([id.to_string(), s.count.to_string(), format!("{:.6}", s.mean)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum CountsError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("counts file line {line}: {message}")]
    Bad { line: u64, message: String },
}

pub fn read_counts(path: &Path) -> Result<HashMap<u32, RatingSummary>, CountsError> {
    let mut rdr = csv::Reader::from_path(path)?;
    if rdr.headers()?.iter().ne(COUNTS_HEADER.iter().copied()) {
        return Err(CountsError::Bad {
            line: 1,
            message: format!("expected header {}", COUNTS_HEADER.join(",")),
        });
    }
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| CountsError::Bad { line, message: format!("bad {what}") };
        let id: u32 = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("movieId"))?;
        let count: u64 = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("count"))?;
        let mean: f64 = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("mean_rating"))?;
        out.insert(id, RatingSummary { count, mean });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    #[serde(rename = "movieId")]
    pub movie_id: u32,
    pub title: String,
    pub genres: Vec<String>,
    pub rating_count: u64,
    /// `None` for movies nobody rated.
    #[serde(serialize_with = "fixed::six_opt")]
    pub mean_rating: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    /// Sorted by rating count descending, then title.
    entries: Vec<CatalogEntry>,
    lowered: Vec<String>,
    by_id: HashMap<u32, usize>,
}

impl Catalog {
    pub fn new(movies: Vec<Movie>, counts: &HashMap<u32, RatingSummary>) -> Self {
        let mut entries: Vec<CatalogEntry> = movies
            .into_iter()
            .map(|m| {
                let s = counts.get(&m.id);
                CatalogEntry {
                    movie_id: m.id,
                    title: m.title,
                    genres: m.genres,
                    rating_count: s.map_or(0, |s| s.count),
                    mean_rating: s.filter(|s| s.count > 0).map(|s| s.mean),
                }
            })
            .collect();
        entries.sort_by(|a, b| {
            b.rating_count
                .cmp(&a.rating_count)
                .then_with(|| a.title.cmp(&b.title))
                .then(a.movie_id.cmp(&b.movie_id))
        });
        let lowered = entries.iter().map(|e| e.title.to_lowercase()).collect();
        let by_id = entries.iter().enumerate().map(|(pos, e)| (e.movie_id, pos)).collect();
        Catalog { entries, lowered, by_id }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, movie_id: u32) -> Option<&CatalogEntry> {
        self.by_id.get(&movie_id).map(|&p| &self.entries[p])
    }

    pub fn title(&self, movie_id: u32) -> Option<&str> {
        self.get(movie_id).map(|e| e.title.as_str())
    }

    /// Case-insensitive substring search; the empty query matches everything.
    pub fn search(&self, query: &str, limit: usize) -> Vec<&CatalogEntry> {
        let q = query.to_lowercase();
        self.entries
            .iter()
            .zip(&self.lowered)
            .filter(|(_, t)| t.contains(&q))
            .map(|(e, _)| e)
            .take(limit)
            .collect()
    }
}
