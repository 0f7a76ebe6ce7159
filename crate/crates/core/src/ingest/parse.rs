use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{is_half_star, Rating, RatingsTable};
use crate::error::{Error, Result};

pub const RATINGS_HEADER: [&str; 4] = ["userId", "movieId", "rating", "timestamp"];
const MOVIES_HEADER: [&str; 3] = ["movieId", "title", "genres"];

/// A catalog entry from `movies.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Movie {
    pub id: u32,
    pub title: String,
    pub genres: Vec<String>,
}

pub fn parse_ratings(path: &Path) -> Result<RatingsTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ratings(file, path)
}

/// Parses MovieLens-style `userId,movieId,rating,timestamp` rows. `label` is
/// only used in error messages.
pub fn read_ratings<R: Read>(reader: R, label: &Path) -> Result<RatingsTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(RATINGS_HEADER.iter().copied()) {
        return Err(parse_err(label, 1, format!("expected header {}", RATINGS_HEADER.join(","))));
    }

    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 4 {
            return Err(parse_err(label, line, format!("expected 4 fields, got {}", row.len())));
        }
        let user = field::<u32>(&row, 0, "userId", label, line)?;
        let item = field::<u32>(&row, 1, "movieId", label, line)?;
        let stars = field::<f64>(&row, 2, "rating", label, line)?;
        let timestamp = field::<i64>(&row, 3, "timestamp", label, line)?;
        if !is_half_star(stars) {
            return Err(Error::OffGrid { line, value: stars });
        }
        if !seen.insert((user, item)) {
            return Err(Error::DuplicatePair { user, item });
        }
        records.push(Rating {
            user,
            item,
            stars,
            timestamp,
        });
    }
    Ok(RatingsTable::from_trusted(records))
}

pub fn write_ratings(path: &Path, table: &RatingsTable) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", RATINGS_HEADER.join(",")).map_err(io)?;
    for r in table.records() {
        writeln!(out, "{},{},{:.1},{}", r.user, r.item, r.stars, r.timestamp).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn parse_movies(path: &Path) -> Result<Vec<Movie>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_movies(file, path)
}

pub fn read_movies<R: Read>(reader: R, label: &Path) -> Result<Vec<Movie>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(MOVIES_HEADER.iter().copied()) {
        return Err(parse_err(label, 1, format!("expected header {}", MOVIES_HEADER.join(","))));
    }
    let mut movies = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            return Err(parse_err(label, line, format!("expected 3 fields, got {}", row.len())));
        }
        let id = field::<u32>(&row, 0, "movieId", label, line)?;
        let genres = match &row[2] {
            "" | "(no genres listed)" => Vec::new(),
            g => g.split('|').map(str::to_owned).collect(),
        };
        movies.push(Movie {
            id,
            title: row[1].to_owned(),
            genres,
        });
    }
    Ok(movies)
}

fn field<T: std::str::FromStr>(
    row: &csv::StringRecord,
    idx: usize,
    name: &str,
    label: &Path,
    line: u64,
) -> Result<T> {
    row[idx]
        .trim()
        .parse()
        .map_err(|_| parse_err(label, line, format!("bad {name} {:?}", &row[idx])))
}

fn parse_err(label: &Path, line: u64, message: String) -> Error {
    Error::Parse {
        path: label.to_path_buf(),
        line,
        message,
    }
}
