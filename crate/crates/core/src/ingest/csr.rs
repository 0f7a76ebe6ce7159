use super::{IndexMap, RatingsTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Rows are users, columns are items.
    ByUser,
    /// Rows are items, columns are users.
    ByItem,
}

/// One orientation of the interaction matrix as three flat arrays.
///
/// Row `r` owns `values[offsets[r]..offsets[r + 1]]` and the matching
/// slice of `indices`; column indices within a row are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    orientation: Orientation,
    values: Vec<f64>,
    indices: Vec<u32>,
    offsets: Vec<usize>,
    cols: usize,
}

/// Borrowed view of a single CSR row.
#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    pub indices: &'a [u32],
    pub values: &'a [f64],
}

impl<'a> Row<'a> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Binary search for column `col`.
    pub fn get(&self, col: u32) -> Option<f64> {
        self.indices.binary_search(&col).ok().map(|p| self.values[p])
    }
}

pub fn build_csr(table: &RatingsTable, index: &IndexMap, orientation: Orientation) -> Result<CsrMatrix> {
    let mut triples = Vec::with_capacity(table.len());
    for r in table.records() {
        let u = index.user(r.user).ok_or(Error::UnknownId {
            kind: "user",
            id: r.user as u64,
        })?;
        let i = index.item(r.item).ok_or(Error::UnknownId {
            kind: "item",
            id: r.item as u64,
        })?;
        triples.push((u, i, r.stars));
    }
    CsrMatrix::from_triples(index.n_users(), index.n_items(), &triples, orientation)
}

impl CsrMatrix {
    /// Builds from dense `(user, item, value)` triples over an
    /// `n_users × n_items` space.
    pub fn from_triples(
        n_users: usize,
        n_items: usize,
        triples: &[(u32, u32, f64)],
        orientation: Orientation,
    ) -> Result<Self> {
        let (rows, cols) = match orientation {
            Orientation::ByUser => (n_users, n_items),
            Orientation::ByItem => (n_items, n_users),
        };
        let key = |&(u, i, _): &(u32, u32, f64)| match orientation {
            Orientation::ByUser => (u as usize, i),
            Orientation::ByItem => (i as usize, u),
        };

        // counting sort by row
        let mut offsets = vec![0usize; rows + 1];
        for t in triples {
            let (row, col) = key(t);
            if row >= rows || col as usize >= cols {
                return Err(Error::InvalidArgument(format!(
                    "triple ({}, {}) outside {n_users}x{n_items}",
                    t.0, t.1
                )));
            }
            offsets[row + 1] += 1;
        }
        for r in 0..rows {
            offsets[r + 1] += offsets[r];
        }
        let nnz = triples.len();
        let mut cursor = offsets.clone();
        let mut slots: Vec<(u32, f64)> = vec![(0, 0.0); nnz];
        for t in triples {
            let (row, col) = key(t);
            slots[cursor[row]] = (col, t.2);
            cursor[row] += 1;
        }
        for r in 0..rows {
            let row = &mut slots[offsets[r]..offsets[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                let (u, i) = match orientation {
                    Orientation::ByUser => (r as u32, w[0].0),
                    Orientation::ByItem => (w[0].0, r as u32),
                };
                return Err(Error::DuplicatePair { user: u, item: i });
            }
        }
        let (indices, values) = slots.into_iter().unzip();
        Ok(Self {
            orientation,
            values,
            indices,
            offsets,
            cols,
        })
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn n_users(&self) -> usize {
        match self.orientation {
            Orientation::ByUser => self.rows(),
            Orientation::ByItem => self.cols,
        }
    }

    pub fn n_items(&self) -> usize {
        match self.orientation {
            Orientation::ByUser => self.cols,
            Orientation::ByItem => self.rows(),
        }
    }

    pub fn row(&self, r: usize) -> Row<'_> {
        let span = self.offsets[r]..self.offsets[r + 1];
        Row {
            indices: &self.indices[span.clone()],
            values: &self.values[span],
        }
    }

    pub fn row_len(&self, r: usize) -> usize {
        self.offsets[r + 1] - self.offsets[r]
    }

    /// All entries as `(user, item, value)` in row-major order.
    pub fn triples(&self) -> Vec<(u32, u32, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.rows() {
            for (c, v) in self.row(r).iter() {
                out.push(match self.orientation {
                    Orientation::ByUser => (r as u32, c, v),
                    Orientation::ByItem => (c, r as u32, v),
                });
            }
        }
        out
    }

    /// The same entries in the opposite orientation.
    pub fn transpose(&self) -> CsrMatrix {
        let flipped = match self.orientation {
            Orientation::ByUser => Orientation::ByItem,
            Orientation::ByItem => Orientation::ByUser,
        };
        CsrMatrix::from_triples(self.n_users(), self.n_items(), &self.triples(), flipped)
            .expect("entries of a valid matrix are valid")
    }

    /// Sum of all values.
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}
