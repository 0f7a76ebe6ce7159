use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_csr, build_index, parse_ratings, write_ratings, CsrMatrix, IndexMap, Orientation, RatingsTable, SplitPair};
use crate::error::{Error, Result};

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const SPLIT_META_FILE: &str = "split.json";

/// Metadata written next to a split's rating files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMeta {
    pub ratio: f64,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Train and test ratings in both CSR orientations over one index space.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub index: IndexMap,
    pub train_by_user: CsrMatrix,
    pub train_by_item: CsrMatrix,
    pub test_by_user: CsrMatrix,
    pub test_by_item: CsrMatrix,
}

impl Dataset {
    /// Indexes the union of both tables, so items seen only in test still get
    /// a dense id.
    pub fn from_split(train: &RatingsTable, test: &RatingsTable) -> Result<Self> {
        let index = build_index(&train.concat(test)?)?;
        Self::with_index(index, train, test)
    }

    pub fn with_index(index: IndexMap, train: &RatingsTable, test: &RatingsTable) -> Result<Self> {
        let train_by_user = build_csr(train, &index, Orientation::ByUser)?;
        let test_by_user = build_csr(test, &index, Orientation::ByUser)?;
        Ok(Self {
            train_by_item: train_by_user.transpose(),
            test_by_item: test_by_user.transpose(),
            train_by_user,
            test_by_user,
            index,
        })
    }

    /// Wraps dense matrices with an identity index (raw id = dense id).
    pub fn from_dense(train_by_user: CsrMatrix, test_by_user: CsrMatrix) -> Result<Self> {
        if train_by_user.orientation() != Orientation::ByUser
            || test_by_user.orientation() != Orientation::ByUser
            || train_by_user.rows() != test_by_user.rows()
            || train_by_user.cols() != test_by_user.cols()
        {
            return Err(Error::InvalidArgument("train/test must be ByUser over the same shape".into()));
        }
        let index = IndexMap::from_raw_ids(
            (0..train_by_user.rows() as u32).collect(),
            (0..train_by_user.cols() as u32).collect(),
        )?;
        Ok(Self {
            train_by_item: train_by_user.transpose(),
            test_by_item: test_by_user.transpose(),
            train_by_user,
            test_by_user,
            index,
        })
    }

    pub fn n_users(&self) -> usize {
        self.index.n_users()
    }

    pub fn n_items(&self) -> usize {
        self.index.n_items()
    }

    /// Training-set global mean rating.
    pub fn train_mean(&self) -> Result<f64> {
        if self.train_by_user.nnz() == 0 {
            return Err(Error::Empty("training set has no ratings"));
        }
        Ok(self.train_by_user.sum() / self.train_by_user.nnz() as f64)
    }

    /// Number of training ratings per dense item id.
    pub fn item_counts(&self) -> Vec<u32> {
        (0..self.train_by_item.rows())
            .map(|i| self.train_by_item.row_len(i) as u32)
            .collect()
    }
}

pub fn write_split(dir: &Path, split: &SplitPair) -> Result<SplitMeta> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_ratings(&dir.join(TRAIN_FILE), &split.train)?;
    write_ratings(&dir.join(TEST_FILE), &split.test)?;
    let meta = SplitMeta {
        ratio: split.ratio,
        seed: split.seed,
        n_train: split.train.len(),
        n_test: split.test.len(),
    };
    let path = dir.join(SPLIT_META_FILE);
    fs::write(&path, serde_json::to_vec_pretty(&meta)?).map_err(|e| Error::io(&path, e))?;
    Ok(meta)
}

pub fn load_split(dir: &Path) -> Result<(RatingsTable, RatingsTable, SplitMeta)> {
    let train = parse_ratings(&dir.join(TRAIN_FILE))?;
    let test = parse_ratings(&dir.join(TEST_FILE))?;
    let path = dir.join(SPLIT_META_FILE);
    let raw = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let meta: SplitMeta = serde_json::from_slice(&raw)?;
    Ok((train, test, meta))
}
