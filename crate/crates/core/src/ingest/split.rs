use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::RatingsTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: RatingsTable,
    pub test: RatingsTable,
    pub ratio: f64,
    pub seed: u64,
}

/// Number of a user's `count` ratings that go to training:
/// `max(1, floor(ratio * count))`.
pub fn train_count(count: usize, ratio: f64) -> usize {
    // the epsilon absorbs products such as 0.29 * 100 = 28.999999999999996
    let n = (ratio * count as f64 + 1e-9).floor() as usize;
    n.clamp(1, count.max(1))
}

/// Per-user random split. Each user's records are shuffled by a generator
/// seeded from `(seed, raw user id)`, so a user's assignment is independent of
/// every other user. Output tables keep input order.
pub fn stratified_split(table: &RatingsTable, ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} outside (0, 1)")));
    }
    let mut by_user: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (pos, r) in table.records().iter().enumerate() {
        by_user.entry(r.user).or_default().push(pos);
    }

    let mut in_train = vec![false; table.len()];
    for (&user, positions) in &by_user {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(user as u64);
        let mut shuffled = positions.clone();
        shuffled.shuffle(&mut rng);
        for &pos in &shuffled[..train_count(positions.len(), ratio)] {
            in_train[pos] = true;
        }
    }

    let (train, test): (Vec<_>, Vec<_>) = table
        .records()
        .iter()
        .zip(&in_train)
        .partition(|(_, &t)| t);
    Ok(SplitPair {
        train: RatingsTable::from_trusted(train.into_iter().map(|(r, _)| *r).collect()),
        test: RatingsTable::from_trusted(test.into_iter().map(|(r, _)| *r).collect()),
        ratio,
        seed,
    })
}
