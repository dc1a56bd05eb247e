use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const TRAIN_FRACTION: f64 = 0.70;
pub const VALIDATION_FRACTION: f64 = 0.15;

/// Disjoint train/validation/test index sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn sizes(n: usize) -> (usize, usize) {
    let train = (n as f64 * TRAIN_FRACTION).round() as usize;
    let val = (n as f64 * VALIDATION_FRACTION).round() as usize;
    (train, val.min(n - train))
}

fn cut(order: Vec<usize>, seed: u64) -> DatasetSplit {
    let (n_train, n_val) = sizes(order.len());
    let mut train = order[..n_train].to_vec();
    let mut validation = order[n_train..n_train + n_val].to_vec();
    let mut test = order[n_train + n_val..].to_vec();
    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    DatasetSplit {
        train,
        validation,
        test,
        seed,
    }
}

/// Seeded 70/15/15 split of `0..n_items`.
pub fn split_dataset(n_items: usize, seed: u64) -> Result<DatasetSplit> {
    if n_items < 3 {
        return Err(Error::contract(format!(
            "splitting needs at least 3 items, got {n_items}"
        )));
    }
    let mut order: Vec<usize> = (0..n_items).collect();
    order.shuffle(&mut seed::rng(seed));
    Ok(cut(order, seed))
}

/// Label-stratified 70/15/15 split.
///
/// Items of each class are shuffled, then every item is keyed by its
/// fractional rank `(r + 0.5) / class_size` inside its class. Cutting the
/// globally sorted order keeps overall sizes on the unstratified rule while
/// every class lands within one item of its own 70/15/15 share.
pub fn split_stratified(labels: &[usize], seed: u64) -> Result<DatasetSplit> {
    if labels.len() < 3 {
        return Err(Error::contract(format!(
            "splitting needs at least 3 items, got {}",
            labels.len()
        )));
    }
    let mut rng = seed::rng(seed);
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        per_class[c].push(i);
    }
    // class order is shuffled once so ties at equal fractional rank rotate
    let mut class_rank: Vec<usize> = (0..n_classes).collect();
    class_rank.shuffle(&mut rng);
    let mut keyed: Vec<(f64, usize, usize)> = Vec::with_capacity(labels.len());
    for (c, members) in per_class.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        let size = members.len() as f64;
        for (r, &i) in members.iter().enumerate() {
            keyed.push(((r as f64 + 0.5) / size, class_rank[c], i));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(cut(keyed.into_iter().map(|k| k.2).collect(), seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_partition(s: &DatasetSplit, n: usize) {
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.validation)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    fn within_one(s: &DatasetSplit, n: usize) -> bool {
        let near = |got: usize, frac: f64| (got as f64 - frac * n as f64).abs() <= 1.0;
        near(s.train.len(), 0.70) && near(s.validation.len(), 0.15) && near(s.test.len(), 0.15)
    }

    #[test]
    fn ten_items() {
        for seed in 0..20 {
            let s = split_dataset(10, seed).unwrap();
            let sizes = (s.train.len(), s.validation.len(), s.test.len());
            assert!(sizes == (7, 1, 2) || sizes == (7, 2, 1), "{sizes:?}");
        }
    }

    #[test]
    fn same_seed_same_split() {
        assert_eq!(split_dataset(57, 9).unwrap(), split_dataset(57, 9).unwrap());
        assert_ne!(split_dataset(57, 9).unwrap(), split_dataset(57, 10).unwrap());
    }

    #[test]
    fn too_small() {
        assert!(split_dataset(2, 0).is_err());
    }

    #[test]
    fn stratified_class_shares() {
        // 1000 items across 5 unbalanced classes
        let counts = [400usize, 250, 200, 100, 50];
        let mut labels = Vec::new();
        for (c, &k) in counts.iter().enumerate() {
            labels.extend(std::iter::repeat(c).take(k));
        }
        let s = split_stratified(&labels, 3).unwrap();
        check_partition(&s, 1000);
        assert!(within_one(&s, 1000));
        for (c, &k) in counts.iter().enumerate() {
            let in_train = s.train.iter().filter(|&&i| labels[i] == c).count();
            let share = in_train as f64 / k as f64;
            assert!((share - 0.70).abs() <= 0.02, "class {c}: {share}");
        }
    }

    proptest! {
        #[test]
        fn split_partitions(n in 3usize..500, seed in any::<u64>()) {
            let s = split_dataset(n, seed).unwrap();
            check_partition(&s, n);
            prop_assert!(within_one(&s, n));
        }

        #[test]
        fn stratified_partitions(labels in proptest::collection::vec(0usize..6, 3..300), seed in any::<u64>()) {
            let s = split_stratified(&labels, seed).unwrap();
            check_partition(&s, labels.len());
            prop_assert!(within_one(&s, labels.len()));
        }
    }
}
