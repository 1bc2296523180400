//! Stratified holdout and k-fold partitions.

use crate::error::{Error, Result};
use crate::rng::{child_seed, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_per_class: usize,
    /// Validation size as a fraction of `train_per_class` (rounded up) ...
    pub val_fraction: f64,
    /// ... but never fewer than this many per class.
    pub val_min_per_class: usize,
    pub test_per_class: usize,
}

impl SplitSpec {
    pub fn val_per_class(&self) -> usize {
        ((self.train_per_class as f64 * self.val_fraction).ceil() as usize).max(self.val_min_per_class)
    }
}

/// Sorted index sets, pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn members_by_class(labels: &[usize], num_classes: usize) -> Vec<Vec<usize>> {
    let mut by = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by[l].push(i);
    }
    by
}

/// Per class: shuffle that class's members under `child(seed, class)`, then
/// deal test, train, and validation in that order. The test set therefore
/// depends only on the seed and `test_per_class`, and training sets for
/// growing `train_per_class` are nested.
pub fn stratified_split(labels: &[usize], num_classes: usize, spec: &SplitSpec, seed: u64) -> Result<Split> {
    let val_n = spec.val_per_class();
    let need = spec.test_per_class + spec.train_per_class + val_n;
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (class, mut members) in members_by_class(labels, num_classes).into_iter().enumerate() {
        if members.len() < need {
            return Err(Error::data(format!(
                "class {class} has {} samples; {} train + {} val + {} test requested",
                members.len(),
                spec.train_per_class,
                val_n,
                spec.test_per_class
            )));
        }
        SeededRng::new(child_seed(seed, class as u64)).shuffle(&mut members);
        let (test, rest) = members.split_at(spec.test_per_class);
        let (train, rest) = rest.split_at(spec.train_per_class);
        split.test.extend_from_slice(test);
        split.train.extend_from_slice(train);
        split.val.extend_from_slice(&rest[..val_n]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Partition `indices` into `k` folds, dealing each class's shuffled members
/// round-robin so every fold keeps the class proportions.
pub fn stratified_kfold(labels: &[usize], indices: &[usize], num_classes: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid("k-fold needs k >= 2"));
    }
    let sub: Vec<usize> = indices.iter().map(|&i| labels[i]).collect();
    let mut folds = vec![Vec::new(); k];
    for (class, mut members) in members_by_class(&sub, num_classes).into_iter().enumerate() {
        if members.len() < k {
            return Err(Error::data(format!(
                "class {class} has {} samples, fewer than {k} folds",
                members.len()
            )));
        }
        SeededRng::new(child_seed(seed, class as u64)).shuffle(&mut members);
        for (j, m) in members.into_iter().enumerate() {
            folds[j % k].push(indices[m]);
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(per: usize, classes: usize) -> Vec<usize> {
        (0..per * classes).map(|i| i % classes).collect()
    }

    #[test]
    fn exact_counts_and_disjoint() {
        let l = labels(60, 2);
        let spec = SplitSpec {
            train_per_class: 10,
            val_fraction: 0.5,
            val_min_per_class: 3,
            test_per_class: 20,
        };
        let s = stratified_split(&l, 2, &spec, 7).unwrap();
        let count = |set: &[usize], c| set.iter().filter(|&&i| l[i] == c).count();
        for c in 0..2 {
            assert_eq!(count(&s.train, c), 10);
            assert_eq!(count(&s.val, c), 5);
            assert_eq!(count(&s.test, c), 20);
        }
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 70);
        assert_eq!(stratified_split(&l, 2, &spec, 7).unwrap(), s);
        assert_ne!(stratified_split(&l, 2, &spec, 8).unwrap(), s);
    }

    #[test]
    fn nested_train_and_fixed_test() {
        let l = labels(100, 2);
        let mk = |n| SplitSpec {
            train_per_class: n,
            val_fraction: 0.0,
            val_min_per_class: 5,
            test_per_class: 30,
        };
        let small = stratified_split(&l, 2, &mk(5), 3).unwrap();
        let big = stratified_split(&l, 2, &mk(25), 3).unwrap();
        assert_eq!(small.test, big.test);
        assert!(small.train.iter().all(|i| big.train.contains(i)));
    }

    #[test]
    fn too_few_samples() {
        let spec = SplitSpec {
            train_per_class: 11,
            val_fraction: 0.0,
            val_min_per_class: 0,
            test_per_class: 0,
        };
        assert!(stratified_split(&labels(10, 2), 2, &spec, 0).is_err());
    }

    #[test]
    fn kfold_is_stratified() {
        let l = labels(10, 2);
        let idx: Vec<usize> = (0..20).collect();
        let folds = stratified_kfold(&l, &idx, 2, 5, 1).unwrap();
        assert_eq!(folds.len(), 5);
        for f in &folds {
            assert_eq!(f.iter().filter(|&&i| l[i] == 0).count(), 2);
            assert_eq!(f.iter().filter(|&&i| l[i] == 1).count(), 2);
        }
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, idx);
        assert!(stratified_kfold(&l, &idx[..8], 2, 5, 1).is_err());
    }
}
