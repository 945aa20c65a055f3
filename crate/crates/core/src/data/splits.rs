//! Stratified train/val/test splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{validate_labels, LabeledSplits};
use crate::error::{Error, Result};

/// Samples `per_class_train` nodes per class for training, then `n_val`
/// validation nodes uniformly from the remainder; everything else is
/// test. Deterministic in `seed`; returned index sets are sorted.
pub fn make_splits(
    labels: &[usize],
    per_class_train: usize,
    n_val: usize,
    seed: u64,
) -> Result<LabeledSplits> {
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    validate_labels(labels, n_classes)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }

    let mut train = Vec::with_capacity(per_class_train * n_classes);
    let mut in_train = vec![false; labels.len()];
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.len() < per_class_train {
            return Err(Error::InvalidArgument(format!(
                "class {c} has {} members, need {per_class_train} for training",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for &i in members.iter().take(per_class_train) {
            train.push(i);
            in_train[i] = true;
        }
    }

    let mut rest: Vec<usize> = (0..labels.len()).filter(|&i| !in_train[i]).collect();
    if rest.len() < n_val {
        return Err(Error::InvalidArgument(format!(
            "{} nodes remain after training selection, need {n_val} for validation",
            rest.len()
        )));
    }
    rest.shuffle(&mut rng);
    let mut val: Vec<usize> = rest[..n_val].to_vec();
    let mut test: Vec<usize> = rest[n_val..].to_vec();

    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(LabeledSplits {
        labels: labels.to_vec(),
        n_classes,
        train,
        val,
        test,
    })
}
