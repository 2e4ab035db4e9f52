use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::LearnError;

/// Smallest class size a split accepts.
pub const MIN_CLASS_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class shuffle-and-cut. Train and validation take the floor of their
/// fraction of each class; the remainder goes to test.
pub fn stratified_split(
    labels: &[usize],
    n_classes: usize,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<SplitIndices, LearnError> {
    let (f_train, f_val, f_test) = fractions;
    if f_train < 0.0 || f_val < 0.0 || f_test < 0.0 || (f_train + f_val + f_test - 1.0).abs() > 1e-9
    {
        return Err(LearnError::Config(format!(
            "split fractions {fractions:?} must be nonnegative and sum to 1"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        if l >= n_classes {
            return Err(LearnError::LabelOutOfRange {
                label: l,
                n_classes,
            });
        }
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = SplitIndices {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.len() < MIN_CLASS_SIZE {
            return Err(LearnError::ClassTooSmall {
                class,
                size: members.len(),
            });
        }
        members.shuffle(&mut rng);
        let n = members.len() as f64;
        let n_train = (n * f_train + 1e-9).floor() as usize;
        let n_val = (n * f_val + 1e-9).floor() as usize;
        split.train.extend_from_slice(&members[..n_train]);
        split
            .val
            .extend_from_slice(&members[n_train..n_train + n_val]);
        split.test.extend_from_slice(&members[n_train + n_val..]);
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn balanced(per_class: usize) -> Vec<usize> {
        (0..5)
            .flat_map(|c| std::iter::repeat_n(c, per_class))
            .collect()
    }

    #[test]
    fn full_size_split() {
        let labels = balanced(3600);
        let s = stratified_split(&labels, 5, (0.6, 0.2, 0.2), 1).unwrap();
        assert_eq!(
            (s.train.len(), s.val.len(), s.test.len()),
            (10800, 3600, 3600)
        );
        for c in 0..5 {
            let count = |part: &[usize]| part.iter().filter(|&&i| labels[i] == c).count();
            assert_eq!(
                (count(&s.train), count(&s.val), count(&s.test)),
                (2160, 720, 720)
            );
        }
    }

    #[test]
    fn partition_and_determinism() {
        let labels: Vec<usize> = (0..103).map(|i| i % 5).collect();
        let s = stratified_split(&labels, 5, (0.6, 0.2, 0.2), 9).unwrap();
        let all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.val)
            .chain(&s.test)
            .copied()
            .collect();
        assert_eq!(all.len(), labels.len());
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), labels.len());
        assert_eq!(s, stratified_split(&labels, 5, (0.6, 0.2, 0.2), 9).unwrap());
        assert_ne!(
            s,
            stratified_split(&labels, 5, (0.6, 0.2, 0.2), 10).unwrap()
        );
    }

    #[test]
    fn small_class_rejected() {
        let mut labels = balanced(10);
        labels.retain(|&l| l != 3);
        labels.extend([3, 3, 3, 3]);
        assert!(matches!(
            stratified_split(&labels, 5, (0.6, 0.2, 0.2), 0),
            Err(LearnError::ClassTooSmall { class: 3, size: 4 })
        ));
    }
}
