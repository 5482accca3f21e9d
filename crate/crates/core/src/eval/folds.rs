use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Speaker-level fold assignment. All of a speaker's recordings travel together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub folds: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn test_speakers(&self, fold: usize) -> BTreeSet<&str> {
        self.folds.iter().filter(|(_, &f)| f == fold).map(|(s, _)| s.as_str()).collect()
    }

    pub fn train_speakers(&self, fold: usize) -> BTreeSet<&str> {
        self.folds.iter().filter(|(_, &f)| f != fold).map(|(s, _)| s.as_str()).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.folds.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified assignment: each class is shuffled and dealt round-robin, the
/// second class continuing where the first stopped so fold sizes differ by
/// at most one overall.
pub fn make_folds(speakers: &[(String, Label)], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k == 0 || speakers.len() < k {
        return Err(Error::Config(format!("{} speakers cannot fill {k} folds", speakers.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = BTreeMap::new();
    let mut next = 0usize;
    for class in [Label::Depressed, Label::Control] {
        let mut ids: Vec<&String> = speakers.iter().filter(|(_, l)| *l == class).map(|(s, _)| s).collect();
        ids.sort();
        ids.shuffle(&mut rng);
        for id in ids {
            if folds.insert(id.clone(), next % k).is_some() {
                return Err(Error::Data(format!("speaker `{id}` listed twice")));
            }
            next += 1;
        }
    }
    Ok(FoldAssignment { k, seed, folds })
}

/// Fails with an invariant violation if any speaker is on both sides.
pub fn check_disjoint<'a>(
    fold: usize,
    train: impl IntoIterator<Item = &'a str>,
    test: impl IntoIterator<Item = &'a str>,
) -> Result<()> {
    let train: BTreeSet<&str> = train.into_iter().collect();
    let leaked: Vec<&str> = test.into_iter().filter(|s| train.contains(s)).collect();
    if leaked.is_empty() {
        Ok(())
    } else {
        Err(Error::InvariantViolation(format!(
            "fold {fold}: speaker(s) {} present in both training and test sets",
            leaked.join(", ")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster(dep: usize, ctl: usize) -> Vec<(String, Label)> {
        (0..dep)
            .map(|i| (format!("d{i}"), Label::Depressed))
            .chain((0..ctl).map(|i| (format!("c{i}"), Label::Control)))
            .collect()
    }

    #[test]
    fn fifty_two_speakers() {
        let f = make_folds(&roster(23, 29), 5, 3).unwrap();
        let mut sizes = f.fold_sizes();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![11, 11, 10, 10, 10]);
        for fold in 0..5 {
            let test = f.test_speakers(fold);
            assert!(test.iter().any(|s| s.starts_with('d')));
            assert!(test.iter().any(|s| s.starts_with('c')));
            check_disjoint(fold, f.train_speakers(fold), test).unwrap();
        }
    }

    #[test]
    fn one_per_fold_and_deterministic() {
        let r = roster(2, 3);
        let f = make_folds(&r, 5, 9).unwrap();
        assert_eq!(f.fold_sizes(), vec![1; 5]);
        assert_eq!(f, make_folds(&r, 5, 9).unwrap());
    }

    #[test]
    fn too_few_speakers() {
        assert!(matches!(make_folds(&roster(2, 2), 5, 0), Err(Error::Config(_))));
    }

    #[test]
    fn leak_is_reported() {
        let err = check_disjoint(2, ["a", "b"], ["b", "c"]).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(ref m) if m.contains('b')));
        assert_eq!(err.exit_code(), 3);
    }
}
