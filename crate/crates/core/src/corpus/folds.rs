use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::types::{BinaryLabel, Corpus};
use crate::error::{Error, Module, Result};

/// Subject-level partition into `k` disjoint folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of_subject: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, subject_id: &str) -> Option<usize> {
        self.fold_of_subject.get(subject_id).copied()
    }

    pub fn test_subjects(&self, fold: usize) -> BTreeSet<&str> {
        self.fold_of_subject
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(s, _)| s.as_str())
            .collect()
    }

    pub fn train_subjects(&self, fold: usize) -> BTreeSet<&str> {
        self.fold_of_subject
            .iter()
            .filter(|(_, &f)| f != fold)
            .map(|(s, _)| s.as_str())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.fold_of_subject.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// Per-fold (Case, Control) counts.
    pub fn class_counts(&self, corpus: &Corpus) -> Vec<(usize, usize)> {
        let mut counts = vec![(0, 0); self.k];
        for (s, &f) in &self.fold_of_subject {
            match corpus.subject(s).map(|s| s.label()) {
                Some(BinaryLabel::Case) => counts[f].0 += 1,
                Some(BinaryLabel::Control) => counts[f].1 += 1,
                None => {}
            }
        }
        counts
    }
}

/// Label-stratified subject folds.
///
/// Subjects of each class are sorted by id, shuffled with a seeded ChaCha8
/// generator and dealt round-robin; the Control deal resumes at the fold
/// after the last Case so fold sizes differ by at most one.
pub fn stratified_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::invalid(Module::Corpus, "stratified_folds", format!("k={k}"), "k must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of_subject = BTreeMap::new();
    let mut next = 0;
    for label in [BinaryLabel::Case, BinaryLabel::Control] {
        let mut ids: Vec<&str> = corpus
            .subjects()
            .iter()
            .filter(|s| s.label() == label)
            .map(|s| s.subject_id.as_str())
            .collect();
        if ids.len() < k {
            return Err(Error::invalid(
                Module::Corpus,
                "stratified_folds",
                label.as_str(),
                format!("class has {} subjects, fewer than k={k}", ids.len()),
            ));
        }
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        for id in ids {
            fold_of_subject.insert(id.to_string(), next);
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of_subject })
}
