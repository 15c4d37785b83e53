use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::acoustic::FeatureSetId;
use crate::classifiers::{self, apply_standardizer, decision_score, fit_standardizer, ClassifierConfig, ClassifierKind};
use crate::corpus::{BinaryLabel, Corpus, FoldAssignment, Task};
use crate::error::{Error, Module, Result};
use crate::fit::FitTag;
use crate::linguistic::{fit_vocabulary, vectorize_heldout, vectorize_tfidf, NgramConfig};

/// Per-subject inputs for one task and feature set.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSource {
    /// Fixed vectors that need no fitting beyond standardization.
    Vectors(BTreeMap<String, Vec<f64>>),
    /// Raw transcripts; a TF-IDF vocabulary is fitted per fold.
    Texts(BTreeMap<String, String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskFeatures {
    pub task: Task,
    pub feature_set: FeatureSetId,
    pub source: FeatureSource,
    /// Why a subject has no input for this task, when known.
    pub missing_reasons: BTreeMap<String, String>,
}

impl TaskFeatures {
    fn has(&self, subject: &str) -> bool {
        match &self.source {
            FeatureSource::Vectors(m) => m.contains_key(subject),
            FeatureSource::Texts(m) => m.contains_key(subject),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPrediction {
    pub subject_id: String,
    /// `None` for a fused (all-task) prediction.
    pub task: Option<Task>,
    pub fold: usize,
    pub true_label: BinaryLabel,
    pub predicted_label: BinaryLabel,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkippedSubject {
    pub subject_id: String,
    pub task: Option<Task>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldSummary {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub classifier: ClassifierConfig,
    pub ngram: NgramConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub task: Task,
    pub feature_set: FeatureSetId,
    pub classifier: ClassifierKind,
    /// Ordered by fold, then subject id.
    pub predictions: Vec<FoldPrediction>,
    pub folds: Vec<FoldSummary>,
    pub skipped: Vec<SkippedSubject>,
}

fn label_of(corpus: &Corpus, subject: &str) -> Result<BinaryLabel> {
    corpus
        .subject(subject)
        .map(|s| s.label())
        .ok_or_else(|| Error::invalid(Module::Evaluation, "run_task_experiment", subject, "subject not in corpus"))
}

/// Cross-validated train/predict loop for one (task, feature set,
/// classifier) cell. Every fitted artifact is tagged with its training
/// subjects and checked against the fold's test subjects.
pub fn run_task_experiment(
    corpus: &Corpus,
    features: &TaskFeatures,
    kind: ClassifierKind,
    folds: &FoldAssignment,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let op = "run_task_experiment";
    let task = features.task;
    let keys: Vec<&String> = match &features.source {
        FeatureSource::Vectors(m) => m.keys().collect(),
        FeatureSource::Texts(m) => m.keys().collect(),
    };
    for s in keys {
        if folds.fold_of(s).is_none() {
            return Err(Error::invalid(Module::Evaluation, op, s.as_str(), "subject has features but no fold"));
        }
    }

    let mut skipped = Vec::new();
    for s in folds.fold_of_subject.keys() {
        if !features.has(s) {
            let reason = features
                .missing_reasons
                .get(s)
                .cloned()
                .unwrap_or_else(|| "no recording for task".to_string());
            skipped.push(SkippedSubject {
                subject_id: s.clone(),
                task: Some(task),
                reason,
            });
        }
    }

    let mut predictions = Vec::new();
    let mut summaries = Vec::new();
    for fold in 0..folds.k {
        let train_ids: Vec<&str> = folds.train_subjects(fold).into_iter().filter(|s| features.has(s)).collect();
        let test_ids: Vec<&str> = folds.test_subjects(fold).into_iter().filter(|s| features.has(s)).collect();
        let entity = format!("{task}/{}/{kind} fold {fold}", features.feature_set);
        if train_ids.is_empty() {
            return Err(Error::invalid(Module::Evaluation, op, entity, "empty training partition"));
        }
        let y: Vec<bool> = train_ids
            .iter()
            .map(|s| label_of(corpus, s).map(BinaryLabel::is_case))
            .collect::<Result<_>>()?;
        if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
            return Err(Error::invalid(Module::Evaluation, op, entity, "training partition is single-class"));
        }
        let tag = FitTag::new(format!("{task}/{} fold {fold}", features.feature_set), train_ids.iter().copied());

        let (x_train, x_test): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match &features.source {
            FeatureSource::Vectors(m) => (
                train_ids.iter().map(|s| m[*s].clone()).collect(),
                test_ids.iter().map(|s| m[*s].clone()).collect(),
            ),
            FeatureSource::Texts(m) => {
                let docs: Vec<&str> = train_ids.iter().map(|s| m[*s].as_str()).collect();
                let vocab = fit_vocabulary(&docs, &cfg.ngram)?.with_fit_tag(tag.clone());
                let train = docs.iter().map(|d| vectorize_tfidf(d, &vocab).values).collect();
                let test = test_ids
                    .iter()
                    .map(|s| vectorize_heldout(&m[*s], s, &vocab).map(|v| v.values))
                    .collect::<Result<_>>()?;
                (train, test)
            }
        };

        let scaler = fit_standardizer(&x_train)?.with_fit_tag(tag.clone());
        scaler.fitted_on.ensure_disjoint("standardizer", test_ids.iter().copied())?;
        let z_train = scaler.apply_all(&x_train)?;
        let model = classifiers::train(kind, &z_train, &y, &cfg.classifier, cfg.seed ^ fold as u64)?.with_fit_tag(tag);
        model.fitted_on.ensure_disjoint("model", test_ids.iter().copied())?;

        let mut correct = 0;
        for (z, &yi) in z_train.iter().zip(&y) {
            if (decision_score(z, &model)? >= 0.0) == yi {
                correct += 1;
            }
        }
        summaries.push(FoldSummary {
            fold,
            n_train: train_ids.len(),
            n_test: test_ids.len(),
            train_accuracy: correct as f64 / y.len() as f64,
        });

        for (s, x) in test_ids.iter().zip(&x_test) {
            let score = decision_score(&apply_standardizer(x, &scaler)?, &model)?;
            predictions.push(FoldPrediction {
                subject_id: s.to_string(),
                task: Some(task),
                fold,
                true_label: label_of(corpus, s)?,
                predicted_label: if score >= 0.0 { BinaryLabel::Case } else { BinaryLabel::Control },
                score,
            });
        }
    }
    Ok(ExperimentResult {
        task,
        feature_set: features.feature_set,
        classifier: kind,
        predictions,
        folds: summaries,
        skipped,
    })
}
