use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentResult, FoldPrediction, SkippedSubject};
use crate::corpus::{BinaryLabel, Corpus};
use crate::error::{Error, Module, Result};

/// Rule for an even split of task votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Sign of the summed decision scores; an exact zero goes to Case.
    #[default]
    ScoreSum,
    AlwaysCase,
    AlwaysControl,
}

impl TieBreak {
    pub fn name(self) -> &'static str {
        match self {
            TieBreak::ScoreSum => "score_sum",
            TieBreak::AlwaysCase => "always_case",
            TieBreak::AlwaysControl => "always_control",
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "score_sum" => Ok(TieBreak::ScoreSum),
            "always_case" => Ok(TieBreak::AlwaysCase),
            "always_control" => Ok(TieBreak::AlwaysControl),
            _ => Err(Error::invalid(Module::Evaluation, "parse_tie_break", s, "unknown tie-break rule")),
        }
    }
}

/// Fuses one subject's per-task predictions into a single label. The fused
/// score is the sum of the task scores.
pub fn majority_vote(preds: &[FoldPrediction], tie: TieBreak) -> Result<FoldPrediction> {
    let first = preds
        .first()
        .ok_or_else(|| Error::invalid(Module::Evaluation, "majority_vote", "predictions", "no task predictions"))?;
    if let Some(p) = preds.iter().find(|p| p.subject_id != first.subject_id) {
        return Err(Error::invalid(
            Module::Evaluation,
            "majority_vote",
            &p.subject_id,
            format!("mixed with predictions for {}", first.subject_id),
        ));
    }
    let cases = preds.iter().filter(|p| p.predicted_label.is_case()).count();
    let controls = preds.len() - cases;
    let score: f64 = preds.iter().map(|p| p.score).sum();
    let predicted_label = if cases > controls {
        BinaryLabel::Case
    } else if controls > cases {
        BinaryLabel::Control
    } else {
        match tie {
            TieBreak::ScoreSum if score < 0.0 => BinaryLabel::Control,
            TieBreak::ScoreSum | TieBreak::AlwaysCase => BinaryLabel::Case,
            TieBreak::AlwaysControl => BinaryLabel::Control,
        }
    };
    Ok(FoldPrediction {
        subject_id: first.subject_id.clone(),
        task: None,
        fold: first.fold,
        true_label: first.true_label,
        predicted_label,
        score,
    })
}

/// Fuses the per-task experiments of one (feature set, classifier) pair.
/// Subjects with no task prediction at all are returned as excluded.
pub fn fuse(
    corpus: &Corpus,
    experiments: &[&ExperimentResult],
    tie: TieBreak,
) -> Result<(Vec<FoldPrediction>, Vec<SkippedSubject>)> {
    let mut by_subject: BTreeMap<&str, Vec<FoldPrediction>> = BTreeMap::new();
    for e in experiments {
        for p in &e.predictions {
            by_subject.entry(p.subject_id.as_str()).or_default().push(p.clone());
        }
    }
    let mut fused = Vec::new();
    let mut excluded = Vec::new();
    for s in corpus.subjects() {
        match by_subject.get(s.subject_id.as_str()) {
            Some(preds) => fused.push(majority_vote(preds, tie)?),
            None => excluded.push(SkippedSubject {
                subject_id: s.subject_id.clone(),
                task: None,
                reason: "no task predictions to fuse".to_string(),
            }),
        }
    }
    fused.sort_by(|a, b| (a.fold, &a.subject_id).cmp(&(b.fold, &b.subject_id)));
    Ok((fused, excluded))
}
