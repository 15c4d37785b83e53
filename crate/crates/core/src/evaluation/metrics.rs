use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::FoldPrediction;
use crate::corpus::{BinaryLabel, Corpus, Diagnosis};
use crate::error::{Error, Module, Result};

/// Fused outcomes split by diagnosis; columns are (predicted Case,
/// predicted Control), rows follow `Diagnosis::ALL`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionBreakdown {
    pub by_diagnosis: [[usize; 2]; 3],
}

impl ConfusionBreakdown {
    pub fn row(&self, d: Diagnosis) -> [usize; 2] {
        self.by_diagnosis[diagnosis_index(d)]
    }

    /// Row-collapse to (Case, Control) × (predicted Case, predicted Control).
    pub fn binary(&self) -> [[usize; 2]; 2] {
        let [de, mci, hc] = self.by_diagnosis;
        [[de[0] + mci[0], de[1] + mci[1]], hc]
    }

    pub fn tp(&self) -> usize {
        self.binary()[0][0]
    }

    pub fn fn_(&self) -> usize {
        self.binary()[0][1]
    }

    pub fn fp(&self) -> usize {
        self.binary()[1][0]
    }

    pub fn tn(&self) -> usize {
        self.binary()[1][1]
    }

    pub fn total(&self) -> usize {
        self.by_diagnosis.iter().flatten().sum()
    }

    pub fn sensitivity(&self) -> f64 {
        ratio(self.tp(), self.tp() + self.fn_())
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn(), self.tn() + self.fp())
    }

    /// Fraction of a diagnosis group given its correct binary label.
    pub fn row_accuracy(&self, d: Diagnosis) -> f64 {
        let [case, control] = self.row(d);
        let correct = if d.label().is_case() { case } else { control };
        ratio(correct, case + control)
    }
}

fn diagnosis_index(d: Diagnosis) -> usize {
    match d {
        Diagnosis::Dementia => 0,
        Diagnosis::Mci => 1,
        Diagnosis::Hc => 2,
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn confusion(preds: &[FoldPrediction], corpus: &Corpus) -> Result<ConfusionBreakdown> {
    let mut cm = ConfusionBreakdown::default();
    for p in preds {
        let s = corpus
            .subject(&p.subject_id)
            .ok_or_else(|| Error::invalid(Module::Evaluation, "confusion", &p.subject_id, "unknown subject"))?;
        let col = usize::from(!p.predicted_label.is_case());
        cm.by_diagnosis[diagnosis_index(s.diagnosis)][col] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Case is the positive class.
    #[default]
    Binary,
    Macro,
    Weighted,
}

impl Averaging {
    pub const ALL: [Averaging; 3] = [Averaging::Binary, Averaging::Macro, Averaging::Weighted];

    pub fn name(self) -> &'static str {
        match self {
            Averaging::Binary => "binary",
            Averaging::Macro => "macro",
            Averaging::Weighted => "weighted",
        }
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Averaging::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(Module::Evaluation, "parse_averaging", s, "unknown averaging mode"))
    }
}

/// Pooled metrics over all predictions, with the population standard
/// deviation of the per-fold values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub averaging: Averaging,
    pub precision: f64,
    pub precision_std: f64,
    pub recall: f64,
    pub recall_std: f64,
    pub f1: f64,
    pub f1_std: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    /// Some precision or recall had an empty denominator and was set to 0.
    pub zero_division: bool,
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
struct Prf {
    p: f64,
    r: f64,
    f1: f64,
    zero_division: bool,
}

fn prf(tp: usize, fp: usize, fn_: usize) -> Prf {
    let zero_division = tp + fp == 0 || tp + fn_ == 0;
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    Prf {
        p,
        r,
        f1: f1_score(p, r),
        zero_division,
    }
}

fn averaged(counts: [[usize; 2]; 2], mode: Averaging) -> Prf {
    let [[tp, fn_], [fp, tn]] = counts;
    let case = prf(tp, fp, fn_);
    if mode == Averaging::Binary {
        return case;
    }
    let control = prf(tn, fn_, fp);
    let (wc, wn) = match mode {
        Averaging::Macro => (0.5, 0.5),
        _ => {
            let n = (tp + fn_ + fp + tn) as f64;
            if n == 0.0 {
                (0.5, 0.5)
            } else {
                ((tp + fn_) as f64 / n, (fp + tn) as f64 / n)
            }
        }
    };
    Prf {
        p: wc * case.p + wn * control.p,
        r: wc * case.r + wn * control.r,
        f1: wc * case.f1 + wn * control.f1,
        zero_division: case.zero_division || control.zero_division,
    }
}

fn counts_of<'a>(preds: impl IntoIterator<Item = &'a FoldPrediction>) -> [[usize; 2]; 2] {
    let mut c = [[0; 2]; 2];
    for p in preds {
        let row = usize::from(p.true_label == BinaryLabel::Control);
        let col = usize::from(p.predicted_label == BinaryLabel::Control);
        c[row][col] += 1;
    }
    c
}

fn population_std(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Point metrics come from `cm`; the spreads come from grouping `preds` by
/// fold.
pub fn metrics(cm: &ConfusionBreakdown, preds: &[FoldPrediction], averaging: Averaging) -> MetricSet {
    let pooled = averaged(cm.binary(), averaging);
    let mut by_fold: BTreeMap<usize, Vec<&FoldPrediction>> = BTreeMap::new();
    for p in preds {
        by_fold.entry(p.fold).or_default().push(p);
    }
    let per_fold: Vec<Prf> = by_fold.values().map(|ps| averaged(counts_of(ps.iter().copied()), averaging)).collect();
    let spread = |f: fn(&Prf) -> f64| population_std(&per_fold.iter().map(f).collect::<Vec<_>>());
    MetricSet {
        averaging,
        precision: pooled.p,
        precision_std: spread(|m| m.p),
        recall: pooled.r,
        recall_std: spread(|m| m.r),
        f1: pooled.f1,
        f1_std: spread(|m| m.f1),
        sensitivity: cm.sensitivity(),
        specificity: cm.specificity(),
        zero_division: pooled.zero_division,
    }
}

/// Metrics straight from labelled predictions, without diagnosis detail.
pub fn metrics_from_predictions(preds: &[FoldPrediction], averaging: Averaging) -> MetricSet {
    let [[tp, fn_], [fp, tn]] = counts_of(preds);
    let cm = ConfusionBreakdown {
        by_diagnosis: [[tp, fn_], [0, 0], [fp, tn]],
    };
    metrics(&cm, preds, averaging)
}
