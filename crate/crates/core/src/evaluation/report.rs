//! Evaluation report: a sectioned text document holding the config echo,
//! metric tables as CSV blocks, confusion tables, per-subject predictions
//! and chart data. `parse_report(render_report(r)) == r`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde_json::json;

use super::experiment::{ExperimentResult, FoldPrediction, SkippedSubject};
use super::fusion::TieBreak;
use super::metrics::{confusion, metrics, Averaging, ConfusionBreakdown, MetricSet};
use crate::acoustic::FeatureSetId;
use crate::classifiers::ClassifierKind;
use crate::corpus::{BinaryLabel, Corpus, Diagnosis, Task};
use crate::error::{Error, Module, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "# cognopipe-report schema=";

pub const DISCLAIMERS: [&str; 6] = [
    "Linguistic results use n-gram TF-IDF and lexical statistics with linear classifiers; no transformer models are involved.",
    "Speech regions come from energy-based voice activity detection rather than forced alignment.",
    "Acoustic sets are reduced analogues of eGeMAPS (88 features) and ComParE functionals, not the reference extractors.",
    "Metric values are pooled over all test folds; each _std column is the population standard deviation of the per-fold values on the same 0-1 scale.",
    "Fused labels are a majority vote over the tasks available for a subject; even splits use the configured tie-break rule.",
    "Per-diagnosis accuracy counts predicted Case as correct for Dementia and MCI rows and predicted Control for HC.",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    Task(Task),
    Fused,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Task(t) => f.write_str(t.as_str()),
            Scope::Fused => f.write_str("Fused"),
        }
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "Fused" {
            Ok(Scope::Fused)
        } else {
            s.parse().map(Scope::Task)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scope: Scope,
    pub feature_set: FeatureSetId,
    pub classifier: ClassifierKind,
    pub n_predictions: usize,
    /// Indexed like `Averaging::ALL`.
    pub metrics: [MetricSet; 3],
}

impl SummaryRow {
    pub fn get(&self, averaging: Averaging) -> &MetricSet {
        &self.metrics[Averaging::ALL.iter().position(|a| *a == averaging).unwrap()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionEntry {
    pub scope: Scope,
    pub feature_set: FeatureSetId,
    pub classifier: ClassifierKind,
    pub cm: ConfusionBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub feature_set: FeatureSetId,
    pub classifier: ClassifierKind,
    pub prediction: FoldPrediction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkipRow {
    pub feature_set: FeatureSetId,
    pub classifier: ClassifierKind,
    pub skipped: SkippedSubject,
}

/// A grid cell that produced no result.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsentCell {
    pub scope: Scope,
    pub feature_set: FeatureSetId,
    pub classifier: ClassifierKind,
    pub reason: String,
}

/// Majority-vote outcome for one (feature set, classifier) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedResult {
    pub feature_set: FeatureSetId,
    pub classifier: ClassifierKind,
    pub predictions: Vec<FoldPrediction>,
    pub excluded: Vec<SkippedSubject>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub schema_version: u32,
    pub primary_averaging: Averaging,
    pub tie_break: TieBreak,
    pub config_echo: String,
    pub disclaimers: Vec<String>,
    pub rows: Vec<SummaryRow>,
    pub confusions: Vec<ConfusionEntry>,
    pub predictions: Vec<PredictionRow>,
    pub skipped: Vec<SkipRow>,
    pub absent: Vec<AbsentCell>,
}

impl EvalReport {
    pub fn row(&self, scope: Scope, fs: FeatureSetId, clf: ClassifierKind) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.scope == scope && r.feature_set == fs && r.classifier == clf)
    }

    pub fn confusion(&self, scope: Scope, fs: FeatureSetId, clf: ClassifierKind) -> Option<&ConfusionBreakdown> {
        self.confusions
            .iter()
            .find(|c| c.scope == scope && c.feature_set == fs && c.classifier == clf)
            .map(|c| &c.cm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportHeader {
    pub config_echo: String,
    pub averaging: Averaging,
    pub tie_break: TieBreak,
}

fn summarize(
    corpus: &Corpus,
    scope: Scope,
    fs: FeatureSetId,
    clf: ClassifierKind,
    preds: &[FoldPrediction],
) -> Result<(SummaryRow, ConfusionEntry)> {
    let cm = confusion(preds, corpus)?;
    let row = SummaryRow {
        scope,
        feature_set: fs,
        classifier: clf,
        n_predictions: preds.len(),
        metrics: Averaging::ALL.map(|a| metrics(&cm, preds, a)),
    };
    let entry = ConfusionEntry {
        scope,
        feature_set: fs,
        classifier: clf,
        cm,
    };
    Ok((row, entry))
}

/// Assembles a report; rows keep the order of `experiments` followed by
/// `fused`.
pub fn build_report(
    corpus: &Corpus,
    experiments: &[ExperimentResult],
    fused: &[FusedResult],
    absent: Vec<AbsentCell>,
    header: &ReportHeader,
) -> Result<EvalReport> {
    let mut report = EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        primary_averaging: header.averaging,
        tie_break: header.tie_break,
        config_echo: header.config_echo.trim_end().to_string(),
        disclaimers: DISCLAIMERS.iter().map(|s| s.to_string()).collect(),
        rows: Vec::new(),
        confusions: Vec::new(),
        predictions: Vec::new(),
        skipped: Vec::new(),
        absent,
    };
    let cells = experiments
        .iter()
        .map(|e| (Scope::Task(e.task), e.feature_set, e.classifier, &e.predictions, &e.skipped))
        .chain(
            fused
                .iter()
                .map(|f| (Scope::Fused, f.feature_set, f.classifier, &f.predictions, &f.excluded)),
        );
    for (scope, fs, clf, preds, skipped) in cells {
        let (row, entry) = summarize(corpus, scope, fs, clf, preds)?;
        report.rows.push(row);
        report.confusions.push(entry);
        report.predictions.extend(preds.iter().map(|p| PredictionRow {
            feature_set: fs,
            classifier: clf,
            prediction: p.clone(),
        }));
        report.skipped.extend(skipped.iter().map(|s| SkipRow {
            feature_set: fs,
            classifier: clf,
            skipped: s.clone(),
        }));
    }
    Ok(report)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_block(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv write");
    for r in rows {
        w.write_record(&r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is UTF-8")
}

fn summary_header() -> Vec<String> {
    let mut h: Vec<String> = ["scope", "feature_set", "classifier", "n"].map(String::from).to_vec();
    for a in Averaging::ALL {
        for m in ["precision", "precision_std", "recall", "recall_std", "f1", "f1_std", "zero_division"] {
            h.push(format!("{a}_{m}"));
        }
    }
    h.push("sensitivity".into());
    h.push("specificity".into());
    h
}

fn summary_record(r: &SummaryRow) -> Vec<String> {
    let mut v = vec![
        r.scope.to_string(),
        r.feature_set.to_string(),
        r.classifier.to_string(),
        r.n_predictions.to_string(),
    ];
    for m in &r.metrics {
        v.extend([
            num(m.precision),
            num(m.precision_std),
            num(m.recall),
            num(m.recall_std),
            num(m.f1),
            num(m.f1_std),
            m.zero_division.to_string(),
        ]);
    }
    v.push(num(r.metrics[0].sensitivity));
    v.push(num(r.metrics[0].specificity));
    v
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn chart_data(report: &EvalReport) -> String {
    let bars: Vec<_> = report
        .rows
        .iter()
        .map(|r| {
            let m = r.get(report.primary_averaging);
            json!({
                "scope": r.scope.to_string(),
                "feature_set": r.feature_set.to_string(),
                "classifier": r.classifier.to_string(),
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "f1_std": m.f1_std,
            })
        })
        .collect();
    json!({ "averaging": report.primary_averaging.name(), "bars": bars }).to_string()
}

pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}{}", report.schema_version);
    let _ = writeln!(out, "=== meta ===");
    let _ = writeln!(out, "primary_averaging={}", report.primary_averaging);
    let _ = writeln!(out, "tie_break={}", report.tie_break);
    let _ = writeln!(out, "=== config ===");
    if !report.config_echo.is_empty() {
        let _ = writeln!(out, "{}", report.config_echo);
    }
    let _ = writeln!(out, "=== disclaimers ===");
    for d in &report.disclaimers {
        let _ = writeln!(out, "- {d}");
    }

    let (task_rows, fused_rows): (Vec<&SummaryRow>, Vec<&SummaryRow>) =
        report.rows.iter().partition(|r| r.scope != Scope::Fused);
    let _ = writeln!(out, "=== task_metrics ===");
    out.push_str(&csv_block(&summary_header(), task_rows.iter().map(|r| summary_record(r))));
    let _ = writeln!(out, "=== fused_metrics ===");
    out.push_str(&csv_block(&summary_header(), fused_rows.iter().map(|r| summary_record(r))));

    let _ = writeln!(out, "=== confusion_3x2 ===");
    let mut rows = Vec::new();
    for c in &report.confusions {
        for d in Diagnosis::ALL {
            let [pc, pn] = c.cm.row(d);
            rows.push(vec![
                c.scope.to_string(),
                c.feature_set.to_string(),
                c.classifier.to_string(),
                d.to_string(),
                pc.to_string(),
                pn.to_string(),
                num(c.cm.row_accuracy(d)),
            ]);
        }
    }
    out.push_str(&csv_block(
        &strings(&["scope", "feature_set", "classifier", "diagnosis", "pred_case", "pred_control", "accuracy"]),
        rows,
    ));
    let _ = writeln!(out, "=== confusion_2x2 ===");
    let mut rows = Vec::new();
    for c in &report.confusions {
        for (label, [pc, pn]) in [BinaryLabel::Case, BinaryLabel::Control].into_iter().zip(c.cm.binary()) {
            rows.push(vec![
                c.scope.to_string(),
                c.feature_set.to_string(),
                c.classifier.to_string(),
                label.to_string(),
                pc.to_string(),
                pn.to_string(),
            ]);
        }
    }
    out.push_str(&csv_block(
        &strings(&["scope", "feature_set", "classifier", "true_label", "pred_case", "pred_control"]),
        rows,
    ));

    let _ = writeln!(out, "=== predictions ===");
    out.push_str(&csv_block(
        &strings(&[
            "scope",
            "feature_set",
            "classifier",
            "subject_id",
            "fold",
            "true_label",
            "predicted_label",
            "score",
        ]),
        report.predictions.iter().map(|r| {
            let p = &r.prediction;
            vec![
                p.task.map_or(Scope::Fused, Scope::Task).to_string(),
                r.feature_set.to_string(),
                r.classifier.to_string(),
                p.subject_id.clone(),
                p.fold.to_string(),
                p.true_label.to_string(),
                p.predicted_label.to_string(),
                num(p.score),
            ]
        }),
    ));

    let _ = writeln!(out, "=== skipped ===");
    out.push_str(&csv_block(
        &strings(&["scope", "feature_set", "classifier", "subject_id", "reason"]),
        report.skipped.iter().map(|r| {
            vec![
                r.skipped.task.map_or(Scope::Fused, Scope::Task).to_string(),
                r.feature_set.to_string(),
                r.classifier.to_string(),
                r.skipped.subject_id.clone(),
                r.skipped.reason.clone(),
            ]
        }),
    ));
    let _ = writeln!(out, "=== absent ===");
    out.push_str(&csv_block(
        &strings(&["scope", "feature_set", "classifier", "reason"]),
        report.absent.iter().map(|a| {
            vec![
                a.scope.to_string(),
                a.feature_set.to_string(),
                a.classifier.to_string(),
                a.reason.clone(),
            ]
        }),
    ));
    let _ = writeln!(out, "=== chart_data ===");
    let _ = writeln!(out, "{}", chart_data(report));
    out
}

fn bad(message: impl Into<String>) -> Error {
    Error::invalid(Module::Evaluation, "parse_report", "report", message)
}

fn parse_field<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| bad(format!("bad {what} '{s}'")))
}

fn read_csv(text: &str, expected: &[String]) -> Result<Vec<Vec<String>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
    if header != expected {
        return Err(bad(format!("unexpected columns {header:?}")));
    }
    r.records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()).map_err(|e| bad(e.to_string())))
        .collect()
}

fn parse_summary(rec: &[String]) -> Result<SummaryRow> {
    let f = |i: usize, what: &str| parse_field::<f64>(&rec[i], what);
    let sens = f(rec.len() - 2, "sensitivity")?;
    let spec = f(rec.len() - 1, "specificity")?;
    let mut sets = Vec::new();
    for (k, a) in Averaging::ALL.into_iter().enumerate() {
        let o = 4 + 7 * k;
        sets.push(MetricSet {
            averaging: a,
            precision: f(o, "precision")?,
            precision_std: f(o + 1, "precision_std")?,
            recall: f(o + 2, "recall")?,
            recall_std: f(o + 3, "recall_std")?,
            f1: f(o + 4, "f1")?,
            f1_std: f(o + 5, "f1_std")?,
            zero_division: parse_field(&rec[o + 6], "zero_division")?,
            sensitivity: sens,
            specificity: spec,
        });
    }
    Ok(SummaryRow {
        scope: parse_field(&rec[0], "scope")?,
        feature_set: parse_field(&rec[1], "feature_set")?,
        classifier: parse_field(&rec[2], "classifier")?,
        n_predictions: parse_field(&rec[3], "n")?,
        metrics: [sets[0], sets[1], sets[2]],
    })
}

fn task_of(scope: Scope) -> Option<Task> {
    match scope {
        Scope::Task(t) => Some(t),
        Scope::Fused => None,
    }
}

pub fn parse_report(text: &str) -> Result<EvalReport> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| bad("empty document"))?;
    let version: u32 = first
        .strip_prefix(MAGIC)
        .ok_or_else(|| bad("missing report header"))
        .and_then(|v| parse_field(v, "schema version"))?;
    if version != REPORT_SCHEMA_VERSION {
        return Err(bad(format!("unsupported schema version {version}")));
    }
    let mut sections: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut current: Option<&str> = None;
    for line in lines {
        if let Some(name) = line.strip_prefix("=== ").and_then(|l| l.strip_suffix(" ===")) {
            current = Some(name);
            sections.entry(name).or_default();
        } else if let Some(name) = current {
            sections.entry(name).or_default().push(line);
        } else {
            return Err(bad("content before first section"));
        }
    }
    let section = |name: &str| -> Result<String> {
        sections
            .get(name)
            .map(|l| l.iter().map(|s| format!("{s}\n")).collect())
            .ok_or_else(|| bad(format!("missing section '{name}'")))
    };

    let mut meta = BTreeMap::new();
    for line in section("meta")?.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("bad meta line '{line}'")))?;
        meta.insert(k.to_string(), v.to_string());
    }
    let meta_value = |k: &str| meta.get(k).cloned().ok_or_else(|| bad(format!("missing meta key '{k}'")));
    let primary_averaging = parse_field(&meta_value("primary_averaging")?, "averaging")?;
    let tie_break = parse_field(&meta_value("tie_break")?, "tie_break")?;

    let config_echo = section("config")?.trim_end().to_string();
    let disclaimers = section("disclaimers")?
        .lines()
        .map(|l| l.strip_prefix("- ").map(String::from).ok_or_else(|| bad("bad disclaimer line")))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for name in ["task_metrics", "fused_metrics"] {
        for rec in read_csv(&section(name)?, &summary_header())? {
            rows.push(parse_summary(&rec)?);
        }
    }

    let mut confusions: Vec<ConfusionEntry> = Vec::new();
    let header = strings(&["scope", "feature_set", "classifier", "diagnosis", "pred_case", "pred_control", "accuracy"]);
    for chunk in read_csv(&section("confusion_3x2")?, &header)?.chunks(3) {
        let mut cm = ConfusionBreakdown::default();
        if chunk.len() != 3 {
            return Err(bad("incomplete 3x2 table"));
        }
        for (i, rec) in chunk.iter().enumerate() {
            let d: Diagnosis = parse_field(&rec[3], "diagnosis")?;
            if d != Diagnosis::ALL[i] || rec[..3] != chunk[0][..3] {
                return Err(bad("3x2 rows out of order"));
            }
            cm.by_diagnosis[i] = [parse_field(&rec[4], "count")?, parse_field(&rec[5], "count")?];
        }
        confusions.push(ConfusionEntry {
            scope: parse_field(&chunk[0][0], "scope")?,
            feature_set: parse_field(&chunk[0][1], "feature_set")?,
            classifier: parse_field(&chunk[0][2], "classifier")?,
            cm,
        });
    }
    let header = strings(&["scope", "feature_set", "classifier", "true_label", "pred_case", "pred_control"]);
    let two = read_csv(&section("confusion_2x2")?, &header)?;
    if two.len() != 2 * confusions.len() {
        return Err(bad("2x2 and 3x2 tables disagree in size"));
    }
    for (c, pair) in confusions.iter().zip(two.chunks(2)) {
        for (row, rec) in c.cm.binary().iter().zip(pair) {
            if [parse_field::<usize>(&rec[4], "count")?, parse_field(&rec[5], "count")?] != *row {
                return Err(bad("2x2 table is not the collapse of the 3x2 table"));
            }
        }
    }

    let header = strings(&[
        "scope",
        "feature_set",
        "classifier",
        "subject_id",
        "fold",
        "true_label",
        "predicted_label",
        "score",
    ]);
    let predictions = read_csv(&section("predictions")?, &header)?
        .into_iter()
        .map(|r| {
            Ok(PredictionRow {
                feature_set: parse_field(&r[1], "feature_set")?,
                classifier: parse_field(&r[2], "classifier")?,
                prediction: FoldPrediction {
                    task: task_of(parse_field(&r[0], "scope")?),
                    subject_id: r[3].clone(),
                    fold: parse_field(&r[4], "fold")?,
                    true_label: parse_field(&r[5], "label")?,
                    predicted_label: parse_field(&r[6], "label")?,
                    score: parse_field(&r[7], "score")?,
                },
            })
        })
        .collect::<Result<_>>()?;
    let header = strings(&["scope", "feature_set", "classifier", "subject_id", "reason"]);
    let skipped = read_csv(&section("skipped")?, &header)?
        .into_iter()
        .map(|r| {
            Ok(SkipRow {
                feature_set: parse_field(&r[1], "feature_set")?,
                classifier: parse_field(&r[2], "classifier")?,
                skipped: SkippedSubject {
                    subject_id: r[3].clone(),
                    task: task_of(parse_field(&r[0], "scope")?),
                    reason: r[4].clone(),
                },
            })
        })
        .collect::<Result<_>>()?;
    let header = strings(&["scope", "feature_set", "classifier", "reason"]);
    let absent = read_csv(&section("absent")?, &header)?
        .into_iter()
        .map(|r| {
            Ok(AbsentCell {
                scope: parse_field(&r[0], "scope")?,
                feature_set: parse_field(&r[1], "feature_set")?,
                classifier: parse_field(&r[2], "classifier")?,
                reason: r[3].clone(),
            })
        })
        .collect::<Result<_>>()?;
    section("chart_data")?;

    Ok(EvalReport {
        schema_version: version,
        primary_averaging,
        tie_break,
        config_echo,
        disclaimers,
        rows,
        confusions,
        predictions,
        skipped,
        absent,
    })
}

pub fn write_report(report: &EvalReport, path: &Path) -> Result<()> {
    fs::write(path, render_report(report)).map_err(|e| Error::io(Module::Evaluation, "write_report", path, e))
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(Module::Evaluation, "read_report", path, e))?;
    parse_report(&text)
}

/// Fixed-width summary of the primary-averaging metrics and fused confusion
/// tables, for terminals.
pub fn render_summary_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "averaging: {}   tie-break: {}", report.primary_averaging, report.tie_break);
    let _ = writeln!(
        out,
        "{:<20} {:<14} {:<19} {:>4} {:>15} {:>15} {:>15} {:>6} {:>6}",
        "scope", "feature_set", "classifier", "n", "precision", "recall", "f1", "sens", "spec"
    );
    for r in &report.rows {
        let m = r.get(report.primary_averaging);
        let pm = |v: f64, s: f64| format!("{v:.3}±{s:.3}");
        let _ = writeln!(
            out,
            "{:<20} {:<14} {:<19} {:>4} {:>15} {:>15} {:>15} {:>6.3} {:>6.3}",
            r.scope.to_string(),
            r.feature_set.to_string(),
            r.classifier.to_string(),
            r.n_predictions,
            pm(m.precision, m.precision_std),
            pm(m.recall, m.recall_std),
            pm(m.f1, m.f1_std),
            m.sensitivity,
            m.specificity,
        );
    }
    for c in report.confusions.iter().filter(|c| c.scope == Scope::Fused) {
        let _ = writeln!(out, "\nfused confusion: {} / {}", c.feature_set, c.classifier);
        let _ = writeln!(out, "{:<10} {:>9} {:>12} {:>9}", "", "pred_case", "pred_control", "accuracy");
        for d in Diagnosis::ALL {
            let [pc, pn] = c.cm.row(d);
            let _ = writeln!(out, "{:<10} {:>9} {:>12} {:>8.1}%", d.to_string(), pc, pn, 100.0 * c.cm.row_accuracy(d));
        }
    }
    if !report.absent.is_empty() {
        let _ = writeln!(out, "\nabsent cells:");
        for a in &report.absent {
            let _ = writeln!(out, "  {} / {} / {}: {}", a.scope, a.feature_set, a.classifier, a.reason);
        }
    }
    out
}
