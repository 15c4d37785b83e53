use std::collections::BTreeMap;

use cognopipe::acoustic::FeatureSetId;
use cognopipe::classifiers::ClassifierKind;
use cognopipe::corpus::{
    stratified_folds, BinaryLabel, Corpus, Diagnosis, FoldAssignment, Gender, SubjectRecord, Task, TaskRecording,
};
use cognopipe::evaluation::*;
use cognopipe::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus(n_dementia: usize, n_mci: usize, n_hc: usize) -> Corpus {
    let mut subjects = Vec::new();
    let mut recordings = Vec::new();
    let diags = [vec![Diagnosis::Dementia; n_dementia], vec![Diagnosis::Mci; n_mci], vec![Diagnosis::Hc; n_hc]].concat();
    for (i, d) in diags.into_iter().enumerate() {
        let id = format!("P{i:03}");
        subjects.push(SubjectRecord {
            subject_id: id.clone(),
            age: Some(70),
            gender: Gender::F,
            ethnicity: None,
            diagnosis: d,
            questionnaire_scores: Default::default(),
        });
        for task in Task::ALL {
            recordings.push(TaskRecording {
                subject_id: id.clone(),
                task,
                audio_path: format!("{id}_{task}.wav").into(),
                transcript_path: None,
                transcript: None,
                duration_s: 1.0,
                sample_rate_hz: 16000,
            });
        }
    }
    Corpus::new(subjects, recordings).unwrap()
}

/// Features whose first coordinate carries `signal` times the class sign.
fn vectors(corpus: &Corpus, task: Task, fs: FeatureSetId, signal: f64, seed: u64) -> TaskFeatures {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let map: BTreeMap<String, Vec<f64>> = corpus
        .subjects()
        .iter()
        .map(|s| {
            let mut v: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            v[0] += signal * s.label().sign();
            (s.subject_id.clone(), v)
        })
        .collect();
    TaskFeatures {
        task,
        feature_set: fs,
        source: FeatureSource::Vectors(map),
        missing_reasons: BTreeMap::new(),
    }
}

fn pred(subject: &str, task: Option<Task>, fold: usize, truth: BinaryLabel, label: BinaryLabel, score: f64) -> FoldPrediction {
    FoldPrediction {
        subject_id: subject.into(),
        task,
        fold,
        true_label: truth,
        predicted_label: label,
        score,
    }
}

// ---------- fusion ----------

/// Brute-force reference for the fusion rule.
fn oracle(votes: &[(bool, f64)], tie: TieBreak) -> bool {
    let mut case_votes = 0;
    let mut control_votes = 0;
    let mut total = 0.0;
    for &(is_case, s) in votes {
        if is_case {
            case_votes += 1;
        } else {
            control_votes += 1;
        }
        total += s;
    }
    if case_votes != control_votes {
        return case_votes > control_votes;
    }
    match tie {
        TieBreak::AlwaysCase => true,
        TieBreak::AlwaysControl => false,
        TieBreak::ScoreSum => total >= 0.0,
    }
}

#[test]
fn majority_vote_matches_enumeration_oracle() {
    let case_scores = [[0.9, 0.1, 0.4, 0.2], [0.05, 0.1, 0.02, 0.3]];
    let control_scores = [[-0.2, -0.3, -0.05, -0.6], [-0.9, -0.8, -0.7, -0.6]];
    let mut tie_branches = [0usize; 2];
    for magnitudes in 0..2 {
        for pattern in 0..81u32 {
            let mut votes = Vec::new();
            let mut preds = Vec::new();
            let mut p = pattern;
            for t in 0..4 {
                let state = p % 3;
                p /= 3;
                let (label, score) = match state {
                    0 => continue,
                    1 => (BinaryLabel::Case, case_scores[magnitudes][t]),
                    _ => (BinaryLabel::Control, control_scores[magnitudes][t]),
                };
                votes.push((label.is_case(), score));
                preds.push(pred("s", Some(Task::ALL[t]), 0, BinaryLabel::Case, label, score));
            }
            for tie in [TieBreak::ScoreSum, TieBreak::AlwaysCase, TieBreak::AlwaysControl] {
                let got = majority_vote(&preds, tie);
                if preds.is_empty() {
                    assert!(got.is_err());
                    continue;
                }
                let got = got.unwrap();
                assert_eq!(got.predicted_label.is_case(), oracle(&votes, tie), "pattern {pattern} {tie}");
                let n = votes.len();
                let same = votes.iter().filter(|v| v.0 == got.predicted_label.is_case()).count();
                let is_tie = 2 * votes.iter().filter(|v| v.0).count() == n;
                assert!(same >= n.div_ceil(2) || is_tie);
                if is_tie && tie == TieBreak::ScoreSum {
                    tie_branches[usize::from(got.predicted_label.is_case())] += 1;
                }
            }
        }
    }
    assert!(tie_branches[0] > 0 && tie_branches[1] > 0, "{tie_branches:?}");
}

#[test]
fn fuse_reports_subjects_without_predictions() {
    let c = corpus(1, 1, 4);
    let folds = stratified_folds(&c, 2, 0).unwrap();
    let mut f = vectors(&c, Task::ShortTerm, FeatureSetId::Lexical, 3.0, 1);
    let FeatureSource::Vectors(m) = &mut f.source else { unreachable!() };
    m.remove("P005");
    f.missing_reasons.insert("P005".into(), "no transcript".into());
    let e = run_task_experiment(&c, &f, ClassifierKind::LogisticRegression, &folds, &Default::default()).unwrap();
    assert_eq!(e.skipped.len(), 1);
    assert_eq!(e.skipped[0].reason, "no transcript");
    let (fused, excluded) = fuse(&c, &[&e], TieBreak::ScoreSum).unwrap();
    assert_eq!(fused.len(), 5);
    assert_eq!(excluded.len(), 1);
    assert_eq!(excluded[0].subject_id, "P005");
}

// ---------- experiments ----------

#[test]
fn separable_features_fit_every_training_split() {
    let c = corpus(2, 8, 10);
    let folds = stratified_folds(&c, 5, 3).unwrap();
    let f = vectors(&c, Task::SemanticFluency, FeatureSetId::EgemapsLike88, 5.0, 2);
    for kind in ClassifierKind::ALL {
        let e = run_task_experiment(&c, &f, kind, &folds, &Default::default()).unwrap();
        assert_eq!(e.folds.len(), 5);
        for s in &e.folds {
            assert_eq!(s.train_accuracy, 1.0, "{kind} fold {}", s.fold);
        }
    }
}

#[test]
fn full_corpus_gets_one_prediction_per_subject() {
    let c = corpus(12, 51, 63);
    let folds = stratified_folds(&c, 5, 7).unwrap();
    let f = vectors(&c, Task::PictureDescription, FeatureSetId::CompareLike, 0.5, 4);
    let e = run_task_experiment(&c, &f, ClassifierKind::LinearSvm, &folds, &Default::default()).unwrap();
    assert_eq!(e.predictions.len(), 126);
    let mut ids: Vec<&str> = e.predictions.iter().map(|p| p.subject_id.as_str()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 126);
    for p in &e.predictions {
        assert_eq!(folds.fold_of(&p.subject_id), Some(p.fold));
    }
    let again = run_task_experiment(&c, &f, ClassifierKind::LinearSvm, &folds, &Default::default()).unwrap();
    assert_eq!(e, again);
}

#[test]
fn single_class_training_fold_is_a_hard_error() {
    let c = corpus(0, 2, 2);
    // Fold 0 holds out both Case subjects.
    let folds = FoldAssignment {
        k: 2,
        fold_of_subject: [("P000", 0), ("P001", 0), ("P002", 1), ("P003", 1)]
            .into_iter()
            .map(|(s, f)| (s.to_string(), f))
            .collect(),
    };
    let f = vectors(&c, Task::ShortTerm, FeatureSetId::Lexical, 1.0, 0);
    let err = run_task_experiment(&c, &f, ClassifierKind::LogisticRegression, &folds, &Default::default()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("fold 0") && msg.contains("single-class"), "{msg}");
}

#[test]
fn text_features_fit_vocabulary_per_fold() {
    let c = corpus(2, 3, 5);
    let folds = stratified_folds(&c, 5, 0).unwrap();
    let texts: BTreeMap<String, String> = c
        .subjects()
        .iter()
        .map(|s| {
            let t = if s.label().is_case() { "um the thing um what" } else { "the dog ran clearly home" };
            (s.subject_id.clone(), format!("{t} {}", s.subject_id.to_lowercase()))
        })
        .collect();
    let f = TaskFeatures {
        task: Task::LongTerm,
        feature_set: FeatureSetId::NgramTfidf,
        source: FeatureSource::Texts(texts),
        missing_reasons: BTreeMap::new(),
    };
    let e = run_task_experiment(&c, &f, ClassifierKind::LogisticRegression, &folds, &Default::default()).unwrap();
    assert_eq!(e.predictions.len(), 10);
    assert!(e.predictions.iter().all(|p| p.predicted_label == p.true_label));
}

#[test]
fn fitted_artifacts_refuse_held_out_subjects() {
    let vocab = cognopipe::linguistic::fit_vocabulary(&["a b", "a c"], &Default::default())
        .unwrap()
        .with_fit_tag(cognopipe::FitTag::new("fold 1", ["s1", "s2"]));
    let err = cognopipe::linguistic::vectorize_heldout("a b", "s2", &vocab).unwrap_err();
    assert!(matches!(err, Error::Leakage { .. }));
}

// ---------- confusion and metrics ----------

#[test]
fn confusion_tables() {
    let c = corpus(1, 1, 2);
    let labels = [BinaryLabel::Case, BinaryLabel::Case, BinaryLabel::Control, BinaryLabel::Control];
    let preds: Vec<FoldPrediction> = c
        .subjects()
        .iter()
        .zip(labels)
        .map(|(s, l)| pred(&s.subject_id, None, 0, s.label(), l, 0.0))
        .collect();
    let cm = confusion(&preds, &c).unwrap();
    assert_eq!(cm.binary(), [[2, 0], [0, 2]]);
    assert_eq!(cm.row(Diagnosis::Dementia), [1, 0]);
    let mut bad = preds.clone();
    bad[0].subject_id = "nobody".into();
    assert!(confusion(&bad, &c).is_err());
}

#[test]
fn cohort_scale_rates() {
    let cm = ConfusionBreakdown {
        by_diagnosis: [[10, 2], [41, 10], [5, 58]],
    };
    let m = metrics(&cm, &[], Averaging::Binary);
    assert!((m.sensitivity - 0.8095).abs() < 1e-3);
    assert!((m.specificity - 0.9206).abs() < 1e-3);
    assert!((100.0 * cm.row_accuracy(Diagnosis::Hc) - 92.1).abs() < 0.05);
    assert!((100.0 * cm.row_accuracy(Diagnosis::Dementia) - 83.3).abs() < 0.05);
}

#[test]
fn f1_from_near_equal_rates() {
    // TP=189, FP=27, FN=28 gives precision 0.875 and recall 27/31.
    let cm = ConfusionBreakdown {
        by_diagnosis: [[189, 28], [0, 0], [27, 100]],
    };
    let m = metrics(&cm, &[], Averaging::Binary);
    assert!((m.precision - 0.875).abs() < 1e-12);
    assert!((m.recall - 0.871).abs() < 5e-4);
    assert!((m.f1 - 0.873).abs() < 5e-4);
}

#[test]
fn perfect_predictions() {
    let preds: Vec<FoldPrediction> = (0..10)
        .map(|i| {
            let l = if i % 2 == 0 { BinaryLabel::Case } else { BinaryLabel::Control };
            pred(&format!("s{i}"), None, i % 5, l, l, 0.0)
        })
        .collect();
    for a in Averaging::ALL {
        let m = metrics_from_predictions(&preds, a);
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert_eq!(m.f1_std, 0.0);
    }
}

fn random_preds(seed: u64, n: usize) -> Vec<FoldPrediction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let t = if rng.gen_bool(0.5) { BinaryLabel::Case } else { BinaryLabel::Control };
            let p = if rng.gen_bool(0.5) { BinaryLabel::Case } else { BinaryLabel::Control };
            pred(&format!("s{i}"), None, rng.gen_range(0..5), t, p, 0.0)
        })
        .collect()
}

/// Independent recount for one positive class.
fn naive(preds: &[FoldPrediction], positive: BinaryLabel) -> (f64, f64, f64, usize) {
    let tp = preds.iter().filter(|p| p.true_label == positive && p.predicted_label == positive).count() as f64;
    let pp = preds.iter().filter(|p| p.predicted_label == positive).count() as f64;
    let ap = preds.iter().filter(|p| p.true_label == positive).count();
    let prec = if pp > 0.0 { tp / pp } else { 0.0 };
    let rec = if ap > 0 { tp / ap as f64 } else { 0.0 };
    let f1 = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
    (prec, rec, f1, ap)
}

#[test]
fn metrics_match_naive_recount() {
    for seed in 0..5 {
        let preds = random_preds(seed, 200);
        let (p1, r1, f1, n1) = naive(&preds, BinaryLabel::Case);
        let (p0, r0, f0, n0) = naive(&preds, BinaryLabel::Control);
        let b = metrics_from_predictions(&preds, Averaging::Binary);
        assert!((b.precision - p1).abs() < 1e-12 && (b.recall - r1).abs() < 1e-12 && (b.f1 - f1).abs() < 1e-12);
        assert!((b.f1 - 2.0 * b.precision * b.recall / (b.precision + b.recall)).abs() < 1e-12);
        let m = metrics_from_predictions(&preds, Averaging::Macro);
        assert!((m.precision - (p1 + p0) / 2.0).abs() < 1e-12 && (m.f1 - (f1 + f0) / 2.0).abs() < 1e-12);
        let w = metrics_from_predictions(&preds, Averaging::Weighted);
        let (w1, w0) = (n1 as f64 / 200.0, n0 as f64 / 200.0);
        assert!((w.recall - (w1 * r1 + w0 * r0)).abs() < 1e-12);

        let per_fold: Vec<f64> = (0..5)
            .map(|f| {
                let sub: Vec<FoldPrediction> = preds.iter().filter(|p| p.fold == f).cloned().collect();
                naive(&sub, BinaryLabel::Case).2
            })
            .collect();
        let mean = per_fold.iter().sum::<f64>() / 5.0;
        let std = (per_fold.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
        assert!((b.f1_std - std).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn metrics_are_permutation_invariant(seed in 0u64..500, shuffle_seed in 0u64..500) {
        use rand::seq::SliceRandom;
        let preds = random_preds(seed, 60);
        let mut shuffled = preds.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        for a in Averaging::ALL {
            prop_assert_eq!(metrics_from_predictions(&preds, a), metrics_from_predictions(&shuffled, a));
        }
    }

    #[test]
    fn two_by_two_is_row_collapse(counts in proptest::array::uniform6(0usize..50)) {
        let cm = ConfusionBreakdown { by_diagnosis: [[counts[0], counts[1]], [counts[2], counts[3]], [counts[4], counts[5]]] };
        let b = cm.binary();
        prop_assert_eq!(b[0], [counts[0] + counts[2], counts[1] + counts[3]]);
        prop_assert_eq!(b[1], [counts[4], counts[5]]);
        prop_assert_eq!(b.iter().flatten().sum::<usize>(), cm.total());
    }
}

// ---------- report ----------

fn header() -> ReportHeader {
    ReportHeader {
        config_echo: "k = 5\nseed = 0\n[vad]\nthreshold_db = 10.0\n".into(),
        averaging: Averaging::Binary,
        tie_break: TieBreak::ScoreSum,
    }
}

fn grid(c: &Corpus, feature_sets: &[FeatureSetId], tasks: &[Task]) -> (Vec<ExperimentResult>, Vec<FusedResult>) {
    let folds = stratified_folds(c, 5, 0).unwrap();
    let mut experiments = Vec::new();
    let mut fused = Vec::new();
    for (i, &fs) in feature_sets.iter().enumerate() {
        for clf in ClassifierKind::ALL {
            let start = experiments.len();
            for (j, &t) in tasks.iter().enumerate() {
                let f = vectors(c, t, fs, 0.8, (10 * i + j) as u64);
                experiments.push(run_task_experiment(c, &f, clf, &folds, &Default::default()).unwrap());
            }
            let parts: Vec<&ExperimentResult> = experiments[start..].iter().collect();
            let (predictions, excluded) = fuse(c, &parts, TieBreak::ScoreSum).unwrap();
            fused.push(FusedResult {
                feature_set: fs,
                classifier: clf,
                predictions,
                excluded,
            });
        }
    }
    (experiments, fused)
}

#[test]
fn single_cell_report_has_one_summary_row() {
    let c = corpus(2, 4, 6);
    let folds = stratified_folds(&c, 5, 0).unwrap();
    let f = vectors(&c, Task::ShortTerm, FeatureSetId::Lexical, 1.0, 0);
    let e = run_task_experiment(&c, &f, ClassifierKind::LogisticRegression, &folds, &Default::default()).unwrap();
    let r = build_report(&c, &[e], &[], vec![], &header()).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.rows[0].n_predictions, 12);
}

#[test]
fn full_grid_row_counts_and_round_trip() {
    let c = corpus(3, 7, 10);
    let (experiments, fused) = grid(&c, &[FeatureSetId::EgemapsLike88, FeatureSetId::CompareLike], &Task::ALL);
    let absent = vec![AbsentCell {
        scope: Scope::Fused,
        feature_set: FeatureSetId::Lexical,
        classifier: ClassifierKind::LinearSvm,
        reason: "no task experiments, to fuse".into(),
    }];
    let r = build_report(&c, &experiments, &fused, absent, &header()).unwrap();
    let task_rows = r.rows.iter().filter(|r| r.scope != Scope::Fused).count();
    let fused_rows = r.rows.len() - task_rows;
    assert_eq!((task_rows, fused_rows), (16, 4));
    for row in &r.rows {
        let m = row.get(Averaging::Binary);
        for v in [m.precision, m.recall, m.f1, m.sensitivity, m.specificity] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
    let text = render_report(&r);
    let back = parse_report(&text).unwrap();
    assert_eq!(back, r);
    assert_eq!(render_report(&back), text);
    assert!(text.contains("=== chart_data ==="));
    assert!(render_summary_table(&r).contains("Fused"));

    let (e2, f2) = grid(&c, &[FeatureSetId::EgemapsLike88, FeatureSetId::CompareLike], &Task::ALL);
    let r2 = build_report(&c, &e2, &f2, r.absent.clone(), &header()).unwrap();
    assert_eq!(render_report(&r2), text);
}

#[test]
fn malformed_reports_are_rejected() {
    let c = corpus(2, 4, 6);
    let (e, f) = grid(&c, &[FeatureSetId::Lexical], &[Task::ShortTerm, Task::LongTerm]);
    let text = render_report(&build_report(&c, &e, &f, vec![], &header()).unwrap());
    assert!(parse_report("").is_err());
    assert!(parse_report(&text.replacen("schema=1", "schema=9", 1)).is_err());
    assert!(parse_report(&text.replace("=== skipped ===\n", "")).is_err());
    let tampered = text.replacen("Fused,Lexical,LogisticRegression,Case,", "Fused,Lexical,LogisticRegression,Case,99", 1);
    assert!(parse_report(&tampered).is_err());
}
