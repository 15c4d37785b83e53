use std::fs;
use std::path::Path;

use cognopipe::corpus::*;
use cognopipe::dsp::write_wav;
use proptest::prelude::*;

fn tone(seconds: f64) -> Vec<f64> {
    (0..(16000.0 * seconds) as usize)
        .map(|i| 0.3 * (2.0 * std::f64::consts::PI * 150.0 * i as f64 / 16000.0).sin())
        .collect()
}

/// Two subjects, four tasks each; the first lacks a transcript for one task.
fn write_small(dir: &Path) {
    fs::create_dir_all(dir.join("a")).unwrap();
    fs::write(
        dir.join("subjects.csv"),
        "subject_id,age,gender,ethnicity,diagnosis,MoCA\nA1,71,F,,MCI,24\nB2,,M,X,HC,\n",
    )
    .unwrap();
    let mut rec = String::from("subject_id,task,audio_path,transcript_path\n");
    for (s, secs) in [("A1", 1.0), ("B2", 2.0)] {
        for t in Task::ALL {
            let wav = format!("a/{s}_{t}.wav");
            write_wav(dir.join(&wav), &tone(secs), 16000).unwrap();
            let tr = if s == "A1" && t == Task::LongTerm {
                String::new()
            } else {
                let p = format!("a/{s}_{t}.txt");
                fs::write(dir.join(&p), "the cat sat").unwrap();
                p
            };
            rec.push_str(&format!("{s},{t},{wav},{tr}\n"));
        }
    }
    fs::write(dir.join("recordings.csv"), rec).unwrap();
}

#[test]
fn small_manifest_loads() {
    let dir = tempfile::tempdir().unwrap();
    write_small(dir.path());
    let c = load_manifest(dir.path()).unwrap();
    assert_eq!(c.subjects().len(), 2);
    assert_eq!(c.recordings().len(), 8);
    let a = c.subject("A1").unwrap();
    assert_eq!((a.age, a.diagnosis, a.label()), (Some(71), Diagnosis::Mci, BinaryLabel::Case));
    assert_eq!(a.questionnaire_scores.get("MoCA"), Some(&24));
    let b = c.subject("B2").unwrap();
    assert_eq!((b.age, b.label()), (None, BinaryLabel::Control));
    assert!(b.questionnaire_scores.is_empty());
    assert!(c.recording("A1", Task::LongTerm).unwrap().transcript.is_none());
    assert_eq!(c.recording("A1", Task::ShortTerm).unwrap().transcript.as_deref(), Some("the cat sat"));
    assert!((c.recording("B2", Task::ShortTerm).unwrap().duration_s - 2.0).abs() < 1e-9);

    let same = load_manifest(dir.path().join("recordings.csv")).unwrap();
    assert_eq!(same, c);
}

#[test]
fn written_manifest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    write_small(dir.path());
    let c = load_manifest(dir.path()).unwrap();
    let out = dir.path().join("copy");
    write_manifest(&c, &out).unwrap();
    assert_eq!(load_manifest(&out).unwrap(), c);
}

#[test]
fn every_problem_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    write_small(dir.path());
    let subjects = fs::read_to_string(dir.path().join("subjects.csv")).unwrap();
    fs::write(
        dir.path().join("subjects.csv"),
        format!("{subjects}C3,abc,F,,HC,\nD4,60,Q,,HC,\nE5,60,F,,Sick,\nA1,1,F,,HC,\n"),
    )
    .unwrap();
    let rec = fs::read_to_string(dir.path().join("recordings.csv")).unwrap();
    fs::write(
        dir.path().join("recordings.csv"),
        format!("{rec}ZZ,ShortTerm,a/x.wav,\nB2,Dance,a/x.wav,\nB2,ShortTerm,a/B2_ShortTerm.wav,\n"),
    )
    .unwrap();
    let (corpus, diags) = validate_manifest(dir.path());
    assert!(corpus.is_none());
    let text: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
    let joined = text.join("\n");
    for needle in [
        "invalid age 'abc'",
        "unknown gender 'Q'",
        "unknown diagnosis 'Sick'",
        "duplicate subject_id 'A1'",
        "unknown subject 'ZZ'",
        "unknown task 'Dance'",
        "duplicate recording for (B2, ShortTerm)",
    ] {
        assert!(joined.contains(needle), "missing {needle:?} in\n{joined}");
    }
    let mut sorted = diags.clone();
    sorted.sort();
    assert_eq!(sorted, diags);
    assert!(matches!(load_manifest(dir.path()), Err(cognopipe::Error::Manifest(_))));
}

#[test]
fn missing_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    write_small(dir.path());
    fs::remove_file(dir.path().join("a/B2_ShortTerm.wav")).unwrap();
    fs::remove_file(dir.path().join("a/B2_LongTerm.txt")).unwrap();
    let (_, diags) = validate_manifest(dir.path());
    let joined: Vec<String> = diags.iter().map(|d| d.message.clone()).collect();
    assert_eq!(diags.len(), 2, "{joined:?}");
    assert!(joined.iter().any(|m| m.starts_with("missing audio file")));
    assert!(joined.iter().any(|m| m.starts_with("missing transcript file")));

    let empty = tempfile::tempdir().unwrap();
    let (_, diags) = validate_manifest(empty.path());
    assert_eq!(diags.len(), 2);
    assert!(diags.iter().all(|d| d.row == 0));
}

fn synthetic(n_dementia: usize, n_mci: usize, n_hc: usize) -> Corpus {
    let mut subjects = Vec::new();
    let mut recordings = Vec::new();
    let mut i = 0;
    for (d, n) in [(Diagnosis::Dementia, n_dementia), (Diagnosis::Mci, n_mci), (Diagnosis::Hc, n_hc)] {
        for _ in 0..n {
            let id = format!("S{i:03}");
            subjects.push(SubjectRecord {
                subject_id: id.clone(),
                age: Some(60 + (i % 30) as u32),
                gender: if i % 2 == 0 { Gender::F } else { Gender::M },
                ethnicity: None,
                diagnosis: d,
                questionnaire_scores: Default::default(),
            });
            recordings.push(TaskRecording {
                subject_id: id,
                task: Task::ShortTerm,
                audio_path: "x.wav".into(),
                transcript_path: None,
                transcript: None,
                duration_s: 1.0 + i as f64,
                sample_rate_hz: 16000,
            });
            i += 1;
        }
    }
    Corpus::new(subjects, recordings).unwrap()
}

#[test]
fn folds_of_full_cohort() {
    let c = synthetic(12, 51, 63);
    let f = stratified_folds(&c, 5, 0).unwrap();
    let mut sizes = f.fold_sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    assert_eq!(sizes, vec![26, 25, 25, 25, 25]);
    for (case, control) in f.class_counts(&c) {
        assert!((12..=13).contains(&case) && (12..=13).contains(&control));
    }
    for fold in 0..5 {
        let test = f.test_subjects(fold);
        let train = f.train_subjects(fold);
        assert!(test.is_disjoint(&train));
        assert_eq!(test.len() + train.len(), 126);
    }
    assert_eq!(f, stratified_folds(&c, 5, 0).unwrap());
    assert_ne!(f, stratified_folds(&c, 5, 1).unwrap());
}

#[test]
fn too_few_subjects_per_class() {
    let c = synthetic(1, 2, 10);
    let e = stratified_folds(&c, 5, 0).unwrap_err().to_string();
    assert!(e.contains("stratified_folds") && e.contains("Case"), "{e}");
    assert!(stratified_folds(&c, 1, 0).is_err());
}

proptest! {
    #[test]
    fn folds_are_balanced(n_case in 2usize..30, n_control in 2usize..30, k in 2usize..6, seed in 0u64..100) {
        prop_assume!(n_case >= k && n_control >= k);
        let c = synthetic(0, n_case, n_control);
        let f = stratified_folds(&c, k, seed).unwrap();
        let sizes = f.fold_sizes();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n_case + n_control);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for (case, control) in f.class_counts(&c) {
            prop_assert!(case >= n_case / k && case <= n_case.div_ceil(k));
            prop_assert!(control >= n_control / k && control <= n_control.div_ceil(k));
        }
    }

    #[test]
    fn summary_ignores_order(values in proptest::collection::vec(-1e3f64..1e3, 1..40), seed in 0u64..50) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut shuffled = values.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(Summary::of(&values), Summary::of(&shuffled));
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let s = Summary::of(&values);
        prop_assert!((s.mean.unwrap() - mean).abs() < 1e-9);
        prop_assert!((s.std.unwrap() - std).abs() < 1e-9);
    }
}

#[test]
fn summary_rows_by_diagnosis() {
    let c = synthetic(2, 3, 4);
    let snr: Vec<f64> = (0..9).map(|i| i as f64).collect();
    let stats = summarize_with_snr(&c, &snr);
    assert_eq!(stats.rows.len(), 4);
    let all = stats.row(Group::All).unwrap();
    assert_eq!(all.subjects, 9);
    assert_eq!(all.male + all.female + all.undisclosed_gender, 9);
    let dem = stats.row(Group::Diagnosis(Diagnosis::Dementia)).unwrap();
    assert_eq!(dem.subjects, 2);
    let short = &dem.tasks[0];
    assert_eq!(short.task, Task::ShortTerm);
    assert_eq!(short.snr_db.mean, Some(0.5));
    assert_eq!(short.duration_s.std, Some(0.5));
    assert_eq!(dem.tasks[1].duration_s.count, 0);
    assert!(stats.render().contains("Dementia"));
    assert_eq!(Summary::of(&[]).mean, None);
}

#[test]
fn summarize_reads_audio() {
    let dir = tempfile::tempdir().unwrap();
    write_small(dir.path());
    let c = load_manifest(dir.path()).unwrap();
    let stats = summarize(&c).unwrap();
    let all = stats.row(Group::All).unwrap();
    assert_eq!(all.tasks[0].duration_s.count, 2);
    assert!((all.tasks[0].duration_s.mean.unwrap() - 1.5).abs() < 1e-9);
}
