use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cognopipe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cognopipe"))
        .current_dir(dir)
        .args(args)
        .env_remove("COGNOPIPE_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, spec: &str) {
    fs::write(dir.join("spec.toml"), spec).unwrap();
    let o = cognopipe(dir, &["synth", "spec.toml", "--out", "corpus"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn no_stage_left(dir: &Path) {
    for e in fs::read_dir(dir).unwrap() {
        let name = e.unwrap().file_name();
        assert!(!name.to_string_lossy().starts_with(".cognopipe-stage"), "{name:?}");
    }
}

#[test]
fn validate_reports_zero_errors() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "n_case = 1\nn_control = 1\nduration_s = 1.0\n");
    let o = cognopipe(dir.path(), &["validate", "--manifest", "corpus"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0 errors");
}

#[test]
fn validate_lists_sorted_diagnostics_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "n_case = 2\nn_control = 2\nduration_s = 1.0\n");
    let corpus = dir.path().join("corpus");
    let subjects = fs::read_to_string(corpus.join("subjects.csv")).unwrap();
    fs::write(corpus.join("subjects.csv"), format!("{subjects}X9,old,F,,HC\n")).unwrap();
    let rec = fs::read_to_string(corpus.join("recordings.csv")).unwrap();
    fs::write(corpus.join("recordings.csv"), format!("{rec}Y1,ShortTerm,audio/y.wav,\n")).unwrap();
    let o = cognopipe(dir.path(), &["validate", "--manifest", "corpus"]);
    assert!(!o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.last(), Some(&"2 errors"));
    assert!(lines[0].contains("recordings.csv") && lines[0].contains("unknown subject 'Y1'"), "{out}");
    assert!(lines[1].contains("subjects.csv") && lines[1].contains("invalid age 'old'"), "{out}");
}

#[test]
fn train_eval_writes_report_and_report_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    synth(
        dir.path(),
        "n_case = 5\nn_control = 5\nseed = 3\nduration_s = 2.0\nacoustic_separation = 3.0\nlinguistic_separation = 3.0\n",
    );
    fs::write(dir.path().join("run.toml"), "manifest = \"corpus\"\nk = 5\nseed = 9\nfeature_sets = [\"Lexical\"]\n").unwrap();
    let o = cognopipe(
        dir.path(),
        &["train-eval", "--config", "run.toml", "--k", "2", "--classifiers", "svm", "--tasks", "ShortTerm,LongTerm", "--out", "res"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("res/report.txt")).unwrap();
    assert!(text.contains("k = 2") && text.contains("seed = 9"), "flags and file merge into the echo");
    let report = cognopipe::evaluation::parse_report(&text).unwrap();
    assert_eq!(report.rows.len(), 3);
    no_stage_left(dir.path());

    let o = cognopipe(dir.path(), &["report", "res"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("LinearSvm"));
}

#[test]
fn failed_run_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "n_case = 2\nn_control = 2\nduration_s = 1.0\n");
    let o = cognopipe(dir.path(), &["train-eval", "--manifest", "corpus", "--k", "3", "--out", "res"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("corpus::stratified_folds") && err.contains("Case"), "{err}");
    assert!(!dir.path().join("res").exists());
    no_stage_left(dir.path());

    let o = cognopipe(dir.path(), &["train-eval", "--manifest", "corpus", "--features", "nope"]);
    assert!(!o.status.success());
    let o = cognopipe(dir.path(), &["train-eval", "--manifest", "corpus", "--workers", "0"]);
    assert!(stderr(&o).contains("config::validate_config: workers"));
}

#[test]
fn summarize_prints_and_writes_diagnosis_counts() {
    let dir = tempfile::tempdir().unwrap();
    synth(
        dir.path(),
        "n_case = 63\nn_control = 63\ndementia_fraction = 0.19\nduration_s = 1.0\ntasks = [\"ShortTerm\"]\n",
    );
    let o = cognopipe(dir.path(), &["summarize", "--manifest", "corpus", "--out", "res"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(fs::read_to_string(dir.path().join("res/corpus_stats.txt")).unwrap(), out);
    let count = |group: &str| -> usize {
        let line = out.lines().find(|l| l.split_whitespace().nth(1) == Some(group)).unwrap();
        line.split_whitespace().nth(2).unwrap().parse().unwrap()
    };
    assert_eq!((count("Dementia"), count("MCI"), count("HC"), count("All")), (12, 51, 63, 126));
}

#[test]
fn extract_writes_matrices() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "n_case = 2\nn_control = 2\nduration_s = 1.0\n");
    let o = cognopipe(
        dir.path(),
        &["extract", "--manifest", "corpus", "--tasks", "ShortTerm", "--features", "egemaps,ngram", "--out", "feat"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(dir.path().join("feat"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["ShortTerm_EgemapsLike88.csv", "ShortTerm_NgramTfidf.csv", "ShortTerm_NgramTfidf.vocab"]);
}

#[test]
fn log_level_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "n_case = 1\nn_control = 1\nduration_s = 1.0\n");
    let o = Command::new(env!("CARGO_BIN_EXE_cognopipe"))
        .current_dir(dir.path())
        .args(["validate", "--manifest", "corpus"])
        .env("COGNOPIPE_LOG", "info")
        .output()
        .unwrap();
    assert!(stderr(&o).contains("2 subjects, 8 recordings"));
}
