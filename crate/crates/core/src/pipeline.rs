//! End-to-end stages shared by the command-line tool: feature extraction,
//! the cross-validated experiment grid, fusion and report assembly.
//!
//! Parallel work is collected in input order, so results do not depend on
//! the worker count.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::acoustic::{
    apply_functionals, extract_llds_with, write_feature_matrix, FeatureGrid, FeatureMatrix, FeatureRow, FeatureSetId,
};
use crate::classifiers::ClassifierKind;
use crate::config::RunConfig;
use crate::corpus::{stratified_folds, Corpus, Task, TaskRecording};
use crate::dsp::{detect_speech_with, read_wav};
use crate::error::{Error, Module, Result};
use crate::evaluation::{
    build_report, fuse, run_task_experiment, AbsentCell, EvalReport, ExperimentConfig, ExperimentResult,
    FeatureSource, FusedResult, ReportHeader, Scope, TaskFeatures,
};
use crate::fit::FitTag;
use crate::linguistic::{fit_vocabulary, lexical_stats, vectorize_tfidf, write_vocabulary, LexicalStats};

/// Runs `f` on a pool with `workers` threads (default: available
/// parallelism).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    let pool = b
        .build()
        .map_err(|e| Error::invalid(Module::Config, "thread_pool", "workers", e.to_string()))?;
    Ok(pool.install(f))
}

struct AcousticRow {
    subject_id: String,
    task: Task,
    /// One vector per requested acoustic grid, in grid order.
    vectors: Vec<crate::acoustic::FeatureVector>,
}

fn acoustic_grids(cfg: &RunConfig) -> Result<Vec<FeatureGrid>> {
    let mut grids = Vec::new();
    for fs in &cfg.feature_sets {
        match fs {
            FeatureSetId::EgemapsLike88 => grids.push(FeatureGrid::egemaps_like()),
            FeatureSetId::CompareLike => grids.push(FeatureGrid::compare_like(&cfg.compare)?),
            _ => {}
        }
    }
    Ok(grids)
}

fn acoustic_rows(corpus: &Corpus, cfg: &RunConfig, grids: &[FeatureGrid]) -> Result<Vec<AcousticRow>> {
    if grids.is_empty() {
        return Ok(Vec::new());
    }
    let recs: Vec<&TaskRecording> = corpus
        .recordings()
        .iter()
        .filter(|r| cfg.tasks.contains(&r.task))
        .collect();
    log::info!("extracting acoustic features from {} recordings", recs.len());
    recs.par_iter()
        .map(|r| {
            log::debug!("acoustic features: {}", r.audio_path.display());
            let audio = read_wav(&r.audio_path)?;
            let segs = detect_speech_with(&audio, &cfg.vad);
            let llds = extract_llds_with(&audio, &segs, &cfg.lld);
            Ok(AcousticRow {
                subject_id: r.subject_id.clone(),
                task: r.task,
                vectors: grids.iter().map(|g| apply_functionals(&llds, g)).collect(),
            })
        })
        .collect()
}

/// Per-(task, feature set) inputs for the experiment grid, ordered by
/// feature set and then task as listed in `cfg`.
pub fn task_features(corpus: &Corpus, cfg: &RunConfig) -> Result<Vec<TaskFeatures>> {
    let grids = acoustic_grids(cfg)?;
    let rows = acoustic_rows(corpus, cfg, &grids)?;
    let mut out = Vec::new();
    for &fs in &cfg.feature_sets {
        for &task in &cfg.tasks {
            let mut missing = BTreeMap::new();
            let source = if let Some(gi) = grids.iter().position(|g| g.feature_set_id == fs) {
                FeatureSource::Vectors(
                    rows.iter()
                        .filter(|r| r.task == task)
                        .map(|r| (r.subject_id.clone(), r.vectors[gi].values.clone()))
                        .collect(),
                )
            } else {
                let mut texts = BTreeMap::new();
                let mut vectors = BTreeMap::new();
                for r in corpus.recordings_for_task(task) {
                    match &r.transcript {
                        Some(t) if fs == FeatureSetId::NgramTfidf => {
                            texts.insert(r.subject_id.clone(), t.clone());
                        }
                        Some(t) => {
                            vectors.insert(
                                r.subject_id.clone(),
                                lexical_stats(t, r.duration_s).to_feature_vector().values,
                            );
                        }
                        None => {
                            missing.insert(r.subject_id.clone(), "no transcript".to_string());
                        }
                    }
                }
                if fs == FeatureSetId::NgramTfidf {
                    FeatureSource::Texts(texts)
                } else {
                    FeatureSource::Vectors(vectors)
                }
            };
            out.push(TaskFeatures {
                task,
                feature_set: fs,
                source,
                missing_reasons: missing,
            });
        }
    }
    Ok(out)
}

fn source_len(f: &TaskFeatures) -> usize {
    match &f.source {
        FeatureSource::Vectors(m) => m.len(),
        FeatureSource::Texts(m) => m.len(),
    }
}

/// Runs every (feature set, classifier, task) cell, fuses each
/// (feature set, classifier) pair over tasks and assembles the report.
pub fn train_eval(corpus: &Corpus, cfg: &RunConfig) -> Result<EvalReport> {
    cfg.validate()?;
    with_workers(cfg.workers, || train_eval_inner(corpus, cfg))?
}

fn train_eval_inner(corpus: &Corpus, cfg: &RunConfig) -> Result<EvalReport> {
    let folds = stratified_folds(corpus, cfg.k, cfg.seed)?;
    let features = task_features(corpus, cfg)?;
    let exp_cfg = ExperimentConfig {
        classifier: cfg.classifier.clone(),
        ngram: cfg.ngram.clone(),
        seed: cfg.seed,
    };

    let mut cells: Vec<(&TaskFeatures, ClassifierKind)> = Vec::new();
    for &fs in &cfg.feature_sets {
        for &clf in &cfg.classifiers {
            for f in features.iter().filter(|f| f.feature_set == fs) {
                cells.push((f, clf));
            }
        }
    }
    let outcomes: Vec<Option<ExperimentResult>> = cells
        .par_iter()
        .map(|(f, clf)| {
            if source_len(f) == 0 {
                log::warn!("{}/{}/{clf}: no subject has input, cell left empty", f.task, f.feature_set);
                return Ok(None);
            }
            let e = run_task_experiment(corpus, f, *clf, &folds, &exp_cfg)?;
            log::debug!("{}/{}/{clf}: {} predictions", f.task, f.feature_set, e.predictions.len());
            Ok(Some(e))
        })
        .collect::<Result<_>>()?;

    let mut absent = Vec::new();
    let mut experiments = Vec::new();
    for ((f, clf), outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Some(e) => experiments.push(e),
            None => absent.push(AbsentCell {
                scope: Scope::Task(f.task),
                feature_set: f.feature_set,
                classifier: *clf,
                reason: "no subject has input for this task".to_string(),
            }),
        }
    }

    let mut fused = Vec::new();
    for &fs in &cfg.feature_sets {
        for &clf in &cfg.classifiers {
            let parts: Vec<&ExperimentResult> = experiments
                .iter()
                .filter(|e| e.feature_set == fs && e.classifier == clf)
                .collect();
            if parts.is_empty() {
                absent.push(AbsentCell {
                    scope: Scope::Fused,
                    feature_set: fs,
                    classifier: clf,
                    reason: "no task experiments to fuse".to_string(),
                });
                continue;
            }
            let (predictions, excluded) = fuse(corpus, &parts, cfg.tie_break)?;
            fused.push(FusedResult {
                feature_set: fs,
                classifier: clf,
                predictions,
                excluded,
            });
        }
    }

    let header = ReportHeader {
        config_echo: cfg.echo(),
        averaging: cfg.averaging,
        tie_break: cfg.tie_break,
    };
    build_report(corpus, &experiments, &fused, absent, &header)
}

/// Writes one feature matrix per (task, feature set) into `out_dir` and
/// returns the written paths. N-gram matrices use a vocabulary fitted on
/// all transcripts of the task and are meant for inspection, not for
/// evaluation; the vocabulary is written next to them.
pub fn extract(corpus: &Corpus, cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(Module::Acoustic, "extract", out_dir, e))?;
    let grids = acoustic_grids(cfg)?;
    let rows = with_workers(cfg.workers, || acoustic_rows(corpus, cfg, &grids))??;
    let mut written = Vec::new();
    for &fs in &cfg.feature_sets {
        for &task in &cfg.tasks {
            let path = out_dir.join(format!("{task}_{fs}.csv"));
            let matrix = if let Some(gi) = grids.iter().position(|g| g.feature_set_id == fs) {
                FeatureMatrix {
                    feature_set_id: fs,
                    version: grids[gi].version,
                    names: grids[gi].names(),
                    rows: rows
                        .iter()
                        .filter(|r| r.task == task)
                        .map(|r| FeatureRow {
                            subject_id: r.subject_id.clone(),
                            task,
                            empty_speech: r.vectors[gi].empty_speech,
                            values: r.vectors[gi].values.clone(),
                        })
                        .collect(),
                }
            } else {
                let recs: Vec<&TaskRecording> = corpus
                    .recordings_for_task(task)
                    .filter(|r| r.transcript.is_some())
                    .collect();
                let text = |r: &TaskRecording| r.transcript.clone().unwrap_or_default();
                if fs == FeatureSetId::Lexical {
                    FeatureMatrix {
                        feature_set_id: fs,
                        version: 1,
                        names: LexicalStats::feature_names(),
                        rows: recs
                            .iter()
                            .map(|r| FeatureRow {
                                subject_id: r.subject_id.clone(),
                                task,
                                empty_speech: false,
                                values: lexical_stats(&text(r), r.duration_s).to_feature_vector().values,
                            })
                            .collect(),
                    }
                } else {
                    if recs.is_empty() {
                        continue;
                    }
                    let docs: Vec<String> = recs.iter().map(|r| text(r)).collect();
                    let vocab = fit_vocabulary(&docs, &cfg.ngram)?
                        .with_fit_tag(FitTag::new(format!("{task} all subjects"), recs.iter().map(|r| r.subject_id.clone())));
                    let vocab_path = out_dir.join(format!("{task}_{fs}.vocab"));
                    write_vocabulary(&vocab_path, &vocab)?;
                    written.push(vocab_path);
                    FeatureMatrix {
                        feature_set_id: fs,
                        version: 1,
                        names: vocab.ngrams().map(String::from).collect(),
                        rows: recs
                            .iter()
                            .zip(&docs)
                            .map(|(r, d)| FeatureRow {
                                subject_id: r.subject_id.clone(),
                                task,
                                empty_speech: false,
                                values: vectorize_tfidf(d, &vocab).values,
                            })
                            .collect(),
                    }
                }
            };
            write_feature_matrix(&path, &matrix)?;
            written.push(path);
        }
    }
    Ok(written)
}
