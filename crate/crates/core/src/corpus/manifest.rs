//! Manifest reading, validation and writing.
//!
//! A manifest is a directory holding `subjects.csv` and `recordings.csv`
//! (or the path of a `recordings.csv` with `subjects.csv` beside it).
//! Relative audio and transcript paths resolve against that directory.
//! Columns of `subjects.csv` beyond the five required ones are integer
//! questionnaire scores; an empty cell means "not recorded".

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use super::types::{Corpus, Diagnosis, Gender, SubjectRecord, Task, TaskRecording};
use crate::dsp::read_wav_info;
use crate::error::{Diagnostic, Error, Module, Result};

pub const SUBJECTS_FILE: &str = "subjects.csv";
pub const RECORDINGS_FILE: &str = "recordings.csv";

const SUBJECT_COLUMNS: [&str; 5] = ["subject_id", "age", "gender", "ethnicity", "diagnosis"];
const RECORDING_COLUMNS: [&str; 4] = ["subject_id", "task", "audio_path", "transcript_path"];

/// Resolves a manifest path to (directory, subjects table, recordings table).
pub fn manifest_paths(path: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let dir = if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    };
    let dir = if dir.as_os_str().is_empty() {
        PathBuf::from(".")
    } else {
        dir
    };
    let dir = if dir.is_absolute() {
        dir
    } else {
        std::env::current_dir().map(|c| c.join(&dir)).unwrap_or(dir)
    };
    let recordings = if path.is_dir() {
        dir.join(RECORDINGS_FILE)
    } else {
        path.to_path_buf()
    };
    (dir.clone(), dir.join(SUBJECTS_FILE), recordings)
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path, required: &[&str], diags: &mut Vec<Diagnostic>) -> Option<Table> {
    let mut push = |row: usize, message: String| {
        diags.push(Diagnostic {
            file: path.to_path_buf(),
            row,
            message,
        })
    };
    let mut reader = match csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path) {
        Ok(r) => r,
        Err(e) => {
            push(0, format!("cannot open table: {e}"));
            return None;
        }
    };
    let headers: Vec<String> = match reader.headers() {
        Ok(h) => h.iter().map(str::to_string).collect(),
        Err(e) => {
            push(0, format!("cannot read header: {e}"));
            return None;
        }
    };
    let missing: Vec<&str> = required.iter().copied().filter(|c| !headers.iter().any(|h| h == c)).collect();
    if !missing.is_empty() {
        push(0, format!("missing column(s): {}", missing.join(", ")));
        return None;
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        match rec {
            Ok(r) => rows.push(r.iter().map(str::to_string).collect()),
            Err(e) => push(i + 1, format!("malformed row: {e}")),
        }
    }
    Some(Table { headers, rows })
}

impl Table {
    fn col(&self, name: &str) -> usize {
        self.headers.iter().position(|h| h == name).expect("required column checked")
    }
}

fn resolve(dir: &Path, cell: &str) -> PathBuf {
    let p = Path::new(cell);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

/// Checks a manifest and returns every problem found, sorted by file and row,
/// together with the corpus when there were none.
pub fn validate_manifest(path: impl AsRef<Path>) -> (Option<Corpus>, Vec<Diagnostic>) {
    let (dir, subjects_path, recordings_path) = manifest_paths(path.as_ref());
    let mut diags = Vec::new();

    let mut subjects = Vec::new();
    if let Some(t) = read_table(&subjects_path, &SUBJECT_COLUMNS, &mut diags) {
        let (c_id, c_age, c_gender, c_eth, c_diag) = (
            t.col("subject_id"),
            t.col("age"),
            t.col("gender"),
            t.col("ethnicity"),
            t.col("diagnosis"),
        );
        let score_cols: Vec<(usize, &String)> = t
            .headers
            .iter()
            .enumerate()
            .filter(|(_, h)| !SUBJECT_COLUMNS.contains(&h.as_str()))
            .collect();
        let mut seen = BTreeSet::new();
        for (i, row) in t.rows.iter().enumerate() {
            let mut err = |m: String| {
                diags.push(Diagnostic {
                    file: subjects_path.clone(),
                    row: i + 1,
                    message: m,
                })
            };
            let id = row[c_id].clone();
            if id.is_empty() {
                err("empty subject_id".into());
                continue;
            }
            if !seen.insert(id.clone()) {
                err(format!("duplicate subject_id '{id}'"));
                continue;
            }
            let age = if row[c_age].is_empty() {
                None
            } else {
                match row[c_age].parse::<u32>() {
                    Ok(a) => Some(a),
                    Err(_) => {
                        err(format!("invalid age '{}'", row[c_age]));
                        continue;
                    }
                }
            };
            let gender = match row[c_gender].parse::<Gender>() {
                Ok(g) => g,
                Err(_) => {
                    err(format!("unknown gender '{}'", row[c_gender]));
                    continue;
                }
            };
            let diagnosis = match row[c_diag].parse::<Diagnosis>() {
                Ok(d) => d,
                Err(_) => {
                    err(format!("unknown diagnosis '{}'", row[c_diag]));
                    continue;
                }
            };
            let mut scores = BTreeMap::new();
            let mut bad_score = false;
            for &(c, name) in &score_cols {
                let cell = &row[c];
                if cell.is_empty() {
                    continue;
                }
                match cell.parse::<i64>() {
                    Ok(v) => {
                        scores.insert(name.clone(), v);
                    }
                    Err(_) => {
                        err(format!("invalid {name} score '{cell}'"));
                        bad_score = true;
                    }
                }
            }
            if bad_score {
                continue;
            }
            subjects.push(SubjectRecord {
                subject_id: id,
                age,
                gender,
                ethnicity: Some(row[c_eth].clone()).filter(|e| !e.is_empty()),
                diagnosis,
                questionnaire_scores: scores,
            });
        }
    }

    let known: BTreeSet<&str> = subjects.iter().map(|s| s.subject_id.as_str()).collect();
    let mut recordings = Vec::new();
    if let Some(t) = read_table(&recordings_path, &RECORDING_COLUMNS, &mut diags) {
        let (c_id, c_task, c_audio, c_tr) = (
            t.col("subject_id"),
            t.col("task"),
            t.col("audio_path"),
            t.col("transcript_path"),
        );
        let mut seen = BTreeSet::new();
        for (i, row) in t.rows.iter().enumerate() {
            let mut err = |m: String| {
                diags.push(Diagnostic {
                    file: recordings_path.clone(),
                    row: i + 1,
                    message: m,
                })
            };
            let id = &row[c_id];
            if !known.contains(id.as_str()) {
                err(format!("unknown subject '{id}'"));
                continue;
            }
            let task = match row[c_task].parse::<Task>() {
                Ok(t) => t,
                Err(_) => {
                    err(format!("unknown task '{}'", row[c_task]));
                    continue;
                }
            };
            if !seen.insert((id.clone(), task)) {
                err(format!("duplicate recording for ({id}, {task})"));
                continue;
            }
            let audio_path = resolve(&dir, &row[c_audio]);
            if !audio_path.is_file() {
                err(format!("missing audio file {}", audio_path.display()));
                continue;
            }
            let info = match read_wav_info(&audio_path) {
                Ok(info) => info,
                Err(e) => {
                    err(e.to_string());
                    continue;
                }
            };
            let (transcript_path, transcript) = if row[c_tr].is_empty() {
                (None, None)
            } else {
                let p = resolve(&dir, &row[c_tr]);
                match fs::read(&p) {
                    Ok(bytes) => match String::from_utf8(bytes) {
                        Ok(text) => (Some(p), Some(text)),
                        Err(_) => {
                            err(format!("transcript {} is not UTF-8", p.display()));
                            continue;
                        }
                    },
                    Err(_) => {
                        err(format!("missing transcript file {}", p.display()));
                        continue;
                    }
                }
            };
            recordings.push(TaskRecording {
                subject_id: id.clone(),
                task,
                audio_path,
                transcript_path,
                transcript,
                duration_s: info.duration_s(),
                sample_rate_hz: info.sample_rate_hz,
            });
        }
        for s in &subjects {
            if !recordings.iter().any(|r| r.subject_id == s.subject_id)
                && !t.rows.iter().any(|r| r[c_id] == s.subject_id)
            {
                diags.push(Diagnostic {
                    file: subjects_path.clone(),
                    row: 0,
                    message: format!("subject '{}' has no recordings", s.subject_id),
                });
            }
        }
    }

    diags.sort();
    if !diags.is_empty() {
        return (None, diags);
    }
    match Corpus::new(subjects, recordings) {
        Ok(c) => (Some(c), diags),
        Err(e) => (
            None,
            vec![Diagnostic {
                file: recordings_path,
                row: 0,
                message: e.to_string(),
            }],
        ),
    }
}

/// Loads and validates a manifest; any diagnostic is a hard error.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Corpus> {
    match validate_manifest(path) {
        (Some(c), _) => Ok(c),
        (None, diags) => Err(Error::Manifest(diags)),
    }
}

/// Writes the two manifest tables into `dir`, returning the directory.
/// Paths are written as stored in the corpus.
pub fn write_manifest(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(Module::Corpus, "write_manifest", dir, e))?;
    let score_names: BTreeSet<&String> = corpus
        .subjects()
        .iter()
        .flat_map(|s| s.questionnaire_scores.keys())
        .collect();

    let subjects_path = dir.join(SUBJECTS_FILE);
    let csv_err = |p: &Path| {
        let p = p.to_path_buf();
        move |e: csv::Error| Error::invalid(Module::Corpus, "write_manifest", p.display().to_string(), e.to_string())
    };
    let mut w = csv::Writer::from_path(&subjects_path).map_err(csv_err(&subjects_path))?;
    let mut header: Vec<&str> = SUBJECT_COLUMNS.to_vec();
    header.extend(score_names.iter().map(|s| s.as_str()));
    w.write_record(&header).map_err(csv_err(&subjects_path))?;
    for s in corpus.subjects() {
        let mut rec = vec![
            s.subject_id.clone(),
            s.age.map(|a| a.to_string()).unwrap_or_default(),
            s.gender.to_string(),
            s.ethnicity.clone().unwrap_or_default(),
            s.diagnosis.to_string(),
        ];
        rec.extend(
            score_names
                .iter()
                .map(|n| s.questionnaire_scores.get(*n).map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&rec).map_err(csv_err(&subjects_path))?;
    }
    w.flush().map_err(|e| Error::io(Module::Corpus, "write_manifest", &subjects_path, e))?;

    let recordings_path = dir.join(RECORDINGS_FILE);
    let mut w = csv::Writer::from_path(&recordings_path).map_err(csv_err(&recordings_path))?;
    w.write_record(RECORDING_COLUMNS).map_err(csv_err(&recordings_path))?;
    for r in corpus.recordings() {
        w.write_record([
            r.subject_id.as_str(),
            r.task.as_str(),
            &r.audio_path.display().to_string(),
            &r.transcript_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err(&recordings_path))?;
    }
    w.flush().map_err(|e| Error::io(Module::Corpus, "write_manifest", &recordings_path, e))?;
    Ok(dir.to_path_buf())
}
