//! Demographic and recording summary of a corpus.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::types::{BinaryLabel, Corpus, Diagnosis, Gender, Task};
use crate::dsp::{detect_speech_with, estimate_snr, read_wav, VadConfig};
use crate::error::Result;

/// Count, mean and population std of a group; mean/std absent when empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl Summary {
    /// Order-independent: values are sorted before accumulation.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Summary {
                count: 0,
                mean: None,
                std: None,
            };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
        dev.sort_by(f64::total_cmp);
        let std = (dev.iter().sum::<f64>() / n).sqrt();
        Summary {
            count: v.len(),
            mean: Some(mean),
            std: Some(std),
        }
    }

    fn cell(&self) -> String {
        match (self.mean, self.std) {
            (Some(m), Some(s)) => format!("{m:.2} ({s:.2})"),
            _ => "-".into(),
        }
    }
}

/// Row grouping: one diagnosis or the whole corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    Diagnosis(Diagnosis),
    All,
}

impl Group {
    pub const ROWS: [Group; 4] = [
        Group::Diagnosis(Diagnosis::Dementia),
        Group::Diagnosis(Diagnosis::Mci),
        Group::Diagnosis(Diagnosis::Hc),
        Group::All,
    ];

    fn contains(self, d: Diagnosis) -> bool {
        match self {
            Group::All => true,
            Group::Diagnosis(g) => g == d,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::All => "All",
            Group::Diagnosis(d) => d.as_str(),
        }
    }

    fn class(self) -> &'static str {
        match self {
            Group::All => "Total",
            Group::Diagnosis(d) => match d.label() {
                BinaryLabel::Case => "Case",
                BinaryLabel::Control => "Control",
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCell {
    pub task: Task,
    pub duration_s: Summary,
    pub snr_db: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: Group,
    pub subjects: usize,
    pub age: Summary,
    pub male: usize,
    pub female: usize,
    pub undisclosed_gender: usize,
    pub tasks: Vec<TaskCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub rows: Vec<GroupRow>,
}

impl CorpusStats {
    pub fn row(&self, group: Group) -> Option<&GroupRow> {
        self.rows.iter().find(|r| r.group == group)
    }

    /// Fixed-width table in the layout of a demographic/recording summary.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut header = format!(
            "{:<8} {:<9} {:>4} {:>15} {:>4} {:>4} {:>4}",
            "Class", "Group", "N", "Age", "M", "F", "U"
        );
        for t in Task::ALL {
            let _ = write!(header, " {:>22} {:>22}", format!("{t} len_s"), format!("{t} snr_db"));
        }
        out.push_str(&header);
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{:<8} {:<9} {:>4} {:>15} {:>4} {:>4} {:>4}",
                r.group.class(),
                r.group.name(),
                r.subjects,
                r.age.cell(),
                r.male,
                r.female,
                r.undisclosed_gender
            );
            for c in &r.tasks {
                let _ = write!(out, " {:>22} {:>22}", c.duration_s.cell(), c.snr_db.cell());
            }
            out.push('\n');
        }
        out.push_str("snr_db is the speech/non-speech power ratio from energy-based speech detection; values in brackets are population standard deviations.\n");
        out
    }
}

/// Summary statistics from precomputed per-recording SNRs (aligned with
/// `corpus.recordings()`).
pub fn summarize_with_snr(corpus: &Corpus, snr_db: &[f64]) -> CorpusStats {
    let rows = Group::ROWS
        .iter()
        .map(|&group| {
            let subjects: Vec<_> = corpus.subjects().iter().filter(|s| group.contains(s.diagnosis)).collect();
            let ages: Vec<f64> = subjects.iter().filter_map(|s| s.age.map(f64::from)).collect();
            let count_gender = |g: Gender| subjects.iter().filter(|s| s.gender == g).count();
            let tasks = Task::ALL
                .iter()
                .map(|&task| {
                    let (durations, snrs): (Vec<f64>, Vec<f64>) = corpus
                        .recordings()
                        .iter()
                        .zip(snr_db)
                        .filter(|(r, _)| {
                            r.task == task && group.contains(corpus.subject(&r.subject_id).unwrap().diagnosis)
                        })
                        .map(|(r, snr)| (r.duration_s, *snr))
                        .unzip();
                    TaskCell {
                        task,
                        duration_s: Summary::of(&durations),
                        snr_db: Summary::of(&snrs),
                    }
                })
                .collect();
            GroupRow {
                group,
                subjects: subjects.len(),
                age: Summary::of(&ages),
                male: count_gender(Gender::M),
                female: count_gender(Gender::F),
                undisclosed_gender: count_gender(Gender::Undisclosed),
                tasks,
            }
        })
        .collect();
    CorpusStats { rows }
}

/// Per-recording SNR via speech detection, in `corpus.recordings()` order.
pub fn recording_snrs(corpus: &Corpus, vad: &VadConfig) -> Result<Vec<f64>> {
    corpus
        .recordings()
        .par_iter()
        .map(|r| {
            let audio = read_wav(&r.audio_path)?;
            Ok(estimate_snr(&audio, &detect_speech_with(&audio, vad)))
        })
        .collect()
}

pub fn summarize(corpus: &Corpus) -> Result<CorpusStats> {
    summarize_with(corpus, &VadConfig::default())
}

pub fn summarize_with(corpus: &Corpus, vad: &VadConfig) -> Result<CorpusStats> {
    Ok(summarize_with_snr(corpus, &recording_snrs(corpus, vad)?))
}
