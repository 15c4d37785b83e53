use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};

macro_rules! string_enum {
    ($ty:ident, $what:literal, { $($variant:ident => $text:literal $(| $alias:literal)*),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $text),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let lower = s.trim().to_ascii_lowercase();
                $(
                    if lower == $text.to_ascii_lowercase() $(|| lower == $alias)* {
                        return Ok($ty::$variant);
                    }
                )+
                Err(Error::invalid(Module::Corpus, concat!("parse_", $what), s, concat!("unknown ", $what)))
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
    Undisclosed,
}

string_enum!(Gender, "gender", { M => "M" | "male", F => "F" | "female", Undisclosed => "Undisclosed" | "u" | "" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Diagnosis {
    Dementia,
    #[serde(rename = "MCI")]
    Mci,
    #[serde(rename = "HC")]
    Hc,
}

string_enum!(Diagnosis, "diagnosis", { Dementia => "Dementia", Mci => "MCI", Hc => "HC" });

impl Diagnosis {
    pub const ALL: [Diagnosis; 3] = [Diagnosis::Dementia, Diagnosis::Mci, Diagnosis::Hc];

    pub fn label(self) -> BinaryLabel {
        match self {
            Diagnosis::Dementia | Diagnosis::Mci => BinaryLabel::Case,
            Diagnosis::Hc => BinaryLabel::Control,
        }
    }
}

/// Binary screening label: dementia or MCI versus healthy control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinaryLabel {
    Case,
    Control,
}

string_enum!(BinaryLabel, "label", { Case => "Case", Control => "Control" });

impl BinaryLabel {
    pub fn is_case(self) -> bool {
        self == BinaryLabel::Case
    }

    /// +1 for Case, −1 for Control.
    pub fn sign(self) -> f64 {
        if self.is_case() {
            1.0
        } else {
            -1.0
        }
    }
}

/// Speech elicitation task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    ShortTerm,
    LongTerm,
    SemanticFluency,
    PictureDescription,
}

string_enum!(Task, "task", {
    ShortTerm => "ShortTerm" | "short_term" | "short-term",
    LongTerm => "LongTerm" | "long_term" | "long-term",
    SemanticFluency => "SemanticFluency" | "semantic_fluency" | "fluency",
    PictureDescription => "PictureDescription" | "picture_description" | "picture",
});

impl Task {
    pub const ALL: [Task; 4] = [
        Task::ShortTerm,
        Task::LongTerm,
        Task::SemanticFluency,
        Task::PictureDescription,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub age: Option<u32>,
    pub gender: Gender,
    pub ethnicity: Option<String>,
    pub diagnosis: Diagnosis,
    /// Questionnaire totals carried as metadata only.
    pub questionnaire_scores: BTreeMap<String, i64>,
}

impl SubjectRecord {
    pub fn label(&self) -> BinaryLabel {
        self.diagnosis.label()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecording {
    pub subject_id: String,
    pub task: Task,
    pub audio_path: PathBuf,
    pub transcript_path: Option<PathBuf>,
    pub transcript: Option<String>,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
}

/// A validated study corpus; immutable after load.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    subjects: Vec<SubjectRecord>,
    recordings: Vec<TaskRecording>,
}

impl Corpus {
    /// Builds a corpus, checking the cross-table invariants.
    pub fn new(mut subjects: Vec<SubjectRecord>, mut recordings: Vec<TaskRecording>) -> Result<Self> {
        subjects.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
        if let Some(w) = subjects.windows(2).find(|w| w[0].subject_id == w[1].subject_id) {
            return Err(Error::invalid(Module::Corpus, "Corpus::new", &w[0].subject_id, "duplicate subject_id"));
        }
        recordings.sort_by(|a, b| (&a.subject_id, a.task).cmp(&(&b.subject_id, b.task)));
        if let Some(w) = recordings
            .windows(2)
            .find(|w| w[0].subject_id == w[1].subject_id && w[0].task == w[1].task)
        {
            return Err(Error::invalid(
                Module::Corpus,
                "Corpus::new",
                format!("{}/{}", w[0].subject_id, w[0].task),
                "duplicate (subject, task) recording",
            ));
        }
        for r in &recordings {
            if subjects.binary_search_by(|s| s.subject_id.as_str().cmp(&r.subject_id)).is_err() {
                return Err(Error::invalid(Module::Corpus, "Corpus::new", &r.subject_id, "recording references unknown subject"));
            }
            if !(r.duration_s > 0.0) {
                return Err(Error::invalid(
                    Module::Corpus,
                    "Corpus::new",
                    r.audio_path.display().to_string(),
                    "recording has zero duration",
                ));
            }
        }
        for s in &subjects {
            if !recordings.iter().any(|r| r.subject_id == s.subject_id) {
                return Err(Error::invalid(Module::Corpus, "Corpus::new", &s.subject_id, "subject has no recordings"));
            }
        }
        Ok(Corpus { subjects, recordings })
    }

    /// Subjects sorted by id.
    pub fn subjects(&self) -> &[SubjectRecord] {
        &self.subjects
    }

    /// Recordings sorted by (subject, task).
    pub fn recordings(&self) -> &[TaskRecording] {
        &self.recordings
    }

    pub fn subject(&self, id: &str) -> Option<&SubjectRecord> {
        self.subjects
            .binary_search_by(|s| s.subject_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.subjects[i])
    }

    pub fn recording(&self, subject_id: &str, task: Task) -> Option<&TaskRecording> {
        self.recordings
            .iter()
            .find(|r| r.subject_id == subject_id && r.task == task)
    }

    pub fn recordings_for_task(&self, task: Task) -> impl Iterator<Item = &TaskRecording> {
        self.recordings.iter().filter(move |r| r.task == task)
    }

    pub fn count_diagnosis(&self, d: Diagnosis) -> usize {
        self.subjects.iter().filter(|s| s.diagnosis == d).count()
    }
}
