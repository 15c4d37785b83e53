//! Study corpus: subjects, per-task recordings, summary statistics and
//! cross-validation folds.

mod folds;
mod manifest;
mod stats;
mod types;

pub use folds::{stratified_folds, FoldAssignment};
pub use manifest::{load_manifest, manifest_paths, validate_manifest, write_manifest, RECORDINGS_FILE, SUBJECTS_FILE};
pub use stats::{recording_snrs, summarize, summarize_with, summarize_with_snr, CorpusStats, Group, GroupRow, Summary, TaskCell};
pub use types::{BinaryLabel, Corpus, Diagnosis, Gender, SubjectRecord, Task, TaskRecording};
