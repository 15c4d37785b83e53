use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Pipeline stage that raised an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Module {
    Corpus,
    Dsp,
    Acoustic,
    Linguistic,
    Classifiers,
    Evaluation,
    Synth,
    Config,
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Module::Corpus => "corpus",
            Module::Dsp => "dsp",
            Module::Acoustic => "acoustic",
            Module::Linguistic => "linguistic",
            Module::Classifiers => "classifiers",
            Module::Evaluation => "evaluation",
            Module::Synth => "synth",
            Module::Config => "config",
        };
        f.write_str(name)
    }
}

/// One problem found while validating a manifest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub file: PathBuf,
    /// 1-based data row (header excluded); 0 for file-level problems.
    pub row: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.file.display(), self.row, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// A hard error with the module, operation and offending entity.
    #[error("{module}::{op}: {entity}: {message}")]
    Invalid {
        module: Module,
        op: &'static str,
        entity: String,
        message: String,
    },

    #[error("{module}::{op}: {}: {source}", path.display())]
    Io {
        module: Module,
        op: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus::load_manifest: {} error(s)\n{}", .0.len(), join_diagnostics(.0))]
    Manifest(Vec<Diagnostic>),

    /// A fitted artifact was asked to touch a subject it was trained on.
    #[error("evaluation::leakage: {artifact} fitted on '{fitted_on}' contains held-out subject '{subject}'")]
    Leakage {
        artifact: &'static str,
        fitted_on: String,
        subject: String,
    },
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub fn invalid(
        module: Module,
        op: &'static str,
        entity: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Invalid {
            module,
            op,
            entity: entity.into(),
            message: message.into(),
        }
    }

    pub fn io(module: Module, op: &'static str, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            module,
            op,
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
