use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Records which subjects a fitted artifact (standardizer, vocabulary,
/// model) was estimated from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitTag {
    pub label: String,
    pub subjects: BTreeSet<String>,
}

impl FitTag {
    pub fn new<I, S>(label: impl Into<String>, subjects: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        FitTag {
            label: label.into(),
            subjects: subjects.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, subject: &str) -> bool {
        self.subjects.contains(subject)
    }

    /// Fails if any of `held_out` was part of the fit.
    pub fn ensure_disjoint<'a>(&self, artifact: &'static str, held_out: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for s in held_out {
            if self.contains(s) {
                return Err(Error::Leakage {
                    artifact,
                    fitted_on: self.label.clone(),
                    subject: s.to_string(),
                });
            }
        }
        Ok(())
    }
}
