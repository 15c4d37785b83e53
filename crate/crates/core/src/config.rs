use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acoustic::{CompareConfig, FeatureGrid, FeatureSetId, LldConfig};
use crate::classifiers::{ClassifierConfig, ClassifierKind};
use crate::corpus::Task;
use crate::dsp::VadConfig;
use crate::error::{Error, Module, Result};
use crate::evaluation::{Averaging, TieBreak};
use crate::linguistic::NgramConfig;

/// Everything a run needs besides the corpus itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    pub tasks: Vec<Task>,
    pub feature_sets: Vec<FeatureSetId>,
    pub classifiers: Vec<ClassifierKind>,
    pub k: usize,
    pub seed: u64,
    pub tie_break: TieBreak,
    pub averaging: Averaging,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub vad: VadConfig,
    pub lld: LldConfig,
    pub compare: CompareConfig,
    pub ngram: NgramConfig,
    pub classifier: ClassifierConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            tasks: Task::ALL.to_vec(),
            feature_sets: FeatureSetId::ALL.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            k: 5,
            seed: 0,
            tie_break: TieBreak::default(),
            averaging: Averaging::default(),
            out: None,
            workers: None,
            vad: VadConfig::default(),
            lld: LldConfig::default(),
            compare: CompareConfig::default(),
            ngram: NgramConfig::default(),
            classifier: ClassifierConfig::default(),
        }
    }
}

fn config_err(entity: &str, message: impl Into<String>) -> Error {
    Error::invalid(Module::Config, "validate_config", entity, message)
}

fn check_unique<T: Ord + Copy + std::fmt::Display>(entity: &str, items: &[T]) -> Result<()> {
    if items.is_empty() {
        return Err(config_err(entity, "must not be empty"));
    }
    let mut seen = BTreeSet::new();
    for &i in items {
        if !seen.insert(i) {
            return Err(config_err(entity, format!("duplicate entry {i}")));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(Module::Config, "parse_config", "config", e.to_string()))
    }

    /// Reads a config file; relative `manifest` and `out` paths resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(Module::Config, "load_config", path, e))?;
        let mut cfg = RunConfig::from_toml(&text)
            .map_err(|e| Error::invalid(Module::Config, "load_config", path.display().to_string(), e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.manifest, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_unique("tasks", &self.tasks)?;
        check_unique("feature_sets", &self.feature_sets)?;
        check_unique("classifiers", &self.classifiers)?;
        if self.k < 2 {
            return Err(config_err("k", "must be at least 2"));
        }
        if self.workers == Some(0) {
            return Err(config_err("workers", "must be at least 1"));
        }
        if self.feature_sets.contains(&FeatureSetId::CompareLike) {
            FeatureGrid::compare_like(&self.compare)?;
        }
        if self.ngram.n_min == 0 || self.ngram.n_min > self.ngram.n_max {
            return Err(config_err("ngram", "need 1 <= n_min <= n_max"));
        }
        let c = &self.classifier;
        if !(c.l2_lambda > 0.0 && c.l2_lambda.is_finite()) {
            return Err(config_err("classifier.l2_lambda", "must be a finite value > 0"));
        }
        if !(c.tol > 0.0) {
            return Err(config_err("classifier.tol", "must be > 0"));
        }
        if c.batch_size == Some(0) {
            return Err(config_err("classifier.batch_size", "must be at least 1"));
        }
        let l = &self.lld;
        if !(l.f0_min_hz > 0.0 && l.f0_min_hz < l.f0_max_hz) {
            return Err(config_err("lld", "need 0 < f0_min_hz < f0_max_hz"));
        }
        if !(l.frame_len_s > 0.0 && l.hop_s > 0.0) || !(self.vad.frame_len_s > 0.0 && self.vad.hop_s > 0.0) {
            return Err(config_err("frame geometry", "frame and hop lengths must be > 0"));
        }
        Ok(())
    }

    pub fn manifest(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| config_err("manifest", "no manifest given (use --manifest or the config file)"))
    }

    /// The effective config as TOML, without run-local settings (output
    /// directory, worker count) that do not affect results.
    pub fn echo(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.workers = None;
        toml::to_string(&c).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_echo_round_trips() {
        let c = RunConfig {
            manifest: Some("m".into()),
            ..Default::default()
        };
        c.validate().unwrap();
        let back = RunConfig::from_toml(&c.echo()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn echo_omits_run_local_fields() {
        let c = RunConfig {
            workers: Some(3),
            out: Some("x".into()),
            ..Default::default()
        };
        let e = c.echo();
        assert!(!e.contains("workers") && !e.contains("out ="));
        assert_eq!(e, RunConfig::default().echo());
    }

    #[test]
    fn invalid_combinations_rejected() {
        let bad = [
            "k = 1",
            "tasks = []",
            "classifiers = [\"LinearSvm\", \"LinearSvm\"]",
            "workers = 0",
            "[classifier]\nl2_lambda = 0.0",
            "[ngram]\nn_min = 3\nn_max = 2",
            "[compare]\nfunctionals = []",
        ];
        for text in bad {
            let parsed = RunConfig::from_toml(text);
            assert!(parsed.and_then(|c| c.validate()).is_err(), "{text}");
        }
        assert!(RunConfig::from_toml("unknown_key = 1").is_err());
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml("seed = 7\ntie_break = \"always_case\"\n[vad]\nthreshold_db = 12.0\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.tie_break, TieBreak::AlwaysCase);
        assert_eq!(c.vad.threshold_db, 12.0);
        assert_eq!(c.k, 5);
    }
}
