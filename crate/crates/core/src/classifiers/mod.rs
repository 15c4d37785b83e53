//! Feature standardization and the two linear classifiers.

mod logistic;
mod standardize;
mod svm;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::fit::FitTag;

pub use logistic::{
    logistic_gradient, logistic_objective, predict_logistic, sigmoid, train_logistic, LogisticParams,
};
pub use standardize::{apply_standardizer, fit_standardizer, StandardizerParams};
pub use svm::{hinge_loss, predict_svm, svm_objective, train_linear_svm, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    LogisticRegression,
    LinearSvm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 2] = [ClassifierKind::LogisticRegression, ClassifierKind::LinearSvm];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "LogisticRegression",
            ClassifierKind::LinearSvm => "LinearSvm",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logisticregression" | "logreg" | "lr" | "logistic" => Ok(ClassifierKind::LogisticRegression),
            "linearsvm" | "svm" => Ok(ClassifierKind::LinearSvm),
            _ => Err(Error::invalid(Module::Classifiers, "parse_classifier", s, "unknown classifier")),
        }
    }
}

/// Per-class sample weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub case: f64,
    pub control: f64,
}

impl ClassWeights {
    pub fn uniform() -> Self {
        ClassWeights { case: 1.0, control: 1.0 }
    }

    /// `n / (2·n_class)` for each class.
    pub fn balanced(y: &[bool]) -> Self {
        let n = y.len() as f64;
        let n_case = y.iter().filter(|&&v| v).count() as f64;
        let n_control = n - n_case;
        let w = |k: f64| if k > 0.0 { n / (2.0 * k) } else { 1.0 };
        ClassWeights {
            case: w(n_case),
            control: w(n_control),
        }
    }

    pub fn of(&self, positive: bool) -> f64 {
        if positive {
            self.case
        } else {
            self.control
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeighting {
    #[default]
    Balanced,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub final_objective: f64,
}

/// A fitted linear decision function `w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: ClassifierKind,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
    pub class_weights: ClassWeights,
    pub training_meta: TrainingMeta,
    pub fitted_on: FitTag,
}

impl LinearModel {
    pub fn zero(kind: ClassifierKind, dim: usize) -> Self {
        LinearModel {
            kind,
            weights: vec![0.0; dim],
            bias: 0.0,
            l2_lambda: 0.0,
            class_weights: ClassWeights::uniform(),
            training_meta: TrainingMeta {
                iterations: 0,
                final_objective: 0.0,
            },
            fitted_on: FitTag::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn with_fit_tag(mut self, tag: FitTag) -> Self {
        self.fitted_on = tag;
        self
    }
}

/// Signed confidence: `p − 0.5` for logistic regression, the margin for the
/// SVM. Positive means Case.
pub fn decision_score(x: &[f64], model: &LinearModel) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::invalid(
            Module::Classifiers,
            "decision_score",
            "x",
            format!("dimension {} but model has {}", x.len(), model.dim()),
        ));
    }
    Ok(match model.kind {
        ClassifierKind::LogisticRegression => predict_logistic(x, model) - 0.5,
        ClassifierKind::LinearSvm => predict_svm(x, model),
    })
}

/// Case when the score is non-negative.
pub fn predict_label(x: &[f64], model: &LinearModel) -> Result<bool> {
    decision_score(x, model).map(|s| s >= 0.0)
}

/// Hyperparameters for both classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub l2_lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub epochs: usize,
    pub batch_size: Option<usize>,
    pub class_weighting: ClassWeighting,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            l2_lambda: 1.0,
            max_iters: 500,
            tol: 1e-6,
            epochs: 50,
            batch_size: None,
            class_weighting: ClassWeighting::Balanced,
        }
    }
}

/// Trains either classifier; `seed` only matters for minibatch SVM training.
pub fn train(kind: ClassifierKind, x: &[Vec<f64>], y: &[bool], cfg: &ClassifierConfig, seed: u64) -> Result<LinearModel> {
    let class_weights = match cfg.class_weighting {
        ClassWeighting::Balanced => ClassWeights::balanced(y),
        ClassWeighting::Uniform => ClassWeights::uniform(),
    };
    match kind {
        ClassifierKind::LogisticRegression => train_logistic(
            x,
            y,
            &LogisticParams {
                l2_lambda: cfg.l2_lambda,
                max_iters: cfg.max_iters,
                tol: cfg.tol,
                class_weights,
            },
        ),
        ClassifierKind::LinearSvm => train_linear_svm(
            x,
            y,
            &SvmParams {
                l2_lambda: cfg.l2_lambda,
                epochs: cfg.epochs,
                batch_size: cfg.batch_size,
                seed,
                class_weights,
            },
        ),
    }
}

const MODEL_FORMAT: &str = "cognopipe-linear-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: LinearModel,
}

pub fn write_model(model: &LinearModel, path: &Path) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&file).expect("model serializes");
    fs::write(path, text).map_err(|e| Error::io(Module::Classifiers, "write_model", path, e))
}

pub fn read_model(path: &Path) -> Result<LinearModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(Module::Classifiers, "read_model", path, e))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::invalid(Module::Classifiers, "read_model", path.display().to_string(), e.to_string()))?;
    if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
        return Err(Error::invalid(
            Module::Classifiers,
            "read_model",
            path.display().to_string(),
            format!("unsupported model format {} v{}", file.format, file.version),
        ));
    }
    Ok(file.model)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Shared shape and label checks; returns the feature dimension.
pub(crate) fn check_training_set(op: &'static str, x: &[Vec<f64>], y: &[bool]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::invalid(Module::Classifiers, op, "X", "no training rows"));
    }
    if x.len() != y.len() {
        return Err(Error::invalid(
            Module::Classifiers,
            op,
            "y",
            format!("{} labels for {} rows", y.len(), x.len()),
        ));
    }
    let dim = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::invalid(
                Module::Classifiers,
                op,
                format!("row {i}"),
                format!("dimension {} differs from {dim}", row.len()),
            ));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(Module::Classifiers, op, format!("row {i}"), "non-finite value"));
        }
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::invalid(
            Module::Classifiers,
            op,
            "y",
            "single class in training labels",
        ));
    }
    Ok(dim)
}
