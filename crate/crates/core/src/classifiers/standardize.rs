use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::fit::FitTag;

/// Per-column z-score parameters estimated on a training partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerParams {
    pub mean: Vec<f64>,
    /// Population standard deviation; zero for constant columns.
    pub std: Vec<f64>,
    pub fitted_on: FitTag,
}

impl StandardizerParams {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn with_fit_tag(mut self, tag: FitTag) -> Self {
        self.fitted_on = tag;
        self
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| apply_standardizer(r, self)).collect()
    }
}

pub fn fit_standardizer(rows: &[Vec<f64>]) -> Result<StandardizerParams> {
    let first = rows
        .first()
        .ok_or_else(|| Error::invalid(Module::Classifiers, "fit_standardizer", "X_train", "no training rows"))?;
    let dim = first.len();
    if let Some(i) = rows.iter().position(|r| r.len() != dim) {
        return Err(Error::invalid(
            Module::Classifiers,
            "fit_standardizer",
            format!("row {i}"),
            format!("dimension {} differs from {dim}", rows[i].len()),
        ));
    }
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let std = (0..dim)
        .map(|j| (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    Ok(StandardizerParams {
        mean,
        std,
        fitted_on: FitTag::default(),
    })
}

/// `(x − mean) / std`, with zero-variance columns mapped to 0.
pub fn apply_standardizer(x: &[f64], params: &StandardizerParams) -> Result<Vec<f64>> {
    if x.len() != params.dim() {
        return Err(Error::invalid(
            Module::Classifiers,
            "apply_standardizer",
            "x",
            format!("dimension {} but standardizer has {}", x.len(), params.dim()),
        ));
    }
    Ok(x.iter()
        .zip(params.mean.iter().zip(&params.std))
        .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
        .collect())
}
