//! Linear SVM trained with Pegasos-style subgradient steps on the
//! class-weighted hinge objective
//!
//! ```text
//! J(w, b) = (λ/2)·(‖w‖² + b²) + Σ c_i·max(0, 1 − y_i(w·x_i + b)) / Σ c_i
//! ```
//!
//! The bias is carried as a weight on a constant feature, so it shares the
//! penalty. Step size at step `t` is `1/(λt)`; the returned model is the
//! running average of the iterates.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_training_set, dot, ClassWeights, ClassifierKind, LinearModel, TrainingMeta};
use crate::error::{Error, Module, Result};
use crate::fit::FitTag;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub l2_lambda: f64,
    pub epochs: usize,
    /// `None` takes one full-batch step per epoch; `Some(m)` takes
    /// `ceil(n/m)` shuffled minibatch steps per epoch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub class_weights: ClassWeights,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            l2_lambda: 1.0,
            epochs: 50,
            batch_size: None,
            seed: 0,
            class_weights: ClassWeights::uniform(),
        }
    }
}

fn sign(y: bool) -> f64 {
    if y {
        1.0
    } else {
        -1.0
    }
}

pub fn svm_objective(x: &[Vec<f64>], y: &[bool], cw: ClassWeights, l2_lambda: f64, w: &[f64], b: f64) -> f64 {
    let mut total = 0.0;
    let mut loss = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let c = cw.of(yi);
        total += c;
        loss += c * (1.0 - sign(yi) * (dot(w, xi) + b)).max(0.0);
    }
    loss / total + 0.5 * l2_lambda * (dot(w, w) + b * b)
}

/// Mean class-weighted hinge loss, without the penalty.
pub fn hinge_loss(x: &[Vec<f64>], y: &[bool], cw: ClassWeights, w: &[f64], b: f64) -> f64 {
    svm_objective(x, y, cw, 0.0, w, b)
}

pub fn train_linear_svm(x: &[Vec<f64>], y: &[bool], params: &SvmParams) -> Result<LinearModel> {
    let dim = check_training_set("train_linear_svm", x, y)?;
    let lambda = params.l2_lambda;
    if !(lambda > 0.0) {
        return Err(Error::invalid(Module::Classifiers, "train_linear_svm", "l2_lambda", "must be > 0"));
    }
    if params.batch_size == Some(0) {
        return Err(Error::invalid(Module::Classifiers, "train_linear_svm", "batch_size", "must be >= 1"));
    }
    let cw = params.class_weights;
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let radius = 1.0 / lambda.sqrt();

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; dim];
    let mut avg_b = 0.0;
    let mut t = 0usize;
    for _ in 0..params.epochs {
        let batches: Vec<&[usize]> = match params.batch_size {
            None => vec![&order[..]],
            Some(m) => {
                order.shuffle(&mut rng);
                order.chunks(m).collect()
            }
        };
        for batch in batches {
            let mut gw = vec![0.0; dim];
            let mut gb = 0.0;
            let mut total = 0.0;
            for &i in batch {
                let c = cw.of(y[i]);
                total += c;
                let s = sign(y[i]);
                if s * (dot(&w, &x[i]) + b) < 1.0 {
                    for (g, v) in gw.iter_mut().zip(&x[i]) {
                        *g -= c * s * v;
                    }
                    gb -= c * s;
                }
            }
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            for (wj, gj) in w.iter_mut().zip(&gw) {
                *wj -= eta * (lambda * *wj + gj / total);
            }
            b -= eta * (lambda * b + gb / total);
            let norm = (dot(&w, &w) + b * b).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
                b *= s;
            }
            let k = 1.0 / t as f64;
            for (a, wj) in avg_w.iter_mut().zip(&w) {
                *a += (wj - *a) * k;
            }
            avg_b += (b - avg_b) * k;
        }
    }
    let final_objective = svm_objective(x, y, cw, lambda, &avg_w, avg_b);
    Ok(LinearModel {
        kind: ClassifierKind::LinearSvm,
        weights: avg_w,
        bias: avg_b,
        l2_lambda: lambda,
        class_weights: cw,
        training_meta: TrainingMeta {
            iterations: t,
            final_objective,
        },
        fitted_on: FitTag::default(),
    })
}

/// Signed margin `w·x + b`.
pub fn predict_svm(x: &[f64], model: &LinearModel) -> f64 {
    dot(&model.weights, x) + model.bias
}
