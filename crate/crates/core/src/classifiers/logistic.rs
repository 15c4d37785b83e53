//! L2-regularized, class-weighted logistic regression trained by full-batch
//! gradient descent with Armijo backtracking.
//!
//! Objective, with per-sample class weights `c_i`:
//!
//! ```text
//! J(w, b) = Σ c_i·ℓ(y_i, w·x_i + b) / Σ c_i + (λ/2)·‖w‖²
//! ```
//!
//! where `ℓ` is the binary cross-entropy. The bias is not penalized.

use super::{check_training_set, dot, ClassWeights, ClassifierKind, LinearModel, TrainingMeta};
use crate::error::{Error, Module, Result};
use crate::fit::FitTag;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sample_weights(y: &[bool], cw: ClassWeights) -> Vec<f64> {
    y.iter().map(|&p| if p { cw.case } else { cw.control }).collect()
}

/// Objective value at `(w, b)`.
pub fn logistic_objective(x: &[Vec<f64>], y: &[bool], cw: ClassWeights, l2_lambda: f64, w: &[f64], b: f64) -> f64 {
    let c = sample_weights(y, cw);
    let total: f64 = c.iter().sum();
    let loss: f64 = x
        .iter()
        .zip(y)
        .zip(&c)
        .map(|((xi, &yi), ci)| {
            let z = dot(w, xi) + b;
            // −[y log σ(z) + (1−y) log(1−σ(z))]
            ci * if yi { softplus(-z) } else { softplus(z) }
        })
        .sum();
    loss / total + 0.5 * l2_lambda * dot(w, w)
}

/// Analytic gradient `(∂J/∂w, ∂J/∂b)`.
pub fn logistic_gradient(
    x: &[Vec<f64>],
    y: &[bool],
    cw: ClassWeights,
    l2_lambda: f64,
    w: &[f64],
    b: f64,
) -> (Vec<f64>, f64) {
    let c = sample_weights(y, cw);
    let total: f64 = c.iter().sum();
    let mut gw: Vec<f64> = w.iter().map(|wj| l2_lambda * wj).collect();
    let mut gb = 0.0;
    for ((xi, &yi), ci) in x.iter().zip(y).zip(&c) {
        let r = ci * (sigmoid(dot(w, xi) + b) - f64::from(u8::from(yi))) / total;
        for (g, v) in gw.iter_mut().zip(xi) {
            *g += r * v;
        }
        gb += r;
    }
    (gw, gb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub l2_lambda: f64,
    pub max_iters: usize,
    /// Stop once the gradient's ∞-norm falls below this.
    pub tol: f64,
    pub class_weights: ClassWeights,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2_lambda: 1.0,
            max_iters: 500,
            tol: 1e-6,
            class_weights: ClassWeights::uniform(),
        }
    }
}

const ARMIJO: f64 = 1e-4;

/// Fits logistic regression; `y[i] == true` marks the positive (Case) class.
pub fn train_logistic(x: &[Vec<f64>], y: &[bool], params: &LogisticParams) -> Result<LinearModel> {
    let dim = check_training_set("train_logistic", x, y)?;
    if !(params.l2_lambda >= 0.0) {
        return Err(Error::invalid(Module::Classifiers, "train_logistic", "l2_lambda", "must be >= 0"));
    }
    let cw = params.class_weights;
    let lambda = params.l2_lambda;
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut f = logistic_objective(x, y, cw, lambda, &w, b);
    let mut step = 1.0;
    let mut iterations = 0;
    while iterations < params.max_iters {
        let (gw, gb) = logistic_gradient(x, y, cw, lambda, &w, b);
        let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gmax < params.tol {
            break;
        }
        let gnorm2 = dot(&gw, &gw) + gb * gb;
        let accepted = loop {
            let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(wj, gj)| wj - step * gj).collect();
            let cand_b = b - step * gb;
            let fc = logistic_objective(x, y, cw, lambda, &cand_w, cand_b);
            if fc <= f - ARMIJO * step * gnorm2 {
                break Some((cand_w, cand_b, fc));
            }
            step *= 0.5;
            if step < 1e-16 {
                break None;
            }
        };
        let Some((nw, nb, fc)) = accepted else { break };
        assert!(fc <= f, "line search accepted an increasing step");
        w = nw;
        b = nb;
        f = fc;
        iterations += 1;
        step = (step * 2.0).min(1e6);
    }
    Ok(LinearModel {
        kind: ClassifierKind::LogisticRegression,
        weights: w,
        bias: b,
        l2_lambda: lambda,
        class_weights: cw,
        training_meta: TrainingMeta {
            iterations,
            final_objective: f,
        },
        fitted_on: FitTag::default(),
    })
}

/// Probability of the Case class.
pub fn predict_logistic(x: &[f64], model: &LinearModel) -> f64 {
    sigmoid(dot(&model.weights, x) + model.bias)
}
