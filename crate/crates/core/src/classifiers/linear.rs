//! Multinomial logistic regression and one-vs-rest linear SVM, both trained
//! with deterministic full-batch updates.

use super::TrainingMatrix;
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// Per-class weight rows plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub n_classes: usize,
    pub dim: usize,
    /// Row-major `n_classes x dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(n_classes: usize, dim: usize) -> Self {
        LinearModel {
            n_classes,
            dim,
            weights: vec![0.0; n_classes * dim],
            bias: vec![0.0; n_classes],
        }
    }

    pub fn class_weights(&self, c: usize) -> &[f64] {
        &self.weights[c * self.dim..(c + 1) * self.dim]
    }

    pub fn decision_values(&self, x: &SparseVector) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| self.bias[c] + x.dot_dense(self.class_weights(c)))
            .collect()
    }
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// `-ln softmax(z)[target]`, computed stably.
pub(crate) fn cross_entropy(z: &[f64], target: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - z[target]
}

/// Mean cross-entropy plus `(l2 / 2) * ||W||^2` over a flat parameter
/// vector laid out as `[W (classes x dim, row-major), b (classes)]`.
pub struct SoftmaxObjective<'a> {
    matrix: &'a TrainingMatrix,
    l2: f64,
}

impl<'a> SoftmaxObjective<'a> {
    pub fn new(matrix: &'a TrainingMatrix, l2: f64) -> Self {
        SoftmaxObjective { matrix, l2 }
    }

    pub fn n_params(&self) -> usize {
        let k = self.matrix.n_classes();
        k * self.matrix.dim() + k
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        self.loss_and_gradient(params).0
    }

    pub fn loss_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let k = self.matrix.n_classes();
        let d = self.matrix.dim();
        let (w, b) = params.split_at(k * d);
        let n = self.matrix.len() as f64;
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        let mut z = vec![0.0; k];
        for (x, &y) in self.matrix.rows().iter().zip(self.matrix.labels()) {
            for c in 0..k {
                z[c] = b[c] + x.dot_dense(&w[c * d..(c + 1) * d]);
            }
            loss += cross_entropy(&z, y);
            softmax_in_place(&mut z);
            z[y] -= 1.0;
            for c in 0..k {
                let g = z[c] / n;
                let row = &mut grad[c * d..(c + 1) * d];
                for (j, v) in x.iter() {
                    row[j] += g * v;
                }
                grad[k * d + c] += g;
            }
        }
        loss /= n;
        let mut reg = 0.0;
        for (g, wi) in grad[..k * d].iter_mut().zip(w) {
            *g += self.l2 * wi;
            reg += wi * wi;
        }
        (loss + 0.5 * self.l2 * reg, grad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegParams {
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            l2: 1e-4,
            epochs: 200,
            lr: 0.5,
        }
    }
}

pub(crate) fn fit_logreg(m: &TrainingMatrix, p: &LogRegParams) -> Result<LinearModel> {
    m.require_two_classes()?;
    let objective = SoftmaxObjective::new(m, p.l2);
    let mut params = vec![0.0; objective.n_params()];
    for epoch in 0..p.epochs {
        let (loss, grad) = objective.loss_and_gradient(&params);
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "logistic regression loss became non-finite at epoch {epoch} (learning rate {})",
                p.lr
            )));
        }
        for (w, g) in params.iter_mut().zip(&grad) {
            *w -= p.lr * g;
        }
    }
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("logistic regression weights are non-finite".into()));
    }
    let k = m.n_classes();
    let d = m.dim();
    let bias = params.split_off(k * d);
    Ok(LinearModel {
        n_classes: k,
        dim: d,
        weights: params,
        bias,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinSvmParams {
    pub c: f64,
    pub epochs: usize,
}

impl Default for LinSvmParams {
    fn default() -> Self {
        LinSvmParams { c: 1.0, epochs: 200 }
    }
}

/// One binary SVM per class against the rest, minimizing
/// `(lambda/2)(||w||^2 + b^2) + mean(max(0, 1 - y (w.x + b)))` with
/// `lambda = 1 / (C n)`. The bias acts as the weight of a constant feature.
/// Step `t` (from 1) uses learning rate `1 / (lambda t)`.
pub(crate) fn fit_linsvm(m: &TrainingMatrix, p: &LinSvmParams) -> Result<LinearModel> {
    m.require_two_classes()?;
    if !p.c.is_finite() || p.c <= 0.0 || p.epochs == 0 {
        return Err(Error::Config("linear SVM needs a finite C > 0 and at least one epoch".into()));
    }
    let k = m.n_classes();
    let d = m.dim();
    let n = m.len() as f64;
    let lambda = 1.0 / (p.c * n);
    let mut model = LinearModel::zeros(k, d);
    for c in 0..k {
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut step = vec![0.0; d];
        for t in 1..=p.epochs {
            let eta = 1.0 / (lambda * t as f64);
            step.iter_mut().for_each(|s| *s = 0.0);
            let mut step_b = 0.0;
            for (x, &label) in m.rows().iter().zip(m.labels()) {
                let y = if label == c { 1.0 } else { -1.0 };
                if y * (x.dot_dense(&w) + b) < 1.0 {
                    for (j, v) in x.iter() {
                        step[j] += y * v;
                    }
                    step_b += y;
                }
            }
            let shrink = 1.0 - eta * lambda;
            for (wi, si) in w.iter_mut().zip(&step) {
                *wi = shrink * *wi + eta * si / n;
            }
            b = shrink * b + eta * step_b / n;
        }
        if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::Training("linear SVM weights are non-finite".into()));
        }
        model.weights[c * d..(c + 1) * d].copy_from_slice(&w);
        model.bias[c] = b;
    }
    Ok(model)
}
