//! One-hidden-layer ReLU network with a softmax output.

use super::linear::{cross_entropy, softmax_in_place};
use super::TrainingMatrix;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: 100,
            epochs: 200,
            lr: 0.01,
            seed: 0,
        }
    }
}

/// Flat parameter layout: `[W1 (dim x hidden), b1 (hidden), W2 (hidden x classes), b2 (classes)]`,
/// all row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub dim: usize,
    pub hidden: usize,
    pub n_classes: usize,
    pub params: Vec<f64>,
}

struct Layout {
    dim: usize,
    hidden: usize,
    classes: usize,
}

impl Layout {
    fn len(&self) -> usize {
        self.dim * self.hidden + self.hidden + self.hidden * self.classes + self.classes
    }

    fn split<'p>(&self, p: &'p [f64]) -> (&'p [f64], &'p [f64], &'p [f64], &'p [f64]) {
        let (w1, rest) = p.split_at(self.dim * self.hidden);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.hidden * self.classes);
        (w1, b1, w2, b2)
    }

    fn hidden_pre(&self, p: &[f64], x: &SparseVector, out: &mut [f64]) {
        let (w1, b1, _, _) = self.split(p);
        out.copy_from_slice(b1);
        for (j, v) in x.iter() {
            let row = &w1[j * self.hidden..(j + 1) * self.hidden];
            for (o, w) in out.iter_mut().zip(row) {
                *o += v * w;
            }
        }
    }

    fn output(&self, p: &[f64], act: &[f64], out: &mut [f64]) {
        let (_, _, w2, b2) = self.split(p);
        out.copy_from_slice(b2);
        for (h, a) in act.iter().enumerate() {
            if *a != 0.0 {
                for (o, w) in out.iter_mut().zip(&w2[h * self.classes..(h + 1) * self.classes]) {
                    *o += a * w;
                }
            }
        }
    }
}

impl MlpModel {
    fn layout(&self) -> Layout {
        Layout {
            dim: self.dim,
            hidden: self.hidden,
            classes: self.n_classes,
        }
    }

    pub fn logits(&self, x: &SparseVector) -> Vec<f64> {
        let l = self.layout();
        let mut act = vec![0.0; self.hidden];
        l.hidden_pre(&self.params, x, &mut act);
        act.iter_mut().for_each(|a| *a = a.max(0.0));
        let mut out = vec![0.0; self.n_classes];
        l.output(&self.params, &act, &mut out);
        out
    }

    pub fn proba(&self, x: &SparseVector) -> Vec<f64> {
        let mut z = self.logits(x);
        softmax_in_place(&mut z);
        z
    }
}

/// Mean cross-entropy of the network over a training matrix.
pub struct MlpObjective<'a> {
    matrix: &'a TrainingMatrix,
    layout: Layout,
}

impl<'a> MlpObjective<'a> {
    pub fn new(matrix: &'a TrainingMatrix, hidden: usize) -> Self {
        MlpObjective {
            matrix,
            layout: Layout {
                dim: matrix.dim(),
                hidden,
                classes: matrix.n_classes(),
            },
        }
    }

    pub fn n_params(&self) -> usize {
        self.layout.len()
    }

    /// Glorot-uniform weights drawn in layout order (W1 then W2), zero biases.
    pub fn initial_params(&self, seed: u64) -> Vec<f64> {
        let l = &self.layout;
        let mut rng = Rng::new(seed);
        let mut p = vec![0.0; l.len()];
        let s1 = (6.0 / (l.dim + l.hidden) as f64).sqrt();
        for w in &mut p[..l.dim * l.hidden] {
            *w = rng.range_f64(-s1, s1);
        }
        let s2 = (6.0 / (l.hidden + l.classes) as f64).sqrt();
        let start = l.dim * l.hidden + l.hidden;
        for w in &mut p[start..start + l.hidden * l.classes] {
            *w = rng.range_f64(-s2, s2);
        }
        p
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        self.loss_and_gradient(params).0
    }

    pub fn loss_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let l = &self.layout;
        let (h, k) = (l.hidden, l.classes);
        let (_, _, w2, _) = l.split(params);
        let n = self.matrix.len() as f64;
        let mut grad = vec![0.0; params.len()];
        let mut pre = vec![0.0; h];
        let mut act = vec![0.0; h];
        let mut z = vec![0.0; k];
        let mut d_hidden = vec![0.0; h];
        let mut loss = 0.0;
        let off_b1 = l.dim * h;
        let off_w2 = off_b1 + h;
        let off_b2 = off_w2 + h * k;
        for (x, &y) in self.matrix.rows().iter().zip(self.matrix.labels()) {
            l.hidden_pre(params, x, &mut pre);
            for (a, p) in act.iter_mut().zip(&pre) {
                *a = p.max(0.0);
            }
            l.output(params, &act, &mut z);
            loss += cross_entropy(&z, y);
            softmax_in_place(&mut z);
            z[y] -= 1.0;
            z.iter_mut().for_each(|g| *g /= n);
            for c in 0..k {
                grad[off_b2 + c] += z[c];
            }
            for hi in 0..h {
                let mut back = 0.0;
                let w2_row = &w2[hi * k..(hi + 1) * k];
                let g2_row = &mut grad[off_w2 + hi * k..off_w2 + (hi + 1) * k];
                for c in 0..k {
                    g2_row[c] += act[hi] * z[c];
                    back += w2_row[c] * z[c];
                }
                d_hidden[hi] = if pre[hi] > 0.0 { back } else { 0.0 };
                grad[off_b1 + hi] += d_hidden[hi];
            }
            for (j, v) in x.iter() {
                let g1_row = &mut grad[j * h..(j + 1) * h];
                for (g, dh) in g1_row.iter_mut().zip(&d_hidden) {
                    *g += v * dh;
                }
            }
        }
        (loss / n, grad)
    }
}

pub(crate) fn fit_mlp(m: &TrainingMatrix, p: &MlpParams) -> Result<MlpModel> {
    m.require_two_classes()?;
    if p.hidden == 0 {
        return Err(Error::Config("MLP needs at least one hidden unit".into()));
    }
    let objective = MlpObjective::new(m, p.hidden);
    let mut params = objective.initial_params(p.seed);
    for epoch in 0..p.epochs {
        let (loss, grad) = objective.loss_and_gradient(&params);
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "MLP loss became non-finite at epoch {epoch} (learning rate {})",
                p.lr
            )));
        }
        for (w, g) in params.iter_mut().zip(&grad) {
            *w -= p.lr * g;
        }
    }
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("MLP weights are non-finite".into()));
    }
    Ok(MlpModel {
        dim: m.dim(),
        hidden: p.hidden,
        n_classes: m.n_classes(),
        params,
    })
}
