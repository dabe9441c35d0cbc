//! Confusion matrices, classification metrics, ordinal MAE and phase timing.
//!
//! Any 0/0 in precision, recall or F1 counts as 0. Macro F1 averages over
//! every label of the label space, including labels that never occur.

use std::fmt::Write as _;
use std::time::Instant;

use serde_json::{json, Map, Value};

use crate::corpus::LabelSpace;
use crate::error::{Error, Result};

/// Rows are true labels, columns predicted labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    label_space: LabelSpace,
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_indices(truth: &[usize], pred: &[usize], ls: &LabelSpace) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::Metric(format!(
                "{} true labels but {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::Metric("no predictions to evaluate".into()));
        }
        let k = ls.len();
        let mut counts = vec![vec![0; k]; k];
        for (&t, &p) in truth.iter().zip(pred) {
            if t >= k || p >= k {
                return Err(Error::Metric(format!("label index {} outside {k} labels", t.max(p))));
            }
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix {
            label_space: ls.clone(),
            counts,
        })
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, pred: usize) -> usize {
        self.counts[truth][pred]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }
}

fn label_indices<S: AsRef<str>>(labels: &[S], ls: &LabelSpace) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|l| {
            ls.index_of(l.as_ref())
                .ok_or_else(|| Error::Metric(format!("unknown label {:?}", l.as_ref())))
        })
        .collect()
}

pub fn confusion<S: AsRef<str>>(y_true: &[S], y_pred: &[S], ls: &LabelSpace) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Metric(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    ConfusionMatrix::from_indices(&label_indices(y_true, ls)?, &label_indices(y_pred, ls)?, ls)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Per-label metrics in label-space order.
pub fn prf_per_class(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    let k = cm.counts.len();
    (0..k)
        .map(|c| {
            let tp = cm.counts[c][c] as f64;
            let support: usize = cm.counts[c].iter().sum();
            let predicted: usize = (0..k).map(|r| cm.counts[r][c]).sum();
            let precision = ratio(tp, predicted as f64);
            let recall = ratio(tp, support as f64);
            ClassMetrics {
                precision,
                recall,
                f1: ratio(2.0 * precision * recall, precision + recall),
                support,
            }
        })
        .collect()
}

pub fn weighted_f1(cm: &ConfusionMatrix) -> f64 {
    let total = cm.total() as f64;
    prf_per_class(cm)
        .iter()
        .map(|m| m.support as f64 / total * m.f1)
        .sum()
}

pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    let per = prf_per_class(cm);
    per.iter().map(|m| m.f1).sum::<f64>() / per.len() as f64
}

pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    cm.trace() as f64 / cm.total() as f64
}

/// Mean absolute rank difference over an ordinal label space.
pub fn mae_ordinal<S: AsRef<str>>(y_true: &[S], y_pred: &[S], ls: &LabelSpace) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Metric(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    mae_ordinal_indices(&label_indices(y_true, ls)?, &label_indices(y_pred, ls)?, ls)
}

pub fn mae_ordinal_indices(truth: &[usize], pred: &[usize], ls: &LabelSpace) -> Result<f64> {
    let ranks = ls
        .ranks()
        .ok_or_else(|| Error::Metric("MAE needs an ordinal label space".into()))?;
    if truth.len() != pred.len() || truth.is_empty() {
        return Err(Error::Metric("MAE needs equal, nonzero numbers of labels".into()));
    }
    let sum: i64 = truth
        .iter()
        .zip(pred)
        .map(|(&t, &p)| (ranks[t] - ranks[p]).abs())
        .sum();
    Ok(sum as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    FeatureExtraction,
    Training,
    Prediction,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::FeatureExtraction => "feature_extraction",
            Phase::Training => "training",
            Phase::Prediction => "prediction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRecord {
    pub phase: Phase,
    pub wall_seconds: f64,
}

/// Runs `f` and measures it with the monotonic clock.
pub fn time_phase<T>(phase: Phase, f: impl FnOnce() -> T) -> (T, TimingRecord) {
    let start = Instant::now();
    let out = f();
    let wall_seconds = start.elapsed().as_secs_f64();
    (out, TimingRecord { phase, wall_seconds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub classifier: String,
    pub accuracy: f64,
    pub weighted_f1: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub mae: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub timings: Vec<TimingRecord>,
}

impl EvaluationReport {
    /// Computes every metric; MAE is included when the label space is ordinal.
    pub fn new(
        classifier: impl Into<String>,
        truth: &[usize],
        pred: &[usize],
        ls: &LabelSpace,
        timings: Vec<TimingRecord>,
    ) -> Result<Self> {
        let cm = ConfusionMatrix::from_indices(truth, pred, ls)?;
        let mae = if ls.is_ordinal() {
            Some(mae_ordinal_indices(truth, pred, ls)?)
        } else {
            None
        };
        Ok(EvaluationReport {
            classifier: classifier.into(),
            accuracy: accuracy(&cm),
            weighted_f1: weighted_f1(&cm),
            macro_f1: macro_f1(&cm),
            per_class: prf_per_class(&cm),
            mae,
            confusion: cm,
            timings,
        })
    }

    pub fn timing(&self, phase: Phase) -> Option<f64> {
        self.timings
            .iter()
            .filter(|t| t.phase == phase)
            .map(|t| t.wall_seconds)
            .reduce(|a, b| a + b)
    }

    pub fn to_json(&self) -> Value {
        let ls = self.confusion.label_space();
        let mut per_class = Map::new();
        for (i, m) in self.per_class.iter().enumerate() {
            per_class.insert(
                ls.label(i).to_string(),
                json!({
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }),
            );
        }
        let mut timing = Map::new();
        for t in &self.timings {
            timing.insert(format!("{}_seconds", t.phase.name()), json!(t.wall_seconds));
        }
        json!({
            "classifier": self.classifier,
            "accuracy": self.accuracy,
            "weighted_f1": self.weighted_f1,
            "macro_f1": self.macro_f1,
            "mae": self.mae,
            "per_class": per_class,
            "confusion": {
                "labels": ls.labels(),
                "counts": self.confusion.counts(),
            },
            "timing": timing,
        })
    }

    /// One `key = value` line per metric, with dotted keys for nested values.
    pub fn to_text(&self) -> String {
        let ls = self.confusion.label_space();
        let mut out = String::new();
        let _ = writeln!(out, "classifier = {}", self.classifier);
        let _ = writeln!(out, "accuracy = {}", self.accuracy);
        let _ = writeln!(out, "weighted_f1 = {}", self.weighted_f1);
        let _ = writeln!(out, "macro_f1 = {}", self.macro_f1);
        if let Some(mae) = self.mae {
            let _ = writeln!(out, "mae = {mae}");
        }
        for (i, m) in self.per_class.iter().enumerate() {
            let l = ls.label(i);
            let _ = writeln!(out, "per_class.{l}.precision = {}", m.precision);
            let _ = writeln!(out, "per_class.{l}.recall = {}", m.recall);
            let _ = writeln!(out, "per_class.{l}.f1 = {}", m.f1);
            let _ = writeln!(out, "per_class.{l}.support = {}", m.support);
        }
        for (i, row) in self.confusion.counts().iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                let _ = writeln!(out, "confusion.{}.{} = {c}", ls.label(i), ls.label(j));
            }
        }
        for t in &self.timings {
            let _ = writeln!(out, "timing.{}_seconds = {}", t.phase.name(), t.wall_seconds);
        }
        out
    }
}
