//! Bagged random forests and multiclass gradient boosting, both built on
//! the sparse CART engine in [`super::tree`].

use rayon::prelude::*;

use super::linear::softmax_in_place;
use super::tree::{argmax, ColumnIndex, GrowParams, Target, Tree, TreeBuilder};
use super::TrainingMatrix;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    /// `ceil(sqrt(dim))`
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, dim: usize) -> Option<usize> {
        match self {
            MaxFeatures::Sqrt => Some(((dim as f64).sqrt().ceil() as usize).max(1)),
            MaxFeatures::All => None,
            MaxFeatures::Count(n) => Some(n.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub seed: u64,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            seed: 0,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub n_classes: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Plurality vote of the trees' argmax classes; ties go to the lowest class index.
    pub fn predict_index(&self, x: &SparseVector) -> usize {
        let mut votes = vec![0.0; self.n_classes];
        for t in &self.trees {
            votes[argmax(t.leaf_scores(x))] += 1.0;
        }
        argmax(&votes)
    }
}

/// Tree `i` uses its own generator seeded with `seed + i`: `n` bootstrap
/// draws come first, then per-node feature draws.
pub(crate) fn fit_forest(m: &TrainingMatrix, p: &ForestParams) -> Result<Forest> {
    if p.n_trees == 0 {
        return Err(Error::Config("random forest needs at least one tree".into()));
    }
    let columns = ColumnIndex::new(m.rows(), m.dim());
    let grow = GrowParams {
        max_depth: p.max_depth,
        min_samples_leaf: p.min_samples_leaf.max(1),
        max_features: p.max_features.resolve(m.dim()),
    };
    let trees = (0..p.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = Rng::new(p.seed.wrapping_add(i as u64));
            let weights = p.bootstrap.then(|| {
                let n = m.len();
                let mut w = vec![0.0; n];
                for _ in 0..n {
                    w[rng.below(n)] += 1.0;
                }
                w
            });
            let target = Target::Classes {
                labels: m.labels(),
                n_classes: m.n_classes(),
            };
            TreeBuilder::new(m.rows(), &columns, target, grow, weights).grow(Some(&mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Forest {
        n_classes: m.n_classes(),
        trees,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GBoostConfig {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GBoostConfig {
    fn default() -> Self {
        GBoostConfig {
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

impl GBoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_stages == 0 {
            return Err(Error::Config("gradient boosting needs n_stages >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning rate {} must lie in (0, 1]",
                self.learning_rate
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

/// Additive per-class scores `F_c = init_c + sum of stage trees`; leaf
/// values already include the learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct GBoostModel {
    pub n_classes: usize,
    pub learning_rate: f64,
    pub init: Vec<f64>,
    /// `stages[s][c]` is the regression tree for class `c` at stage `s`.
    pub stages: Vec<Vec<Tree>>,
    /// Mean training log-loss before the first stage and after each stage.
    pub loss_trace: Vec<f64>,
}

const PRIOR_FLOOR: f64 = 1e-12;
const HESSIAN_FLOOR: f64 = 1e-8;

impl GBoostModel {
    pub fn raw_scores(&self, x: &SparseVector) -> Vec<f64> {
        let mut f = self.init.clone();
        for stage in &self.stages {
            for (c, t) in stage.iter().enumerate() {
                f[c] += t.leaf_scores(x)[0];
            }
        }
        f
    }

    pub fn proba(&self, x: &SparseVector) -> Vec<f64> {
        let mut f = self.raw_scores(x);
        softmax_in_place(&mut f);
        f
    }
}

fn mean_log_loss(scores: &[Vec<f64>], labels: &[usize]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(f, &y)| super::linear::cross_entropy(f, y))
        .sum();
    total / labels.len() as f64
}

/// Multinomial-deviance boosting. Scores start at log class priors; each
/// stage fits one variance-split regression tree per class to the residual
/// `y - p` and sets leaves to `lr * sum(r) / max(sum(|r|(1 - |r|)), 1e-8)`.
pub(crate) fn fit_gboost(m: &TrainingMatrix, cfg: &GBoostConfig) -> Result<GBoostModel> {
    cfg.validate()?;
    m.require_two_classes()?;
    let k = m.n_classes();
    let n = m.len();
    let mut counts = vec![0.0; k];
    for &y in m.labels() {
        counts[y] += 1.0;
    }
    let init: Vec<f64> = counts
        .iter()
        .map(|c| (c / n as f64).max(PRIOR_FLOOR).ln())
        .collect();
    let columns = ColumnIndex::new(m.rows(), m.dim());
    let grow = GrowParams {
        max_depth: Some(cfg.max_depth),
        min_samples_leaf: cfg.min_samples_leaf,
        max_features: None,
    };
    let mut scores: Vec<Vec<f64>> = vec![init.clone(); n];
    let mut loss_trace = vec![mean_log_loss(&scores, m.labels())];
    let mut stages = Vec::with_capacity(cfg.n_stages);
    for _ in 0..cfg.n_stages {
        let probs: Vec<Vec<f64>> = scores
            .iter()
            .map(|f| {
                let mut p = f.clone();
                softmax_in_place(&mut p);
                p
            })
            .collect();
        let trees = (0..k)
            .into_par_iter()
            .map(|c| {
                let residual: Vec<f64> = probs
                    .iter()
                    .zip(m.labels())
                    .map(|(p, &y)| (y == c) as u8 as f64 - p[c])
                    .collect();
                let hessian: Vec<f64> = residual.iter().map(|r| r.abs() * (1.0 - r.abs())).collect();
                let target = Target::Newton {
                    residual: &residual,
                    hessian: &hessian,
                    floor: HESSIAN_FLOOR,
                };
                let mut tree = TreeBuilder::new(m.rows(), &columns, target, grow, None).grow(None)?;
                tree.scale_leaves(cfg.learning_rate);
                Ok(tree)
            })
            .collect::<Result<Vec<Tree>>>()?;
        for (f, x) in scores.iter_mut().zip(m.rows()) {
            for (c, t) in trees.iter().enumerate() {
                f[c] += t.leaf_scores(x)[0];
            }
        }
        let loss = mean_log_loss(&scores, m.labels());
        if !loss.is_finite() {
            return Err(Error::Training("boosting loss became non-finite".into()));
        }
        loss_trace.push(loss);
        stages.push(trees);
    }
    Ok(GBoostModel {
        n_classes: k,
        learning_rate: cfg.learning_rate,
        init,
        stages,
        loss_trace,
    })
}
