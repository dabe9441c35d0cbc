//! The eight models (majority baseline, KNN, logistic regression, linear
//! SVM, MLP, decision tree, random forest, gradient boosting) behind one
//! train/predict contract over sparse rows.
//!
//! All tie-breaks are pinned: the majority baseline picks the
//! lexicographically smallest label, every argmax and vote picks the lowest
//! class index, KNN orders neighbours by `(distance, row index)`, and tree
//! splits prefer the lower feature index, then the lower threshold.

mod ensemble;
mod knn;
mod linear;
mod mlp;
mod persist;
pub mod tree;

use std::fmt;
use std::str::FromStr;

pub use ensemble::{Forest, ForestParams, GBoostConfig, GBoostModel, MaxFeatures};
pub use knn::KnnModel;
pub use linear::{LinSvmParams, LinearModel, LogRegParams, SoftmaxObjective};
pub use mlp::{MlpModel, MlpObjective, MlpParams};
pub use persist::{MODEL_MAGIC, MODEL_VERSION};
pub use tree::{Tree, TreeNode};

use crate::corpus::LabelSpace;
use crate::error::{Error, Result};
use crate::eval::{time_phase, Phase};
use crate::sparse::SparseVector;
use linear::softmax_in_place;
use tree::{argmax, ColumnIndex, GrowParams, Target, TreeBuilder};

/// Rows with label indices into a label space.
#[derive(Debug, Clone)]
pub struct TrainingMatrix {
    rows: Vec<SparseVector>,
    labels: Vec<usize>,
    label_space: LabelSpace,
    dim: usize,
}

impl TrainingMatrix {
    pub fn new(rows: Vec<SparseVector>, labels: Vec<usize>, label_space: LabelSpace) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                found: labels.len(),
            });
        }
        if rows.is_empty() {
            return Err(Error::NoInstances);
        }
        let dim = rows[0].dim();
        if let Some(r) = rows.iter().find(|r| r.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.dim(),
            });
        }
        if let Some(l) = labels.iter().find(|&&l| l >= label_space.len()) {
            return Err(Error::LabelSpace(format!(
                "label index {l} outside a space of {}",
                label_space.len()
            )));
        }
        Ok(TrainingMatrix {
            rows,
            labels,
            label_space,
            dim,
        })
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.label_space.len()
    }

    fn require_two_classes(&self) -> Result<()> {
        let first = self.labels[0];
        if self.labels.iter().all(|&l| l == first) {
            return Err(Error::Training(
                "at least two classes must be present in the training labels".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Majority,
    Knn,
    LogReg,
    LinSvm,
    Mlp,
    DTree,
    RForest,
    GBoost,
}

impl ModelKind {
    /// Canonical results-table order.
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Majority,
        ModelKind::Knn,
        ModelKind::LogReg,
        ModelKind::LinSvm,
        ModelKind::Mlp,
        ModelKind::DTree,
        ModelKind::RForest,
        ModelKind::GBoost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Majority => "majority",
            ModelKind::Knn => "knn",
            ModelKind::LogReg => "logreg",
            ModelKind::LinSvm => "linsvm",
            ModelKind::Mlp => "mlp",
            ModelKind::DTree => "dtree",
            ModelKind::RForest => "rforest",
            ModelKind::GBoost => "gboost",
        }
    }

    /// Column heading used in results tables.
    pub fn column(self) -> &'static str {
        match self {
            ModelKind::Majority => "Majority",
            ModelKind::Knn => "KNN",
            ModelKind::LogReg => "LR",
            ModelKind::LinSvm => "LSVM",
            ModelKind::Mlp => "MLP",
            ModelKind::DTree => "DT",
            ModelKind::RForest => "RF",
            ModelKind::GBoost => "GB",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s || k.column().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown classifier {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Majority { label: usize },
    Knn(KnnModel),
    LogReg(LinearModel),
    LinSvm(LinearModel),
    Mlp(MlpModel),
    DTree(Tree),
    RForest(Forest),
    GBoost(GBoostModel),
}

/// A trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub label_space: LabelSpace,
    pub feature_dimension: usize,
    /// Wall-clock training seconds; not persisted, so 0 after loading.
    pub training_time: f64,
    pub params: ModelParams,
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match &self.params {
            ModelParams::Majority { .. } => ModelKind::Majority,
            ModelParams::Knn(_) => ModelKind::Knn,
            ModelParams::LogReg(_) => ModelKind::LogReg,
            ModelParams::LinSvm(_) => ModelKind::LinSvm,
            ModelParams::Mlp(_) => ModelKind::Mlp,
            ModelParams::DTree(_) => ModelKind::DTree,
            ModelParams::RForest(_) => ModelKind::RForest,
            ModelParams::GBoost(_) => ModelKind::GBoost,
        }
    }

    fn check_dim(&self, x: &SparseVector) -> Result<()> {
        if x.dim() != self.feature_dimension {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dimension,
                found: x.dim(),
            });
        }
        Ok(())
    }

    pub fn predict_index(&self, x: &SparseVector) -> Result<usize> {
        self.check_dim(x)?;
        Ok(match &self.params {
            ModelParams::Majority { label } => *label,
            ModelParams::Knn(m) => m.predict_index(x),
            ModelParams::LogReg(m) | ModelParams::LinSvm(m) => argmax(&m.decision_values(x)),
            ModelParams::Mlp(m) => argmax(&m.logits(x)),
            ModelParams::DTree(t) => argmax(t.leaf_scores(x)),
            ModelParams::RForest(f) => f.predict_index(x),
            ModelParams::GBoost(g) => argmax(&g.raw_scores(x)),
        })
    }

    pub fn predict_indices(&self, rows: &[SparseVector]) -> Result<Vec<usize>> {
        rows.iter().map(|x| self.predict_index(x)).collect()
    }

    pub fn predict(&self, rows: &[SparseVector]) -> Result<Vec<String>> {
        Ok(self
            .predict_indices(rows)?
            .into_iter()
            .map(|i| self.label_space.label(i).to_string())
            .collect())
    }

    /// Class probabilities for the probabilistic kinds (logreg, mlp, gboost).
    pub fn predict_proba(&self, x: &SparseVector) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        match &self.params {
            ModelParams::LogReg(m) => {
                let mut z = m.decision_values(x);
                softmax_in_place(&mut z);
                Ok(z)
            }
            ModelParams::Mlp(m) => Ok(m.proba(x)),
            ModelParams::GBoost(g) => Ok(g.proba(x)),
            _ => Err(Error::Config(format!(
                "{} does not produce probabilities",
                self.kind()
            ))),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        Self::from_bytes(&data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

/// A classifier kind with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    Majority,
    Knn { k: usize },
    LogReg(LogRegParams),
    LinSvm(LinSvmParams),
    Mlp(MlpParams),
    DTree(TreeParams),
    RForest(ForestParams),
    GBoost(GBoostConfig),
}

impl ClassifierSpec {
    /// Default hyperparameters; `seed` feeds the MLP and the forest.
    pub fn default_for(kind: ModelKind, seed: u64) -> Self {
        match kind {
            ModelKind::Majority => ClassifierSpec::Majority,
            ModelKind::Knn => ClassifierSpec::Knn { k: 5 },
            ModelKind::LogReg => ClassifierSpec::LogReg(LogRegParams::default()),
            ModelKind::LinSvm => ClassifierSpec::LinSvm(LinSvmParams::default()),
            ModelKind::Mlp => ClassifierSpec::Mlp(MlpParams {
                seed,
                ..MlpParams::default()
            }),
            ModelKind::DTree => ClassifierSpec::DTree(TreeParams::default()),
            ModelKind::RForest => ClassifierSpec::RForest(ForestParams {
                seed,
                ..ForestParams::default()
            }),
            ModelKind::GBoost => ClassifierSpec::GBoost(GBoostConfig::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierSpec::Majority => ModelKind::Majority,
            ClassifierSpec::Knn { .. } => ModelKind::Knn,
            ClassifierSpec::LogReg(_) => ModelKind::LogReg,
            ClassifierSpec::LinSvm(_) => ModelKind::LinSvm,
            ClassifierSpec::Mlp(_) => ModelKind::Mlp,
            ClassifierSpec::DTree(_) => ModelKind::DTree,
            ClassifierSpec::RForest(_) => ModelKind::RForest,
            ClassifierSpec::GBoost(_) => ModelKind::GBoost,
        }
    }
}

/// Trains one model and records its wall-clock training time.
pub fn train(spec: &ClassifierSpec, m: &TrainingMatrix) -> Result<Model> {
    let (params, timing) = time_phase(Phase::Training, || -> Result<ModelParams> {
        Ok(match spec {
            ClassifierSpec::Majority => ModelParams::Majority {
                label: majority_label(m),
            },
            ClassifierSpec::Knn { k } => ModelParams::Knn(knn::fit_knn(m, *k)?),
            ClassifierSpec::LogReg(p) => ModelParams::LogReg(linear::fit_logreg(m, p)?),
            ClassifierSpec::LinSvm(p) => ModelParams::LinSvm(linear::fit_linsvm(m, p)?),
            ClassifierSpec::Mlp(p) => ModelParams::Mlp(mlp::fit_mlp(m, p)?),
            ClassifierSpec::DTree(p) => ModelParams::DTree(fit_tree(m, p)?),
            ClassifierSpec::RForest(p) => ModelParams::RForest(ensemble::fit_forest(m, p)?),
            ClassifierSpec::GBoost(c) => ModelParams::GBoost(ensemble::fit_gboost(m, c)?),
        })
    });
    Ok(Model {
        label_space: m.label_space.clone(),
        feature_dimension: m.dim,
        training_time: timing.wall_seconds,
        params: params?,
    })
}

pub fn train_majority(m: &TrainingMatrix) -> Result<Model> {
    train(&ClassifierSpec::Majority, m)
}

pub fn train_knn(m: &TrainingMatrix, k: usize) -> Result<Model> {
    train(&ClassifierSpec::Knn { k }, m)
}

pub fn train_logreg(m: &TrainingMatrix, p: LogRegParams) -> Result<Model> {
    train(&ClassifierSpec::LogReg(p), m)
}

pub fn train_linsvm(m: &TrainingMatrix, p: LinSvmParams) -> Result<Model> {
    train(&ClassifierSpec::LinSvm(p), m)
}

pub fn train_mlp(m: &TrainingMatrix, p: MlpParams) -> Result<Model> {
    train(&ClassifierSpec::Mlp(p), m)
}

pub fn train_dtree(m: &TrainingMatrix, p: TreeParams) -> Result<Model> {
    train(&ClassifierSpec::DTree(p), m)
}

pub fn train_rforest(m: &TrainingMatrix, p: ForestParams) -> Result<Model> {
    train(&ClassifierSpec::RForest(p), m)
}

pub fn train_gboost(m: &TrainingMatrix, cfg: GBoostConfig) -> Result<Model> {
    train(&ClassifierSpec::GBoost(cfg), m)
}

/// Most frequent label; ties go to the lexicographically smallest label string.
fn majority_label(m: &TrainingMatrix) -> usize {
    let mut counts = vec![0usize; m.n_classes()];
    for &l in &m.labels {
        counts[l] += 1;
    }
    let ls = &m.label_space;
    (0..counts.len())
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then_with(|| ls.label(b).cmp(ls.label(a))))
        .expect("label space is nonempty")
}

fn fit_tree(m: &TrainingMatrix, p: &TreeParams) -> Result<Tree> {
    let columns = ColumnIndex::new(&m.rows, m.dim);
    let grow = GrowParams {
        max_depth: p.max_depth,
        min_samples_leaf: p.min_samples_leaf.max(1),
        max_features: None,
    };
    let target = Target::Classes {
        labels: &m.labels,
        n_classes: m.n_classes(),
    };
    TreeBuilder::new(&m.rows, &columns, target, grow, None).grow(None)
}
