//! Binary model files: `STYLOMDL`, a version digit, then a little-endian
//! payload. Layout is documented in `docs/formats.md`.

use super::ensemble::{Forest, GBoostModel};
use super::knn::KnnModel;
use super::linear::LinearModel;
use super::mlp::MlpModel;
use super::tree::{Tree, TreeNode};
use super::{Model, ModelKind, ModelParams};
use crate::codec::{check_header, Reader, Writer};
use crate::corpus::LabelSpace;
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

pub const MODEL_MAGIC: &[u8; 8] = b"STYLOMDL";
pub const MODEL_VERSION: u8 = b'1';

const LEAF: u8 = 0;
const SPLIT: u8 = 1;

impl Model {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(MODEL_MAGIC);
        w.u8(MODEL_VERSION);
        w.u8(self.kind().tag());
        write_label_space(&mut w, &self.label_space);
        w.usize(self.feature_dimension);
        match &self.params {
            ModelParams::Majority { label } => w.usize(*label),
            ModelParams::Knn(m) => {
                w.usize(m.k);
                w.usize(m.rows.len());
                for (row, label) in m.rows.iter().zip(&m.labels) {
                    w.usize(*label);
                    w.usize(row.nnz());
                    for (j, v) in row.iter() {
                        w.usize(j);
                        w.f64(v);
                    }
                }
            }
            ModelParams::LogReg(m) | ModelParams::LinSvm(m) => {
                w.f64s(&m.weights);
                w.f64s(&m.bias);
            }
            ModelParams::Mlp(m) => {
                w.usize(m.hidden);
                w.f64s(&m.params);
            }
            ModelParams::DTree(t) => write_tree(&mut w, t),
            ModelParams::RForest(f) => {
                w.usize(f.trees.len());
                f.trees.iter().for_each(|t| write_tree(&mut w, t));
            }
            ModelParams::GBoost(g) => {
                w.f64(g.learning_rate);
                w.f64s(&g.init);
                w.usize(g.stages.len());
                for stage in &g.stages {
                    stage.iter().for_each(|t| write_tree(&mut w, t));
                }
                w.f64s(&g.loss_trace);
            }
        }
        w.buf
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = Reader::new(data);
        check_header(&mut r, MODEL_MAGIC, MODEL_VERSION, "model")?;
        let tag = r.u8()?;
        let kind =
            ModelKind::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown model kind tag {tag}")))?;
        let label_space = read_label_space(&mut r)?;
        let k = label_space.len();
        let dim = r.usize()?;
        let params = match kind {
            ModelKind::Majority => {
                let label = r.usize()?;
                check_class(label, k)?;
                ModelParams::Majority { label }
            }
            ModelKind::Knn => {
                let kk = r.usize()?;
                let n = r.len(16)?;
                let mut rows = Vec::with_capacity(n);
                let mut labels = Vec::with_capacity(n);
                for _ in 0..n {
                    let label = r.usize()?;
                    check_class(label, k)?;
                    let nnz = r.len(16)?;
                    let mut entries = Vec::with_capacity(nnz);
                    for _ in 0..nnz {
                        entries.push((r.usize()?, r.f64()?));
                    }
                    rows.push(
                        SparseVector::new(dim, entries)
                            .map_err(|e| Error::Format(format!("bad KNN row: {e}")))?,
                    );
                    labels.push(label);
                }
                if kk == 0 || kk > n {
                    return Err(Error::Format(format!("KNN k = {kk} with {n} stored rows")));
                }
                ModelParams::Knn(KnnModel {
                    k: kk,
                    n_classes: k,
                    rows,
                    labels,
                })
            }
            ModelKind::LogReg | ModelKind::LinSvm => {
                let weights = r.f64s()?;
                let bias = r.f64s()?;
                if weights.len() != k * dim || bias.len() != k {
                    return Err(Error::Format("linear model shape mismatch".into()));
                }
                let m = LinearModel {
                    n_classes: k,
                    dim,
                    weights,
                    bias,
                };
                if kind == ModelKind::LogReg {
                    ModelParams::LogReg(m)
                } else {
                    ModelParams::LinSvm(m)
                }
            }
            ModelKind::Mlp => {
                let hidden = r.usize()?;
                let params = r.f64s()?;
                let expected = dim
                    .checked_mul(hidden)
                    .and_then(|v| v.checked_add(hidden + hidden * k + k));
                if hidden == 0 || expected != Some(params.len()) {
                    return Err(Error::Format("MLP parameter count mismatch".into()));
                }
                ModelParams::Mlp(MlpModel {
                    dim,
                    hidden,
                    n_classes: k,
                    params,
                })
            }
            ModelKind::DTree => ModelParams::DTree(read_tree(&mut r, dim, k)?),
            ModelKind::RForest => {
                let n = r.len(1)?;
                if n == 0 {
                    return Err(Error::Format("forest has no trees".into()));
                }
                let trees = (0..n).map(|_| read_tree(&mut r, dim, k)).collect::<Result<_>>()?;
                ModelParams::RForest(Forest { n_classes: k, trees })
            }
            ModelKind::GBoost => {
                let learning_rate = r.f64()?;
                let init = r.f64s()?;
                if init.len() != k {
                    return Err(Error::Format("boosting prior length mismatch".into()));
                }
                let n = r.len(1)?;
                let mut stages = Vec::with_capacity(n);
                for _ in 0..n {
                    stages.push((0..k).map(|_| read_tree(&mut r, dim, 1)).collect::<Result<_>>()?);
                }
                let loss_trace = r.f64s()?;
                ModelParams::GBoost(GBoostModel {
                    n_classes: k,
                    learning_rate,
                    init,
                    stages,
                    loss_trace,
                })
            }
        };
        r.finish()?;
        Ok(Model {
            label_space,
            feature_dimension: dim,
            training_time: 0.0,
            params,
        })
    }
}

fn check_class(label: usize, k: usize) -> Result<()> {
    if label >= k {
        return Err(Error::Format(format!("class index {label} outside {k} labels")));
    }
    Ok(())
}

fn write_label_space(w: &mut Writer, ls: &LabelSpace) {
    w.u8(ls.is_ordinal() as u8);
    w.usize(ls.len());
    for (i, l) in ls.labels().iter().enumerate() {
        w.str(l);
        if let Some(rank) = ls.rank(i) {
            w.i64(rank);
        }
    }
}

fn read_label_space(r: &mut Reader<'_>) -> Result<LabelSpace> {
    let ordinal = match r.u8()? {
        0 => false,
        1 => true,
        b => return Err(Error::Format(format!("bad label space flag {b}"))),
    };
    let n = r.len(4)?;
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let label = r.str()?;
        let rank = if ordinal { r.i64()? } else { 0 };
        pairs.push((label, rank));
    }
    let ls = if ordinal {
        LabelSpace::ordinal(&pairs)
    } else {
        let labels: Vec<&str> = pairs.iter().map(|(l, _)| l.as_str()).collect();
        LabelSpace::nominal(&labels)
    };
    ls.map_err(|e| Error::Format(format!("bad label space: {e}")))
}

fn write_tree(w: &mut Writer, t: &Tree) {
    w.usize(t.nodes().len());
    for n in t.nodes() {
        match n {
            TreeNode::Leaf { scores } => {
                w.u8(LEAF);
                scores.iter().for_each(|s| w.f64(*s));
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                w.u8(SPLIT);
                w.usize(*feature);
                w.f64(*threshold);
                w.usize(*left);
                w.usize(*right);
            }
        }
    }
}

fn read_tree(r: &mut Reader<'_>, dim: usize, n_scores: usize) -> Result<Tree> {
    let n = r.len(1)?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        nodes.push(match r.u8()? {
            LEAF => TreeNode::Leaf {
                scores: (0..n_scores).map(|_| r.f64()).collect::<Result<_>>()?,
            },
            SPLIT => TreeNode::Split {
                feature: r.usize()?,
                threshold: r.f64()?,
                left: r.usize()?,
                right: r.usize()?,
            },
            b => return Err(Error::Format(format!("bad tree node tag {b}"))),
        });
    }
    Tree::from_nodes(nodes, dim, n_scores)
}
