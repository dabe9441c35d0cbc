//! CART trees over sparse rows.
//!
//! Split search works column-wise: every feature's nonzero entries are
//! sorted by value once per training matrix ([`ColumnIndex`]). At a node
//! the in-node entries of a column are filtered out of that order, and all
//! implicit zeros form one extra group whose statistics are the node
//! totals minus the nonzero part. Rows never get densified.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { scores: Vec<f64> },
}

/// Node arena with the root at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn from_nodes(nodes: Vec<TreeNode>, dim: usize, n_scores: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Format("tree has no nodes".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            match n {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= dim
                        || !threshold.is_finite()
                        || *left <= i
                        || *right <= i
                        || *left >= nodes.len()
                        || *right >= nodes.len()
                    {
                        return Err(Error::Format(format!("invalid split node {i}")));
                    }
                }
                TreeNode::Leaf { scores } => {
                    if scores.len() != n_scores {
                        return Err(Error::Format(format!("leaf {i} has {} scores", scores.len())));
                    }
                }
            }
        }
        Ok(Tree { nodes })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaf_index(&self, x: &SparseVector) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x.get(*feature) <= *threshold { *left } else { *right },
                TreeNode::Leaf { .. } => return i,
            }
        }
    }

    pub fn leaf_scores(&self, x: &SparseVector) -> &[f64] {
        match &self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { scores } => scores,
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    pub(crate) fn scale_leaves(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let TreeNode::Leaf { scores } = n {
                scores.iter_mut().for_each(|s| *s *= factor);
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

/// Per-feature nonzero entries sorted by `(value, row)`.
#[derive(Debug, Clone)]
pub struct ColumnIndex {
    starts: Vec<usize>,
    rows: Vec<u32>,
    values: Vec<f64>,
    row_nnz: Vec<usize>,
}

impl ColumnIndex {
    pub fn new(rows: &[SparseVector], dim: usize) -> Self {
        let mut counts = vec![0usize; dim + 1];
        for r in rows {
            for &j in r.indices() {
                counts[j + 1] += 1;
            }
        }
        for j in 0..dim {
            counts[j + 1] += counts[j];
        }
        let nnz = counts[dim];
        let mut fill = counts.clone();
        let mut entries = vec![(0u32, 0.0f64); nnz];
        for (ri, r) in rows.iter().enumerate() {
            for (j, v) in r.iter() {
                entries[fill[j]] = (ri as u32, v);
                fill[j] += 1;
            }
        }
        for j in 0..dim {
            entries[counts[j]..counts[j + 1]]
                .sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        }
        let (rows_out, values) = entries.into_iter().unzip();
        ColumnIndex {
            starts: counts,
            rows: rows_out,
            values,
            row_nnz: rows.iter().map(SparseVector::nnz).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.starts.len() - 1
    }

    fn column(&self, j: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.starts[j], self.starts[j + 1]);
        (&self.rows[a..b], &self.values[a..b])
    }

    fn total_nnz(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per node; `None` examines all of them in index order.
    pub max_features: Option<usize>,
}

pub(crate) enum Target<'a> {
    /// Class indices; leaves hold class-frequency scores.
    Classes { labels: &'a [usize], n_classes: usize },
    /// Variance-reduction splits on `residual`; leaves hold the Newton step
    /// `sum(residual) / max(sum(hessian), floor)`.
    Newton {
        residual: &'a [f64],
        hessian: &'a [f64],
        floor: f64,
    },
}

#[derive(Debug, Clone)]
struct Stats {
    w: f64,
    sum: f64,
    sumsq: f64,
    class_w: Vec<f64>,
}

impl Stats {
    fn empty(target: &Target<'_>) -> Self {
        let k = match target {
            Target::Classes { n_classes, .. } => *n_classes,
            Target::Newton { .. } => 0,
        };
        Stats {
            w: 0.0,
            sum: 0.0,
            sumsq: 0.0,
            class_w: vec![0.0; k],
        }
    }

    fn add_row(&mut self, target: &Target<'_>, row: usize, w: f64) {
        self.w += w;
        match target {
            Target::Classes { labels, .. } => self.class_w[labels[row]] += w,
            Target::Newton { residual, .. } => {
                let r = residual[row];
                self.sum += w * r;
                self.sumsq += w * r * r;
            }
        }
    }

    fn add(&mut self, other: &Stats) {
        self.w += other.w;
        self.sum += other.sum;
        self.sumsq += other.sumsq;
        for (a, b) in self.class_w.iter_mut().zip(&other.class_w) {
            *a += b;
        }
    }

    fn minus(&self, other: &Stats) -> Stats {
        Stats {
            w: self.w - other.w,
            sum: self.sum - other.sum,
            sumsq: self.sumsq - other.sumsq,
            class_w: self.class_w.iter().zip(&other.class_w).map(|(a, b)| a - b).collect(),
        }
    }

    /// Weight times Gini impurity, or the sum of squared deviations.
    fn impurity(&self, classes: bool) -> f64 {
        if self.w <= 0.0 {
            return 0.0;
        }
        if classes {
            self.w - self.class_w.iter().map(|c| c * c).sum::<f64>() / self.w
        } else {
            self.sumsq - self.sum * self.sum / self.w
        }
    }

    fn scale(&self, classes: bool) -> f64 {
        if classes {
            self.w
        } else {
            self.sumsq
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Candidate {
    fn beats(&self, best: &Option<Candidate>, tol: f64) -> bool {
        match best {
            None => true,
            Some(b) => {
                if self.score < b.score - tol {
                    true
                } else if self.score <= b.score + tol {
                    (self.feature, self.threshold) < (b.feature, b.threshold)
                } else {
                    false
                }
            }
        }
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    if m >= b || m < a {
        a
    } else {
        m
    }
}

pub(crate) struct TreeBuilder<'a> {
    rows: &'a [SparseVector],
    columns: &'a ColumnIndex,
    target: Target<'a>,
    params: GrowParams,
    /// Sample multiplicities; rows with weight 0 are not in the sample.
    weights: Vec<f64>,
    mark: Vec<u32>,
    stamp: u32,
    feature_order: Vec<usize>,
    scratch: Vec<(f64, u32)>,
    gathered: Vec<(usize, f64, u32)>,
}

struct Pending {
    slot: usize,
    rows: Vec<usize>,
    depth: usize,
}

impl<'a> TreeBuilder<'a> {
    pub(crate) fn new(
        rows: &'a [SparseVector],
        columns: &'a ColumnIndex,
        target: Target<'a>,
        params: GrowParams,
        weights: Option<Vec<f64>>,
    ) -> Self {
        let n = rows.len();
        TreeBuilder {
            rows,
            columns,
            target,
            params,
            weights: weights.unwrap_or_else(|| vec![1.0; n]),
            mark: vec![0; n],
            stamp: 0,
            feature_order: (0..columns.dim()).collect(),
            scratch: Vec::new(),
            gathered: Vec::new(),
        }
    }

    fn classes(&self) -> bool {
        matches!(self.target, Target::Classes { .. })
    }

    fn node_stats(&self, rows: &[usize]) -> Stats {
        let mut s = Stats::empty(&self.target);
        for &r in rows {
            s.add_row(&self.target, r, self.weights[r]);
        }
        s
    }

    fn leaf(&self, rows: &[usize], stats: &Stats) -> Result<TreeNode> {
        let scores = match &self.target {
            Target::Classes { .. } => stats.class_w.iter().map(|c| c / stats.w).collect(),
            Target::Newton { hessian, floor, .. } => {
                let h: f64 = rows.iter().map(|&r| self.weights[r] * hessian[r]).sum();
                let v = stats.sum / h.max(*floor);
                if !v.is_finite() {
                    return Err(Error::Training(format!("non-finite leaf value {v}")));
                }
                vec![v]
            }
        };
        Ok(TreeNode::Leaf { scores })
    }

    pub(crate) fn grow(mut self, rng: Option<&mut Rng>) -> Result<Tree> {
        let root_rows: Vec<usize> = (0..self.rows.len()).filter(|&r| self.weights[r] > 0.0).collect();
        if root_rows.is_empty() {
            return Err(Error::Training("no rows to grow a tree on".into()));
        }
        let mut rng = rng;
        let mut nodes: Vec<Option<TreeNode>> = vec![None];
        let mut stack = vec![Pending {
            slot: 0,
            rows: root_rows,
            depth: 0,
        }];
        while let Some(p) = stack.pop() {
            let stats = self.node_stats(&p.rows);
            let classes = self.classes();
            let impurity = stats.impurity(classes);
            let tol = 1e-12 * stats.scale(classes).abs().max(f64::MIN_POSITIVE);
            let can_split = self.params.max_depth.is_none_or(|d| p.depth < d)
                && stats.w >= 2.0 * self.params.min_samples_leaf as f64
                && impurity > tol;
            let split = if can_split {
                self.best_split(&p.rows, &stats, tol, rng.as_deref_mut())
            } else {
                None
            };
            match split {
                None => nodes[p.slot] = Some(self.leaf(&p.rows, &stats)?),
                Some(c) => {
                    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = p
                        .rows
                        .iter()
                        .partition(|&&r| self.rows[r].get(c.feature) <= c.threshold);
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(None);
                    nodes.push(None);
                    nodes[p.slot] = Some(TreeNode::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    });
                    stack.push(Pending {
                        slot: right,
                        rows: right_rows,
                        depth: p.depth + 1,
                    });
                    stack.push(Pending {
                        slot: left,
                        rows: left_rows,
                        depth: p.depth + 1,
                    });
                }
            }
        }
        Ok(Tree {
            nodes: nodes.into_iter().map(|n| n.expect("every slot filled")).collect(),
        })
    }

    fn best_split(
        &mut self,
        rows: &[usize],
        stats: &Stats,
        tol: f64,
        rng: Option<&mut Rng>,
    ) -> Option<Candidate> {
        self.stamp += 1;
        for &r in rows {
            self.mark[r] = self.stamp;
        }
        let mut best = None;
        match (self.params.max_features, rng) {
            (Some(m), Some(rng)) if m < self.columns.dim() => {
                let d = self.columns.dim();
                let mut informative = 0;
                for t in 0..d {
                    let pick = t + rng.below(d - t);
                    self.feature_order.swap(t, pick);
                    let j = self.feature_order[t];
                    self.collect_column(j);
                    if self.scan_feature(j, rows.len(), stats, tol, &mut best) {
                        informative += 1;
                        if informative == m {
                            break;
                        }
                    }
                }
            }
            _ => {
                let node_nnz: usize = rows.iter().map(|&r| self.columns.row_nnz[r]).sum();
                if node_nnz.saturating_mul(8) < self.columns.total_nnz() {
                    self.scan_gathered(rows, stats, tol, &mut best);
                } else {
                    for j in 0..self.columns.dim() {
                        self.collect_column(j);
                        self.scan_feature(j, rows.len(), stats, tol, &mut best);
                    }
                }
            }
        }
        best
    }

    fn collect_column(&mut self, j: usize) {
        self.scratch.clear();
        let (rows, values) = self.columns.column(j);
        for (&r, &v) in rows.iter().zip(values) {
            if self.mark[r as usize] == self.stamp {
                self.scratch.push((v, r));
            }
        }
    }

    /// Row-wise gathering for small nodes, visiting features in index order.
    fn scan_gathered(&mut self, rows: &[usize], stats: &Stats, tol: f64, best: &mut Option<Candidate>) {
        let mut gathered = std::mem::take(&mut self.gathered);
        gathered.clear();
        for &r in rows {
            for (j, v) in self.rows[r].iter() {
                gathered.push((j, v, r as u32));
            }
        }
        gathered.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut start = 0;
        while start < gathered.len() {
            let j = gathered[start].0;
            let end = start + gathered[start..].iter().take_while(|e| e.0 == j).count();
            self.scratch.clear();
            self.scratch.extend(gathered[start..end].iter().map(|e| (e.1, e.2)));
            self.scan_feature(j, rows.len(), stats, tol, best);
            start = end;
        }
        self.gathered = gathered;
    }

    /// Evaluates every threshold of feature `j` over the entries in
    /// `scratch`. Returns whether the feature takes more than one value in
    /// the node.
    fn scan_feature(
        &mut self,
        j: usize,
        node_rows: usize,
        node: &Stats,
        tol: f64,
        best: &mut Option<Candidate>,
    ) -> bool {
        let buf = &self.scratch;
        let n_zero = node_rows - buf.len();
        if buf.is_empty() || (n_zero == 0 && buf[0].0 == buf[buf.len() - 1].0) {
            return false;
        }
        let classes = self.classes();
        let mut zero = node.clone();
        if n_zero > 0 {
            let mut nonzero = Stats::empty(&self.target);
            for &(_, r) in buf.iter() {
                nonzero.add_row(&self.target, r as usize, self.weights[r as usize]);
            }
            zero = node.minus(&nonzero);
        }
        let msl = self.params.min_samples_leaf as f64;
        let mut left = Stats::empty(&self.target);
        let mut last: Option<f64> = None;
        let mut zero_pending = n_zero > 0;
        let mut i = 0;
        loop {
            let take_zero = zero_pending && (i >= buf.len() || buf[i].0 > 0.0);
            let value = if take_zero {
                0.0
            } else if i < buf.len() {
                buf[i].0
            } else {
                break;
            };
            if let Some(a) = last {
                if value > a && left.w >= msl && node.w - left.w >= msl {
                    let right = node.minus(&left);
                    let cand = Candidate {
                        feature: j,
                        threshold: midpoint(a, value),
                        score: left.impurity(classes) + right.impurity(classes),
                    };
                    if cand.beats(best, tol) {
                        *best = Some(cand);
                    }
                }
            }
            if take_zero {
                left.add(&zero);
                zero_pending = false;
            } else {
                let r = buf[i].1 as usize;
                left.add_row(&self.target, r, self.weights[r]);
                i += 1;
            }
            last = Some(value);
        }
        true
    }
}

/// Index of the largest score; ties go to the lowest index.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}
