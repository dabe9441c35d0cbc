#![allow(dead_code)]

use stylo_core::classifiers::{TrainingMatrix, Tree, TreeNode};
use stylo_core::corpus::LabelSpace;
use stylo_core::rng::Rng;
use stylo_core::sparse::SparseVector;

pub fn label_space(k: usize) -> LabelSpace {
    let names: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
    LabelSpace::nominal(&names).unwrap()
}

/// Dense rows with small integer values, about half of them zero.
pub fn integer_rows(rng: &mut Rng, n: usize, dim: usize, max_value: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if rng.bernoulli(0.5) {
                        0.0
                    } else {
                        rng.below(max_value + 1) as f64
                    }
                })
                .collect()
        })
        .collect()
}

pub fn gaussian_rows(rng: &mut Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.normal()).collect()).collect()
}

/// Labels covering every class at least once.
pub fn labels(rng: &mut Rng, n: usize, k: usize) -> Vec<usize> {
    let mut y: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.below(k) }).collect();
    rng.shuffle(&mut y);
    y
}

pub fn sparse(rows: &[Vec<f64>]) -> Vec<SparseVector> {
    rows.iter().map(|r| SparseVector::from_dense(r)).collect()
}

pub fn matrix(rows: &[Vec<f64>], y: &[usize], k: usize) -> TrainingMatrix {
    TrainingMatrix::new(sparse(rows), y.to_vec(), label_space(k)).unwrap()
}

/// `||a - b|| / max(||a||, ||b||)`, or the absolute difference when both are tiny.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = norm(a).max(norm(b));
    if scale < 1e-8 {
        diff
    } else {
        diff / scale
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Central differences with step `h` for each coordinate.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, p: &[f64], h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    (0..p.len())
        .map(|i| {
            q[i] = p[i] + h;
            let up = f(&q);
            q[i] = p[i] - h;
            let down = f(&q);
            q[i] = p[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Metrics computed from scratch by counting over the pairs.
#[derive(Debug)]
pub struct BruteMetrics {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<usize>,
    pub weighted_f1: f64,
    pub macro_f1: f64,
}

pub fn brute_metrics(truth: &[usize], pred: &[usize], k: usize) -> BruteMetrics {
    let n = truth.len();
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
    let mut precision = vec![];
    let mut recall = vec![];
    let mut f1 = vec![];
    let mut support = vec![];
    for c in 0..k {
        let tp = (0..n).filter(|&i| truth[i] == c && pred[i] == c).count() as f64;
        let fp = (0..n).filter(|&i| truth[i] != c && pred[i] == c).count() as f64;
        let fneg = (0..n).filter(|&i| truth[i] == c && pred[i] != c).count() as f64;
        let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let r = if tp + fneg > 0.0 { tp / (tp + fneg) } else { 0.0 };
        precision.push(p);
        recall.push(r);
        f1.push(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 });
        support.push(truth.iter().filter(|&&t| t == c).count());
    }
    let weighted_f1 = (0..k).map(|c| f1[c] * support[c] as f64).sum::<f64>() / n as f64;
    let macro_f1 = f1.iter().sum::<f64>() / k as f64;
    BruteMetrics {
        accuracy: correct as f64 / n as f64,
        precision,
        recall,
        f1,
        support,
        weighted_f1,
        macro_f1,
    }
}

pub fn brute_mae(truth: &[usize], pred: &[usize], ranks: &[i64]) -> f64 {
    let total: i64 = truth.iter().zip(pred).map(|(&t, &p)| (ranks[t] - ranks[p]).abs()).sum();
    total as f64 / truth.len() as f64
}

/// Text outputs with wall-clock values blanked: raw seconds and the bucketed
/// training-time row, which can flip when a run lands near a bucket edge.
pub fn mask_timings(name: &str, bytes: &[u8]) -> Vec<u8> {
    if name.ends_with(".bin") {
        return bytes.to_vec();
    }
    let text = String::from_utf8(bytes.to_vec()).expect("text output is UTF-8");
    text.lines()
        .map(|l| {
            if l.contains("_seconds") || l.starts_with("Training time") {
                "<timing>"
            } else {
                l
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
        .into_bytes()
}

/// Node impurity `w * gini` for the class counts of `rows`.
pub fn weighted_gini(rows: &[usize], y: &[usize], k: usize) -> f64 {
    let mut counts = vec![0.0; k];
    for &r in rows {
        counts[y[r]] += 1.0;
    }
    let w = rows.len() as f64;
    if w == 0.0 {
        return 0.0;
    }
    w - counts.iter().map(|c| c * c).sum::<f64>() / w
}

/// Exhaustive search: every feature, every threshold halfway between
/// consecutive distinct values. Returns (score, feature, threshold) of the
/// lowest score, ties going to the smallest (feature, threshold).
pub fn best_gini_split(x: &[Vec<f64>], y: &[usize], k: usize, rows: &[usize]) -> Option<(f64, usize, f64)> {
    let mut best: Option<(f64, usize, f64)> = None;
    let dim = x[0].len();
    #[allow(clippy::needless_range_loop)]
    for j in 0..dim {
        let mut values: Vec<f64> = rows.iter().map(|&r| x[r][j]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = w[0] / 2.0 + w[1] / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][j] <= t);
            let score = weighted_gini(&l, y, k) + weighted_gini(&r, y, k);
            let better = match best {
                None => true,
                Some((s, ..)) => score < s - 1e-9,
            };
            if better {
                best = Some((score, j, t));
            }
        }
    }
    best
}

/// Majority vote of the `k` nearest rows by exhaustive scan; distance ties
/// go to the lower row index, vote ties to the lower class.
pub fn knn_oracle(x: &[Vec<f64>], y: &[usize], k: usize, n_classes: usize, q: &[f64]) -> usize {
    let mut d: Vec<(f64, usize)> = x
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in &d[..k] {
        votes[y[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == top).unwrap()
}

/// Walks every node of `tree`: splits must be the exhaustive search's choice,
/// impure leaves must have no split available, and leaf scores must be class
/// frequencies.
pub fn check_tree_against_gini_oracle(x: &[Vec<f64>], y: &[usize], k: usize, tree: &Tree) -> Result<(), String> {
    let nodes = tree.nodes();
    let mut stack = vec![(0usize, (0..x.len()).collect::<Vec<_>>())];
    while let Some((i, rows)) = stack.pop() {
        match &nodes[i] {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let (best, bf, bt) =
                    best_gini_split(x, y, k, &rows).ok_or(format!("node {i} split but no split exists"))?;
                if (*feature, *threshold) != (bf, bt) {
                    return Err(format!("node {i}: chose ({feature}, {threshold}), oracle ({bf}, {bt})"));
                }
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&row| x[row][*feature] <= *threshold);
                let score = weighted_gini(&l, y, k) + weighted_gini(&r, y, k);
                if (score - best).abs() >= 1e-9 {
                    return Err(format!("node {i}: score {score} vs oracle {best}"));
                }
                stack.push((*left, l));
                stack.push((*right, r));
            }
            TreeNode::Leaf { scores } => {
                if weighted_gini(&rows, y, k) > 1e-9 && best_gini_split(x, y, k, &rows).is_some() {
                    return Err(format!("impure leaf {i} could be split"));
                }
                for (c, s) in scores.iter().enumerate() {
                    let freq = rows.iter().filter(|&&r| y[r] == c).count() as f64 / rows.len() as f64;
                    if (s - freq).abs() >= 1e-12 {
                        return Err(format!("leaf {i}: score {s} for class {c}, frequency {freq}"));
                    }
                }
            }
        }
    }
    Ok(())
}
