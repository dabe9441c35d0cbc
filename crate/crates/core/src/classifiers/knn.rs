//! Brute-force k-nearest neighbours under Euclidean distance.

use super::tree::argmax;
use super::TrainingMatrix;
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// Stores the training rows verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub n_classes: usize,
    pub rows: Vec<SparseVector>,
    pub labels: Vec<usize>,
}

impl KnnModel {
    /// Indices of the `k` nearest training rows ordered by `(distance, row index)`.
    pub fn neighbours(&self, x: &SparseVector) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.squared_distance(x), i))
            .collect();
        let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, by);
            d.truncate(self.k);
        }
        d.sort_unstable_by(by);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Majority label among the neighbours; ties go to the lowest class index.
    pub fn predict_index(&self, x: &SparseVector) -> usize {
        let mut votes = vec![0.0; self.n_classes];
        for i in self.neighbours(x) {
            votes[self.labels[i]] += 1.0;
        }
        argmax(&votes)
    }
}

pub(crate) fn fit_knn(m: &TrainingMatrix, k: usize) -> Result<KnnModel> {
    if k == 0 {
        return Err(Error::Config("KNN needs k >= 1".into()));
    }
    if k > m.len() {
        return Err(Error::Config(format!(
            "KNN k = {k} exceeds the {} training instances",
            m.len()
        )));
    }
    Ok(KnnModel {
        k,
        n_classes: m.n_classes(),
        rows: m.rows().to_vec(),
        labels: m.labels().to_vec(),
    })
}
