use crate::error::{Error, Result};

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Entries must have strictly increasing indices below `dim`; zeros are dropped.
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut v = SparseVector::zeros(dim);
        for (i, x) in entries {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i + 1,
                });
            }
            if v.indices.last().is_some_and(|&last| last >= i) {
                return Err(Error::Format(format!(
                    "sparse indices must be strictly increasing (index {i})"
                )));
            }
            if x != 0.0 {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        Ok(v)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let mut v = SparseVector::zeros(values.len());
        for (i, &x) in values.iter().enumerate() {
            if x != 0.0 {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, x) in self.iter() {
            out[i] = x;
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `self · w` for a dense `w` of length at least `dim`.
    pub fn dot_dense(&self, w: &[f64]) -> f64 {
        self.iter().map(|(i, x)| x * w[i]).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for x in &mut self.values {
            *x *= factor;
        }
    }

    /// Squared Euclidean distance, merging the two index lists in order.
    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.indices, &other.indices);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            let d = if a[i] == b[j] {
                let d = self.values[i] - other.values[j];
                i += 1;
                j += 1;
                d
            } else if a[i] < b[j] {
                i += 1;
                self.values[i - 1]
            } else {
                j += 1;
                other.values[j - 1]
            };
            acc += d * d;
        }
        acc += self.values[i..].iter().map(|x| x * x).sum::<f64>();
        acc += other.values[j..].iter().map(|x| x * x).sum::<f64>();
        acc
    }

    /// Concatenates blocks in order; the result has the summed dimension.
    pub fn concat(blocks: &[SparseVector]) -> SparseVector {
        let mut out = SparseVector::zeros(blocks.iter().map(|b| b.dim).sum());
        let mut offset = 0;
        for b in blocks {
            out.indices.extend(b.indices.iter().map(|i| i + offset));
            out.values.extend_from_slice(&b.values);
            offset += b.dim;
        }
        out
    }

    /// Entries with index in `start..start + dim`, re-based at zero.
    pub fn slice(&self, start: usize, dim: usize) -> SparseVector {
        let mut out = SparseVector::zeros(dim);
        for (i, x) in self.iter() {
            if i >= start && i < start + dim {
                out.indices.push(i - start);
                out.values.push(x);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn construction_checks() {
        assert!(SparseVector::new(3, [(0, 1.0), (0, 2.0)]).is_err());
        assert!(SparseVector::new(3, [(3, 1.0)]).is_err());
        let v = SparseVector::new(3, [(0, 0.0), (2, 5.0)]).unwrap();
        assert_eq!(v.nnz(), 1);
        assert_eq!(v.get(2), 5.0);
        assert_eq!(v.get(1), 0.0);
    }

    #[test]
    fn concat_and_slice() {
        let a = SparseVector::from_dense(&[1.0, 0.0]);
        let b = SparseVector::from_dense(&[0.0, 2.0, 3.0]);
        let c = SparseVector::concat(&[a.clone(), b.clone()]);
        assert_eq!(c.to_dense(), vec![1.0, 0.0, 0.0, 2.0, 3.0]);
        assert_eq!(c.slice(0, 2), a);
        assert_eq!(c.slice(2, 3), b);
    }

    proptest! {
        #[test]
        fn distance_matches_dense(
            a in prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], 12),
            b in prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], 12),
        ) {
            let dense: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
            let sparse = SparseVector::from_dense(&a).squared_distance(&SparseVector::from_dense(&b));
            prop_assert!((dense - sparse).abs() <= 1e-9 * (1.0 + dense));
        }
    }
}
