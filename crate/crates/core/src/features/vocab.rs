use std::collections::{BTreeMap, HashMap};

use crate::annotate::NgramMultiset;
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// Symbol index space fitted on training documents. Indices follow
/// lexicographic symbol order, so vocabularies are platform independent.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
    document_frequency: Vec<u64>,
    n_documents: u64,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from `(symbol, df)` pairs in index order.
    pub fn from_parts(entries: Vec<(String, u64)>, n_documents: u64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::NoSymbols);
        }
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Format(format!(
                    "vocabulary symbols out of order at {:?}",
                    w[1].0
                )));
            }
        }
        if entries.iter().any(|(_, df)| *df == 0 || *df > n_documents) {
            return Err(Error::Format("document frequency out of range".into()));
        }
        let (symbols, document_frequency): (Vec<String>, Vec<u64>) = entries.into_iter().unzip();
        let index = symbols.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Vocabulary {
            symbols,
            index,
            document_frequency,
            n_documents,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn get(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn document_frequency(&self) -> &[u64] {
        &self.document_frequency
    }

    pub fn n_documents(&self) -> u64 {
        self.n_documents
    }
}

/// Keeps symbols with `df >= min_df`; with `max_features`, the most frequent
/// symbols by total count (ties by symbol order) survive.
pub fn fit_vocabulary(
    corpus: &[NgramMultiset],
    min_df: u64,
    max_features: Option<usize>,
) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut stats: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for doc in corpus {
        for (symbol, count) in doc.iter() {
            let e = stats.entry(symbol).or_insert((0, 0));
            e.0 += 1;
            e.1 += count;
        }
    }
    let mut kept: Vec<(&str, u64, u64)> = stats
        .into_iter()
        .filter(|(_, (df, _))| *df >= min_df)
        .map(|(s, (df, total))| (s, df, total))
        .collect();
    if let Some(k) = max_features {
        if kept.len() > k {
            kept.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(b.0)));
            kept.truncate(k);
            kept.sort_by(|a, b| a.0.cmp(b.0));
        }
    }
    if kept.is_empty() {
        return Err(Error::NoSymbols);
    }
    Vocabulary::from_parts(
        kept.into_iter().map(|(s, df, _)| (s.to_string(), df)).collect(),
        corpus.len() as u64,
    )
}

/// Raw counts of in-vocabulary symbols; out-of-vocabulary symbols are dropped.
pub fn vectorize_counts(m: &NgramMultiset, v: &Vocabulary) -> SparseVector {
    let mut entries: Vec<(usize, f64)> = m
        .iter()
        .filter_map(|(s, c)| v.get(s).map(|i| (i, c as f64)))
        .collect();
    entries.sort_by_key(|e| e.0);
    SparseVector::new(v.len(), entries).expect("vocabulary indices are unique and in range")
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdfWeights {
    idf: Vec<f64>,
}

impl IdfWeights {
    pub fn from_values(idf: Vec<f64>) -> Self {
        IdfWeights { idf }
    }

    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.idf
    }
}

/// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
pub fn fit_idf(v: &Vocabulary) -> IdfWeights {
    let n = v.n_documents() as f64;
    IdfWeights {
        idf: v
            .document_frequency()
            .iter()
            .map(|&df| ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0)
            .collect(),
    }
}

/// Multiplies each count by its idf and scales the result to unit L2 norm.
pub fn transform_tfidf(counts: &SparseVector, w: &IdfWeights) -> Result<SparseVector> {
    if counts.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: counts.dim(),
        });
    }
    let mut out = SparseVector::new(
        counts.dim(),
        counts.iter().map(|(i, c)| (i, c * w.idf[i])),
    )?;
    let norm = out.norm();
    if norm > 0.0 {
        out.scale(1.0 / norm);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(entries: &[(&str, u64)]) -> NgramMultiset {
        entries.iter().map(|(s, c)| (*s, *c)).collect()
    }

    #[test]
    fn min_df_filter() {
        let v = fit_vocabulary(&[doc(&[("a", 1)]), doc(&[("a", 1), ("b", 1)])], 2, None).unwrap();
        assert_eq!(v.symbols(), &["a"]);
        assert_eq!(v.get("a"), Some(0));
        let v = fit_vocabulary(&[doc(&[("b", 1)]), doc(&[("a", 1), ("c", 4)])], 1, None).unwrap();
        assert_eq!(v.symbols(), &["a", "b", "c"]);
        assert_eq!(v.document_frequency(), &[1, 1, 1]);
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(fit_vocabulary(&[], 1, None), Err(Error::EmptyCorpus)));
        assert!(matches!(
            fit_vocabulary(&[doc(&[("a", 1)])], 2, None),
            Err(Error::NoSymbols)
        ));
        assert!(matches!(
            fit_vocabulary(&[NgramMultiset::new()], 1, None),
            Err(Error::NoSymbols)
        ));
    }

    #[test]
    fn counts_drop_oov() {
        let v = Vocabulary::from_parts(vec![("a".into(), 1), ("b".into(), 1)], 1).unwrap();
        let x = vectorize_counts(&doc(&[("a", 2), ("z", 1)]), &v);
        assert_eq!(x.dim(), 2);
        assert_eq!(x.iter().collect::<Vec<_>>(), [(0, 2.0)]);
        let empty = vectorize_counts(&NgramMultiset::new(), &v);
        assert_eq!((empty.dim(), empty.nnz()), (2, 0));
    }

    #[test]
    fn idf_values() {
        let v = Vocabulary::from_parts(vec![("a".into(), 3), ("b".into(), 1)], 3).unwrap();
        let w = fit_idf(&v);
        assert_eq!(w.values()[0], 1.0);
        assert!((w.values()[1] - 1.6931471805599453).abs() < 1e-15);
    }

    #[test]
    fn tfidf_hand_computed() {
        let w = IdfWeights::from_values(vec![1.0, 3.0]);
        let x = SparseVector::from_dense(&[1.0, 1.0]);
        let y = transform_tfidf(&x, &w).unwrap();
        let s = 10f64.sqrt();
        assert!((y.get(0) - 1.0 / s).abs() < 1e-15);
        assert!((y.get(1) - 3.0 / s).abs() < 1e-15);
        let zero = transform_tfidf(&SparseVector::zeros(2), &w).unwrap();
        assert_eq!(zero.nnz(), 0);
        assert!(transform_tfidf(&SparseVector::zeros(3), &w).is_err());
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<NgramMultiset>> {
        prop::collection::vec(
            prop::collection::btree_map("[a-f]{1,2}", 1u64..5, 0..8),
            1..12,
        )
        .prop_map(|docs| docs.into_iter().map(|d| d.into_iter().collect()).collect())
    }

    proptest! {
        #[test]
        fn max_features_matches_sort_oracle(corpus in corpus_strategy(), k in 1usize..10) {
            let mut totals: BTreeMap<String, u64> = BTreeMap::new();
            for d in &corpus {
                for (s, c) in d.iter() {
                    *totals.entry(s.to_string()).or_default() += c;
                }
            }
            prop_assume!(!totals.is_empty());
            let mut pairs: Vec<(u64, String)> = totals.into_iter().map(|(s, c)| (c, s)).collect();
            pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut expected: Vec<String> = pairs.into_iter().take(k).map(|(_, s)| s).collect();
            expected.sort();
            let v = fit_vocabulary(&corpus, 1, Some(k)).unwrap();
            prop_assert_eq!(v.symbols(), &expected[..]);
        }

        #[test]
        fn full_vocabulary_preserves_total(corpus in corpus_strategy()) {
            prop_assume!(corpus.iter().any(|d| !d.is_empty()));
            let v = fit_vocabulary(&corpus, 1, None).unwrap();
            for d in &corpus {
                prop_assert_eq!(vectorize_counts(d, &v).sum(), d.total() as f64);
            }
        }

        #[test]
        fn idf_monotone_in_df(corpus in corpus_strategy()) {
            prop_assume!(corpus.iter().any(|d| !d.is_empty()));
            let v = fit_vocabulary(&corpus, 1, None).unwrap();
            let w = fit_idf(&v);
            let df = v.document_frequency();
            for a in 0..v.len() {
                prop_assert!(w.values()[a] >= 1.0);
                for b in 0..v.len() {
                    if df[a] <= df[b] {
                        prop_assert!(w.values()[a] >= w.values()[b]);
                    }
                }
            }
        }

        #[test]
        fn tfidf_norm_is_zero_or_one(
            counts in prop::collection::vec(0u32..5, 6),
            idf in prop::collection::vec(1.0..4.0f64, 6),
        ) {
            let x = SparseVector::from_dense(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
            let y = transform_tfidf(&x, &IdfWeights::from_values(idf)).unwrap();
            let n = y.norm();
            prop_assert!(n == 0.0 || (n - 1.0).abs() <= 1e-12);
        }
    }
}
