use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embedding::Embeddings;
use super::vocab::{fit_idf, fit_vocabulary, transform_tfidf, vectorize_counts, IdfWeights, Vocabulary};
use crate::annotate::{self, Annotations, NgramMultiset};
use crate::codec::{check_header, Reader, Writer};
use crate::corpus::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

pub const PIPELINE_MAGIC: &[u8] = b"STYLOPIPE";
pub const PIPELINE_VERSION: u8 = b'1';

const STD_FLOOR: f64 = 1e-8;

/// Feature families, listed in their fixed concatenation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    WordBow,
    WordTfidf,
    CharBow,
    PosBow,
    Morph,
    Embedding,
}

impl BlockKind {
    pub const ALL: [BlockKind; 6] = [
        BlockKind::WordBow,
        BlockKind::WordTfidf,
        BlockKind::CharBow,
        BlockKind::PosBow,
        BlockKind::Morph,
        BlockKind::Embedding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlockKind::WordBow => "word_bow",
            BlockKind::WordTfidf => "word_tfidf",
            BlockKind::CharBow => "char_bow",
            BlockKind::PosBow => "pos_bow",
            BlockKind::Morph => "morph",
            BlockKind::Embedding => "embedding",
        }
    }

    fn tag(self) -> u8 {
        self as u8
    }

    fn from_tag(tag: u8) -> Result<Self> {
        Self::ALL
            .get(tag as usize)
            .copied()
            .ok_or_else(|| Error::Format(format!("unknown block tag {tag}")))
    }

    fn default_ngrams(self) -> (usize, usize) {
        match self {
            BlockKind::CharBow | BlockKind::PosBow => (1, 4),
            _ => (1, 1),
        }
    }

    fn uses_ngrams(self) -> bool {
        matches!(
            self,
            BlockKind::WordBow | BlockKind::WordTfidf | BlockKind::CharBow | BlockKind::PosBow
        )
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature block {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlockOptions {
    pub min_df: u64,
    pub max_features: Option<usize>,
    pub ngram_min: usize,
    pub ngram_max: usize,
    /// `1 + ln(tf)` instead of raw counts (TF-IDF block only).
    pub sublinear_tf: bool,
    /// Scale count blocks to unit L2 norm. TF-IDF is always normalized.
    pub l2_normalize: bool,
}

impl Default for BlockOptions {
    fn default() -> Self {
        BlockOptions {
            min_df: 1,
            max_features: None,
            ngram_min: 1,
            ngram_max: 1,
            sublinear_tf: false,
            l2_normalize: false,
        }
    }
}

impl BlockOptions {
    pub fn for_kind(kind: BlockKind) -> Self {
        let (ngram_min, ngram_max) = kind.default_ngrams();
        BlockOptions {
            ngram_min,
            ngram_max,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    blocks: Vec<(BlockKind, BlockOptions)>,
    embedding_dim: Option<usize>,
}

impl PipelineConfig {
    /// Blocks are reordered into the fixed concatenation order.
    pub fn new(
        mut blocks: Vec<(BlockKind, BlockOptions)>,
        embedding_dim: Option<usize>,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Config("at least one feature block must be enabled".into()));
        }
        blocks.sort_by_key(|b| b.0);
        for w in blocks.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Config(format!("feature block {} listed twice", w[0].0)));
            }
        }
        for (kind, opts) in &blocks {
            if kind.uses_ngrams()
                && !(1 <= opts.ngram_min && opts.ngram_min <= opts.ngram_max && opts.ngram_max <= 4)
            {
                return Err(Error::Config(format!(
                    "{kind}: n-gram range {}..={} must lie within 1..=4",
                    opts.ngram_min, opts.ngram_max
                )));
            }
            if opts.min_df == 0 {
                return Err(Error::Config(format!("{kind}: min_df must be at least 1")));
            }
        }
        let has_embedding = blocks.iter().any(|b| b.0 == BlockKind::Embedding);
        match (has_embedding, embedding_dim) {
            (true, None) | (true, Some(0)) => {
                return Err(Error::Config("embedding block needs a positive dimension".into()))
            }
            _ => {}
        }
        Ok(PipelineConfig {
            blocks,
            embedding_dim: if has_embedding { embedding_dim } else { None },
        })
    }

    /// Every block with default options.
    pub fn with_kinds(kinds: &[BlockKind], embedding_dim: Option<usize>) -> Result<Self> {
        Self::new(
            kinds.iter().map(|k| (*k, BlockOptions::for_kind(*k))).collect(),
            embedding_dim,
        )
    }

    pub fn blocks(&self) -> &[(BlockKind, BlockOptions)] {
        &self.blocks
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.embedding_dim
    }

    /// Keeps only the listed blocks.
    pub fn restrict(&self, kinds: &[BlockKind]) -> Result<Self> {
        Self::new(
            self.blocks
                .iter()
                .filter(|b| kinds.contains(&b.0))
                .copied()
                .collect(),
            self.embedding_dim,
        )
    }
}

/// External per-instance inputs for the annotation and embedding blocks.
#[derive(Debug, Clone, Copy, Default)]
pub struct FeatureInputs<'a> {
    pub annotations: Option<&'a Annotations>,
    pub embeddings: Option<&'a Embeddings>,
}

#[derive(Debug, Clone, PartialEq)]
enum BlockState {
    Counts(Vocabulary),
    Tfidf(Vocabulary, IdfWeights),
    Embedding { mean: Vec<f64>, std: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedBlock {
    pub kind: BlockKind,
    pub options: BlockOptions,
    pub offset: usize,
    pub dim: usize,
    state: BlockState,
}

impl FittedBlock {
    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        match &self.state {
            BlockState::Counts(v) | BlockState::Tfidf(v, _) => Some(v),
            BlockState::Embedding { .. } => None,
        }
    }

    pub fn idf(&self) -> Option<&IdfWeights> {
        match &self.state {
            BlockState::Tfidf(_, w) => Some(w),
            _ => None,
        }
    }

    fn transform(&self, inst: &Instance, inputs: FeatureInputs<'_>) -> Result<SparseVector> {
        match &self.state {
            BlockState::Counts(vocab) => {
                let m = block_symbols(self.kind, &self.options, inst, inputs)?;
                let mut v = vectorize_counts(&m, vocab);
                if self.options.l2_normalize {
                    let n = v.norm();
                    if n > 0.0 {
                        v.scale(1.0 / n);
                    }
                }
                Ok(v)
            }
            BlockState::Tfidf(vocab, idf) => {
                let m = block_symbols(self.kind, &self.options, inst, inputs)?;
                let mut counts = vectorize_counts(&m, vocab);
                if self.options.sublinear_tf {
                    counts = SparseVector::new(counts.dim(), counts.iter().map(|(i, c)| (i, 1.0 + c.ln())))?;
                }
                transform_tfidf(&counts, idf)
            }
            BlockState::Embedding { mean, std } => {
                let raw = embedding_of(inst, inputs)?;
                if raw.len() != mean.len() {
                    return Err(Error::DimensionMismatch {
                        expected: mean.len(),
                        found: raw.len(),
                    });
                }
                let standardized: Vec<f64> = raw
                    .iter()
                    .zip(mean.iter().zip(std))
                    .map(|(x, (m, s))| (x - m) / s)
                    .collect();
                Ok(SparseVector::from_dense(&standardized))
            }
        }
    }
}

fn missing(kind: BlockKind, id: &str) -> Error {
    Error::MissingInput {
        block: kind.name().to_string(),
        ids: vec![id.to_string()],
    }
}

fn embedding_of<'a>(inst: &Instance, inputs: FeatureInputs<'a>) -> Result<&'a [f64]> {
    inputs
        .embeddings
        .and_then(|e| e.get(&inst.id))
        .map(Vec::as_slice)
        .ok_or_else(|| missing(BlockKind::Embedding, &inst.id))
}

/// The symbol multiset a block extracts from one instance.
pub fn block_symbols(
    kind: BlockKind,
    opts: &BlockOptions,
    inst: &Instance,
    inputs: FeatureInputs<'_>,
) -> Result<NgramMultiset> {
    let sentences = || {
        inputs
            .annotations
            .and_then(|a| a.get(&inst.id))
            .ok_or_else(|| missing(kind, &inst.id))
    };
    match kind {
        BlockKind::WordBow | BlockKind::WordTfidf => Ok(annotate::word_ngrams(
            &annotate::tokenize(&inst.text),
            opts.ngram_min,
            opts.ngram_max,
        )),
        BlockKind::CharBow => Ok(annotate::char_ngrams(&inst.text, opts.ngram_min, opts.ngram_max)),
        BlockKind::PosBow => {
            let mut m = NgramMultiset::new();
            for s in sentences()? {
                m.merge(&annotate::pos_ngrams(s, opts.ngram_min, opts.ngram_max)?);
            }
            Ok(m)
        }
        BlockKind::Morph => {
            let mut m = NgramMultiset::new();
            for s in sentences()? {
                m.merge(&annotate::morph_feature_counts(s));
            }
            Ok(m)
        }
        BlockKind::Embedding => Err(Error::Config("embedding block has no symbols".into())),
    }
}

fn check_coverage(kind: BlockKind, dataset: &Dataset, inputs: FeatureInputs<'_>) -> Result<()> {
    let has = |id: &str| match kind {
        BlockKind::PosBow | BlockKind::Morph => {
            inputs.annotations.is_some_and(|a| a.contains_key(id))
        }
        BlockKind::Embedding => inputs.embeddings.is_some_and(|e| e.contains_key(id)),
        _ => true,
    };
    let ids: Vec<String> = dataset
        .instances()
        .iter()
        .filter(|i| !has(&i.id))
        .map(|i| i.id.clone())
        .collect();
    if ids.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingInput {
            block: kind.name().to_string(),
            ids,
        })
    }
}

/// Fitted feature extractor: one block per enabled family, laid out at
/// consecutive offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    blocks: Vec<FittedBlock>,
    dim: usize,
}

/// Fits every enabled block on the training set only.
pub fn fit_pipeline(
    train: &Dataset,
    inputs: FeatureInputs<'_>,
    cfg: &PipelineConfig,
) -> Result<FittedPipeline> {
    let mut blocks = Vec::with_capacity(cfg.blocks().len());
    let mut offset = 0;
    for &(kind, options) in cfg.blocks() {
        check_coverage(kind, train, inputs)?;
        let state = match kind {
            BlockKind::Embedding => fit_embedding_block(train, inputs, cfg.embedding_dim().unwrap())?,
            _ => {
                let docs = train
                    .instances()
                    .par_iter()
                    .map(|inst| block_symbols(kind, &options, inst, inputs))
                    .collect::<Result<Vec<_>>>()?;
                let vocab = fit_vocabulary(&docs, options.min_df, options.max_features)
                    .map_err(|e| e.in_phase(kind.name()))?;
                if kind == BlockKind::WordTfidf {
                    let idf = fit_idf(&vocab);
                    BlockState::Tfidf(vocab, idf)
                } else {
                    BlockState::Counts(vocab)
                }
            }
        };
        let dim = match &state {
            BlockState::Counts(v) | BlockState::Tfidf(v, _) => v.len(),
            BlockState::Embedding { mean, .. } => mean.len(),
        };
        blocks.push(FittedBlock {
            kind,
            options,
            offset,
            dim,
            state,
        });
        offset += dim;
    }
    Ok(FittedPipeline { blocks, dim: offset })
}

fn fit_embedding_block(train: &Dataset, inputs: FeatureInputs<'_>, dim: usize) -> Result<BlockState> {
    let mut mean = vec![0.0; dim];
    let n = train.len() as f64;
    for inst in train.instances() {
        let v = embedding_of(inst, inputs)?;
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for inst in train.instances() {
        for ((s, x), m) in var.iter_mut().zip(embedding_of(inst, inputs)?).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
    Ok(BlockState::Embedding { mean, std })
}

impl FittedPipeline {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[FittedBlock] {
        &self.blocks
    }

    pub fn block(&self, kind: BlockKind) -> Option<&FittedBlock> {
        self.blocks.iter().find(|b| b.kind == kind)
    }

    /// Concatenation of every block's vector at its recorded offset.
    pub fn transform(&self, inst: &Instance, inputs: FeatureInputs<'_>) -> Result<SparseVector> {
        let parts = self
            .blocks
            .iter()
            .map(|b| b.transform(inst, inputs))
            .collect::<Result<Vec<_>>>()?;
        Ok(SparseVector::concat(&parts))
    }

    pub fn transform_block(
        &self,
        kind: BlockKind,
        inst: &Instance,
        inputs: FeatureInputs<'_>,
    ) -> Result<SparseVector> {
        self.block(kind)
            .ok_or_else(|| Error::Config(format!("block {kind} not fitted")))?
            .transform(inst, inputs)
    }

    pub fn transform_dataset(&self, d: &Dataset, inputs: FeatureInputs<'_>) -> Result<Vec<SparseVector>> {
        for b in &self.blocks {
            check_coverage(b.kind, d, inputs)?;
        }
        d.instances()
            .par_iter()
            .map(|inst| self.transform(inst, inputs))
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(PIPELINE_MAGIC);
        w.u8(PIPELINE_VERSION);
        w.u32(self.blocks.len() as u32);
        for b in &self.blocks {
            w.u8(b.kind.tag());
            w.usize(b.offset);
            w.usize(b.dim);
            let o = &b.options;
            w.u64(o.min_df);
            w.u8(o.max_features.is_some() as u8);
            w.usize(o.max_features.unwrap_or(0));
            w.u32(o.ngram_min as u32);
            w.u32(o.ngram_max as u32);
            w.u8(o.sublinear_tf as u8);
            w.u8(o.l2_normalize as u8);
            match &b.state {
                BlockState::Counts(v) | BlockState::Tfidf(v, _) => {
                    w.u64(v.n_documents());
                    w.usize(v.len());
                    for (s, df) in v.symbols().iter().zip(v.document_frequency()) {
                        w.str(s);
                        w.u64(*df);
                    }
                    if let BlockState::Tfidf(_, idf) = &b.state {
                        w.f64s(idf.values());
                    }
                }
                BlockState::Embedding { mean, std } => {
                    w.f64s(mean);
                    w.f64s(std);
                }
            }
        }
        w.buf
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = Reader::new(data);
        check_header(&mut r, PIPELINE_MAGIC, PIPELINE_VERSION, "pipeline")?;
        let n = r.u32()? as usize;
        let mut blocks = Vec::with_capacity(n.min(6));
        let mut expected_offset = 0;
        for _ in 0..n {
            let kind = BlockKind::from_tag(r.u8()?)?;
            let offset = r.usize()?;
            let dim = r.usize()?;
            let min_df = r.u64()?;
            let has_max = r.u8()? != 0;
            let max = r.usize()?;
            let options = BlockOptions {
                min_df,
                max_features: has_max.then_some(max),
                ngram_min: r.u32()? as usize,
                ngram_max: r.u32()? as usize,
                sublinear_tf: r.u8()? != 0,
                l2_normalize: r.u8()? != 0,
            };
            let state = if kind == BlockKind::Embedding {
                let mean = r.f64s()?;
                let std = r.f64s()?;
                if mean.len() != dim || std.len() != dim {
                    return Err(Error::Format("embedding statistics length mismatch".into()));
                }
                BlockState::Embedding { mean, std }
            } else {
                let n_docs = r.u64()?;
                let v = r.len(12)?;
                let mut entries = Vec::with_capacity(v);
                for _ in 0..v {
                    let s = r.str()?;
                    entries.push((s, r.u64()?));
                }
                let vocab = Vocabulary::from_parts(entries, n_docs)?;
                if vocab.len() != dim {
                    return Err(Error::Format("vocabulary size mismatch".into()));
                }
                if kind == BlockKind::WordTfidf {
                    let idf = r.f64s()?;
                    if idf.len() != dim {
                        return Err(Error::Format("idf length mismatch".into()));
                    }
                    BlockState::Tfidf(vocab, IdfWeights::from_values(idf))
                } else {
                    BlockState::Counts(vocab)
                }
            };
            if offset != expected_offset {
                return Err(Error::Format("block offsets do not partition the feature space".into()));
            }
            expected_offset += dim;
            blocks.push(FittedBlock {
                kind,
                options,
                offset,
                dim,
                state,
            });
        }
        r.finish()?;
        Ok(FittedPipeline {
            blocks,
            dim: expected_offset,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        Self::from_bytes(&data)
    }
}
