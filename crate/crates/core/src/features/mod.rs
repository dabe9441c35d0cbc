//! Sparse feature vectors from symbol multisets and external embeddings.
//!
//! Six blocks are available, always concatenated in this order: word
//! unigram counts, word TF-IDF, character n-gram counts, POS n-gram counts,
//! morphological feature counts, and standardized dense embeddings.

mod embedding;
mod pipeline;
mod vocab;

pub use embedding::{load_embeddings, parse_embeddings, write_embeddings, Embeddings};
pub use pipeline::{
    block_symbols, fit_pipeline, BlockKind, BlockOptions, FeatureInputs, FittedBlock,
    FittedPipeline, PipelineConfig, PIPELINE_MAGIC, PIPELINE_VERSION,
};
pub use vocab::{fit_idf, fit_vocabulary, transform_tfidf, vectorize_counts, IdfWeights, Vocabulary};

pub use crate::sparse::SparseVector;
