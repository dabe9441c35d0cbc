use std::time::Instant;

use stylo_core::annotate::char_ngrams;
use stylo_core::features::{
    fit_pipeline, BlockKind, BlockOptions, FeatureInputs, FittedPipeline, PipelineConfig, PIPELINE_MAGIC,
};
use stylo_core::synth::{annotations_of, generate_synthetic_corpus, SyntheticTask, EMBEDDING_DIM};

fn task(n: usize) -> SyntheticTask {
    generate_synthetic_corpus(5, n).unwrap().bias
}

#[test]
fn block_concatenation_equals_manual_splice() {
    let t = task(120);
    let ann = annotations_of(&t);
    let inputs = FeatureInputs {
        annotations: Some(&ann),
        embeddings: Some(&t.embeddings),
    };
    let pairs = [
        (BlockKind::WordBow, BlockKind::CharBow),
        (BlockKind::WordTfidf, BlockKind::PosBow),
        (BlockKind::Morph, BlockKind::Embedding),
    ];
    for (a, b) in pairs {
        let both = fit_pipeline(&t.train, inputs, &PipelineConfig::with_kinds(&[b, a], Some(EMBEDDING_DIM)).unwrap())
            .unwrap();
        let only_a = fit_pipeline(&t.train, inputs, &PipelineConfig::with_kinds(&[a], Some(EMBEDDING_DIM)).unwrap())
            .unwrap();
        let only_b = fit_pipeline(&t.train, inputs, &PipelineConfig::with_kinds(&[b], Some(EMBEDDING_DIM)).unwrap())
            .unwrap();
        assert_eq!(both.dim(), only_a.dim() + only_b.dim());
        assert_eq!(both.blocks()[0].kind, a);
        assert_eq!(both.blocks()[1].offset, only_a.dim());
        for inst in t.test.instances() {
            let joint = both.transform(inst, inputs).unwrap();
            let va = only_a.transform(inst, inputs).unwrap();
            let vb = only_b.transform(inst, inputs).unwrap();
            let mut spliced = va.to_dense();
            spliced.extend(vb.to_dense());
            assert_eq!(joint.to_dense(), spliced, "{a} + {b} on {}", inst.id);
        }
    }
}

#[test]
fn char_block_counts_match_substring_enumeration() {
    let t = task(60);
    let cfg = PipelineConfig::new(vec![(BlockKind::CharBow, BlockOptions::for_kind(BlockKind::CharBow))], None)
        .unwrap();
    let p = fit_pipeline(&t.train, FeatureInputs::default(), &cfg).unwrap();
    let vocab = p.block(BlockKind::CharBow).unwrap().vocabulary().unwrap();
    let inst = &t.train.instances()[0];
    let row = p.transform(inst, FeatureInputs::default()).unwrap();
    let chars: Vec<char> = inst.text.chars().collect();
    for (j, v) in row.iter() {
        let sym = vocab.symbol(j);
        let (_, gram) = sym.split_once(':').unwrap();
        let target: Vec<char> = gram.chars().collect();
        let count = chars.windows(target.len()).filter(|w| *w == target.as_slice()).count();
        assert_eq!(v, count as f64, "{sym:?}");
    }
    let total: f64 = row.iter().map(|(_, v)| v).sum();
    let l = chars.len();
    assert_eq!(total as usize, (1..=4).map(|n| l + 1 - n).sum::<usize>());
    assert_eq!(char_ngrams(&inst.text, 1, 4).total() as usize, total as usize);
}

#[test]
fn pipeline_bytes_round_trip() {
    let t = task(80);
    let ann = annotations_of(&t);
    let inputs = FeatureInputs {
        annotations: Some(&ann),
        embeddings: Some(&t.embeddings),
    };
    let cfg = PipelineConfig::with_kinds(&BlockKind::ALL, Some(EMBEDDING_DIM)).unwrap();
    let p = fit_pipeline(&t.train, inputs, &cfg).unwrap();
    let bytes = p.to_bytes();
    assert!(bytes.starts_with(PIPELINE_MAGIC));
    let q = FittedPipeline::from_bytes(&bytes).unwrap();
    assert_eq!(p, q);
    assert_eq!(
        p.transform_dataset(&t.test, inputs).unwrap(),
        q.transform_dataset(&t.test, inputs).unwrap()
    );
    let mut bad = bytes.clone();
    bad[0] = b'x';
    assert!(FittedPipeline::from_bytes(&bad).unwrap_err().to_string().contains("not a pipeline file"));
    assert!(FittedPipeline::from_bytes(&bytes[..bytes.len() - 3]).is_err());
}

#[test]
fn missing_inputs_are_reported_per_block() {
    let t = task(60);
    let cfg = PipelineConfig::with_kinds(&[BlockKind::Embedding], Some(EMBEDDING_DIM)).unwrap();
    let e = fit_pipeline(&t.train, FeatureInputs::default(), &cfg).unwrap_err().to_string();
    assert!(e.contains("embedding"), "{e}");
}

#[test]
fn seven_hundred_documents_extract_within_the_reported_time() {
    // 1060 instances split 66/34 leave 699 training documents.
    let t = task(1060);
    assert_eq!(t.train.len(), 699);
    let ann = annotations_of(&t);
    let inputs = FeatureInputs {
        annotations: Some(&ann),
        embeddings: Some(&t.embeddings),
    };
    let start = Instant::now();
    let cfg = PipelineConfig::with_kinds(&BlockKind::ALL, Some(EMBEDDING_DIM)).unwrap();
    let p = fit_pipeline(&t.train, inputs, &cfg).unwrap();
    p.transform_dataset(&t.train, inputs).unwrap();
    p.transform_dataset(&t.test, inputs).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 84.0, "feature extraction took {secs:.1}s");
}
