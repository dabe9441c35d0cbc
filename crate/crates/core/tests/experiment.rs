mod common;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use common::mask_timings;
use sha2::{Digest, Sha256};
use stylo_core::classifiers::ModelKind;
use stylo_core::corpus::write_tsv;
use stylo_core::experiment::{
    featurize, load_data, run_experiment, run_seeds, write_all, write_feature_rows, ExperimentConfig, RunResult,
};
use stylo_core::features::BlockKind;
use stylo_core::report::parse_results_csv;
use stylo_core::synth::generate_synthetic_corpus;

const MINI_CONFIG: &str = r#"
config_version = 1
seed = 7

[data]
format = "jsonl"
train = "bias/train.jsonl"
test = "bias/test.jsonl"
annotations = "bias/annotations.conllu"
embeddings = "bias/embeddings.txt"

[data.schema]
text = "body"
headline = "headline"

[labels]
names = ["left", "center", "right"]
ordinal = true

[features]
blocks = ["word_bow", "word_tfidf", "char_bow", "pos_bow", "morph", "embedding"]
embedding_dim = 32
ablations = true

[features.char_bow]
min_df = 2
ngram_max = 3
l2_normalize = true

[features.word_bow]
l2_normalize = true

[[classifier]]
kind = "majority"

[[classifier]]
kind = "knn"
k = 3

[[classifier]]
kind = "logreg"
epochs = 100

[[classifier]]
kind = "linsvm"
epochs = 50

[[classifier]]
kind = "mlp"
hidden = 16
epochs = 50

[[classifier]]
kind = "dtree"
max_depth = 6

[[classifier]]
kind = "rforest"
n_trees = 20

[[classifier]]
kind = "gboost"
n_stages = 20
"#;

fn mini_setup() -> (tempfile::TempDir, PathBuf) {
    corpus_setup(7)
}

/// A 150-instance synthetic corpus and the mini config, in a temporary directory.
fn corpus_setup(corpus_seed: u64) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic_corpus(corpus_seed, 150).unwrap().write(dir.path()).unwrap();
    let cfg = dir.path().join("mini.toml");
    std::fs::write(&cfg, MINI_CONFIG).unwrap();
    (dir, cfg)
}

fn masked(r: &RunResult) -> Vec<(String, Vec<u8>)> {
    r.files().into_iter().map(|(n, b)| (n.clone(), mask_timings(&n, &b))).collect()
}

fn golden_text(r: &RunResult) -> String {
    let mut out = String::new();
    for (name, bytes) in masked(r) {
        writeln!(out, "== {name}").unwrap();
        if name.ends_with(".bin") {
            writeln!(out, "sha256 {}", hex::encode(Sha256::digest(&bytes))).unwrap();
        } else {
            out.push_str(&String::from_utf8(bytes).unwrap());
            out.push('\n');
        }
    }
    out
}

#[test]
fn mini_run_matches_golden_file() {
    let (_dir, cfg) = mini_setup();
    let r = run_experiment(&ExperimentConfig::load(&cfg).unwrap()).unwrap();

    let majority = r.table.columns()[0].weighted_f1;
    assert_eq!(r.table.columns()[0].kind, ModelKind::Majority);
    for c in r.table.columns() {
        assert!(c.weighted_f1 >= majority, "{:?} below the majority baseline", c.kind);
    }
    for rep in &r.reports {
        let j = rep.to_json();
        assert!(j["timing"]["feature_extraction_seconds"].is_number());
        assert!(j["mae"].is_number());
    }
    assert_eq!(r.ablations.len(), 6);

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/mini_run.txt");
    let got = golden_text(&r);
    if std::env::var_os("STYLO_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &got).unwrap();
    }
    let want = std::fs::read_to_string(&golden)
        .expect("golden file missing; run with STYLO_UPDATE_GOLDEN=1 to create it");
    assert!(got == want, "mini run output differs from {}; rerun with STYLO_UPDATE_GOLDEN=1 if intended", golden.display());
}

#[test]
fn forest_training_accuracy_tracks_tree_test_accuracy() {
    let mut lines = String::new();
    for seed in 1..=5 {
        let (_dir, cfg) = corpus_setup(seed);
        let mut c = ExperimentConfig::load(&cfg).unwrap();
        c.seed = seed;
        c.ablations = false;
        c.filter_classifiers(&[ModelKind::DTree, ModelKind::RForest]).unwrap();
        let data = load_data(&c).unwrap();
        let f = featurize(&c.pipeline, &data).unwrap();
        let r = run_experiment(&c).unwrap();
        let rf = r.models.iter().find(|m| m.kind() == ModelKind::RForest).unwrap();
        let truth = data.train.label_indices().unwrap();
        let pred = rf.predict_indices(&f.train_rows).unwrap();
        let rf_train = truth.iter().zip(&pred).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64;
        let dt_test = r.reports.iter().find(|x| x.classifier == "dtree").unwrap().accuracy;
        writeln!(lines, "seed {seed}: forest train {rf_train:.6} >= tree test {dt_test:.6}").unwrap();
        assert!(rf_train >= dt_test, "seed {seed}: {rf_train} < {dt_test}");
    }
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/forest_vs_tree.txt");
    if std::env::var_os("STYLO_UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &lines).unwrap();
    }
    assert_eq!(lines, std::fs::read_to_string(&golden).unwrap());
}

#[test]
fn repeated_runs_are_identical_apart_from_timings() {
    let (_dir, cfg) = mini_setup();
    let mut c = ExperimentConfig::load(&cfg).unwrap();
    c.ablations = false;
    let a = run_experiment(&c).unwrap();
    let b = run_experiment(&c).unwrap();
    assert_eq!(masked(&a), masked(&b));
}

#[test]
fn test_side_content_does_not_reach_the_pipeline() {
    let (dir, cfg) = mini_setup();
    let mut c = ExperimentConfig::load(&cfg).unwrap();
    c.restrict_features(&[BlockKind::WordBow, BlockKind::WordTfidf, BlockKind::CharBow]).unwrap();
    let before = featurize(&c.pipeline, &load_data(&c).unwrap()).unwrap();

    let test_path = dir.path().join("bias/test.jsonl");
    let altered: String = std::fs::read_to_string(&test_path)
        .unwrap()
        .lines()
        .map(|l| l.replace("\"body\":\"", "\"body\":\"zebra quagga xylophone ") + "\n")
        .collect();
    std::fs::write(&test_path, altered).unwrap();
    let after = featurize(&c.pipeline, &load_data(&c).unwrap()).unwrap();

    assert_eq!(before.pipeline.to_bytes(), after.pipeline.to_bytes());
    assert_eq!(before.train_rows, after.train_rows);
    assert_ne!(before.test_rows, after.test_rows);
}

#[test]
fn results_csv_round_trips() {
    let (_dir, cfg) = mini_setup();
    let mut c = ExperimentConfig::load(&cfg).unwrap();
    c.ablations = false;
    let r = run_experiment(&c).unwrap();
    let parsed = parse_results_csv(&r.table.to_csv()).unwrap();
    assert_eq!(parsed.columns, ["Majority", "KNN", "LR", "LSVM", "MLP", "DT", "RF", "GB"]);
    for (i, col) in r.table.columns().iter().enumerate() {
        assert!((parsed.weighted_f1[i] - col.weighted_f1).abs() <= 5e-7);
        assert!((parsed.accuracy[i] - col.accuracy).abs() <= 5e-7);
    }
    assert!(parsed.training_time.iter().all(|t| t.starts_with('<') || t.starts_with('>')));
}

#[test]
fn several_seeds_write_separate_directories() {
    let (dir, cfg) = mini_setup();
    let mut c = ExperimentConfig::load(&cfg).unwrap();
    c.ablations = false;
    c.filter_classifiers(&[ModelKind::Majority, ModelKind::DTree]).unwrap();
    let out = dir.path().join("out");
    let results = run_seeds(&c, &[1, 2], &out).unwrap();
    assert_eq!(results.len(), 2);
    for s in [1, 2] {
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join(format!("seed_{s}/manifest.json"))).unwrap())
                .unwrap();
        assert_eq!(m["seed"], s);
        for f in m["files"].as_array().unwrap() {
            assert!(out.join(format!("seed_{s}")).join(f.as_str().unwrap()).is_file(), "{f}");
        }
    }
}

#[test]
fn failed_write_removes_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("blocked")).unwrap();
    let files = vec![
        ("a.txt".to_string(), b"a".to_vec()),
        ("blocked".to_string(), b"b".to_vec()),
    ];
    assert!(write_all(dir.path(), &files).is_err());
    assert!(!dir.path().join("a.txt").exists());
}

#[test]
fn split_source_uses_the_train_fraction() {
    let (dir, _) = mini_setup();
    let corpus = generate_synthetic_corpus(7, 150).unwrap();
    let all = dir.path().join("all.tsv");
    let mut text = std::fs::read_to_string({
        write_tsv(&corpus.subjectivity.train, &dir.path().join("a.tsv")).unwrap();
        dir.path().join("a.tsv")
    })
    .unwrap();
    write_tsv(&corpus.subjectivity.test, &dir.path().join("b.tsv")).unwrap();
    text.extend(std::fs::read_to_string(dir.path().join("b.tsv")).unwrap().lines().skip(1).map(|l| format!("{l}\n")));
    std::fs::write(&all, text).unwrap();
    let toml = r#"
config_version = 1
[data]
path = "all.tsv"
train_fraction = "0.66"
[features]
blocks = ["word_bow"]
[[classifier]]
kind = "majority"
"#;
    let c = ExperimentConfig::parse(toml, dir.path()).unwrap();
    let data = load_data(&c).unwrap();
    assert_eq!((data.train.len(), data.test.len()), (99, 51));
    let rows = featurize(&c.pipeline, &data).unwrap();
    let dump = write_feature_rows(&data.test, &rows.test_rows);
    assert!(dump.starts_with(&format!("dim={}\n", rows.pipeline.dim())));
    assert_eq!(dump.lines().count(), 52);
}

fn parse_err(toml: &str) -> String {
    ExperimentConfig::parse(toml, Path::new("."))
        .err()
        .unwrap_or_else(|| panic!("config accepted:\n{toml}"))
        .to_string()
}

#[test]
fn config_errors_name_the_problem() {
    let base = |extra: &str, classifiers: &str| {
        format!(
            "config_version = 1\n[data]\ntrain = \"a.tsv\"\ntest = \"b.tsv\"\n{extra}\n[features]\nblocks = [\"word_bow\"]\n{classifiers}"
        )
    };
    let ok_cls = "[[classifier]]\nkind = \"majority\"\n";
    assert!(ExperimentConfig::parse(&base("", ok_cls), Path::new(".")).is_ok());

    let e = parse_err(&base("", ok_cls).replace("config_version = 1", "config_version = 9"));
    assert!(e.contains("config_version"), "{e}");
    let e = parse_err(&base("", "[[classifier]]\nkind = \"svm\"\n"));
    assert!(e.contains("svm"), "{e}");
    let e = parse_err(&base("", "[[classifier]]\nkind = \"knn\"\nneighbours = 3\n"));
    assert!(e.contains("neighbours"), "{e}");
    let e = parse_err(&base("", "[[classifier]]\nkind = \"gboost\"\nn_stages = 0\n"));
    assert!(e.contains("n_stages"), "{e}");
    let e = parse_err(&base("", "[[classifier]]\nkind = \"rforest\"\nmax_features = \"half\"\n"));
    assert!(e.contains("max_features"), "{e}");
    let e = parse_err(&base("", ""));
    assert!(e.contains("classifier"), "{e}");
    let e = parse_err(&base("", &format!("{ok_cls}{ok_cls}")));
    assert!(e.contains("majority"), "{e}");
    let e = parse_err(&base("[labels]\nnames = [\"a\", \"b\"]\nordinal = true\nranks = [1]\n", ok_cls));
    assert!(e.contains("rank"), "{e}");
    let e = parse_err(&base("", ok_cls).replace("[\"word_bow\"]", "[\"embedding\"]"));
    assert!(e.contains("embedding"), "{e}");
    let e = parse_err(&base("", ok_cls).replace("test = \"b.tsv\"", "train_fraction = \"0.66\""));
    assert!(e.contains("train"), "{e}");
}

#[test]
fn command_line_filters_restrict_the_config() {
    let (_dir, cfg) = mini_setup();
    let mut c = ExperimentConfig::load(&cfg).unwrap();
    c.filter_classifiers(&[ModelKind::GBoost, ModelKind::Knn]).unwrap();
    let kinds: Vec<ModelKind> = c.specs().unwrap().iter().map(|s| s.kind()).collect();
    assert_eq!(kinds, [ModelKind::Knn, ModelKind::GBoost]);
    c.restrict_features(&[BlockKind::CharBow]).unwrap();
    assert_eq!(c.pipeline.blocks().len(), 1);
    let mut d = ExperimentConfig::load(&cfg).unwrap();
    d.filter_classifiers(&[ModelKind::GBoost]).unwrap();
    assert!(d.clone().filter_classifiers(&[ModelKind::Knn]).is_err());
}
