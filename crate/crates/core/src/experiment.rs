//! Config-driven experiments: load data, fit features on the training side,
//! train the configured classifiers, evaluate on the test side and emit
//! reports, results tables, models and a manifest.
//!
//! Configs are TOML files with a mandatory `config_version = 1`. Relative
//! paths resolve against the config file's directory. See
//! `configs/synthetic.toml` for a complete example.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::annotate::{builtin_annotations, group_by_instance, load_conllu, Annotations};
use crate::classifiers::{
    train, ClassifierSpec, ForestParams, GBoostConfig, LinSvmParams, LogRegParams, MaxFeatures, MlpParams,
    Model, ModelKind, TrainingMatrix, TreeParams, MODEL_VERSION,
};
use crate::corpus::{load_dataset, train_test_split, DataFormat, Dataset, Fraction, LabelSpace, Schema, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{time_phase, EvaluationReport, Phase, TimingRecord};
use crate::features::{
    fit_pipeline, load_embeddings, BlockKind, BlockOptions, Embeddings, FeatureInputs, FittedPipeline,
    PipelineConfig, PIPELINE_VERSION,
};
use crate::report::ResultsTable;
use crate::sparse::SparseVector;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    config_version: u32,
    #[serde(default)]
    seed: u64,
    output: Option<PathBuf>,
    data: RawData,
    labels: Option<RawLabels>,
    features: RawFeatures,
    #[serde(rename = "classifier")]
    classifiers: Vec<ClassifierEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    #[serde(default = "default_format")]
    format: DataFormat,
    train: Option<PathBuf>,
    test: Option<PathBuf>,
    path: Option<PathBuf>,
    train_fraction: Option<String>,
    annotations: Option<PathBuf>,
    embeddings: Option<PathBuf>,
    #[serde(default)]
    schema: RawSchema,
}

fn default_format() -> DataFormat {
    DataFormat::Tsv
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    id: Option<String>,
    text: Option<String>,
    label: Option<String>,
    headline: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabels {
    names: Vec<String>,
    #[serde(default)]
    ordinal: bool,
    /// Defaults to 0, 1, 2, ... in `names` order.
    ranks: Option<Vec<i64>>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockOverrides {
    min_df: Option<u64>,
    max_features: Option<usize>,
    ngram_min: Option<usize>,
    ngram_max: Option<usize>,
    sublinear_tf: Option<bool>,
    l2_normalize: Option<bool>,
}

impl BlockOverrides {
    fn apply(self, kind: BlockKind) -> BlockOptions {
        let d = BlockOptions::for_kind(kind);
        BlockOptions {
            min_df: self.min_df.unwrap_or(d.min_df),
            max_features: self.max_features.or(d.max_features),
            ngram_min: self.ngram_min.unwrap_or(d.ngram_min),
            ngram_max: self.ngram_max.unwrap_or(d.ngram_max),
            sublinear_tf: self.sublinear_tf.unwrap_or(d.sublinear_tf),
            l2_normalize: self.l2_normalize.unwrap_or(d.l2_normalize),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeatures {
    blocks: Vec<BlockKind>,
    embedding_dim: Option<usize>,
    #[serde(default)]
    ablations: bool,
    word_bow: Option<BlockOverrides>,
    word_tfidf: Option<BlockOverrides>,
    char_bow: Option<BlockOverrides>,
    pos_bow: Option<BlockOverrides>,
    morph: Option<BlockOverrides>,
    embedding: Option<BlockOverrides>,
}

impl RawFeatures {
    fn overrides(&self, kind: BlockKind) -> BlockOverrides {
        let o = match kind {
            BlockKind::WordBow => self.word_bow,
            BlockKind::WordTfidf => self.word_tfidf,
            BlockKind::CharBow => self.char_bow,
            BlockKind::PosBow => self.pos_bow,
            BlockKind::Morph => self.morph,
            BlockKind::Embedding => self.embedding,
        };
        o.unwrap_or_default()
    }
}

/// One `[[classifier]]` table. Omitted hyperparameters take the library
/// defaults; the MLP and the forest draw their seed from the experiment seed.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClassifierEntry {
    Majority,
    Knn {
        k: Option<usize>,
    },
    Logreg {
        l2: Option<f64>,
        epochs: Option<usize>,
        lr: Option<f64>,
    },
    Linsvm {
        c: Option<f64>,
        epochs: Option<usize>,
    },
    Mlp {
        hidden: Option<usize>,
        epochs: Option<usize>,
        lr: Option<f64>,
    },
    Dtree {
        max_depth: Option<usize>,
        min_samples_leaf: Option<usize>,
    },
    Rforest {
        n_trees: Option<usize>,
        max_depth: Option<usize>,
        min_samples_leaf: Option<usize>,
        bootstrap: Option<bool>,
        /// `"sqrt"`, `"all"` or a count.
        max_features: Option<toml::Value>,
    },
    Gboost {
        n_stages: Option<usize>,
        learning_rate: Option<f64>,
        max_depth: Option<usize>,
        min_samples_leaf: Option<usize>,
    },
}

impl ClassifierEntry {
    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierEntry::Majority => ModelKind::Majority,
            ClassifierEntry::Knn { .. } => ModelKind::Knn,
            ClassifierEntry::Logreg { .. } => ModelKind::LogReg,
            ClassifierEntry::Linsvm { .. } => ModelKind::LinSvm,
            ClassifierEntry::Mlp { .. } => ModelKind::Mlp,
            ClassifierEntry::Dtree { .. } => ModelKind::DTree,
            ClassifierEntry::Rforest { .. } => ModelKind::RForest,
            ClassifierEntry::Gboost { .. } => ModelKind::GBoost,
        }
    }

    pub fn spec(&self, seed: u64) -> Result<ClassifierSpec> {
        Ok(match self.clone() {
            ClassifierEntry::Majority => ClassifierSpec::Majority,
            ClassifierEntry::Knn { k } => ClassifierSpec::Knn { k: k.unwrap_or(5) },
            ClassifierEntry::Logreg { l2, epochs, lr } => {
                let d = LogRegParams::default();
                ClassifierSpec::LogReg(LogRegParams {
                    l2: l2.unwrap_or(d.l2),
                    epochs: epochs.unwrap_or(d.epochs),
                    lr: lr.unwrap_or(d.lr),
                })
            }
            ClassifierEntry::Linsvm { c, epochs } => {
                let d = LinSvmParams::default();
                ClassifierSpec::LinSvm(LinSvmParams {
                    c: c.unwrap_or(d.c),
                    epochs: epochs.unwrap_or(d.epochs),
                })
            }
            ClassifierEntry::Mlp { hidden, epochs, lr } => {
                let d = MlpParams::default();
                ClassifierSpec::Mlp(MlpParams {
                    hidden: hidden.unwrap_or(d.hidden),
                    epochs: epochs.unwrap_or(d.epochs),
                    lr: lr.unwrap_or(d.lr),
                    seed,
                })
            }
            ClassifierEntry::Dtree {
                max_depth,
                min_samples_leaf,
            } => ClassifierSpec::DTree(TreeParams {
                max_depth,
                min_samples_leaf: min_samples_leaf.unwrap_or(1),
            }),
            ClassifierEntry::Rforest {
                n_trees,
                max_depth,
                min_samples_leaf,
                bootstrap,
                max_features,
            } => {
                let d = ForestParams::default();
                let max_features = match max_features {
                    None => d.max_features,
                    Some(toml::Value::String(s)) if s == "sqrt" => MaxFeatures::Sqrt,
                    Some(toml::Value::String(s)) if s == "all" => MaxFeatures::All,
                    Some(toml::Value::Integer(n)) if n >= 1 => MaxFeatures::Count(n as usize),
                    Some(other) => {
                        return Err(Error::Config(format!(
                            "rforest max_features must be \"sqrt\", \"all\" or a positive count, got {other}"
                        )))
                    }
                };
                ClassifierSpec::RForest(ForestParams {
                    n_trees: n_trees.unwrap_or(d.n_trees),
                    seed,
                    max_depth,
                    min_samples_leaf: min_samples_leaf.unwrap_or(d.min_samples_leaf),
                    bootstrap: bootstrap.unwrap_or(d.bootstrap),
                    max_features,
                })
            }
            ClassifierEntry::Gboost {
                n_stages,
                learning_rate,
                max_depth,
                min_samples_leaf,
            } => {
                let d = GBoostConfig::default();
                let cfg = GBoostConfig {
                    n_stages: n_stages.unwrap_or(d.n_stages),
                    learning_rate: learning_rate.unwrap_or(d.learning_rate),
                    max_depth: max_depth.unwrap_or(d.max_depth),
                    min_samples_leaf: min_samples_leaf.unwrap_or(d.min_samples_leaf),
                };
                cfg.validate()?;
                ClassifierSpec::GBoost(cfg)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    TrainTest { train: PathBuf, test: PathBuf },
    Split { path: PathBuf, train_fraction: Fraction },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub format: DataFormat,
    pub schema: Schema,
    pub source: DataSource,
    pub annotations: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
}

/// A validated experiment configuration with absolute paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub data: DataSpec,
    pub label_space: Option<LabelSpace>,
    pub pipeline: PipelineConfig,
    pub ablations: bool,
    pub classifiers: Vec<ClassifierEntry>,
    pub output: Option<PathBuf>,
    /// SHA-256 of the config file bytes.
    pub config_sha256: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if raw.config_version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config_version {} (supported: {CONFIG_VERSION})",
                raw.config_version
            )));
        }
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        let d = raw.data;
        let source = match (d.train, d.test, d.path, d.train_fraction) {
            (Some(train), Some(test), None, None) => DataSource::TrainTest {
                train: resolve(train),
                test: resolve(test),
            },
            (None, None, Some(path), Some(f)) => DataSource::Split {
                path: resolve(path),
                train_fraction: f.parse()?,
            },
            _ => {
                return Err(Error::Config(
                    "[data] needs either `train` and `test`, or `path` and `train_fraction`".into(),
                ))
            }
        };
        let default_schema = Schema::default();
        let schema = Schema {
            id: d.schema.id.unwrap_or(default_schema.id),
            text: d.schema.text.unwrap_or(default_schema.text),
            label: Some(d.schema.label.unwrap_or_else(|| "label".into())),
            headline: d.schema.headline,
        };
        let label_space = match raw.labels {
            None => None,
            Some(l) if l.ordinal => {
                let ranks = l.ranks.unwrap_or_else(|| (0..l.names.len() as i64).collect());
                if ranks.len() != l.names.len() {
                    return Err(Error::Config("[labels] ranks and names differ in length".into()));
                }
                let pairs: Vec<(String, i64)> = l.names.into_iter().zip(ranks).collect();
                Some(LabelSpace::ordinal(&pairs)?)
            }
            Some(l) => {
                if l.ranks.is_some() {
                    return Err(Error::Config("[labels] ranks need ordinal = true".into()));
                }
                Some(LabelSpace::nominal(&l.names)?)
            }
        };
        let f = &raw.features;
        let blocks = f.blocks.iter().map(|&k| (k, f.overrides(k).apply(k))).collect();
        let pipeline = PipelineConfig::new(blocks, f.embedding_dim)?;
        if raw.classifiers.is_empty() {
            return Err(Error::Config("no [[classifier]] entries".into()));
        }
        let mut seen = vec![];
        for c in &raw.classifiers {
            if seen.contains(&c.kind()) {
                return Err(Error::Config(format!("classifier {} listed twice", c.kind())));
            }
            seen.push(c.kind());
            c.spec(raw.seed)?;
        }
        Ok(ExperimentConfig {
            seed: raw.seed,
            data: DataSpec {
                format: d.format,
                schema,
                source,
                annotations: d.annotations.map(resolve),
                embeddings: d.embeddings.map(resolve),
            },
            label_space,
            pipeline,
            ablations: f.ablations,
            classifiers: raw.classifiers,
            output: raw.output.map(resolve),
            config_sha256: hex::encode(Sha256::digest(text.as_bytes())),
        })
    }

    /// Keeps only the listed classifier kinds.
    pub fn filter_classifiers(&mut self, kinds: &[ModelKind]) -> Result<()> {
        for k in kinds {
            if !self.classifiers.iter().any(|c| c.kind() == *k) {
                return Err(Error::Config(format!("classifier {k} is not configured")));
            }
        }
        self.classifiers.retain(|c| kinds.contains(&c.kind()));
        Ok(())
    }

    /// Keeps only the listed feature blocks.
    pub fn restrict_features(&mut self, kinds: &[BlockKind]) -> Result<()> {
        for k in kinds {
            if !self.pipeline.blocks().iter().any(|b| b.0 == *k) {
                return Err(Error::Config(format!("feature block {k} is not configured")));
            }
        }
        self.pipeline = self.pipeline.restrict(kinds)?;
        Ok(())
    }

    /// Classifiers in results-table order.
    pub fn specs(&self) -> Result<Vec<ClassifierSpec>> {
        let mut entries = self.classifiers.clone();
        entries.sort_by_key(ClassifierEntry::kind);
        entries.iter().map(|c| c.spec(self.seed)).collect()
    }

    fn needs_annotations(&self) -> bool {
        self.pipeline
            .blocks()
            .iter()
            .any(|b| matches!(b.0, BlockKind::PosBow | BlockKind::Morph))
    }

    fn needs_embeddings(&self) -> bool {
        self.pipeline.blocks().iter().any(|b| b.0 == BlockKind::Embedding)
    }
}

/// Train and test sets plus whatever external inputs the pipeline needs.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub train: Dataset,
    pub test: Dataset,
    pub annotations: Option<Annotations>,
    pub embeddings: Option<Embeddings>,
}

impl LoadedData {
    pub fn inputs(&self) -> FeatureInputs<'_> {
        FeatureInputs {
            annotations: self.annotations.as_ref(),
            embeddings: self.embeddings.as_ref(),
        }
    }
}

pub fn load_data(cfg: &ExperimentConfig) -> Result<LoadedData> {
    let d = &cfg.data;
    let (train, test) = match &d.source {
        DataSource::TrainTest { train, test } => {
            let tr = load_dataset(train, d.format, &d.schema, cfg.label_space.as_ref())?;
            let te = load_dataset(test, d.format, &d.schema, Some(tr.label_space()))?;
            (tr, te)
        }
        DataSource::Split { path, train_fraction } => {
            let all = load_dataset(path, d.format, &d.schema, cfg.label_space.as_ref())?;
            train_test_split(
                &all,
                &SplitSpec {
                    train_fraction: *train_fraction,
                    seed: cfg.seed,
                },
            )?
        }
    };
    let annotations = match (&d.annotations, cfg.needs_annotations()) {
        (Some(path), true) => Some(group_by_instance(load_conllu(path)?)),
        (None, true) => {
            let mut a = builtin_annotations(&train);
            a.extend(builtin_annotations(&test));
            Some(a)
        }
        (_, false) => None,
    };
    let embeddings = if cfg.needs_embeddings() {
        let path = d
            .embeddings
            .as_ref()
            .ok_or_else(|| Error::Config("embedding block enabled but [data] embeddings is not set".into()))?;
        Some(load_embeddings(path, cfg.pipeline.embedding_dim().unwrap())?)
    } else {
        None
    };
    Ok(LoadedData {
        train,
        test,
        annotations,
        embeddings,
    })
}

/// A pipeline fitted on the training side plus both transformed sides.
#[derive(Debug, Clone)]
pub struct Featurized {
    pub pipeline: FittedPipeline,
    pub train_rows: Vec<SparseVector>,
    pub test_rows: Vec<SparseVector>,
    pub timing: TimingRecord,
}

pub fn featurize(pipeline: &PipelineConfig, data: &LoadedData) -> Result<Featurized> {
    let (out, timing) = time_phase(Phase::FeatureExtraction, || -> Result<_> {
        let p = fit_pipeline(&data.train, data.inputs(), pipeline)?;
        let train_rows = p.transform_dataset(&data.train, data.inputs())?;
        let test_rows = p.transform_dataset(&data.test, data.inputs())?;
        Ok((p, train_rows, test_rows))
    });
    let (pipeline, train_rows, test_rows) = out.map_err(|e| e.in_phase("feature extraction"))?;
    Ok(Featurized {
        pipeline,
        train_rows,
        test_rows,
        timing,
    })
}

pub fn training_matrix(data: &LoadedData, f: &Featurized) -> Result<TrainingMatrix> {
    TrainingMatrix::new(
        f.train_rows.clone(),
        data.train.label_indices()?,
        data.train.label_space().clone(),
    )
}

pub fn train_all(specs: &[ClassifierSpec], m: &TrainingMatrix) -> Result<Vec<Model>> {
    specs
        .iter()
        .map(|s| train(s, m).map_err(|e| e.in_phase(&format!("training {}", s.kind()))))
        .collect()
}

/// Evaluates a model on the test side; `extra` timings (feature extraction)
/// precede the model's own training and prediction records. Models loaded
/// from disk carry no training time, so `trained_here` false omits it.
pub fn evaluate_model(
    model: &Model,
    test: &Dataset,
    rows: &[SparseVector],
    extra: &[TimingRecord],
    trained_here: bool,
) -> Result<EvaluationReport> {
    let truth = test.label_indices()?;
    let (pred, prediction) = time_phase(Phase::Prediction, || model.predict_indices(rows));
    let pred = pred.map_err(|e| e.in_phase(&format!("predicting with {}", model.kind())))?;
    let mut timings = extra.to_vec();
    if trained_here {
        timings.push(TimingRecord {
            phase: Phase::Training,
            wall_seconds: model.training_time,
        });
    }
    timings.push(prediction);
    EvaluationReport::new(model.kind().name(), &truth, &pred, &model.label_space, timings)
}

/// Everything one run produces, held in memory until written.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub reports: Vec<EvaluationReport>,
    pub table: ResultsTable,
    pub models: Vec<Model>,
    pub pipeline: FittedPipeline,
    pub feature_timing: TimingRecord,
    pub ablations: Vec<(BlockKind, Vec<EvaluationReport>, ResultsTable)>,
    manifest: serde_json::Value,
}

impl RunResult {
    pub fn manifest(&self) -> &serde_json::Value {
        &self.manifest
    }
}

fn run_once(cfg: &ExperimentConfig, data: &LoadedData, pipeline: &PipelineConfig) -> Result<(Featurized, Vec<Model>, Vec<EvaluationReport>)> {
    let f = featurize(pipeline, data)?;
    let m = training_matrix(data, &f)?;
    let models = train_all(&cfg.specs()?, &m)?;
    let reports = models
        .iter()
        .map(|model| evaluate_model(model, &data.test, &f.test_rows, &[f.timing], true))
        .collect::<Result<Vec<_>>>()?;
    Ok((f, models, reports))
}

/// Runs the configured experiment without touching the filesystem beyond reading inputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    let data = load_data(cfg).map_err(|e| e.in_phase("loading data"))?;
    let (f, models, reports) = run_once(cfg, &data, &cfg.pipeline)?;
    let table = ResultsTable::from_reports(&reports)?;
    let mut ablations = vec![];
    if cfg.ablations && cfg.pipeline.blocks().len() > 1 {
        for &(kind, _) in cfg.pipeline.blocks() {
            let restricted = cfg.pipeline.restrict(&[kind])?;
            let (_, _, r) = run_once(cfg, &data, &restricted).map_err(|e| e.in_phase(&format!("ablation {kind}")))?;
            let t = ResultsTable::from_reports(&r)?;
            ablations.push((kind, r, t));
        }
    }
    let manifest = json!({
        "tool": "stylo",
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": cfg.config_sha256,
        "seed": cfg.seed,
        "model_format_version": (MODEL_VERSION as char).to_string(),
        "pipeline_format_version": (PIPELINE_VERSION as char).to_string(),
        "labels": data.train.label_space().labels(),
        "ordinal": data.train.label_space().is_ordinal(),
        "train_instances": data.train.len(),
        "test_instances": data.test.len(),
        "feature_blocks": f.pipeline.blocks().iter().map(|b| json!({
            "block": b.kind.name(),
            "offset": b.offset,
            "dim": b.dim,
        })).collect::<Vec<_>>(),
        "feature_dimension": f.pipeline.dim(),
        "classifiers": models.iter().map(|m| m.kind().name()).collect::<Vec<_>>(),
        "ablations": ablations.iter().map(|a| a.0.name()).collect::<Vec<_>>(),
    });
    Ok(RunResult {
        reports,
        table,
        models,
        pipeline: f.pipeline,
        feature_timing: f.timing,
        ablations,
        manifest,
    })
}

/// Sparse rows as text: `dim=<D>`, then `<id>\t<label>\t<index>:<value> ...` per instance.
pub fn write_feature_rows(d: &Dataset, rows: &[SparseVector]) -> String {
    let dim = rows.first().map_or(0, SparseVector::dim);
    let mut out = format!("dim={dim}\n");
    for (inst, row) in d.instances().iter().zip(rows) {
        out.push_str(&inst.id);
        out.push('\t');
        out.push_str(inst.label.as_deref().unwrap_or(""));
        out.push('\t');
        let cells: Vec<String> = row.iter().map(|(j, v)| format!("{j}:{v:?}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub(crate) fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s.into_bytes()
}

pub fn report_files(prefix: &str, reports: &[EvaluationReport], table: &ResultsTable) -> Vec<(String, Vec<u8>)> {
    let mut files = vec![];
    for r in reports {
        files.push((format!("{prefix}report.{}.json", r.classifier), json_bytes(&r.to_json())));
        files.push((format!("{prefix}report.{}.txt", r.classifier), r.to_text().into_bytes()));
    }
    files.push((format!("{prefix}results_table.txt"), table.to_text().into_bytes()));
    files.push((format!("{prefix}results_table.csv"), table.to_csv().into_bytes()));
    files
}

impl RunResult {
    /// Output files as `(relative path, bytes)`, sorted by path.
    pub fn files(&self) -> Vec<(String, Vec<u8>)> {
        let mut files = report_files("", &self.reports, &self.table);
        for m in &self.models {
            files.push((format!("models/{}.bin", m.kind().name()), m.to_bytes()));
        }
        files.push(("pipeline.bin".into(), self.pipeline.to_bytes()));
        for (kind, reports, table) in &self.ablations {
            files.extend(report_files(&format!("ablation_{kind}/"), reports, table));
        }
        let mut manifest = self.manifest.clone();
        let mut names: Vec<String> = files.iter().map(|f| f.0.clone()).collect();
        names.push("manifest.json".into());
        names.sort();
        manifest["files"] = json!(names);
        files.push(("manifest.json".into(), json_bytes(&manifest)));
        files.sort_by(|a, b| a.0.cmp(&b.0));
        files
    }

    /// Writes every output under `dir`. If any write fails, files written so
    /// far are removed again.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        write_all(dir, &self.files())
    }
}

pub fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    let mut written = vec![];
    let result = (|| -> Result<()> {
        for (rel, bytes) in files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::file(parent, e))?;
            }
            std::fs::write(&path, bytes).map_err(|e| Error::file(&path, e))?;
            written.push(path);
        }
        Ok(())
    })();
    if let Err(e) = result {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(written)
}

/// Runs one experiment per seed, into `seed_<s>/` subdirectories when more
/// than one seed is given.
pub fn run_seeds(cfg: &ExperimentConfig, seeds: &[u64], out: &Path) -> Result<BTreeMap<u64, RunResult>> {
    let mut results = BTreeMap::new();
    for &seed in seeds {
        let mut c = cfg.clone();
        c.seed = seed;
        let r = run_experiment(&c).map_err(|e| e.in_phase(&format!("seed {seed}")))?;
        results.insert(seed, r);
    }
    let mut files = vec![];
    for (seed, r) in &results {
        let prefix = if seeds.len() > 1 { format!("seed_{seed}/") } else { String::new() };
        files.extend(r.files().into_iter().map(|(p, b)| (format!("{prefix}{p}"), b)));
    }
    write_all(out, &files)?;
    Ok(results)
}
