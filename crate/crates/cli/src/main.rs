use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stylo_core::classifiers::{Model, ModelKind};
use stylo_core::corpus::{class_distribution, write_tsv, Dataset};
use stylo_core::eval::EvaluationReport;
use stylo_core::experiment::{
    evaluate_model, featurize, load_data, report_files, run_seeds, train_all, training_matrix,
    write_all, write_feature_rows, ExperimentConfig,
};
use stylo_core::features::{BlockKind, FittedPipeline};
use stylo_core::report::ResultsTable;
use stylo_core::synth::generate_synthetic_corpus;
use stylo_core::Error;

/// Stylometric text classification experiments.
#[derive(Parser)]
#[command(name = "stylo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the configured datasets and print their class distributions.
    Ingest(ConfigArgs),
    /// Write the train/test partition of the configured data as TSV files.
    Split(OutArgs),
    /// Fit the feature pipeline on the training side and write feature rows.
    Featurize(OutArgs),
    /// Fit features and train the configured classifiers; write models.
    Train(OutArgs),
    /// Evaluate previously trained models on the test side.
    Evaluate(EvaluateArgs),
    /// End to end: featurize, train, evaluate, write reports and tables.
    Run(RunArgs),
    /// Generate the synthetic stand-in corpora.
    Synth(SynthArgs),
    /// Rebuild the results table from the JSON reports in a run directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of classifiers (e.g. `knn,gboost`).
    #[arg(long, value_delimiter = ',')]
    classifiers: Vec<String>,
    /// Comma-separated subset of feature blocks (e.g. `word_bow,char_bow`).
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
}

#[derive(Args)]
struct OutArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory holding `pipeline.bin` and `models/` from `train`.
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory; defaults to the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run once per seed into `seed_<s>/` subdirectories.
    #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
    seeds: Vec<u64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Instances per task.
    #[arg(long, default_value_t = 600)]
    n: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Run output directory containing `report.<classifier>.json` files.
    #[arg(long)]
    dir: PathBuf,
    /// Print CSV instead of the aligned table.
    #[arg(long)]
    csv: bool,
}

fn load_config(a: &ConfigArgs) -> stylo_core::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if !a.classifiers.is_empty() {
        let kinds = a
            .classifiers
            .iter()
            .map(|s| s.parse::<ModelKind>())
            .collect::<stylo_core::Result<Vec<_>>>()?;
        cfg.filter_classifiers(&kinds)?;
    }
    if !a.features.is_empty() {
        let kinds = a
            .features
            .iter()
            .map(|s| s.parse::<BlockKind>())
            .collect::<stylo_core::Result<Vec<_>>>()?;
        cfg.restrict_features(&kinds)?;
    }
    Ok(cfg)
}

fn print_distribution(d: &Dataset) -> stylo_core::Result<()> {
    println!("{}: {} instances", d.name, d.len());
    for share in class_distribution(d)? {
        println!("  {:<12} {:>6}  {:.6}", share.label, share.count, share.prevalence);
    }
    Ok(())
}

fn ingest(a: &ConfigArgs) -> stylo_core::Result<()> {
    let cfg = load_config(a)?;
    let data = load_data(&cfg)?;
    print_distribution(&data.train)?;
    print_distribution(&data.test)?;
    if let Some(ann) = &data.annotations {
        println!("annotations: {} instances", ann.len());
    }
    if let Some(emb) = &data.embeddings {
        println!("embeddings: {} instances", emb.len());
    }
    Ok(())
}

fn split(a: &OutArgs) -> stylo_core::Result<()> {
    let cfg = load_config(&a.config)?;
    let data = load_data(&cfg)?;
    std::fs::create_dir_all(&a.out).map_err(Error::Io)?;
    write_tsv(&data.train, &a.out.join("train.tsv"))?;
    write_tsv(&data.test, &a.out.join("test.tsv"))?;
    println!("train {} / test {} -> {}", data.train.len(), data.test.len(), a.out.display());
    Ok(())
}

fn featurize_cmd(a: &OutArgs) -> stylo_core::Result<()> {
    let cfg = load_config(&a.config)?;
    let data = load_data(&cfg)?;
    let f = featurize(&cfg.pipeline, &data)?;
    let files = vec![
        ("pipeline.bin".to_string(), f.pipeline.to_bytes()),
        ("train.features".to_string(), write_feature_rows(&data.train, &f.train_rows).into_bytes()),
        ("test.features".to_string(), write_feature_rows(&data.test, &f.test_rows).into_bytes()),
    ];
    write_all(&a.out, &files)?;
    println!(
        "{} features in {:.3}s -> {}",
        f.pipeline.dim(),
        f.timing.wall_seconds,
        a.out.display()
    );
    Ok(())
}

fn train_cmd(a: &OutArgs) -> stylo_core::Result<()> {
    let cfg = load_config(&a.config)?;
    let data = load_data(&cfg)?;
    let f = featurize(&cfg.pipeline, &data)?;
    let m = training_matrix(&data, &f)?;
    let models = train_all(&cfg.specs()?, &m)?;
    let mut files = vec![("pipeline.bin".to_string(), f.pipeline.to_bytes())];
    for model in &models {
        files.push((format!("models/{}.bin", model.kind()), model.to_bytes()));
        println!("{:<9} trained in {:.3}s", model.kind().name(), model.training_time);
    }
    write_all(&a.out, &files)?;
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs) -> stylo_core::Result<()> {
    let cfg = load_config(&a.config)?;
    let data = load_data(&cfg)?;
    let pipeline = FittedPipeline::load(&a.models.join("pipeline.bin"))?;
    let rows = pipeline.transform_dataset(&data.test, data.inputs())?;
    let mut reports = vec![];
    for entry in &cfg.classifiers {
        let path = a.models.join("models").join(format!("{}.bin", entry.kind()));
        let model = Model::load(&path)?;
        if model.label_space != *data.test.label_space() {
            return Err(Error::Config(format!(
                "{}: model labels {:?} differ from the test data's",
                path.display(),
                model.label_space.labels()
            )));
        }
        reports.push(evaluate_model(&model, &data.test, &rows, &[], false)?);
    }
    reports.sort_by_key(|r: &EvaluationReport| r.classifier.parse::<ModelKind>().ok());
    let table = ResultsTable::from_reports(&reports)?;
    write_all(&a.out, &report_files("", &reports, &table))?;
    print!("{}", table.to_text());
    Ok(())
}

fn run_cmd(a: &RunArgs) -> stylo_core::Result<()> {
    let cfg = load_config(&a.config)?;
    let out = a
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set `output`".into()))?;
    let seeds = if a.seeds.is_empty() { vec![cfg.seed] } else { a.seeds.clone() };
    let results = run_seeds(&cfg, &seeds, &out)?;
    for (seed, r) in &results {
        if results.len() > 1 {
            println!("seed {seed}");
        }
        print!("{}", r.table.to_text());
    }
    println!("outputs in {}", out.display());
    Ok(())
}

fn synth(a: &SynthArgs) -> stylo_core::Result<()> {
    let corpus = generate_synthetic_corpus(a.seed, a.n)?;
    for p in corpus.write(&a.out)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn read_reports(dir: &Path) -> stylo_core::Result<Vec<serde_json::Value>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(Error::Io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("report.") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no report.*.json files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(Error::Io)?;
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn report(a: &ReportArgs) -> stylo_core::Result<()> {
    let table = ResultsTable::from_json_reports(&read_reports(&a.dir)?)?;
    if a.csv {
        print!("{}", table.to_csv());
    } else {
        print!("{}", table.to_text());
    }
    Ok(())
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("STYLO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("STYLO_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Split(a) => split(a),
        Command::Featurize(a) => featurize_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Run(a) => run_cmd(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}
