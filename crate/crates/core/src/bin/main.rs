//! Command-line front end for the garment description tagging pipeline.
//!
//! Every subcommand reads a flat key=value configuration file (environment
//! variables `GT_<KEY>` override file values, flags override both), runs
//! deterministically from the configured seeds, and writes a manifest with
//! the config hash, seeds, input hashes, and artifact checksums.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use garment_tagger::config::{ConfigError, PipelineConfig};
use garment_tagger::corpus::{load_corpus, save_corpus, split_corpus, CorpusError};
use garment_tagger::manifest::RunManifest;
use garment_tagger::model::{load_model, save_model};
use garment_tagger::pipeline::{
    self, chains_from_config, evaluate_attribute, make_backend, make_provider,
    predict_description, run_pipeline, train_attribute, PipelineError,
};
use garment_tagger::synth::generate_corpus;
use garment_tagger::vocabulary::{AttributeKind, Lexicons};

#[derive(Parser)]
#[command(
    name = "garment-tagger",
    about = "Tags free-form garment descriptions with controlled-vocabulary color groups and work types"
)]
struct Cli {
    /// Path to the key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replace every configured seed with this value.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Translation provider: offline, identity, or endpoint.
    #[arg(long, global = true)]
    provider: Option<String>,
    /// Embedding backend: hashing or endpoint.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Directory for artifacts; overrides the configured out_dir.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Print per-step progress.
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that the corpus parses and every record's labels are known.
    Validate,
    /// Partition the corpus into train/test description ids.
    Split,
    /// Tokenize, annotate, and back-translate every description.
    Augment,
    /// Build the balanced per-attribute training datasets.
    Build,
    /// Train both attribute classifiers on the train split.
    Train,
    /// Evaluate trained models on the held-out test split.
    Evaluate,
    /// Predict labels for every description in a corpus file.
    Predict {
        /// Corpus to predict on; defaults to the configured corpus.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the whole pipeline and write models, predictions, and reports.
    Report,
    /// Generate a seeded synthetic corpus.
    Synth {
        /// Number of descriptions to generate.
        #[arg(long, default_value_t = 400)]
        descriptions: usize,
        /// Generator seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output path; defaults to the configured corpus path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    /// Bad inputs: configuration or corpus validation. Exit 1.
    Validation(String),
    /// Everything else. Exit 2.
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(inner) => CliError::Validation(inner.to_string()),
            PipelineError::Corpus(inner) => CliError::from(inner),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<garment_tagger::model::ModelError> for CliError {
    fn from(e: garment_tagger::model::ModelError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(message)) => {
            eprintln!("validation error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed_override {
        config.override_seeds(seed);
    }
    if let Some(provider) = &cli.provider {
        config.set("provider", provider)?;
    }
    if let Some(backend) = &cli.backend {
        config.set("backend", backend)?;
    }
    if let Some(out_dir) = &cli.out_dir {
        config.out_dir = out_dir.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let lexicons = Lexicons::default();
    std::fs::create_dir_all(&config.out_dir)?;

    match &cli.command {
        Command::Validate => validate(cli, &config, &lexicons),
        Command::Split => split(cli, &config, &lexicons),
        Command::Augment => augment(cli, &config, &lexicons),
        Command::Build => build(cli, &config, &lexicons),
        Command::Train => train_cmd(cli, &config, &lexicons),
        Command::Evaluate => evaluate(cli, &config, &lexicons),
        Command::Predict { input } => predict(cli, &config, &lexicons, input.as_deref()),
        Command::Report => report(cli, &config, &lexicons),
        Command::Synth {
            descriptions,
            seed,
            output,
        } => synth(cli, &config, &lexicons, *descriptions, *seed, output.as_deref()),
    }
}

fn trace(cli: &Cli, message: &str) {
    if cli.trace {
        eprintln!("[trace] {message}");
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))?;
    body.push('\n');
    std::fs::write(path, body)?;
    Ok(())
}

fn finish_manifest(
    config: &PipelineConfig,
    subcommand: &str,
    inputs: &[(&str, &Path)],
    artifacts: &[(&str, &Path)],
) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(subcommand, config);
    for (name, path) in inputs {
        manifest.record_input(name, path)?;
    }
    for (name, path) in artifacts {
        manifest.record_artifact(name, path)?;
    }
    manifest.write(&config.out_dir.join(format!("manifest_{subcommand}.json")))?;
    Ok(())
}

fn validate(_cli: &Cli, config: &PipelineConfig, lexicons: &Lexicons) -> Result<(), CliError> {
    let records = load_corpus(&config.corpus, lexicons)?;
    println!("ok: {} records validated", records.len());
    finish_manifest(config, "validate", &[("corpus", config.corpus.as_path())], &[])
}

fn split(cli: &Cli, config: &PipelineConfig, lexicons: &Lexicons) -> Result<(), CliError> {
    let records = load_corpus(&config.corpus, lexicons)?;
    let split = split_corpus(&records, config.split_ratio, config.split_seed)
        .map_err(CliError::from)?;
    let path = config.out_dir.join("split.json");
    write_json(&path, &split)?;
    trace(cli, &format!("{} train / {} test", split.train_ids.len(), split.test_ids.len()));
    println!(
        "split: {} train, {} test -> {}",
        split.train_ids.len(),
        split.test_ids.len(),
        path.display()
    );
    finish_manifest(
        config,
        "split",
        &[("corpus", config.corpus.as_path())],
        &[("split", path.as_path())],
    )
}

fn augment(cli: &Cli, config: &PipelineConfig, lexicons: &Lexicons) -> Result<(), CliError> {
    let records = load_corpus(&config.corpus, lexicons)?;
    let provider = make_provider(config);
    let chains = chains_from_config(config);
    let mut lines = String::new();
    let mut count = 0usize;
    for record in &records {
        let samples =
            pipeline::expand_for_prediction(lexicons, record, &chains, provider.as_ref(), config.tokenize)?;
        for sample in samples {
            lines.push_str(
                &serde_json::to_string(&sample)
                    .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))?,
            );
            lines.push('\n');
            count += 1;
        }
    }
    let path = config.out_dir.join("augmented.jsonl");
    std::fs::write(&path, lines)?;
    trace(cli, &format!("{count} samples from {} records", records.len()));
    println!("augmented: {count} samples -> {}", path.display());
    finish_manifest(
        config,
        "augment",
        &[("corpus", config.corpus.as_path())],
        &[("augmented", path.as_path())],
    )
}

fn build(cli: &Cli, config: &PipelineConfig, lexicons: &Lexicons) -> Result<(), CliError> {
    let records = load_corpus(&config.corpus, lexicons)?;
    let split = split_corpus(&records, config.split_ratio, config.split_seed)?;
    let train_records: Vec<_> = records
        .iter()
        .filter(|r| split.train_ids.contains(&r.id))
        .cloned()
        .collect();
    let provider = make_provider(config);
    let chains = chains_from_config(config);
    let mut artifacts = Vec::new();
    for attribute in [AttributeKind::Color, AttributeKind::WorkType] {
        let dataset = pipeline::build_training_dataset(
            lexicons,
            &train_records,
            attribute,
            &chains,
            provider.as_ref(),
            config,
        )?;
        let stem = attribute_stem(attribute);
        let path = config.out_dir.join(format!("dataset_{stem}.jsonl"));
        let mut lines = String::new();
        for sample in &dataset.samples {
            lines.push_str(
                &serde_json::to_string(sample)
                    .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))?,
            );
            lines.push('\n');
        }
        std::fs::write(&path, lines)?;
        trace(cli, &format!("{stem}: {:?}", dataset.distribution()));
        println!("dataset {stem}: {} samples -> {}", dataset.len(), path.display());
        artifacts.push((stem, path));
    }
    let refs: Vec<(&str, &Path)> = artifacts.iter().map(|(n, p)| (*n, p.as_path())).collect();
    finish_manifest(config, "build", &[("corpus", config.corpus.as_path())], &refs)
}

fn attribute_stem(attribute: AttributeKind) -> &'static str {
    match attribute {
        AttributeKind::Color => "color",
        AttributeKind::WorkType => "work_type",
    }
}

fn train_cmd(cli: &Cli, config: &PipelineConfig, lexicons: &Lexicons) -> Result<(), CliError> {
    let records = load_corpus(&config.corpus, lexicons)?;
    let split = split_corpus(&records, config.split_ratio, config.split_seed)?;
    let train_records: Vec<_> = records
        .iter()
        .filter(|r| split.train_ids.contains(&r.id))
        .cloned()
        .collect();
    let provider = make_provider(config);
    let chains = chains_from_config(config);
    let backend = make_backend(config);
    let mut artifacts = Vec::new();
    for attribute in [AttributeKind::Color, AttributeKind::WorkType] {
        let trained = train_attribute(
            lexicons,
            &train_records,
            attribute,
            &chains,
            provider.as_ref(),
            backend.as_ref(),
            config,
        )?;
        let stem = attribute_stem(attribute);
        let model_path = config.out_dir.join(format!("model_{stem}.bin"));
        save_model(&trained.model, &model_path)?;
        let report_path = config.out_dir.join(format!("train_report_{stem}.json"));
        write_json(&report_path, &trained.report)?;
        trace(
            cli,
            &format!(
                "{stem}: best epoch {}, stopped at {}",
                trained.report.best_epoch, trained.report.stopped_epoch
            ),
        );
        println!(
            "trained {stem}: best epoch {} -> {}",
            trained.report.best_epoch,
            model_path.display()
        );
        artifacts.push((format!("model_{stem}"), model_path));
        artifacts.push((format!("train_report_{stem}"), report_path));
    }
    let refs: Vec<(&str, &Path)> = artifacts
        .iter()
        .map(|(n, p)| (n.as_str(), p.as_path()))
        .collect();
    finish_manifest(config, "train", &[("corpus", config.corpus.as_path())], &refs)
}

fn evaluate(cli: &Cli, config: &PipelineConfig, lexicons: &Lexicons) -> Result<(), CliError> {
    let records = load_corpus(&config.corpus, lexicons)?;
    let split = split_corpus(&records, config.split_ratio, config.split_seed)?;
    let test_records: Vec<_> = records
        .iter()
        .filter(|r| split.test_ids.contains(&r.id))
        .cloned()
        .collect();
    let provider = make_provider(config);
    let chains = chains_from_config(config);
    let backend = make_backend(config);
    let mut artifacts = Vec::new();
    for attribute in [AttributeKind::Color, AttributeKind::WorkType] {
        let stem = attribute_stem(attribute);
        let model_path = config.out_dir.join(format!("model_{stem}.bin"));
        let model = load_model(&model_path)?;
        let evaluation = evaluate_attribute(
            lexicons,
            &model,
            backend.as_ref(),
            &test_records,
            &chains,
            provider.as_ref(),
            attribute,
            config.tokenize,
        )?;
        let report_path = config.out_dir.join(format!("evaluation_{stem}.json"));
        write_json(&report_path, &evaluation.report)?;
        let confusion_path = config.out_dir.join(format!("confusion_{stem}.csv"));
        std::fs::write(&confusion_path, &evaluation.confusion_csv)?;
        trace(cli, &format!("{stem} accuracy {:.4}", evaluation.report.accuracy));
        println!("{}", evaluation.report.table());
        artifacts.push((format!("evaluation_{stem}"), report_path));
        artifacts.push((format!("confusion_{stem}"), confusion_path));
    }
    let refs: Vec<(&str, &Path)> = artifacts
        .iter()
        .map(|(n, p)| (n.as_str(), p.as_path()))
        .collect();
    finish_manifest(config, "evaluate", &[("corpus", config.corpus.as_path())], &refs)
}

fn predict(
    cli: &Cli,
    config: &PipelineConfig,
    lexicons: &Lexicons,
    input: Option<&Path>,
) -> Result<(), CliError> {
    let corpus_path = input.unwrap_or(config.corpus.as_path());
    let records = load_corpus(corpus_path, lexicons)?;
    let provider = make_provider(config);
    let chains = chains_from_config(config);
    let backend = make_backend(config);
    let mut artifacts = Vec::new();
    for attribute in [AttributeKind::Color, AttributeKind::WorkType] {
        let stem = attribute_stem(attribute);
        let model_path = config.out_dir.join(format!("model_{stem}.bin"));
        let model = load_model(&model_path)?;
        let mut predictions = Vec::with_capacity(records.len());
        for record in &records {
            predictions.push(predict_description(
                lexicons,
                &model,
                backend.as_ref(),
                record,
                &chains,
                provider.as_ref(),
                config.tokenize,
            )?);
        }
        let path = config.out_dir.join(format!("predictions_{stem}.json"));
        write_json(&path, &predictions)?;
        trace(cli, &format!("{stem}: {} predictions", predictions.len()));
        println!("predicted {stem}: {} descriptions -> {}", predictions.len(), path.display());
        artifacts.push((format!("predictions_{stem}"), path));
    }
    let refs: Vec<(&str, &Path)> = artifacts
        .iter()
        .map(|(n, p)| (n.as_str(), p.as_path()))
        .collect();
    finish_manifest(config, "predict", &[("corpus", corpus_path)], &refs)
}

fn report(cli: &Cli, config: &PipelineConfig, lexicons: &Lexicons) -> Result<(), CliError> {
    let records = load_corpus(&config.corpus, lexicons)?;
    let outcome = run_pipeline(lexicons, &records, config)?;
    let mut artifacts: Vec<(String, PathBuf)> = Vec::new();

    let split_path = config.out_dir.join("split.json");
    write_json(&split_path, &outcome.split)?;
    artifacts.push(("split".into(), split_path));

    for (trained, evaluation) in [
        (&outcome.color, &outcome.color_eval),
        (&outcome.work_type, &outcome.work_type_eval),
    ] {
        let stem = attribute_stem(trained.attribute);
        let model_path = config.out_dir.join(format!("model_{stem}.bin"));
        save_model(&trained.model, &model_path)?;
        let train_path = config.out_dir.join(format!("train_report_{stem}.json"));
        write_json(&train_path, &trained.report)?;
        let eval_path = config.out_dir.join(format!("evaluation_{stem}.json"));
        write_json(&eval_path, &evaluation.report)?;
        let confusion_path = config.out_dir.join(format!("confusion_{stem}.csv"));
        std::fs::write(&confusion_path, &evaluation.confusion_csv)?;
        let predictions_path = config.out_dir.join(format!("predictions_{stem}.json"));
        write_json(&predictions_path, &evaluation.predictions)?;
        trace(cli, &format!("{stem} accuracy {:.4}", evaluation.report.accuracy));
        println!("{}", evaluation.report.table());
        artifacts.push((format!("model_{stem}"), model_path));
        artifacts.push((format!("train_report_{stem}"), train_path));
        artifacts.push((format!("evaluation_{stem}"), eval_path));
        artifacts.push((format!("confusion_{stem}"), confusion_path));
        artifacts.push((format!("predictions_{stem}"), predictions_path));
    }
    let refs: Vec<(&str, &Path)> = artifacts
        .iter()
        .map(|(n, p)| (n.as_str(), p.as_path()))
        .collect();
    finish_manifest(config, "report", &[("corpus", config.corpus.as_path())], &refs)
}

fn synth(
    cli: &Cli,
    config: &PipelineConfig,
    lexicons: &Lexicons,
    descriptions: usize,
    seed: u64,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let records = generate_corpus(lexicons, descriptions, seed);
    let path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.corpus.clone());
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    save_corpus(&path, &records)?;
    trace(cli, &format!("seed {seed}"));
    println!("synthesized {} records -> {}", records.len(), path.display());
    finish_manifest(config, "synth", &[], &[("corpus", path.as_path())])
}
