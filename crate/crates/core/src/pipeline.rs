//! End-to-end orchestration shared by the CLI and the acceptance suite:
//! split → build → balance → train → predict → evaluate, for both
//! attributes, deterministically from one configuration.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::augment::{
    AugmentError, AugmentationChain, CachedProvider, EndpointProvider, IdentityProvider,
    OfflineProvider, TranslationCache, TranslationProvider,
};
use crate::config::{ConfigError, PipelineConfig};
use crate::corpus::{split_corpus, CorpusError, CorpusSplit, DescriptionRecord};
use crate::dataset::{
    build_sentence_dataset, split_train_validation, undersample_sentinel, DatasetError,
    Provenance, SentenceDataset,
};
use crate::embed::{EmbedError, EmbeddingBackend, EndpointBackend, HashingEmbedder};
use crate::evaluation::{
    confusion, metrics, top_k_accuracy, EvaluationError, EvaluationReport,
};
use crate::inference::{
    aggregate_description, aggregate_variants, predict_variants, ranked_description_labels,
    DescriptionPrediction, InferenceError,
};
use crate::model::{train, Hyperparams, MlpClassifier, ModelError, TrainReport};
use crate::preprocess::{annotate_sentence, normalize, SentenceSample};
use crate::vocabulary::{AttributeKind, Lexicons};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error("train/test leakage: description ids {0:?} appear on both sides")]
    Leakage(Vec<String>),
    #[error("description {0:?} produced no sentences")]
    EmptyDescription(String),
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub fn make_provider(config: &PipelineConfig) -> Box<dyn TranslationProvider> {
    match config.provider.as_str() {
        "identity" => Box::new(IdentityProvider),
        "endpoint" => Box::new(EndpointProvider::new(
            config.endpoint_url.clone().unwrap_or_default(),
        )),
        _ => Box::new(OfflineProvider::new(config.provider_seed)),
    }
}

pub fn make_backend(config: &PipelineConfig) -> Box<dyn EmbeddingBackend> {
    match config.backend.as_str() {
        "endpoint" => Box::new(EndpointBackend::new(
            config.backend_url.clone().unwrap_or_default(),
            config.embedding_dim,
        )),
        _ => Box::new(HashingEmbedder::new(
            config.embedding_dim,
            config.embedding_seed,
        )),
    }
}

pub fn chains_from_config(config: &PipelineConfig) -> Vec<AugmentationChain> {
    config
        .chains
        .iter()
        .enumerate()
        .map(|(i, pivot)| AugmentationChain {
            chain_id: i as u32 + 1,
            pivot: pivot.clone(),
        })
        .collect()
}

/// Builds the per-record sample list for one test-side description:
/// tokenized (or whole-description), annotated, augmented, never balanced.
pub fn expand_for_prediction(
    lexicons: &Lexicons,
    record: &DescriptionRecord,
    chains: &[AugmentationChain],
    provider: &dyn TranslationProvider,
    tokenize: bool,
) -> Result<Vec<SentenceSample>, PipelineError> {
    if tokenize {
        Ok(crate::dataset::expand_record(
            lexicons, record, chains, provider,
        )?)
    } else {
        expand_record_whole(lexicons, record, chains, provider)
    }
}

/// Whole-description mode: the normalized description is a single sample.
pub fn expand_record_whole(
    lexicons: &Lexicons,
    record: &DescriptionRecord,
    chains: &[AugmentationChain],
    provider: &dyn TranslationProvider,
) -> Result<Vec<SentenceSample>, PipelineError> {
    let text = normalize(&record.text);
    if text.is_empty() {
        return Err(PipelineError::EmptyDescription(record.id.clone()));
    }
    let (color_label, work_type_label) =
        annotate_sentence(lexicons, &text, &record.gold_color_group, &record.work_type);
    let original = SentenceSample {
        description_id: record.id.clone(),
        sentence_index: 0,
        variant_index: 0,
        text,
        color_label,
        work_type_label,
    };
    Ok(crate::augment::augment_sentence(
        lexicons,
        &original,
        &record.gold_color_group,
        &record.work_type,
        chains,
        provider,
    )?)
}

/// One attribute's trained model plus its training curves.
pub struct TrainedAttribute {
    pub attribute: AttributeKind,
    pub model: MlpClassifier,
    pub report: TrainReport,
    pub train_dataset: SentenceDataset,
    pub validation_dataset: SentenceDataset,
}

/// Builds the balanced training dataset for one attribute and trains the
/// classifier on it.
#[allow(clippy::too_many_arguments)]
pub fn train_attribute(
    lexicons: &Lexicons,
    train_records: &[DescriptionRecord],
    attribute: AttributeKind,
    chains: &[AugmentationChain],
    provider: &dyn TranslationProvider,
    backend: &dyn EmbeddingBackend,
    config: &PipelineConfig,
) -> Result<TrainedAttribute, PipelineError> {
    let dataset = build_training_dataset(lexicons, train_records, attribute, chains, provider, config)?;
    let (train_set, validation_set) =
        split_train_validation(&dataset, config.validation_ratio, config.validation_seed)?;
    let hyperparams = Hyperparams {
        // distinct stream per attribute so the two trainings do not mirror
        seed: config.hyperparams.seed ^ attribute_salt(attribute),
        ..config.hyperparams.clone()
    };
    let model = MlpClassifier::new(
        config.embedding_dim,
        config.hidden1,
        config.hidden2,
        lexicons.label_set(attribute),
        backend.name(),
        config.init_seed ^ attribute_salt(attribute),
    );
    let (model, report) = train(
        model,
        &train_set.samples,
        &validation_set.samples,
        attribute,
        &hyperparams,
        backend,
    )?;
    Ok(TrainedAttribute {
        attribute,
        model,
        report,
        train_dataset: train_set,
        validation_dataset: validation_set,
    })
}

fn attribute_salt(attribute: AttributeKind) -> u64 {
    match attribute {
        AttributeKind::Color => 0x636f6c6f72,
        AttributeKind::WorkType => 0x776f726b,
    }
}

/// Tokenize + annotate + augment + undersample one split side.
pub fn build_training_dataset(
    lexicons: &Lexicons,
    records: &[DescriptionRecord],
    attribute: AttributeKind,
    chains: &[AugmentationChain],
    provider: &dyn TranslationProvider,
    config: &PipelineConfig,
) -> Result<SentenceDataset, PipelineError> {
    let provenance = Provenance {
        split_seed: config.split_seed,
        balance_seed: config.balance_seed,
        balance_fraction: None,
    };
    let dataset = if config.tokenize {
        build_sentence_dataset(lexicons, records, attribute, chains, provider, provenance)?
    } else {
        let mut samples = Vec::new();
        for record in records {
            samples.extend(expand_record_whole(lexicons, record, chains, provider)?);
        }
        SentenceDataset {
            samples,
            attribute,
            label_set: lexicons.label_set(attribute),
            provenance,
        }
    };
    Ok(undersample_sentinel(
        &dataset,
        config.balance_fraction,
        config.balance_seed,
    )?)
}

/// Full prediction path for one unseen description.
pub fn predict_description(
    lexicons: &Lexicons,
    model: &MlpClassifier,
    backend: &dyn EmbeddingBackend,
    record: &DescriptionRecord,
    chains: &[AugmentationChain],
    provider: &dyn TranslationProvider,
    tokenize: bool,
) -> Result<DescriptionPrediction, PipelineError> {
    let samples = expand_for_prediction(lexicons, record, chains, provider, tokenize)?;
    if samples.is_empty() {
        return Err(PipelineError::EmptyDescription(record.id.clone()));
    }
    let mut by_sentence: BTreeMap<usize, Vec<SentenceSample>> = BTreeMap::new();
    for sample in samples {
        by_sentence.entry(sample.sentence_index).or_default().push(sample);
    }
    let mut sentence_predictions = Vec::with_capacity(by_sentence.len());
    for variants in by_sentence.values() {
        let variant_predictions = predict_variants(model, backend, variants)?;
        sentence_predictions.push(aggregate_variants(&model.label_set, &variant_predictions)?);
    }
    Ok(aggregate_description(&model.label_set, &sentence_predictions)?)
}

pub struct AttributeEvaluation {
    pub attribute: AttributeKind,
    pub predictions: Vec<DescriptionPrediction>,
    pub report: EvaluationReport,
    pub confusion_csv: String,
}

/// Predicts every test-side description and computes the metric suite,
/// including top-k accuracy for k = 1..3.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_attribute(
    lexicons: &Lexicons,
    trained: &MlpClassifier,
    backend: &dyn EmbeddingBackend,
    test_records: &[DescriptionRecord],
    chains: &[AugmentationChain],
    provider: &dyn TranslationProvider,
    attribute: AttributeKind,
    tokenize: bool,
) -> Result<AttributeEvaluation, PipelineError> {
    let label_set = lexicons.label_set(attribute);
    let mut predictions = Vec::with_capacity(test_records.len());
    let mut golds = Vec::with_capacity(test_records.len());
    let mut predicted = Vec::with_capacity(test_records.len());
    let mut ranked = Vec::with_capacity(test_records.len());
    for record in test_records {
        let prediction = predict_description(
            lexicons, trained, backend, record, chains, provider, tokenize,
        )?;
        golds.push(match attribute {
            AttributeKind::Color => record.gold_color_group.clone(),
            AttributeKind::WorkType => record.work_type.clone(),
        });
        predicted.push(prediction.label.clone());
        ranked.push(ranked_description_labels(&label_set, &prediction));
        predictions.push(prediction);
    }
    let matrix = confusion(&golds, &predicted, &label_set)?;
    let mut report = metrics(&matrix, attribute);
    for k in 1..=3usize.min(label_set.len()) {
        report.top_k_accuracy.push(top_k_accuracy(&golds, &ranked, k)?);
    }
    Ok(AttributeEvaluation {
        attribute,
        predictions,
        report,
        confusion_csv: matrix.to_csv(),
    })
}

pub struct PipelineOutcome {
    pub split: CorpusSplit,
    pub color: TrainedAttribute,
    pub work_type: TrainedAttribute,
    pub color_eval: AttributeEvaluation,
    pub work_type_eval: AttributeEvaluation,
}

/// The whole pipeline from validated records to evaluation reports.
pub fn run_pipeline(
    lexicons: &Lexicons,
    records: &[DescriptionRecord],
    config: &PipelineConfig,
) -> Result<PipelineOutcome, PipelineError> {
    config.validate()?;
    let split = split_corpus(records, config.split_ratio, config.split_seed)?;
    let train_records: Vec<DescriptionRecord> = records
        .iter()
        .filter(|r| split.train_ids.contains(&r.id))
        .cloned()
        .collect();
    let test_records: Vec<DescriptionRecord> = records
        .iter()
        .filter(|r| split.test_ids.contains(&r.id))
        .cloned()
        .collect();

    let provider_box = make_provider(config);
    let cache = match &config.cache_path {
        Some(path) => Some(TranslationCache::open(path)?),
        None => None,
    };
    let chains = chains_from_config(config);
    let backend = make_backend(config);

    let run = |provider: &dyn TranslationProvider| -> Result<PipelineOutcome, PipelineError> {
        let color = train_attribute(
            lexicons,
            &train_records,
            AttributeKind::Color,
            &chains,
            provider,
            backend.as_ref(),
            config,
        )?;
        let work_type = train_attribute(
            lexicons,
            &train_records,
            AttributeKind::WorkType,
            &chains,
            provider,
            backend.as_ref(),
            config,
        )?;

        // leakage guard, re-verified after full augmentation
        for side in [&color, &work_type] {
            let mut leaked: Vec<String> = side
                .train_dataset
                .description_ids()
                .union(&side.validation_dataset.description_ids())
                .filter(|id| split.test_ids.contains(*id))
                .cloned()
                .collect();
            if !leaked.is_empty() {
                leaked.sort();
                return Err(PipelineError::Leakage(leaked));
            }
        }

        let color_eval = evaluate_attribute(
            lexicons,
            &color.model,
            backend.as_ref(),
            &test_records,
            &chains,
            provider,
            AttributeKind::Color,
            config.tokenize,
        )?;
        let work_type_eval = evaluate_attribute(
            lexicons,
            &work_type.model,
            backend.as_ref(),
            &test_records,
            &chains,
            provider,
            AttributeKind::WorkType,
            config.tokenize,
        )?;
        Ok(PipelineOutcome {
            split: split.clone(),
            color,
            work_type,
            color_eval,
            work_type_eval,
        })
    };

    match &cache {
        Some(cache) => {
            let cached = CachedProvider::new(provider_box.as_ref(), cache);
            run(&cached)
        }
        None => run(provider_box.as_ref()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate_corpus;

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            embedding_dim: 128,
            hidden1: 48,
            hidden2: 24,
            hyperparams: Hyperparams {
                max_epochs: 20,
                seed: 7,
                ..Hyperparams::default()
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn pipeline_runs_on_a_small_synthetic_corpus() {
        let lexicons = Lexicons::default();
        let records = generate_corpus(&lexicons, 60, 7);
        let outcome = run_pipeline(&lexicons, &records, &small_config()).unwrap();
        assert_eq!(outcome.color_eval.predictions.len(), 12);
        assert_eq!(outcome.work_type_eval.predictions.len(), 12);
        assert!(outcome.color_eval.report.accuracy > 0.0);
        // top-k non-decreasing
        let tk = &outcome.color_eval.report.top_k_accuracy;
        assert!(tk[0] <= tk[1] && tk[1] <= tk[2]);
    }

    #[test]
    fn pipeline_is_deterministic() {
        let lexicons = Lexicons::default();
        let records = generate_corpus(&lexicons, 40, 3);
        let config = small_config();
        let a = run_pipeline(&lexicons, &records, &config).unwrap();
        let b = run_pipeline(&lexicons, &records, &config).unwrap();
        assert_eq!(a.color.model.flatten_params(), b.color.model.flatten_params());
        assert_eq!(a.color_eval.report, b.color_eval.report);
        assert_eq!(a.work_type_eval.report, b.work_type_eval.report);
    }
}
