//! Deterministic training loop with validation-loss early stopping.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::mlp::{argmax, MlpClassifier};
use super::ModelError;
use crate::embed::EmbeddingBackend;
use crate::preprocess::SentenceSample;
use crate::vocabulary::AttributeKind;

/// Training hyperparameters; defaults reproduce the pipeline's reference
/// configuration (batch 8, lr 0.001, Adam 0.9/0.99/1e-7, 20 epochs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            batch_size: 8,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.99,
            epsilon: 1e-7,
            max_epochs: 20,
            patience: 3,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), String> {
        if self.batch_size == 0 {
            return Err("batch_size must be positive".into());
        }
        if self.learning_rate <= 0.0 {
            return Err("learning_rate must be positive".into());
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err("beta1 and beta2 must lie in (0,1)".into());
        }
        if self.epsilon <= 0.0 {
            return Err("epsilon must be positive".into());
        }
        if self.max_epochs == 0 {
            return Err("max_epochs must be positive".into());
        }
        Ok(())
    }
}

/// Per-epoch curves plus where training stopped and which epoch won.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub validation_accuracy: Vec<f64>,
    /// 1-based count of epochs actually run.
    pub stopped_epoch: usize,
    /// 1-based epoch whose weights were returned.
    pub best_epoch: usize,
}

struct EmbeddedSet {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

fn embed_set(
    samples: &[SentenceSample],
    attribute: AttributeKind,
    model: &MlpClassifier,
    backend: &dyn EmbeddingBackend,
    cache: &mut HashMap<String, Vec<f64>>,
) -> Result<EmbeddedSet, ModelError> {
    let mut features = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for sample in samples {
        let label = sample.label(attribute);
        let index = model
            .label_set
            .index_of(label)
            .ok_or(ModelError::InvalidLabel(usize::MAX))?;
        let vector = match cache.get(&sample.text) {
            Some(v) => v.clone(),
            None => {
                let v = backend.embed(&sample.text)?;
                cache.insert(sample.text.clone(), v.clone());
                v
            }
        };
        features.push(vector);
        labels.push(index);
    }
    Ok(EmbeddedSet { features, labels })
}

fn evaluate_set(model: &MlpClassifier, set: &EmbeddedSet) -> Result<(f64, f64), ModelError> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (features, label) in set.features.iter().zip(&set.labels) {
        let probs = model.forward(features)?;
        loss -= probs[*label].max(f64::MIN_POSITIVE).ln();
        if argmax(&probs) == *label {
            correct += 1;
        }
    }
    let n = set.features.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Trains with Adam until `max_epochs` or until validation loss fails to
/// improve for `patience` epochs; returns the best-validation-loss weights.
pub fn train(
    mut model: MlpClassifier,
    train_samples: &[SentenceSample],
    validation_samples: &[SentenceSample],
    attribute: AttributeKind,
    hyperparams: &Hyperparams,
    backend: &dyn EmbeddingBackend,
) -> Result<(MlpClassifier, TrainReport), ModelError> {
    if train_samples.is_empty() || validation_samples.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut cache = HashMap::new();
    let train_set = embed_set(train_samples, attribute, &model, backend, &mut cache)?;
    let val_set = embed_set(validation_samples, attribute, &model, backend, &mut cache)?;
    drop(cache);

    let mut optimizer = AdamState::new(
        model.param_count(),
        hyperparams.beta1,
        hyperparams.beta2,
        hyperparams.epsilon,
    );
    let mut report = TrainReport {
        train_loss: Vec::new(),
        train_accuracy: Vec::new(),
        validation_loss: Vec::new(),
        validation_accuracy: Vec::new(),
        stopped_epoch: 0,
        best_epoch: 0,
    };
    let mut best_val_loss = f64::INFINITY;
    let mut best_params: Vec<f64> = model.flatten_params();
    let mut stale_epochs = 0usize;

    let mut indices: Vec<usize> = (0..train_set.features.len()).collect();
    for epoch in 1..=hyperparams.max_epochs {
        let epoch_seed = hyperparams
            .seed
            .wrapping_add((epoch as u64).wrapping_mul(0x9e3779b97f4a7c15));
        let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed);
        indices.shuffle(&mut rng);

        for chunk in indices.chunks(hyperparams.batch_size) {
            let batch: Vec<(&[f64], usize)> = chunk
                .iter()
                .map(|&i| (train_set.features[i].as_slice(), train_set.labels[i]))
                .collect();
            let (_, grads) = model.loss_and_gradients(&batch)?;
            optimizer.apply_to_model(&mut model, &grads, hyperparams.learning_rate);
        }

        let (train_loss, train_acc) = evaluate_set(&model, &train_set)?;
        let (val_loss, val_acc) = evaluate_set(&model, &val_set)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(ModelError::NonFiniteLoss);
        }
        report.train_loss.push(train_loss);
        report.train_accuracy.push(train_acc);
        report.validation_loss.push(val_loss);
        report.validation_accuracy.push(val_acc);
        report.stopped_epoch = epoch;

        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            best_params = model.flatten_params();
            report.best_epoch = epoch;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs > hyperparams.patience {
                break;
            }
        }
    }

    model.assign_params(&best_params);
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::HashingEmbedder;
    use crate::vocabulary::LabelSet;

    fn two_class_label_set() -> LabelSet {
        LabelSet::new(
            AttributeKind::Color,
            vec!["red".to_string(), "no-color".to_string()],
            1,
        )
    }

    fn toy_samples() -> (Vec<SentenceSample>, Vec<SentenceSample>) {
        // 20 training samples; red texts literally contain "red"
        let mut train = Vec::new();
        for i in 0..10 {
            train.push(SentenceSample {
                description_id: format!("r{i}"),
                sentence_index: 0,
                variant_index: 0,
                text: format!("a red item number {i}"),
                color_label: "red".to_string(),
                work_type_label: "no_work_type".to_string(),
            });
            train.push(SentenceSample {
                description_id: format!("n{i}"),
                sentence_index: 0,
                variant_index: 0,
                text: format!("a plain item number {i}"),
                color_label: "no-color".to_string(),
                work_type_label: "no_work_type".to_string(),
            });
        }
        let validation = vec![train[0].clone(), train[1].clone()];
        (train, validation)
    }

    /// Margin check: a linear rule over the hashed features separates the
    /// two classes, so the classes are linearly separable.
    fn assert_linearly_separable(samples: &[SentenceSample], backend: &HashingEmbedder) {
        use crate::embed::EmbeddingBackend;
        // weight vector = mean(red) - mean(plain); verify positive margin on
        // every sample against the midpoint threshold
        let dim = backend.dimension();
        let mut mean_pos = vec![0.0; dim];
        let mut mean_neg = vec![0.0; dim];
        let (mut np, mut nn) = (0.0, 0.0);
        for s in samples {
            let v = backend.embed(&s.text).unwrap();
            if s.color_label == "red" {
                for (m, x) in mean_pos.iter_mut().zip(&v) {
                    *m += x;
                }
                np += 1.0;
            } else {
                for (m, x) in mean_neg.iter_mut().zip(&v) {
                    *m += x;
                }
                nn += 1.0;
            }
        }
        for m in &mut mean_pos {
            *m /= np;
        }
        for m in &mut mean_neg {
            *m /= nn;
        }
        let w: Vec<f64> = mean_pos.iter().zip(&mean_neg).map(|(p, n)| p - n).collect();
        let dot = |v: &[f64]| -> f64 { w.iter().zip(v).map(|(a, b)| a * b).sum() };
        let threshold = (dot(&mean_pos) + dot(&mean_neg)) / 2.0;
        for s in samples {
            let v = backend.embed(&s.text).unwrap();
            let score = dot(&v) - threshold;
            if s.color_label == "red" {
                assert!(score > 0.0, "not separable at {:?}", s.text);
            } else {
                assert!(score < 0.0, "not separable at {:?}", s.text);
            }
        }
    }

    #[test]
    fn separable_toy_set_reaches_full_training_accuracy() {
        let backend = HashingEmbedder::new(64, 0);
        let (train_samples, val_samples) = toy_samples();
        assert_linearly_separable(&train_samples, &backend);
        let model = MlpClassifier::new(64, 16, 8, two_class_label_set(), "hashing", 5);
        let hp = Hyperparams {
            seed: 5,
            ..Hyperparams::default()
        };
        let (_, report) = train(
            model,
            &train_samples,
            &val_samples,
            AttributeKind::Color,
            &hp,
            &backend,
        )
        .unwrap();
        let final_acc = *report.train_accuracy.last().unwrap();
        let best_acc = report
            .train_accuracy
            .iter()
            .cloned()
            .fold(0.0_f64, f64::max);
        assert_eq!(best_acc.max(final_acc), 1.0, "report: {report:?}");
    }

    #[test]
    fn zero_patience_stops_after_first_non_improving_epoch() {
        let backend = HashingEmbedder::new(64, 0);
        let (train_samples, val_samples) = toy_samples();
        let model = MlpClassifier::new(64, 16, 8, two_class_label_set(), "hashing", 5);
        let hp = Hyperparams {
            patience: 0,
            max_epochs: 50,
            seed: 5,
            ..Hyperparams::default()
        };
        let (_, report) = train(
            model,
            &train_samples,
            &val_samples,
            AttributeKind::Color,
            &hp,
            &backend,
        )
        .unwrap();
        // stops exactly one epoch after the best epoch (or hits max_epochs)
        if report.stopped_epoch < hp.max_epochs {
            assert_eq!(report.stopped_epoch, report.best_epoch + 1);
        }
    }

    #[test]
    fn training_is_bit_deterministic() {
        let backend = HashingEmbedder::new(64, 0);
        let (train_samples, val_samples) = toy_samples();
        let hp = Hyperparams {
            seed: 9,
            max_epochs: 5,
            ..Hyperparams::default()
        };
        let run = || {
            let model = MlpClassifier::new(64, 16, 8, two_class_label_set(), "hashing", 5);
            train(
                model,
                &train_samples,
                &val_samples,
                AttributeKind::Color,
                &hp,
                &backend,
            )
            .unwrap()
        };
        let (m1, r1) = run();
        let (m2, r2) = run();
        assert_eq!(m1.flatten_params(), m2.flatten_params());
        assert_eq!(r1, r2);
    }

    #[test]
    fn empty_dataset_rejected() {
        let backend = HashingEmbedder::new(64, 0);
        let model = MlpClassifier::new(64, 16, 8, two_class_label_set(), "hashing", 5);
        let err = train(
            model,
            &[],
            &[],
            AttributeKind::Color,
            &Hyperparams::default(),
            &backend,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::EmptyDataset));
    }

    #[test]
    fn returned_weights_match_best_validation_epoch() {
        let backend = HashingEmbedder::new(64, 0);
        let (train_samples, val_samples) = toy_samples();
        let model = MlpClassifier::new(64, 16, 8, two_class_label_set(), "hashing", 5);
        let hp = Hyperparams {
            seed: 3,
            ..Hyperparams::default()
        };
        let (best_model, report) = train(
            model,
            &train_samples,
            &val_samples,
            AttributeKind::Color,
            &hp,
            &backend,
        )
        .unwrap();
        // recompute validation loss of the returned weights; it must equal
        // the best epoch's recorded loss
        let mut cache = HashMap::new();
        let val_set = embed_set(
            &val_samples,
            AttributeKind::Color,
            &best_model,
            &backend,
            &mut cache,
        )
        .unwrap();
        let (val_loss, _) = evaluate_set(&best_model, &val_set).unwrap();
        let best_recorded = report.validation_loss[report.best_epoch - 1];
        assert!((val_loss - best_recorded).abs() < 1e-12);
        let min_recorded = report
            .validation_loss
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(val_loss <= min_recorded + 1e-12);
    }

    #[test]
    fn full_batch_loss_descends_over_first_steps() {
        let backend = HashingEmbedder::new(64, 0);
        let (train_samples, _) = toy_samples();
        let mut model = MlpClassifier::new(64, 16, 8, two_class_label_set(), "hashing", 5);
        let mut cache = HashMap::new();
        let set = embed_set(
            &train_samples,
            AttributeKind::Color,
            &model,
            &backend,
            &mut cache,
        )
        .unwrap();
        let batch: Vec<(&[f64], usize)> = set
            .features
            .iter()
            .zip(&set.labels)
            .map(|(f, l)| (f.as_slice(), *l))
            .collect();
        let mut optimizer = AdamState::new(model.param_count(), 0.9, 0.99, 1e-7);
        let mut prev = f64::INFINITY;
        for _ in 0..5 {
            let (loss, grads) = model.loss_and_gradients(&batch).unwrap();
            assert!(loss <= prev, "loss increased: {prev} -> {loss}");
            prev = loss;
            optimizer.apply_to_model(&mut model, &grads, 0.001);
        }
    }
}
