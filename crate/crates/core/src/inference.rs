//! Prediction path for unseen descriptions: classify per variant, aggregate
//! variants per sentence by majority vote with mean probability, then fuse
//! sentences into one description-level label per attribute.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbeddingBackend;
use crate::model::{MlpClassifier, ModelError};
use crate::preprocess::SentenceSample;
use crate::vocabulary::LabelSet;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("no predictions to aggregate")]
    EmptyInput,
    #[error("mixed provenance: expected ({0}, {1}), found ({2}, {3})")]
    MixedProvenance(String, usize, String, usize),
    #[error("k must lie in 1..={max}, got {k}")]
    InvalidK { k: usize, max: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One classifier output for one sentence variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantPrediction {
    pub description_id: String,
    pub sentence_index: usize,
    pub variant_index: usize,
    pub probabilities: Vec<f64>,
    pub label: String,
    pub probability: f64,
}

/// Majority-vote fusion of a sentence's variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePrediction {
    pub description_id: String,
    pub sentence_index: usize,
    pub label: String,
    /// Mean predicted probability over the winning label's voters.
    pub probability: f64,
    pub variants: Vec<VariantPrediction>,
}

/// Final description-level label with its full trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionPrediction {
    pub description_id: String,
    pub label: String,
    pub probability: f64,
    /// Earliest sentence index supporting the winning label.
    pub supporting_sentence: Option<usize>,
    pub sentences: Vec<SentencePrediction>,
}

/// One prediction per variant, in input order.
pub fn predict_variants(
    model: &MlpClassifier,
    backend: &dyn EmbeddingBackend,
    variants: &[SentenceSample],
) -> Result<Vec<VariantPrediction>, InferenceError> {
    if variants.is_empty() {
        return Err(InferenceError::EmptyInput);
    }
    let mut out = Vec::with_capacity(variants.len());
    for variant in variants {
        let features = backend.embed(&variant.text).map_err(ModelError::Embed)?;
        let (label_index, probabilities) = model.predict(&features)?;
        out.push(VariantPrediction {
            description_id: variant.description_id.clone(),
            sentence_index: variant.sentence_index,
            variant_index: variant.variant_index,
            label: model.label_set.classes[label_index].clone(),
            probability: probabilities[label_index],
            probabilities,
        });
    }
    Ok(out)
}

/// Plurality vote over variants; ties broken by higher mean predicted
/// probability among tied labels, then lower class index. The final
/// probability is the mean over the winning label's voters.
pub fn aggregate_variants(
    label_set: &LabelSet,
    predictions: &[VariantPrediction],
) -> Result<SentencePrediction, InferenceError> {
    let first = predictions.first().ok_or(InferenceError::EmptyInput)?;
    for p in predictions {
        if p.description_id != first.description_id || p.sentence_index != first.sentence_index {
            return Err(InferenceError::MixedProvenance(
                first.description_id.clone(),
                first.sentence_index,
                p.description_id.clone(),
                p.sentence_index,
            ));
        }
    }
    let mut votes: Vec<(usize, f64)> = vec![(0, 0.0); label_set.len()]; // (count, prob sum)
    for p in predictions {
        let idx = label_set
            .index_of(&p.label)
            .expect("prediction label is in the label set");
        votes[idx].0 += 1;
        votes[idx].1 += p.probability;
    }
    let mut winner = 0usize;
    for idx in 1..votes.len() {
        let (count, sum) = votes[idx];
        if count == 0 {
            continue;
        }
        let (best_count, best_sum) = votes[winner];
        let mean = sum / count as f64;
        let best_mean = if best_count > 0 {
            best_sum / best_count as f64
        } else {
            f64::NEG_INFINITY
        };
        if count > best_count || (count == best_count && mean > best_mean) {
            winner = idx;
        }
    }
    let (count, sum) = votes[winner];
    Ok(SentencePrediction {
        description_id: first.description_id.clone(),
        sentence_index: first.sentence_index,
        label: label_set.classes[winner].clone(),
        probability: sum / count as f64,
        variants: predictions.to_vec(),
    })
}

/// Discards sentinel-labeled sentences; among the rest the label with the
/// greatest summed final probability wins, ties going to the label whose
/// earliest supporting sentence comes first. All-sentinel input stays
/// sentinel.
pub fn aggregate_description(
    label_set: &LabelSet,
    sentences: &[SentencePrediction],
) -> Result<DescriptionPrediction, InferenceError> {
    let first = sentences.first().ok_or(InferenceError::EmptyInput)?;
    let sentinel = label_set.sentinel();
    // (summed probability, earliest sentence index) per label
    let mut scores: Vec<(f64, usize)> = vec![(0.0, usize::MAX); label_set.len()];
    for s in sentences {
        if s.label == sentinel {
            continue;
        }
        let idx = label_set.index_of(&s.label).expect("label in set");
        scores[idx].0 += s.probability;
        scores[idx].1 = scores[idx].1.min(s.sentence_index);
    }
    let mut winner: Option<usize> = None;
    for idx in 0..scores.len() {
        let (sum, earliest) = scores[idx];
        if sum <= 0.0 {
            continue;
        }
        match winner {
            None => winner = Some(idx),
            Some(w) => {
                let (w_sum, w_earliest) = scores[w];
                if sum > w_sum || (sum == w_sum && earliest < w_earliest) {
                    winner = Some(idx);
                }
            }
        }
    }
    let prediction = match winner {
        Some(idx) => DescriptionPrediction {
            description_id: first.description_id.clone(),
            label: label_set.classes[idx].clone(),
            probability: scores[idx].0
                / sentences.iter().filter(|s| s.label == label_set.classes[idx]).count() as f64,
            supporting_sentence: Some(scores[idx].1),
            sentences: sentences.to_vec(),
        },
        None => DescriptionPrediction {
            description_id: first.description_id.clone(),
            label: sentinel.to_string(),
            probability: mean_sentinel_probability(sentences),
            supporting_sentence: None,
            sentences: sentences.to_vec(),
        },
    };
    Ok(prediction)
}

fn mean_sentinel_probability(sentences: &[SentencePrediction]) -> f64 {
    let sum: f64 = sentences.iter().map(|s| s.probability).sum();
    sum / sentences.len() as f64
}

/// Description-level ranking of labels: the final label first, remaining
/// labels by summed sentence probability, class-index tie-break.
pub fn ranked_description_labels(
    label_set: &LabelSet,
    prediction: &DescriptionPrediction,
) -> Vec<String> {
    let mut sums = vec![0.0; label_set.len()];
    for s in &prediction.sentences {
        for v in &s.variants {
            for (i, p) in v.probabilities.iter().enumerate() {
                sums[i] += p;
            }
        }
    }
    let mut order: Vec<usize> = (0..label_set.len()).collect();
    order.sort_by(|a, b| sums[*b].partial_cmp(&sums[*a]).unwrap().then(a.cmp(b)));
    let final_idx = label_set.index_of(&prediction.label).expect("label in set");
    let mut ranked = vec![final_idx];
    ranked.extend(order.into_iter().filter(|i| *i != final_idx));
    ranked
        .into_iter()
        .map(|i| label_set.classes[i].clone())
        .collect()
}

/// The k highest-probability labels, descending, class-index tie-break.
pub fn top_k_labels(
    label_set: &LabelSet,
    probabilities: &[f64],
    k: usize,
) -> Result<Vec<String>, InferenceError> {
    if k == 0 || k > label_set.len() {
        return Err(InferenceError::InvalidK {
            k,
            max: label_set.len(),
        });
    }
    let mut order: Vec<usize> = (0..probabilities.len()).collect();
    order.sort_by(|a, b| {
        probabilities[*b]
            .partial_cmp(&probabilities[*a])
            .unwrap()
            .then(a.cmp(b))
    });
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| label_set.classes[i].clone())
        .collect())
}
