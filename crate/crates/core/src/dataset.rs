//! Sentence-level dataset construction: tokenize + annotate + augment one
//! side of a corpus split, undersample sentinel classes, split
//! train/validation by description id, and serve shuffled batches.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{augment_sentence, AugmentError, AugmentationChain, TranslationProvider};
use crate::corpus::{split_ids, DescriptionRecord};
use crate::preprocess::{annotate_sentence, normalize, tokenize_sentences, SentenceSample};
use crate::vocabulary::{AttributeKind, LabelSet, Lexicons};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("undersampling fraction must lie in (0,1], got {0}")]
    InvalidFraction(f64),
    #[error("need at least 2 distinct description ids, got {0}")]
    TooFewDescriptions(usize),
    #[error(transparent)]
    Augment(#[from] AugmentError),
}

/// Seeds and parameters a dataset was built with.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub split_seed: u64,
    pub balance_seed: u64,
    pub balance_fraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceDataset {
    pub samples: Vec<SentenceSample>,
    pub attribute: AttributeKind,
    pub label_set: LabelSet,
    pub provenance: Provenance,
}

impl SentenceDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn description_ids(&self) -> BTreeSet<String> {
        self.samples
            .iter()
            .map(|s| s.description_id.clone())
            .collect()
    }

    pub fn distribution(&self) -> ClassDistribution {
        let mut counts = BTreeMap::new();
        for sample in &self.samples {
            *counts
                .entry(sample.label(self.attribute).to_string())
                .or_insert(0usize) += 1;
        }
        ClassDistribution { counts }
    }
}

/// Label → sample count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub counts: BTreeMap<String, usize>,
}

impl ClassDistribution {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn count(&self, label: &str) -> usize {
        self.counts.get(label).copied().unwrap_or(0)
    }
}

/// Tokenizes, annotates, and augments every record of one split side.
/// Ordering is deterministic: records in input order, sentences in text
/// order, variants in chain order.
pub fn build_sentence_dataset(
    lexicons: &Lexicons,
    records: &[DescriptionRecord],
    attribute: AttributeKind,
    chains: &[AugmentationChain],
    provider: &dyn TranslationProvider,
    provenance: Provenance,
) -> Result<SentenceDataset, DatasetError> {
    let mut samples = Vec::new();
    for record in records {
        for sample in expand_record(lexicons, record, chains, provider)? {
            samples.push(sample);
        }
    }
    Ok(SentenceDataset {
        samples,
        attribute,
        label_set: lexicons.label_set(attribute),
        provenance,
    })
}

/// Tokenize one record into original sentences and their augmented variants.
pub fn expand_record(
    lexicons: &Lexicons,
    record: &DescriptionRecord,
    chains: &[AugmentationChain],
    provider: &dyn TranslationProvider,
) -> Result<Vec<SentenceSample>, DatasetError> {
    let normalized = normalize(&record.text);
    let mut out = Vec::new();
    for (sentence_index, sentence) in tokenize_sentences(&normalized).into_iter().enumerate() {
        let (color_label, work_type_label) = annotate_sentence(
            lexicons,
            &sentence,
            &record.gold_color_group,
            &record.work_type,
        );
        let original = SentenceSample {
            description_id: record.id.clone(),
            sentence_index,
            variant_index: 0,
            text: sentence,
            color_label,
            work_type_label,
        };
        out.extend(augment_sentence(
            lexicons,
            &original,
            &record.gold_color_group,
            &record.work_type,
            chains,
            provider,
        )?);
    }
    Ok(out)
}

/// Reduces sentinel-class samples to round(f × count), chosen uniformly
/// with the given seed; non-sentinel samples are untouched. The surviving
/// samples are re-shuffled deterministically.
pub fn undersample_sentinel(
    dataset: &SentenceDataset,
    fraction: f64,
    seed: u64,
) -> Result<SentenceDataset, DatasetError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DatasetError::InvalidFraction(fraction));
    }
    let sentinel = dataset.label_set.sentinel().to_string();
    let mut sentinel_indices: Vec<usize> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for (i, sample) in dataset.samples.iter().enumerate() {
        if sample.label(dataset.attribute) == sentinel {
            sentinel_indices.push(i);
        } else {
            kept.push(i);
        }
    }
    let keep_count = (fraction * sentinel_indices.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sentinel_indices.shuffle(&mut rng);
    kept.extend(sentinel_indices.into_iter().take(keep_count));
    kept.shuffle(&mut rng);
    let samples = kept.into_iter().map(|i| dataset.samples[i].clone()).collect();
    Ok(SentenceDataset {
        samples,
        attribute: dataset.attribute,
        label_set: dataset.label_set.clone(),
        provenance: Provenance {
            balance_seed: seed,
            balance_fraction: Some(fraction),
            ..dataset.provenance.clone()
        },
    })
}

/// Splits at the description-id level so all variants and sentences of a
/// description stay on one side.
pub fn split_train_validation(
    dataset: &SentenceDataset,
    ratio: f64,
    seed: u64,
) -> Result<(SentenceDataset, SentenceDataset), DatasetError> {
    let ids: Vec<String> = dataset.description_ids().into_iter().collect();
    if ids.len() < 2 {
        return Err(DatasetError::TooFewDescriptions(ids.len()));
    }
    let (train_ids, validation_ids) = split_ids(&ids, ratio, seed);
    let pick = |side: &BTreeSet<String>| SentenceDataset {
        samples: dataset
            .samples
            .iter()
            .filter(|s| side.contains(&s.description_id))
            .cloned()
            .collect(),
        attribute: dataset.attribute,
        label_set: dataset.label_set.clone(),
        provenance: dataset.provenance.clone(),
    };
    Ok((pick(&train_ids), pick(&validation_ids)))
}

/// Seeded-shuffle batches; the final partial batch is emitted.
pub fn batches(
    dataset: &SentenceDataset,
    batch_size: usize,
    epoch_seed: u64,
) -> Vec<Vec<SentenceSample>> {
    assert!(batch_size >= 1);
    let mut indices: Vec<usize> = (0..dataset.samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed);
    indices.shuffle(&mut rng);
    indices
        .chunks(batch_size)
        .map(|chunk| chunk.iter().map(|&i| dataset.samples[i].clone()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{IdentityProvider, OfflineProvider};

    fn table4_record() -> DescriptionRecord {
        DescriptionRecord {
            id: "t4".to_string(),
            text: "White and cream formal dress. Fully covered in netting and lace. \
                   Cream taffeta, white netting with cream flocked and floral design."
                .to_string(),
            color: "white".to_string(),
            work_type: "dress".to_string(),
            gold_color_group: "white".to_string(),
        }
    }

    fn build(records: &[DescriptionRecord], chains: usize) -> SentenceDataset {
        let lexicons = Lexicons::default();
        let chains = AugmentationChain::default_chains()[..chains].to_vec();
        build_sentence_dataset(
            &lexicons,
            records,
            AttributeKind::Color,
            &chains,
            &OfflineProvider::new(7),
            Provenance::default(),
        )
        .unwrap()
    }

    #[test]
    fn table4_description_yields_12_samples() {
        let dataset = build(&[table4_record()], 3);
        assert_eq!(dataset.len(), 12); // 3 sentences x (1 + 3 chains)
    }

    #[test]
    fn empty_records_yield_empty_dataset() {
        let dataset = build(&[], 3);
        assert!(dataset.is_empty());
    }

    #[test]
    fn one_sentence_no_chains_yields_one_sample() {
        let record = DescriptionRecord {
            id: "x".to_string(),
            text: "a plain white dress.".to_string(),
            color: "white".to_string(),
            work_type: "dress".to_string(),
            gold_color_group: "white".to_string(),
        };
        let dataset = build(&[record], 0);
        assert_eq!(dataset.len(), 1);
    }

    #[test]
    fn provenance_keys_are_unique() {
        let dataset = build(&[table4_record()], 3);
        let keys: BTreeSet<(String, usize, usize)> = dataset
            .samples
            .iter()
            .map(|s| (s.description_id.clone(), s.sentence_index, s.variant_index))
            .collect();
        assert_eq!(keys.len(), dataset.len());
    }

    fn synthetic_dataset(sentinel_count: usize, class_count: usize) -> SentenceDataset {
        let lexicons = Lexicons::default();
        let mut samples = Vec::new();
        for i in 0..sentinel_count {
            samples.push(SentenceSample {
                description_id: format!("s{i}"),
                sentence_index: 0,
                variant_index: 0,
                text: "plain lace detail".to_string(),
                color_label: "no-color".to_string(),
                work_type_label: "no_work_type".to_string(),
            });
        }
        for i in 0..class_count {
            samples.push(SentenceSample {
                description_id: format!("c{i}"),
                sentence_index: 0,
                variant_index: 0,
                text: "a white dress".to_string(),
                color_label: "white".to_string(),
                work_type_label: "dress".to_string(),
            });
        }
        SentenceDataset {
            samples,
            attribute: AttributeKind::Color,
            label_set: lexicons.label_set(AttributeKind::Color),
            provenance: Provenance::default(),
        }
    }

    #[test]
    fn undersample_keeps_round_fraction() {
        let dataset = synthetic_dataset(1000, 150);
        let balanced = undersample_sentinel(&dataset, 0.15, 3).unwrap();
        let dist = balanced.distribution();
        assert_eq!(dist.count("no-color"), 150);
        assert_eq!(dist.count("white"), 150);
    }

    #[test]
    fn undersample_full_fraction_is_identity_up_to_order() {
        let dataset = synthetic_dataset(20, 10);
        let balanced = undersample_sentinel(&dataset, 1.0, 3).unwrap();
        assert_eq!(balanced.len(), dataset.len());
        assert_eq!(balanced.distribution(), dataset.distribution());
    }

    #[test]
    fn undersample_rejects_bad_fraction() {
        let dataset = synthetic_dataset(10, 5);
        assert!(matches!(
            undersample_sentinel(&dataset, 0.0, 1),
            Err(DatasetError::InvalidFraction(_))
        ));
        assert!(matches!(
            undersample_sentinel(&dataset, 1.5, 1),
            Err(DatasetError::InvalidFraction(_))
        ));
    }

    #[test]
    fn undersample_never_touches_other_classes() {
        let dataset = synthetic_dataset(97, 41);
        for seed in 0..10 {
            for fraction in [0.1, 0.15, 0.5, 0.9] {
                let balanced = undersample_sentinel(&dataset, fraction, seed).unwrap();
                let dist = balanced.distribution();
                assert_eq!(dist.count("white"), 41);
                assert_eq!(
                    dist.count("no-color"),
                    (fraction * 97.0).round() as usize
                );
            }
        }
    }

    #[test]
    fn validation_split_follows_description_ids() {
        let records: Vec<DescriptionRecord> = (0..10)
            .map(|i| DescriptionRecord {
                id: format!("d{i}"),
                text: "a white formal dress. fully lined in lace.".to_string(),
                color: "white".to_string(),
                work_type: "dress".to_string(),
                gold_color_group: "white".to_string(),
            })
            .collect();
        let dataset = build(&records, 3);
        let (train, validation) = split_train_validation(&dataset, 0.8, 5).unwrap();
        let train_ids = train.description_ids();
        let val_ids = validation.description_ids();
        assert_eq!(train_ids.len(), 8);
        assert_eq!(val_ids.len(), 2);
        assert!(train_ids.is_disjoint(&val_ids));
        assert_eq!(train.len() + validation.len(), dataset.len());
    }

    #[test]
    fn validation_split_is_deterministic() {
        let dataset = build(
            &(0..10)
                .map(|i| DescriptionRecord {
                    id: format!("d{i}"),
                    text: format!("a white dress numbered {i}."),
                    color: "white".to_string(),
                    work_type: "dress".to_string(),
                    gold_color_group: "white".to_string(),
                })
                .collect::<Vec<_>>(),
            0,
        );
        let (a_train, a_val) = split_train_validation(&dataset, 0.8, 11).unwrap();
        let (b_train, b_val) = split_train_validation(&dataset, 0.8, 11).unwrap();
        assert_eq!(a_train.samples, b_train.samples);
        assert_eq!(a_val.samples, b_val.samples);
    }

    #[test]
    fn single_description_cannot_split() {
        let dataset = build(&[table4_record()], 0);
        assert!(matches!(
            split_train_validation(&dataset, 0.8, 1),
            Err(DatasetError::TooFewDescriptions(1))
        ));
    }

    #[test]
    fn batches_cover_dataset_with_final_partial() {
        let dataset = synthetic_dataset(15, 5);
        let got = batches(&dataset, 8, 1);
        let sizes: Vec<usize> = got.iter().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![8, 8, 4]);
        let total: usize = sizes.iter().sum();
        assert_eq!(total, dataset.len());
    }

    #[test]
    fn batch_size_one_gives_singletons() {
        let dataset = synthetic_dataset(3, 2);
        let got = batches(&dataset, 1, 1);
        assert_eq!(got.len(), 5);
        assert!(got.iter().all(|b| b.len() == 1));
    }

    #[test]
    fn epochs_are_multiset_equal() {
        let dataset = build(&[table4_record()], 3);
        let mut a: Vec<SentenceSample> = batches(&dataset, 4, 1).into_iter().flatten().collect();
        let mut b: Vec<SentenceSample> = batches(&dataset, 4, 2).into_iter().flatten().collect();
        let key = |s: &SentenceSample| (s.description_id.clone(), s.sentence_index, s.variant_index);
        a.sort_by_key(key);
        b.sort_by_key(key);
        assert_eq!(a, b);
    }

    #[test]
    fn augmentation_multiplies_counts_exactly() {
        let records: Vec<DescriptionRecord> = (0..20)
            .map(|i| DescriptionRecord {
                id: format!("d{i}"),
                text: format!("a red wool coat numbered {i}. collar trimmed in fur."),
                color: "red".to_string(),
                work_type: "coats".to_string(),
                gold_color_group: "red".to_string(),
            })
            .collect();
        let with_chains = build(&records, 3);
        let without = build(&records, 0);
        assert_eq!(with_chains.len(), 4 * without.len());
    }

    #[test]
    fn identity_provider_preserves_original_labels() {
        let lexicons = Lexicons::default();
        let dataset = build_sentence_dataset(
            &lexicons,
            &[table4_record()],
            AttributeKind::Color,
            &AugmentationChain::default_chains(),
            &IdentityProvider,
            Provenance::default(),
        )
        .unwrap();
        for sample in &dataset.samples {
            let original = dataset
                .samples
                .iter()
                .find(|s| {
                    s.sentence_index == sample.sentence_index && s.variant_index == 0
                })
                .unwrap();
            assert_eq!(sample.color_label, original.color_label);
        }
    }
}
