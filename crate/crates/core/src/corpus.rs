//! Description records: ingestion, validation, serialization, and the
//! description-level train/test split performed before any augmentation.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::normalize;
use crate::vocabulary::{Lexicons, VocabularyError, NO_COLOR, NO_WORK_TYPE};

/// One garment's free-form text plus gold Color and Work Type labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionRecord {
    pub id: String,
    pub text: String,
    /// Raw vocabulary term (or the sentinel), as labeled by the curator.
    pub color: String,
    pub work_type: String,
    /// Derived via the color lexicon; not part of the file format.
    #[serde(skip)]
    pub gold_color_group: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error at line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("too few records: need at least {needed}, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("split ratio must be in (0,1), got {0}")]
    InvalidRatio(f64),
}

/// A description-level partition of corpus ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
    pub seed: u64,
    pub ratio: f64,
}

impl CorpusSplit {
    pub fn is_disjoint(&self) -> bool {
        self.train_ids.is_disjoint(&self.test_ids)
    }
}

fn validate_record(
    lexicons: &Lexicons,
    record: &mut DescriptionRecord,
    line: usize,
) -> Result<(), CorpusError> {
    if normalize(&record.text).is_empty() {
        return Err(CorpusError::Validation {
            line,
            message: format!("record {:?} has empty text after normalization", record.id),
        });
    }
    record.color = record.color.to_lowercase();
    record.work_type = record.work_type.to_lowercase();
    record.gold_color_group = if record.color == NO_COLOR {
        NO_COLOR.to_string()
    } else {
        match lexicons.color.map_color_term(&record.color) {
            Ok(group) => group.to_string(),
            Err(VocabularyError::UnknownTerm(t)) => {
                return Err(CorpusError::Validation {
                    line,
                    message: format!("record {:?}: unknown gold color term {t:?}", record.id),
                })
            }
            Err(e) => {
                return Err(CorpusError::Validation {
                    line,
                    message: e.to_string(),
                })
            }
        }
    };
    if record.work_type != NO_WORK_TYPE
        && !lexicons.work_type.labels().contains(&record.work_type)
    {
        return Err(CorpusError::Validation {
            line,
            message: format!(
                "record {:?}: unknown gold work type {:?}",
                record.id, record.work_type
            ),
        });
    }
    Ok(())
}

/// Loads a line-delimited corpus file and validates every record against the
/// lexicons, populating the derived gold color group.
pub fn load_corpus(path: &Path, lexicons: &Lexicons) -> Result<Vec<DescriptionRecord>, CorpusError> {
    let content = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&content, lexicons)
}

pub fn parse_corpus(
    content: &str,
    lexicons: &Lexicons,
) -> Result<Vec<DescriptionRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: DescriptionRecord =
            serde_json::from_str(line).map_err(|e| CorpusError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        validate_record(lexicons, &mut record, line_no)?;
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::Validation {
                line: line_no,
                message: format!("duplicate id {:?}", record.id),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the same line-delimited form `load_corpus` reads,
/// keys in id/text/color/work_type order.
pub fn save_corpus(path: &Path, records: &[DescriptionRecord]) -> Result<(), CorpusError> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, record).expect("record serializes");
        out.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(&out).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Deterministic uniform shuffle split by whole description.
pub fn split_corpus(
    records: &[DescriptionRecord],
    ratio: f64,
    seed: u64,
) -> Result<CorpusSplit, CorpusError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CorpusError::InvalidRatio(ratio));
    }
    if records.len() < 2 {
        return Err(CorpusError::TooFewRecords {
            needed: 2,
            got: records.len(),
        });
    }
    let mut ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let test_count = ((1.0 - ratio) * records.len() as f64).round() as usize;
    let test_count = test_count.clamp(1, records.len() - 1);
    let test_ids: BTreeSet<String> = ids[..test_count].iter().map(|s| s.to_string()).collect();
    let train_ids: BTreeSet<String> = ids[test_count..].iter().map(|s| s.to_string()).collect();
    Ok(CorpusSplit {
        train_ids,
        test_ids,
        seed,
        ratio,
    })
}

/// Splits an id list by the same rule as `split_corpus`; used for the
/// train/validation split at the description-id level.
pub fn split_ids(ids: &[String], ratio: f64, seed: u64) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut shuffled: Vec<&String> = ids.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let holdout = (((1.0 - ratio) * ids.len() as f64).round() as usize).clamp(1, ids.len() - 1);
    let held: BTreeSet<String> = shuffled[..holdout].iter().map(|s| s.to_string()).collect();
    let kept: BTreeSet<String> = shuffled[holdout..].iter().map(|s| s.to_string()).collect();
    (kept, held)
}
