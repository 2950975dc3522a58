//! Back-translation augmentation through pluggable translation providers,
//! with a persistent translation cache and a deterministic offline provider.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::preprocess::{annotate_sentence, SentenceSample};
use crate::vocabulary::Lexicons;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("translation provider {provider} unavailable: {message}")]
    ProviderUnavailable { provider: String, message: String },
    #[error("provider {provider} returned empty text for {source_lang}->{target}")]
    EmptyTranslation {
        provider: String,
        source_lang: String,
        target: String,
    },
    #[error("augmentation chain {chain_id} failed: {source}")]
    Chain {
        chain_id: u32,
        #[source]
        source: Box<AugmentError>,
    },
    #[error("cache i/o failure at {path}: {source}")]
    CacheIo {
        path: String,
        source: std::io::Error,
    },
    #[error("variant {0} is not an original sample (variant_index must be 0)")]
    NotOriginal(usize),
}

/// One en→pivot→en augmentation chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationChain {
    pub chain_id: u32,
    pub pivot: String,
}

impl AugmentationChain {
    /// The default three pivots: French, German, Spanish.
    pub fn default_chains() -> Vec<AugmentationChain> {
        ["fr", "de", "es"]
            .iter()
            .enumerate()
            .map(|(i, pivot)| AugmentationChain {
                chain_id: i as u32 + 1,
                pivot: pivot.to_string(),
            })
            .collect()
    }
}

pub trait TranslationProvider: Send + Sync {
    fn name(&self) -> &str;
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, AugmentError>;
}

/// Returns the input unchanged; useful as a contract baseline.
pub struct IdentityProvider;

impl TranslationProvider for IdentityProvider {
    fn name(&self) -> &str {
        "identity"
    }

    fn translate(&self, text: &str, _source: &str, _target: &str) -> Result<String, AugmentError> {
        Ok(text.to_string())
    }
}

/// Per-pivot synonym tables for the offline provider. Only non-vocabulary
/// words are substituted so the gold term survives the round trip.
const FR_SYNONYMS: &[(&str, &str)] = &[
    ("formal", "dressy"),
    ("long", "lengthy"),
    ("covered", "coated"),
    ("with", "having"),
    ("fur", "pelt"),
    ("style", "fashion"),
    ("small", "little"),
];
const DE_SYNONYMS: &[(&str, &str)] = &[
    ("formal", "ceremonial"),
    ("short", "brief"),
    ("trimmed", "edged"),
    ("lined", "padded"),
    ("has", "carries"),
    ("worn", "used"),
    ("large", "big"),
];
const ES_SYNONYMS: &[(&str, &str)] = &[
    ("formal", "elegant"),
    ("cotton", "woven cotton"),
    ("front", "front side"),
    ("back", "rear"),
    ("detail", "ornament"),
    ("and", "plus"),
    ("old", "aged"),
];

/// Deterministic offline stand-in for a translation service: per-pivot
/// synonym substitution plus bounded adjacent word swaps, seeded by the
/// (text, pivot) pair so repeated runs are byte-identical.
pub struct OfflineProvider {
    seed: u64,
}

impl OfflineProvider {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn pivot_synonyms(pivot: &str) -> &'static [(&'static str, &'static str)] {
        match pivot {
            "fr" => FR_SYNONYMS,
            "de" => DE_SYNONYMS,
            "es" => ES_SYNONYMS,
            _ => &[],
        }
    }

    fn perturb(&self, text: &str, pivot: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        hasher.update(pivot.as_bytes());
        hasher.update(self.seed.to_le_bytes());
        let digest = hasher.finalize();
        let seed = u64::from_le_bytes(digest[..8].try_into().unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut words: Vec<String> = text.split(' ').map(|w| w.to_string()).collect();
        for word in &mut words {
            let (bare, punct) = split_trailing_punct(word);
            for (from, to) in Self::pivot_synonyms(pivot) {
                if bare == *from && rng.gen_bool(0.7) {
                    *word = format!("{to}{punct}");
                    break;
                }
            }
        }
        // at most one adjacent swap, and never across punctuation
        if words.len() >= 3 && rng.gen_bool(0.5) {
            let i = rng.gen_range(0..words.len() - 1);
            let left_clean = words[i].chars().all(|c| c.is_ascii_alphanumeric() || c == '\'');
            let right_clean =
                words[i + 1].chars().all(|c| c.is_ascii_alphanumeric() || c == '\'');
            if left_clean && right_clean {
                words.swap(i, i + 1);
            }
        }
        words.join(" ")
    }
}

fn split_trailing_punct(word: &str) -> (&str, &str) {
    let cut = word
        .char_indices()
        .rev()
        .take_while(|(_, c)| !c.is_ascii_alphanumeric())
        .last()
        .map(|(i, _)| i)
        .unwrap_or(word.len());
    word.split_at(cut)
}

impl TranslationProvider for OfflineProvider {
    fn name(&self) -> &str {
        "offline"
    }

    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, AugmentError> {
        // the perturbation is applied on the pivot->en hop
        if target == "en" {
            Ok(self.perturb(text, source))
        } else {
            Ok(text.to_string())
        }
    }
}

/// HTTP client against a configurable translation endpoint.
/// Request: `{"text": ..., "source": ..., "target": ...}`; response: `{"text": ...}`.
pub struct EndpointProvider {
    url: String,
    client: reqwest::blocking::Client,
    attempts: u32,
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    text: &'a str,
    source: &'a str,
    target: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    text: String,
}

impl EndpointProvider {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(10))
                .build()
                .expect("client builds"),
            attempts: 3,
        }
    }
}

impl TranslationProvider for EndpointProvider {
    fn name(&self) -> &str {
        "endpoint"
    }

    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, AugmentError> {
        let mut last_err = String::new();
        for attempt in 0..self.attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(250 << attempt));
            }
            let result = self
                .client
                .post(&self.url)
                .json(&TranslateRequest {
                    text,
                    source,
                    target,
                })
                .send()
                .and_then(|r| r.error_for_status())
                .and_then(|r| r.json::<TranslateResponse>());
            match result {
                Ok(response) => return Ok(response.text),
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(AugmentError::ProviderUnavailable {
            provider: self.name().to_string(),
            message: last_err,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheRecord {
    provider: String,
    source: String,
    target: String,
    hash: String,
    text: String,
}

/// Persistent translation cache keyed by (provider, source, target, content hash).
/// Append-only within a run; replaying a cached request performs no provider call.
pub struct TranslationCache {
    path: Option<PathBuf>,
    entries: Mutex<HashMap<(String, String, String, String), String>>,
}

impl TranslationCache {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            entries: Mutex::new(HashMap::new()),
        }
    }

    /// Opens (or creates) a cache file, loading any existing entries.
    pub fn open(path: &Path) -> Result<Self, AugmentError> {
        let mut entries = HashMap::new();
        if path.exists() {
            let content = std::fs::read_to_string(path).map_err(|source| AugmentError::CacheIo {
                path: path.display().to_string(),
                source,
            })?;
            for line in content.lines().filter(|l| !l.trim().is_empty()) {
                if let Ok(record) = serde_json::from_str::<CacheRecord>(line) {
                    entries.insert(
                        (record.provider, record.source, record.target, record.hash),
                        record.text,
                    );
                }
            }
        }
        Ok(Self {
            path: Some(path.to_path_buf()),
            entries: Mutex::new(entries),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &(String, String, String, String)) -> Option<String> {
        self.entries.lock().unwrap().get(key).cloned()
    }

    fn insert(&self, key: (String, String, String, String), text: &str) -> Result<(), AugmentError> {
        let mut entries = self.entries.lock().unwrap();
        if entries.contains_key(&key) {
            return Ok(());
        }
        if let Some(path) = &self.path {
            let record = CacheRecord {
                provider: key.0.clone(),
                source: key.1.clone(),
                target: key.2.clone(),
                hash: key.3.clone(),
                text: text.to_string(),
            };
            let mut file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|source| AugmentError::CacheIo {
                    path: path.display().to_string(),
                    source,
                })?;
            let mut line = serde_json::to_vec(&record).expect("record serializes");
            line.push(b'\n');
            file.write_all(&line).map_err(|source| AugmentError::CacheIo {
                path: path.display().to_string(),
                source,
            })?;
        }
        entries.insert(key, text.to_string());
        Ok(())
    }
}

fn content_hash(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    format!("{:x}", hasher.finalize())
}

/// Wraps a provider with a cache; hits never reach the inner provider.
pub struct CachedProvider<'a> {
    inner: &'a dyn TranslationProvider,
    cache: &'a TranslationCache,
    calls: AtomicUsize,
}

impl<'a> CachedProvider<'a> {
    pub fn new(inner: &'a dyn TranslationProvider, cache: &'a TranslationCache) -> Self {
        Self {
            inner,
            cache,
            calls: AtomicUsize::new(0),
        }
    }

    /// Number of requests that reached the inner provider.
    pub fn provider_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl TranslationProvider for CachedProvider<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, AugmentError> {
        let key = (
            self.inner.name().to_string(),
            source.to_string(),
            target.to_string(),
            content_hash(text),
        );
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let translated = self.inner.translate(text, source, target)?;
        self.cache.insert(key, &translated)?;
        Ok(translated)
    }
}

/// en → pivot → en round trip through the provider.
pub fn back_translate(
    sentence: &str,
    chain: &AugmentationChain,
    provider: &dyn TranslationProvider,
) -> Result<String, AugmentError> {
    let forward = provider.translate(sentence, "en", &chain.pivot)?;
    if forward.trim().is_empty() {
        return Err(AugmentError::EmptyTranslation {
            provider: provider.name().to_string(),
            source_lang: "en".to_string(),
            target: chain.pivot.clone(),
        });
    }
    let round = provider.translate(&forward, &chain.pivot, "en")?;
    if round.trim().is_empty() {
        return Err(AugmentError::EmptyTranslation {
            provider: provider.name().to_string(),
            source_lang: chain.pivot.clone(),
            target: "en".to_string(),
        });
    }
    Ok(round)
}

/// Expands an original sample into itself plus one re-annotated variant per
/// chain. Variant labels may differ from the original when back-translation
/// drops or keeps the gold term.
pub fn augment_sentence(
    lexicons: &Lexicons,
    sample: &SentenceSample,
    gold_color_group: &str,
    gold_work_type: &str,
    chains: &[AugmentationChain],
    provider: &dyn TranslationProvider,
) -> Result<Vec<SentenceSample>, AugmentError> {
    if sample.variant_index != 0 {
        return Err(AugmentError::NotOriginal(sample.variant_index));
    }
    let mut out = Vec::with_capacity(1 + chains.len());
    out.push(sample.clone());
    for chain in chains {
        let text = back_translate(&sample.text, chain, provider).map_err(|e| {
            AugmentError::Chain {
                chain_id: chain.chain_id,
                source: Box::new(e),
            }
        })?;
        let (color_label, work_type_label) =
            annotate_sentence(lexicons, &text, gold_color_group, gold_work_type);
        out.push(SentenceSample {
            description_id: sample.description_id.clone(),
            sentence_index: sample.sentence_index,
            variant_index: chain.chain_id as usize,
            text,
            color_label,
            work_type_label,
        });
    }
    Ok(out)
}
