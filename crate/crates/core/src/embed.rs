//! Embedding backends: any component mapping a sentence to a fixed-length
//! real vector of dimension m.

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding backend {backend} unavailable: {message}")]
    BackendUnavailable { backend: String, message: String },
    #[error("backend {backend} returned dimension {got}, expected {expected}")]
    WrongDimension {
        backend: String,
        got: usize,
        expected: usize,
    },
}

pub trait EmbeddingBackend: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

/// Deterministic signed feature-hashing embedder over word {1,2}-grams,
/// L2-normalized. A stand-in for a pretrained sentence encoder.
pub struct HashingEmbedder {
    dimension: usize,
    seed: u64,
}

impl HashingEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Self {
        assert!(dimension > 0);
        Self { dimension, seed }
    }

    fn tokens(text: &str) -> Vec<&str> {
        text.split(|c: char| !c.is_ascii_alphanumeric() && c != '\'')
            .filter(|t| !t.is_empty())
            .collect()
    }

    // FNV-1a: stable across platforms and releases, unlike std's hasher
    fn hash(&self, parts: &[&str]) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325 ^ self.seed;
        for part in parts {
            for b in part.bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
            h ^= 0x1f;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(512, 0)
    }
}

impl EmbeddingBackend for HashingEmbedder {
    fn name(&self) -> &str {
        "hashing"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let mut vector = vec![0.0; self.dimension];
        let tokens = Self::tokens(text);
        for i in 0..tokens.len() {
            for n in 1..=2usize {
                if i + n > tokens.len() {
                    break;
                }
                let h = self.hash(&tokens[i..i + n]);
                let idx = (h % self.dimension as u64) as usize;
                let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
                vector[idx] += sign;
            }
        }
        let norm: f64 = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut vector {
                *v /= norm;
            }
        }
        Ok(vector)
    }
}

/// HTTP client against an external encoder service.
/// Request: `{"text": ...}`; response: `{"vector": [...]}`.
pub struct EndpointBackend {
    url: String,
    dimension: usize,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

impl EndpointBackend {
    pub fn new(url: impl Into<String>, dimension: usize) -> Self {
        Self {
            url: url.into(),
            dimension,
            client: reqwest::blocking::Client::builder()
                .timeout(std::time::Duration::from_secs(10))
                .build()
                .expect("client builds"),
        }
    }
}

impl EmbeddingBackend for EndpointBackend {
    fn name(&self) -> &str {
        "endpoint"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let response = self
            .client
            .post(&self.url)
            .json(&serde_json::json!({ "text": text }))
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json::<EmbedResponse>())
            .map_err(|e| EmbedError::BackendUnavailable {
                backend: self.name().to_string(),
                message: e.to_string(),
            })?;
        if response.vector.len() != self.dimension {
            return Err(EmbedError::WrongDimension {
                backend: self.name().to_string(),
                got: response.vector.len(),
                expected: self.dimension,
            });
        }
        Ok(response.vector)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_zero_vector() {
        let backend = HashingEmbedder::default();
        let v = backend.embed("").unwrap();
        assert_eq!(v.len(), 512);
        assert!(v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn nonempty_text_has_unit_norm() {
        let backend = HashingEmbedder::default();
        for text in ["white and cream formal dress", "a", "short brown cape"] {
            let v = backend.embed(text).unwrap();
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12, "norm for {text:?} was {norm}");
        }
    }

    #[test]
    fn embedding_is_deterministic() {
        let backend = HashingEmbedder::default();
        let a = backend.embed("girl's pink organza dress").unwrap();
        let b = backend.embed("girl's pink organza dress").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_texts_differ() {
        let backend = HashingEmbedder::default();
        let a = backend.embed("a red coat").unwrap();
        let b = backend.embed("a blue coat").unwrap();
        assert_ne!(a, b);
    }
}
