//! Pipeline configuration: a flat key=value file, overridable by
//! environment variables (`GT_<KEY>`) and then by CLI flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::Hyperparams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config line {line}: expected key=value, got {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("invalid value for {key}: {value:?} ({message})")]
    InvalidValue {
        key: String,
        value: String,
        message: String,
    },
    #[error("missing required key {0:?}")]
    MissingKey(String),
}

/// All knobs of the end-to-end pipeline. Every seed is explicit; there are
/// no wall-clock defaults anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
    pub split_ratio: f64,
    pub split_seed: u64,
    pub validation_ratio: f64,
    pub validation_seed: u64,
    /// Pivot language codes, e.g. fr,de,es. Empty disables augmentation.
    pub chains: Vec<String>,
    pub provider: String,
    pub provider_seed: u64,
    pub endpoint_url: Option<String>,
    pub cache_path: Option<PathBuf>,
    pub balance_fraction: f64,
    pub balance_seed: u64,
    pub backend: String,
    pub backend_url: Option<String>,
    pub embedding_dim: usize,
    pub embedding_seed: u64,
    pub hidden1: usize,
    pub hidden2: usize,
    pub init_seed: u64,
    pub hyperparams: Hyperparams,
    /// Tokenize descriptions into sentences (the pipeline default). Off
    /// reproduces the whole-description baseline.
    pub tokenize: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("corpus.jsonl"),
            out_dir: PathBuf::from("out"),
            split_ratio: 0.8,
            split_seed: 7,
            validation_ratio: 0.8,
            validation_seed: 7,
            chains: vec!["fr".into(), "de".into(), "es".into()],
            provider: "offline".into(),
            provider_seed: 7,
            endpoint_url: None,
            cache_path: None,
            balance_fraction: 0.15,
            balance_seed: 7,
            backend: "hashing".into(),
            backend_url: None,
            embedding_dim: 512,
            embedding_seed: 0,
            hidden1: 256,
            hidden2: 64,
            init_seed: 7,
            hyperparams: Hyperparams {
                seed: 7,
                ..Hyperparams::default()
            },
            tokenize: true,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "corpus",
    "out_dir",
    "split_ratio",
    "split_seed",
    "validation_ratio",
    "validation_seed",
    "chains",
    "provider",
    "provider_seed",
    "endpoint_url",
    "cache_path",
    "balance_fraction",
    "balance_seed",
    "backend",
    "backend_url",
    "embedding_dim",
    "embedding_seed",
    "hidden1",
    "hidden2",
    "init_seed",
    "batch_size",
    "learning_rate",
    "beta1",
    "beta2",
    "epsilon",
    "max_epochs",
    "patience",
    "train_seed",
    "tokenize",
];

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let content = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::parse(&content)?;
        config.apply_env_overrides()?;
        Ok(config)
    }

    pub fn parse(content: &str) -> Result<Self, ConfigError> {
        let mut pairs = BTreeMap::new();
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::MalformedLine {
                line: idx + 1,
                content: line.to_string(),
            })?;
            pairs.insert(key.trim().to_string(), value.trim().to_string());
        }
        let mut config = Self::default();
        for (key, value) in &pairs {
            config.set(key, value)?;
        }
        Ok(config)
    }

    fn apply_env_overrides(&mut self) -> Result<(), ConfigError> {
        for key in KNOWN_KEYS {
            let env_key = format!("GT_{}", key.to_uppercase());
            if let Ok(value) = std::env::var(&env_key) {
                self.set(key, &value)?;
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
                key: key.to_string(),
                value: value.to_string(),
                message: e.to_string(),
            })
        }
        match key {
            "corpus" => self.corpus = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "split_ratio" => self.split_ratio = parse(key, value)?,
            "split_seed" => self.split_seed = parse(key, value)?,
            "validation_ratio" => self.validation_ratio = parse(key, value)?,
            "validation_seed" => self.validation_seed = parse(key, value)?,
            "chains" => {
                self.chains = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "provider" => self.provider = value.to_string(),
            "provider_seed" => self.provider_seed = parse(key, value)?,
            "endpoint_url" => self.endpoint_url = non_empty(value),
            "cache_path" => self.cache_path = non_empty(value).map(PathBuf::from),
            "balance_fraction" => self.balance_fraction = parse(key, value)?,
            "balance_seed" => self.balance_seed = parse(key, value)?,
            "backend" => self.backend = value.to_string(),
            "backend_url" => self.backend_url = non_empty(value),
            "embedding_dim" => self.embedding_dim = parse(key, value)?,
            "embedding_seed" => self.embedding_seed = parse(key, value)?,
            "hidden1" => self.hidden1 = parse(key, value)?,
            "hidden2" => self.hidden2 = parse(key, value)?,
            "init_seed" => self.init_seed = parse(key, value)?,
            "batch_size" => self.hyperparams.batch_size = parse(key, value)?,
            "learning_rate" => self.hyperparams.learning_rate = parse(key, value)?,
            "beta1" => self.hyperparams.beta1 = parse(key, value)?,
            "beta2" => self.hyperparams.beta2 = parse(key, value)?,
            "epsilon" => self.hyperparams.epsilon = parse(key, value)?,
            "max_epochs" => self.hyperparams.max_epochs = parse(key, value)?,
            "patience" => self.hyperparams.patience = parse(key, value)?,
            "train_seed" => self.hyperparams.seed = parse(key, value)?,
            "tokenize" => self.tokenize = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, value: String, message: &str| {
            Err(ConfigError::InvalidValue {
                key: key.to_string(),
                value,
                message: message.to_string(),
            })
        };
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split_ratio", self.split_ratio.to_string(), "must lie in (0,1)");
        }
        if !(self.validation_ratio > 0.0 && self.validation_ratio < 1.0) {
            return bad(
                "validation_ratio",
                self.validation_ratio.to_string(),
                "must lie in (0,1)",
            );
        }
        if !(self.balance_fraction > 0.0 && self.balance_fraction <= 1.0) {
            return bad(
                "balance_fraction",
                self.balance_fraction.to_string(),
                "must lie in (0,1]",
            );
        }
        if self.embedding_dim == 0 || self.hidden1 == 0 || self.hidden2 == 0 {
            return bad("embedding_dim", self.embedding_dim.to_string(), "dims must be positive");
        }
        match self.provider.as_str() {
            "offline" | "identity" => {}
            "endpoint" => {
                if self.endpoint_url.is_none() {
                    return Err(ConfigError::MissingKey("endpoint_url".to_string()));
                }
            }
            other => return bad("provider", other.to_string(), "expected offline, identity, or endpoint"),
        }
        match self.backend.as_str() {
            "hashing" => {}
            "endpoint" => {
                if self.backend_url.is_none() {
                    return Err(ConfigError::MissingKey("backend_url".to_string()));
                }
            }
            other => return bad("backend", other.to_string(), "expected hashing or endpoint"),
        }
        self.hyperparams
            .validate()
            .map_err(|message| ConfigError::InvalidValue {
                key: "hyperparams".to_string(),
                value: String::new(),
                message,
            })
    }

    /// Canonical key=value rendering; `parse` of this text reproduces the
    /// config exactly.
    pub fn to_file_form(&self) -> String {
        let mut out = String::new();
        let mut push = |key: &str, value: String| {
            out.push_str(key);
            out.push('=');
            out.push_str(&value);
            out.push('\n');
        };
        push("corpus", self.corpus.display().to_string());
        push("out_dir", self.out_dir.display().to_string());
        push("split_ratio", self.split_ratio.to_string());
        push("split_seed", self.split_seed.to_string());
        push("validation_ratio", self.validation_ratio.to_string());
        push("validation_seed", self.validation_seed.to_string());
        push("chains", self.chains.join(","));
        push("provider", self.provider.clone());
        push("provider_seed", self.provider_seed.to_string());
        push("endpoint_url", self.endpoint_url.clone().unwrap_or_default());
        push(
            "cache_path",
            self.cache_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        push("balance_fraction", self.balance_fraction.to_string());
        push("balance_seed", self.balance_seed.to_string());
        push("backend", self.backend.clone());
        push("backend_url", self.backend_url.clone().unwrap_or_default());
        push("embedding_dim", self.embedding_dim.to_string());
        push("embedding_seed", self.embedding_seed.to_string());
        push("hidden1", self.hidden1.to_string());
        push("hidden2", self.hidden2.to_string());
        push("init_seed", self.init_seed.to_string());
        push("batch_size", self.hyperparams.batch_size.to_string());
        push("learning_rate", self.hyperparams.learning_rate.to_string());
        push("beta1", self.hyperparams.beta1.to_string());
        push("beta2", self.hyperparams.beta2.to_string());
        push("epsilon", self.hyperparams.epsilon.to_string());
        push("max_epochs", self.hyperparams.max_epochs.to_string());
        push("patience", self.hyperparams.patience.to_string());
        push("train_seed", self.hyperparams.seed.to_string());
        push("tokenize", self.tokenize.to_string());
        out
    }

    /// Overrides every seed at once (CLI `--seed-override`).
    pub fn override_seeds(&mut self, seed: u64) {
        self.split_seed = seed;
        self.validation_seed = seed;
        self.provider_seed = seed;
        self.balance_seed = seed;
        self.init_seed = seed;
        self.hyperparams.seed = seed;
    }
}

fn non_empty(value: &str) -> Option<String> {
    if value.trim().is_empty() {
        None
    } else {
        Some(value.trim().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_file_form() {
        let config = PipelineConfig {
            split_seed: 99,
            chains: vec!["fr".into()],
            endpoint_url: Some("http://localhost:9000/translate".into()),
            ..PipelineConfig::default()
        };
        let text = config.to_file_form();
        let parsed = PipelineConfig::parse(&text).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = PipelineConfig::parse("bogus_key=1\n").unwrap_err();
        assert!(err.to_string().contains("bogus_key"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = PipelineConfig::parse("split_seed=1\nnot a pair\n").unwrap_err();
        assert!(matches!(err, ConfigError::MalformedLine { line: 2, .. }));
    }

    #[test]
    fn validation_catches_bad_ranges() {
        let mut config = PipelineConfig {
            balance_fraction: 0.0,
            ..PipelineConfig::default()
        };
        assert!(config.validate().is_err());
        config.balance_fraction = 0.15;
        config.provider = "endpoint".into();
        assert!(matches!(
            config.validate(),
            Err(ConfigError::MissingKey(_))
        ));
    }

    #[test]
    fn defaults_match_reference_hyperparameters() {
        let config = PipelineConfig::default();
        assert_eq!(config.hyperparams.batch_size, 8);
        assert_eq!(config.hyperparams.learning_rate, 0.001);
        assert_eq!(config.hyperparams.beta1, 0.9);
        assert_eq!(config.hyperparams.beta2, 0.99);
        assert_eq!(config.hyperparams.epsilon, 1e-7);
        assert_eq!(config.hyperparams.max_epochs, 20);
        assert_eq!(config.balance_fraction, 0.15);
        assert_eq!(config.split_ratio, 0.8);
        assert_eq!(config.embedding_dim, 512);
    }
}
