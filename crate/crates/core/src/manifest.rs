//! Run manifests: config hash, seeds, input hashes, and artifact checksums
//! sufficient to reproduce a run exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub input_hashes: BTreeMap<String, String>,
    pub artifact_checksums: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &PipelineConfig) -> Self {
        let mut seeds = BTreeMap::new();
        seeds.insert("split_seed".to_string(), config.split_seed);
        seeds.insert("validation_seed".to_string(), config.validation_seed);
        seeds.insert("provider_seed".to_string(), config.provider_seed);
        seeds.insert("balance_seed".to_string(), config.balance_seed);
        seeds.insert("embedding_seed".to_string(), config.embedding_seed);
        seeds.insert("init_seed".to_string(), config.init_seed);
        seeds.insert("train_seed".to_string(), config.hyperparams.seed);
        Self {
            subcommand: subcommand.to_string(),
            config_hash: sha256_hex(config.to_file_form().as_bytes()),
            seeds,
            input_hashes: BTreeMap::new(),
            artifact_checksums: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, name: &str, path: &Path) -> std::io::Result<()> {
        self.input_hashes
            .insert(name.to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn record_artifact(&mut self, name: &str, path: &Path) -> std::io::Result<()> {
        self.artifact_checksums
            .insert(name.to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut json = serde_json::to_vec_pretty(self).expect("manifest serializes");
        json.push(b'\n');
        std::fs::write(path, json)
    }
}
