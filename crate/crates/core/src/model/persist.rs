//! Versioned model container: fixed-order header, little-endian f64
//! weights, trailing SHA-256 checksum.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mlp::{Layer, MlpClassifier};
use super::ModelError;
use crate::vocabulary::LabelSet;

const MAGIC: &[u8; 8] = b"GTMODEL\0";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    embedding_dim: usize,
    layer_dims: Vec<usize>,
    label_set: LabelSet,
    backend_name: String,
}

pub fn save_model(model: &MlpClassifier, path: &Path) -> Result<(), ModelError> {
    let header = Header {
        format_version: FORMAT_VERSION,
        embedding_dim: model.embedding_dim(),
        layer_dims: model.layer_dims(),
        label_set: model.label_set.clone(),
        backend_name: model.backend_name.clone(),
    };
    let header_bytes = serde_json::to_vec(&header).expect("header serializes");

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header_bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_bytes);
    for value in model.flatten_params() {
        out.extend_from_slice(&value.to_le_bytes());
    }
    let checksum = Sha256::digest(&out);
    out.extend_from_slice(&checksum);

    std::fs::write(path, &out).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<MlpClassifier, ModelError> {
    let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if bytes.len() < MAGIC.len() + 8 + 32 {
        return Err(ModelError::CorruptFile("file too short".into()));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - 32);
    let expected = Sha256::digest(body);
    if checksum != expected.as_slice() {
        return Err(ModelError::CorruptFile("checksum mismatch".into()));
    }
    if &body[..8] != MAGIC {
        return Err(ModelError::CorruptFile("bad magic".into()));
    }
    let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(ModelError::FormatVersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let header_len = u32::from_le_bytes(body[12..16].try_into().unwrap()) as usize;
    let header_end = 16 + header_len;
    if body.len() < header_end {
        return Err(ModelError::CorruptFile("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&body[16..header_end])
        .map_err(|e| ModelError::CorruptFile(format!("bad header: {e}")))?;
    if header.layer_dims.len() != 4 {
        return Err(ModelError::CorruptFile(format!(
            "expected 4 layer dims, got {}",
            header.layer_dims.len()
        )));
    }

    let mut params = Vec::new();
    let weight_bytes = &body[header_end..];
    if weight_bytes.len() % 8 != 0 {
        return Err(ModelError::CorruptFile("truncated weights".into()));
    }
    for chunk in weight_bytes.chunks_exact(8) {
        params.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }

    let dims = &header.layer_dims;
    let mut model = MlpClassifier {
        layers: (0..3)
            .map(|i| Layer {
                input_dim: dims[i],
                output_dim: dims[i + 1],
                weights: vec![0.0; dims[i] * dims[i + 1]],
                biases: vec![0.0; dims[i + 1]],
            })
            .collect(),
        label_set: header.label_set,
        backend_name: header.backend_name,
    };
    if params.len() != model.param_count() {
        return Err(ModelError::CorruptFile(format!(
            "expected {} parameters, found {}",
            model.param_count(),
            params.len()
        )));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(ModelError::CorruptFile("non-finite weight".into()));
    }
    model.assign_params(&params);
    Ok(model)
}
