//! From-scratch feed-forward classifier: forward pass, cross-entropy
//! backpropagation, Adam optimization, early-stopped training, persistence.

mod adam;
mod mlp;
mod persist;
mod train;

pub use adam::AdamState;
pub use mlp::{Gradients, MlpClassifier};
pub use persist::{load_model, save_model};
pub use train::{train, Hyperparams, TrainReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("non-finite loss encountered; training aborted")]
    NonFiniteLoss,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("label index {0} out of range")]
    InvalidLabel(usize),
    #[error("model file i/o failure at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("model file format version {found} not supported (supported: {supported})")]
    FormatVersionMismatch { found: u32, supported: u32 },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Embed(#[from] crate::embed::EmbedError),
}
