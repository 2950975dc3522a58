//! Maps free-form garment descriptions to controlled-vocabulary labels.
//!
//! The pipeline tokenizes descriptions into sentences, annotates each
//! sentence against the color-group and work-type vocabularies, augments
//! them by round-trip translation, balances the sentinel class, trains a
//! feed-forward classifier over text embeddings, and aggregates variant-
//! and sentence-level predictions back up to one label per description.

pub mod augment;
pub mod config;
pub mod corpus;
pub mod dataset;
pub mod embed;
pub mod evaluation;
pub mod inference;
pub mod manifest;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod synth;
pub mod vocabulary;

pub use vocabulary::{AttributeKind, LabelSet, Lexicons};
