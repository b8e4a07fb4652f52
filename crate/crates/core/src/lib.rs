//! Suggestion mining: a hybrid convolutional, attention-LSTM and
//! linguistic-feature classifier with self-training and evaluation tooling.

pub mod annotate;
pub mod cli;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod lexfeat;
pub mod model;
pub mod pipeline;
pub mod scalar;
pub mod seed;
pub mod selftrain;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type HybridModelF32 = model::HybridModel<f32>;
pub type HybridModelF64 = model::HybridModel<f64>;
pub type EmbeddingTableF32 = embed::EmbeddingTable<f32>;
pub type EmbeddingTableF64 = embed::EmbeddingTable<f64>;
