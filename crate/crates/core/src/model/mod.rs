//! The hybrid classifier, its loss, optimiser and checkpoints.

mod checkpoint;
mod config;
mod layers;
pub mod linalg;
mod loss;
mod network;
pub mod ops;
mod train;

pub use checkpoint::{CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{ModelConfig, RnnPooling, Variant};
pub use loss::{weighted_loss, LOSS_EPSILON};
pub use network::{Gradients, HybridModel, Mode, Prediction, SentenceInput};
pub use ops::{attention_pool, cnn_encode, conv_global_max, AttentionParams, AttentionPooling, CnnParams, ConvParams};
pub use train::{
    evaluate_loss, run_with_early_stopping, train_supervised, Adam, Direction, EarlyStopping,
    EpochRecord, TrainingHistory, Verdict,
};
