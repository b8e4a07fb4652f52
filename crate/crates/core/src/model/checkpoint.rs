//! Versioned JSON checkpoints. Floats are written in shortest round-trip
//! form, so a save/load cycle reproduces every parameter bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::HybridModel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "sugmine-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct CheckpointFile<T> {
    format: String,
    version: u32,
    scalar: String,
    config: ModelConfig,
    embedding_dim: usize,
    feature_dim: usize,
    schema_id: String,
    embedding_fingerprint: String,
    params: Vec<T>,
    tuned_embeddings: Vec<(usize, Vec<T>)>,
}

impl<T: Scalar> HybridModel<T> {
    pub fn to_json(&self) -> Result<String> {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            scalar: T::NAME.to_string(),
            config: self.config.clone(),
            embedding_dim: self.embedding_dim,
            feature_dim: self.feature_dim,
            schema_id: self.schema_id.clone(),
            embedding_fingerprint: self.embedding_fingerprint.clone(),
            params: self.params.clone(),
            tuned_embeddings: self
                .tuned_embeddings
                .iter()
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let header: serde_json::Value = serde_json::from_str(json)?;
        let field = |name: &str| header.get(name).cloned().unwrap_or_default();
        if field("format") != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint("not a sugmine checkpoint".into()));
        }
        if field("version") != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", field("version"))));
        }
        if field("scalar") != T::NAME {
            return Err(Error::Checkpoint(format!(
                "checkpoint scalar {} cannot be loaded as {}",
                field("scalar"),
                T::NAME
            )));
        }
        let file: CheckpointFile<T> = serde_json::from_str(json)?;
        HybridModel::from_parts(
            file.config,
            file.embedding_dim,
            file.feature_dim,
            file.schema_id,
            file.embedding_fingerprint,
            file.params,
            file.tuned_embeddings.into_iter().collect(),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }
}
