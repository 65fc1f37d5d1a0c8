//! Versioned JSON checkpoints bound to a vocabulary hash.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Model, ModelConfig, ModelError, Params};
use crate::proxy::ProxyModel;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported checkpoint schema version {0}")]
    Version(u32),
    #[error("checkpoint was trained against vocabulary {found}, expected {expected}")]
    VocabMismatch { expected: String, found: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub vocab_hash: String,
    pub config: ModelConfig,
    pub params: Params,
    #[serde(default)]
    pub proxy: Option<ProxyModel>,
}

impl Checkpoint {
    pub fn new(model: &Model, vocab_hash: &str, proxy: Option<ProxyModel>) -> Checkpoint {
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            vocab_hash: vocab_hash.to_string(),
            config: model.cfg.clone(),
            params: model.params.clone(),
            proxy,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    /// Reads a checkpoint, refusing it unless it was written for `vocab_hash`.
    pub fn load(path: &Path, vocab_hash: &str) -> Result<Checkpoint, CheckpointError> {
        Checkpoint::from_json(&std::fs::read_to_string(path)?, vocab_hash)
    }

    pub fn from_json(text: &str, vocab_hash: &str) -> Result<Checkpoint, CheckpointError> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(CheckpointError::Version(ck.schema_version));
        }
        if ck.vocab_hash != vocab_hash {
            return Err(CheckpointError::VocabMismatch { expected: vocab_hash.to_string(), found: ck.vocab_hash });
        }
        Ok(ck)
    }

    pub fn model(&self) -> Result<Model, CheckpointError> {
        Ok(Model::new(self.config.clone(), self.params.clone())?)
    }
}
