//! CBOW word2vec with negative sampling, mean-pooled document vectors, and
//! the provider interface used to swap in external embedding servers.

mod cbow;
mod model;
mod provider;
mod vocab;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wire::FormatError;

pub use cbow::{
    apply_gradient, cbow_loss_and_grad, log_sigmoid, sgd_step, train_cbow, train_cbow_with_report,
    CbowGradient, CbowParams, StepScratch, TrainReport,
};
pub use model::{embed_tokens, persist_model, restore_model, EmbeddingModel, MODEL_MAGIC};
pub use provider::{remote_embed, EmbeddingProvider, LocalProvider, RemoteProvider};
pub use vocab::{build_vocabulary, Vocabulary};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("training failed: {0}")]
    Train(String),
    #[error("{0}")]
    Domain(String),
    #[error("non-finite value: {0}")]
    Numeric(String),
    #[error("no in-vocabulary tokens to embed")]
    EmptyEmbedding,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("model file: {0}")]
    Format(#[from] FormatError),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("embedding provider: {0}")]
    Provider(String),
}

/// CBOW hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub dim: usize,
    /// Maximum context half-width; each position draws its width from 1..=window.
    pub window: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_lr: f64,
    /// Frequent-token subsampling threshold; 0 disables subsampling.
    pub subsample_t: f64,
    pub seed: u64,
    pub min_count: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 15,
            initial_lr: 0.025,
            min_lr: 1e-4,
            subsample_t: 1e-3,
            seed: 42,
            min_count: 2,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let fail = |m: &str| Err(EmbedError::Config(m.to_string()));
        if self.dim == 0 {
            return fail("dim must be at least 1");
        }
        if self.window == 0 {
            return fail("window must be at least 1");
        }
        if self.negatives == 0 {
            return fail("negatives must be at least 1");
        }
        if !(self.min_lr >= 0.0 && self.initial_lr > self.min_lr && self.initial_lr.is_finite()) {
            return fail("learning rates must satisfy initial_lr > min_lr >= 0");
        }
        if !(self.subsample_t >= 0.0 && self.subsample_t.is_finite()) {
            return fail("subsample_t must be a finite non-negative number");
        }
        Ok(())
    }
}

/// A document embedding. Vectors produced by this crate have unit
/// Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVector(Vec<f32>);

impl DocVector {
    /// L2-normalizes `raw`. Returns `None` for zero-length, zero-norm or
    /// non-finite input.
    pub fn normalized(raw: &[f64]) -> Option<Self> {
        if raw.is_empty() || raw.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        Some(DocVector(raw.iter().map(|v| (v / norm) as f32).collect()))
    }

    /// Wraps values as-is, without normalizing.
    pub fn from_raw(values: Vec<f32>) -> Self {
        DocVector(values)
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}
