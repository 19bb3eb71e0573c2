//! The dual-branch triplet classifier and its configuration.
//!
//! One branch convolves frozen context embeddings (three parallel full-width
//! kernels over the padded context matrix plus one over the triplet rows,
//! max-pooled and linearly mixed); the other fine-tunes a compact transformer
//! over the triplet-prefixed input sequence. The two branch vectors feed a
//! fused classification head and, separately, an attention-pooled projection
//! used by the contrastive loss.

mod checkpoint;
mod classifier;
mod embedder;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use classifier::{ForwardTrace, ModelInput, ModelOutput, TripletClassifier};
pub use embedder::{token_id, EmbeddingBackend, HashEmbedder, CLS_ID, SEP_ID};

/// Architecture and loss hyperparameters. The defaults are the shipped
/// full-scale configuration; tests use much smaller instances.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ModelConfig {
    /// Embedding width shared by the frozen extractor and the transformer.
    pub d: usize,
    /// Context rows kept for the convolutional branch.
    pub k1: usize,
    /// Per-branch width of the fused classification head.
    pub k2: usize,
    /// Per-branch width of the contrastive projection.
    pub k3: usize,
    /// Channels per convolution (all four convolutions share it).
    pub conv_channels: usize,
    /// Output width of the convolutional branch's linear mix.
    pub cnn_out: usize,
    pub transformer_layers: usize,
    pub transformer_heads: usize,
    pub transformer_ff: usize,
    /// Hashed vocabulary size for the transformer branch.
    pub vocab: usize,
    /// Maximum transformer input length (including the leading CLS slot).
    pub max_len: usize,
    /// Contrastive loss weight in the supervised objective.
    pub lambda: f64,
    /// Contrastive temperature.
    pub tau: f64,
    /// Unlabeled-loss ramp start, as a fraction of batches per epoch.
    pub c1: f64,
    /// Unlabeled-loss ramp end, as a fraction of batches per epoch.
    pub c2: f64,
    /// Unlabeled-loss ramp scale, decayed by epoch.
    pub gamma: f64,
    pub learning_rate: f64,
    pub seed: u64,
    /// Enables the supervised contrastive loss term.
    pub use_scl: bool,
    /// Enables the pseudo-label semi-supervised loss term.
    pub use_ssl: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: 768,
            k1: 100,
            k2: 2,
            k3: 32,
            conv_channels: 100,
            cnn_out: 128,
            transformer_layers: 2,
            transformer_heads: 4,
            transformer_ff: 1024,
            vocab: 8192,
            max_len: 513,
            lambda: 0.2,
            tau: 0.1,
            c1: 0.1,
            c2: 0.9,
            gamma: 0.8,
            learning_rate: 5e-5,
            seed: 42,
            use_scl: true,
            use_ssl: true,
        }
    }
}

impl ModelConfig {
    /// A small configuration for fast tests and fixture pipelines.
    pub fn tiny(seed: u64) -> Self {
        ModelConfig {
            d: 16,
            k1: 12,
            k2: 2,
            k3: 8,
            conv_channels: 8,
            cnn_out: 16,
            transformer_layers: 1,
            transformer_heads: 2,
            transformer_ff: 32,
            vocab: 512,
            max_len: 64,
            seed,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("conv_channels", self.conv_channels),
            ("cnn_out", self.cnn_out),
            ("transformer_layers", self.transformer_layers),
            ("transformer_heads", self.transformer_heads),
            ("transformer_ff", self.transformer_ff),
            ("vocab", self.vocab),
            ("max_len", self.max_len),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.k1 < 4 {
            return Err(Error::Config(
                "k1 must be at least 4 (largest convolution kernel height)".into(),
            ));
        }
        if self.d % self.transformer_heads != 0 {
            return Err(Error::Config(format!(
                "d = {} must be divisible by transformer_heads = {}",
                self.d, self.transformer_heads
            )));
        }
        if self.vocab < 3 {
            return Err(Error::Config("vocab must hold the reserved ids".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!(
                "lambda = {} not in [0, 1]",
                self.lambda
            )));
        }
        if self.tau <= 0.0 {
            return Err(Error::Config(format!("tau = {} must be positive", self.tau)));
        }
        if !(0.0 <= self.c1 && self.c1 < self.c2 && self.c2 <= 1.0) {
            return Err(Error::Config(format!(
                "require 0 <= c1 < c2 <= 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}
