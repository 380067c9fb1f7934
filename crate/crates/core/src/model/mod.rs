//! Transformer encoder-decoder: input construction, forward/backward in
//! 64-bit arithmetic over f32 master weights, Adam training, and
//! checkpointing.

mod checkpoint;
mod encode;
mod grad_check;
mod math;
mod net;
mod params;
mod train;

pub use checkpoint::{load_checkpoint, load_checkpoint_expecting, save_checkpoint, StoredCheckpoint};
pub use encode::{build_input, encode_corpus, pad_batch, EncodedExample, InputMode};
pub use grad_check::backward_check;
pub use net::{forward, loss, loss_and_grad, loss_sum, Gradients, InferenceSession};
pub use params::{DenseParams, ModelParameters, ParamLayout, TensorSpec};
pub use train::{dataset_perplexity, train, Adam, EpochMetrics, TrainOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters. Shapes of every weight tensor follow from
/// this struct alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub max_source_len: usize,
    pub max_target_len: usize,
    pub vocab_size: usize,
    pub dropout: f64,
}

impl ModelConfig {
    /// Desk-scale defaults: small enough to train on a laptop CPU.
    pub fn desk(vocab_size: usize) -> ModelConfig {
        ModelConfig {
            encoder_layers: 2,
            decoder_layers: 2,
            hidden_dim: 128,
            heads: 4,
            ffn_dim: 512,
            max_source_len: 256,
            max_target_len: 128,
            vocab_size,
            dropout: 0.0,
        }
    }

    /// The reference configuration: 12 encoder / 3 decoder layers at
    /// BERT-base width. Reachable by config, not needed for the test suite.
    pub fn reference_scale(vocab_size: usize) -> ModelConfig {
        ModelConfig {
            encoder_layers: 12,
            decoder_layers: 3,
            hidden_dim: 768,
            heads: 12,
            ffn_dim: 3072,
            max_source_len: 256,
            max_target_len: 128,
            vocab_size,
            dropout: 0.1,
        }
    }

    /// Tiny configuration for numerics tests.
    pub fn tiny(vocab_size: usize) -> ModelConfig {
        ModelConfig {
            encoder_layers: 1,
            decoder_layers: 1,
            hidden_dim: 16,
            heads: 2,
            ffn_dim: 32,
            max_source_len: 32,
            max_target_len: 16,
            vocab_size,
            dropout: 0.0,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 || !self.hidden_dim.is_multiple_of(self.heads) {
            return Err(Error::data(format!(
                "hidden_dim {} must be divisible by heads {}",
                self.hidden_dim, self.heads
            )));
        }
        if self.max_source_len < 3 {
            return Err(Error::data("max_source_len must be at least 3 ([cls] + two [sep])"));
        }
        if self.max_target_len < 2 {
            return Err(Error::data("max_target_len must be at least 2 (bos + one token)"));
        }
        if self.encoder_layers == 0 || self.decoder_layers == 0 {
            return Err(Error::data("encoder_layers and decoder_layers must be at least 1"));
        }
        if self.vocab_size == 0 {
            return Err(Error::data("vocab_size must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::data("dropout must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Optimization hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Decoupled weight decay; off by default.
    pub weight_decay: f64,
    /// Linear learning-rate warmup steps; off by default.
    pub warmup_steps: usize,
    pub seed: u64,
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            learning_rate: 5e-5,
            batch_size: 32,
            epochs: 10,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 0.0,
            warmup_steps: 0,
            seed: 42,
            grad_clip: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate < 0.0 {
            return Err(Error::data("learning_rate must be non-negative"));
        }
        if self.batch_size < 1 {
            return Err(Error::data("batch_size must be at least 1"));
        }
        Ok(())
    }
}
