//! Adam optimizer and the epoch loop with best-dev checkpoint tracking.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::encode::EncodedExample;
use super::net::{loss_and_grad_train, loss_sum, Gradients};
use super::params::ModelParameters;
use super::{ModelConfig, TrainConfig};
use crate::error::{Error, Result};

/// Adam with optional decoupled weight decay and linear warmup. Moments are
/// kept in f64; the master weights stay in f32.
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Adam {
    pub fn new(params: &ModelParameters) -> Adam {
        Adam {
            m: vec![0.0; params.data().len()],
            v: vec![0.0; params.data().len()],
            step: 0,
        }
    }

    pub fn apply(&mut self, params: &mut ModelParameters, grads: &Gradients, config: &TrainConfig) {
        self.step += 1;
        let lr = if config.warmup_steps > 0 && self.step <= config.warmup_steps as u64 {
            config.learning_rate * self.step as f64 / config.warmup_steps as f64
        } else {
            config.learning_rate
        };
        let b1 = config.adam_beta1;
        let b2 = config.adam_beta2;
        let bias1 = 1.0 - b1.powi(self.step as i32);
        let bias2 = 1.0 - b2.powi(self.step as i32);
        for (i, g) in grads.data().iter().enumerate() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            let mut w = params.data[i] as f64;
            w -= lr * (m_hat / (v_hat.sqrt() + config.adam_eps) + config.weight_decay * w);
            params.data[i] = w as f32;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_ppl: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// Parameters after the final epoch.
    pub final_params: ModelParameters,
    /// Parameters at the epoch with the best dev perplexity.
    pub best_params: ModelParameters,
    pub best_epoch: usize,
    pub best_dev_ppl: f64,
    pub metrics: Vec<EpochMetrics>,
}

/// Perplexity of a set under the given parameters: exp of mean token NLL.
pub fn dataset_perplexity(
    params: &ModelParameters,
    config: &ModelConfig,
    examples: &[EncodedExample],
) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::data("perplexity of an empty split"));
    }
    let (nll, tokens) = loss_sum(params, config, examples)?;
    if tokens == 0 {
        return Err(Error::data("perplexity of a split with no target tokens"));
    }
    Ok((nll / tokens as f64).exp())
}

/// Runs minibatch gradient descent, recording train loss and dev perplexity
/// per epoch and keeping the best-dev parameters.
pub fn train(
    params: ModelParameters,
    train_set: &[EncodedExample],
    dev_set: &[EncodedExample],
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<TrainOutcome> {
    model_config.validate()?;
    train_config.validate()?;
    if train_set.is_empty() {
        return Err(Error::data("empty training split"));
    }
    if dev_set.is_empty() {
        return Err(Error::data("empty validation split"));
    }

    let mut params = params;
    let mut optimizer = Adam::new(&params);
    let mut metrics = Vec::with_capacity(train_config.epochs);
    let mut best_params = params.clone();
    let mut best_dev_ppl = f64::INFINITY;
    let mut best_epoch = 0;

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=train_config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);

        let mut epoch_nll = 0.0;
        let mut epoch_batches = 0usize;
        for chunk in order.chunks(train_config.batch_size) {
            let batch: Vec<EncodedExample> =
                chunk.iter().map(|&i| train_set[i].clone()).collect();
            let (loss, mut grads) =
                loss_and_grad_train(&params, model_config, &batch, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::Train(format!(
                    "loss diverged (non-finite) at epoch {epoch}"
                )));
            }
            if let Some(clip) = train_config.grad_clip {
                let norm = grads.l2_norm();
                if norm > clip {
                    grads.scale(clip / norm);
                }
            }
            optimizer.apply(&mut params, &grads, train_config);
            epoch_nll += loss;
            epoch_batches += 1;
        }
        if !params.all_finite() {
            return Err(Error::Train(format!(
                "parameters diverged (non-finite) at epoch {epoch}"
            )));
        }

        let train_loss = epoch_nll / epoch_batches.max(1) as f64;
        let dev_ppl = dataset_perplexity(&params, model_config, dev_set)?;
        metrics.push(EpochMetrics {
            epoch,
            train_loss,
            dev_ppl,
        });
        if dev_ppl < best_dev_ppl {
            best_dev_ppl = dev_ppl;
            best_epoch = epoch;
            best_params = params.clone();
        }
    }

    Ok(TrainOutcome {
        final_params: params,
        best_params,
        best_epoch,
        best_dev_ppl,
        metrics,
    })
}
