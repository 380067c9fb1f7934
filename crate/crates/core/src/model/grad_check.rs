//! Gradient checking: analytic backprop against central finite differences
//! on the f64 compute graph.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::encode::EncodedExample;
use super::net::{loss_and_grad_dense, loss_sum_dense};
use super::params::ModelParameters;
use super::ModelConfig;
use crate::error::Result;

/// Compares analytic gradients with five-point central finite differences
/// (step `step`, typically 1e-3) on `samples` randomly chosen parameters.
/// Returns the maximum relative error observed.
pub fn backward_check(
    params: &ModelParameters,
    config: &ModelConfig,
    batch: &[EncodedExample],
    samples: usize,
    step: f64,
    seed: u64,
) -> Result<f64> {
    let mut dense = params.dense();
    let (_, grads) = loss_and_grad_dense(&dense, config, batch, None)?;

    let total = dense.data().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel = 0.0f64;
    let loss_of = |dense: &super::params::DenseParams| -> Result<f64> {
        let (nll, tokens) = loss_sum_dense(dense, config, batch)?;
        Ok(if tokens == 0 { 0.0 } else { nll / tokens as f64 })
    };

    for _ in 0..samples {
        let idx = rng.random_range(0..total);
        let original = dense.data()[idx];
        let mut eval = |x: f64| -> Result<f64> {
            dense.data_mut()[idx] = x;
            loss_of(&dense)
        };
        let f_m2 = eval(original - 2.0 * step)?;
        let f_m1 = eval(original - step)?;
        let f_p1 = eval(original + step)?;
        let f_p2 = eval(original + 2.0 * step)?;
        dense.data_mut()[idx] = original;

        let fd = (f_m2 - 8.0 * f_m1 + 8.0 * f_p1 - f_p2) / (12.0 * step);
        let analytic = grads.data()[idx];
        if analytic.abs() < 1e-10 && fd.abs() < 1e-10 {
            continue;
        }
        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-4);
        if rel > max_rel {
            max_rel = rel;
        }
    }
    Ok(max_rel)
}
