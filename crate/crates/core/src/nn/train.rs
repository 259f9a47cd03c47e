//! Adam training on mean-squared reconstruction error.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arch::Architecture;
use super::autoencoder::AutoencoderParams;
use crate::error::{R2rError, Result};
use crate::tensor::ImageTensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub gamma: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            gamma: 0.9,
            batch_size: 32,
            epochs: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(R2rError::invalid("learning_rate", "must be finite and >= 0"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(R2rError::invalid("gamma", "must lie in (0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(R2rError::invalid("batch_size", "must be >= 1"));
        }
        Ok(())
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Adam moment estimates for a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step);
        let c2 = 1.0 - BETA2.powi(self.step);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

/// Mean squared error over all elements.
pub fn reconstruction_loss(x: &ImageTensor, xhat: &ImageTensor) -> Result<f64> {
    if x.shape() != xhat.shape() {
        return Err(R2rError::shape(x.shape(), xhat.shape()));
    }
    let n = x.data().len() as f64;
    Ok(x.data()
        .iter()
        .zip(xhat.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

// Samples per parallel work unit. Fixed so the reduction order never depends on thread count.
const CHUNK: usize = 4;

/// Mean loss over `batch` and the gradient of `scale * mean loss`.
pub fn loss_and_gradient(
    params: &AutoencoderParams,
    batch: &[&ImageTensor],
    scale: f64,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(R2rError::Empty("batch".into()));
    }
    for x in batch {
        if x.shape() != params.architecture().input {
            return Err(R2rError::shape(params.architecture().input, x.shape()));
        }
    }
    let n = batch.len() as f64;
    let per_sample = scale / n;
    let partials: Vec<(f64, Vec<f64>)> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = vec![0.0; params.len()];
            let loss: f64 = chunk
                .iter()
                .map(|x| params.accumulate_gradient(x, per_sample, &mut g))
                .sum();
            (loss, g)
        })
        .collect();
    let mut grads = vec![0.0; params.len()];
    let mut loss = 0.0;
    for (l, g) in partials {
        loss += l;
        grads.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((loss / n, grads))
}

/// Runs mini-batch Adam over `data`, scaling the loss gradient by `loss_scale`.
/// Returns the per-epoch mean (unscaled) loss.
pub fn train_in_place(
    params: &mut AutoencoderParams,
    data: &[&ImageTensor],
    cfg: &TrainConfig,
    loss_scale: f64,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(R2rError::Empty("training data".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(params.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut lr = cfg.learning_rate;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<&ImageTensor> = idx.iter().map(|&i| data[i]).collect();
            let (loss, grads) = loss_and_gradient(params, &batch, loss_scale)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(R2rError::Divergence { epoch, loss });
            }
            total += loss * batch.len() as f64;
            if lr > 0.0 && loss_scale != 0.0 {
                adam.update(params.values_mut(), &grads, lr);
            }
        }
        let mean = total / data.len() as f64;
        tracing::debug!(epoch, loss = mean, "autoencoder epoch");
        trace.push(mean);
        lr *= cfg.gamma;
    }
    if params.values().iter().any(|v| !v.is_finite()) {
        return Err(R2rError::Divergence {
            epoch: cfg.epochs.saturating_sub(1),
            loss: f64::NAN,
        });
    }
    Ok(trace)
}

/// Trains (or continues training) an autoencoder. When `init` is `None` the weights are
/// freshly initialized from `cfg.seed`.
pub fn train_autoencoder(
    data: &[ImageTensor],
    cfg: &TrainConfig,
    arch: &Architecture,
    init: Option<AutoencoderParams>,
) -> Result<(AutoencoderParams, Vec<f64>)> {
    if data.is_empty() {
        return Err(R2rError::Empty("training data".into()));
    }
    let mut params = match init {
        Some(p) => p,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_1417);
            AutoencoderParams::init(arch, &mut rng)?
        }
    };
    let refs: Vec<&ImageTensor> = data.iter().collect();
    let trace = train_in_place(&mut params, &refs, cfg, 1.0)?;
    Ok((params, trace))
}

/// Largest relative deviation between analytic and central-difference gradients over a
/// random subsample of `samples` parameters. The denominator is floored at `1e-5` so that
/// near-zero gradients are compared on an absolute scale.
pub fn gradient_check<R: Rng + ?Sized>(
    params: &AutoencoderParams,
    x: &ImageTensor,
    epsilon: f64,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1e-2) {
        return Err(R2rError::invalid("epsilon", "must lie in (0, 1e-2]"));
    }
    let (_, analytic) = loss_and_gradient(params, &[x], 1.0)?;
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..samples.min(params.len()) {
        let i = rng.random_range(0..params.len());
        let orig = probe.values()[i];
        probe.values_mut()[i] = orig + epsilon;
        let plus = reconstruction_loss(x, &probe.reconstruct(x)?)?;
        probe.values_mut()[i] = orig - epsilon;
        let minus = reconstruction_loss(x, &probe.reconstruct(x)?)?;
        probe.values_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-5);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    Ok(worst)
}
