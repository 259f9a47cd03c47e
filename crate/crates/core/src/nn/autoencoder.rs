use rand::Rng;
use serde::{Deserialize, Serialize};

use super::arch::{Architecture, Layer, Layout};
use super::layers::{layer_backward, layer_forward};
use crate::error::{R2rError, Result};
use crate::tensor::{ImageTensor, LatentVector};

/// Encoder and decoder weights stored as one flat vector, laid out by [`Architecture::layout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct AutoencoderParams {
    arch: Architecture,
    layout: Layout,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    arch: Architecture,
    values: Vec<f64>,
}

impl TryFrom<RawParams> for AutoencoderParams {
    type Error = R2rError;
    fn try_from(raw: RawParams) -> Result<Self> {
        AutoencoderParams::from_values(raw.arch, raw.values)
    }
}

impl From<AutoencoderParams> for RawParams {
    fn from(p: AutoencoderParams) -> Self {
        RawParams {
            arch: p.arch,
            values: p.values,
        }
    }
}

impl AutoencoderParams {
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        let layout = arch.layout()?;
        Ok(AutoencoderParams {
            values: vec![0.0; layout.param_count],
            arch: arch.clone(),
            layout,
        })
    }

    /// Fresh weights: uniform in `±sqrt(6 / fan_in)`, zero biases.
    pub fn init<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        let layers: Vec<Layer> = p.layout.encoder.iter().chain(&p.layout.decoder).copied().collect();
        for layer in layers {
            let bound = (6.0 / layer.fan_in() as f64).sqrt();
            for w in &mut p.values[layer.weight_offset..layer.weight_offset + layer.weight_len()] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(p)
    }

    pub fn from_values(arch: Architecture, values: Vec<f64>) -> Result<Self> {
        let layout = arch.layout()?;
        if values.len() != layout.param_count {
            return Err(R2rError::shape(
                format!("{} parameters", layout.param_count),
                values.len(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(R2rError::invalid("values", "non-finite parameter"));
        }
        Ok(AutoencoderParams {
            arch,
            layout,
            values,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn latent_dim(&self) -> usize {
        self.arch.latent_dim
    }

    fn check_input(&self, x: &ImageTensor) -> Result<()> {
        if x.shape() != self.arch.input {
            return Err(R2rError::shape(self.arch.input, x.shape()));
        }
        Ok(())
    }

    pub fn encode(&self, x: &ImageTensor) -> Result<LatentVector> {
        self.check_input(x)?;
        Ok(LatentVector(run(&self.layout.encoder, &self.values, x.data())))
    }

    /// Decoder output, after the sigmoid.
    pub fn decode(&self, z: &LatentVector) -> Result<ImageTensor> {
        if z.dim() != self.arch.latent_dim {
            return Err(R2rError::shape(
                format!("latent of length {}", self.arch.latent_dim),
                z.dim(),
            ));
        }
        let out = run(&self.layout.decoder, &self.values, z.as_slice());
        ImageTensor::new(self.arch.input, out)
    }

    pub fn reconstruct(&self, x: &ImageTensor) -> Result<ImageTensor> {
        let z = self.encode(x)?;
        self.decode(&z)
    }

    /// Per-sample reconstruction loss and its gradient, accumulated into `grads`
    /// after multiplying by `scale`.
    pub(crate) fn accumulate_gradient(&self, x: &ImageTensor, scale: f64, grads: &mut [f64]) -> f64 {
        let layers: Vec<&Layer> = self.layout.encoder.iter().chain(&self.layout.decoder).collect();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
        acts.push(x.data().to_vec());
        for layer in &layers {
            let mut out = vec![0.0; layer.output_len()];
            layer_forward(layer, &self.values, acts.last().unwrap(), &mut out);
            acts.push(out);
        }
        let recon = acts.last().unwrap();
        let n = recon.len() as f64;
        let mut loss = 0.0;
        let mut grad: Vec<f64> = recon
            .iter()
            .zip(x.data())
            .map(|(r, t)| {
                let diff = r - t;
                loss += diff * diff;
                scale * 2.0 * diff / n
            })
            .collect();
        loss /= n;
        if scale == 0.0 {
            return loss;
        }
        for (i, layer) in layers.iter().enumerate().rev() {
            let mut grad_in = (i > 0).then(|| vec![0.0; layer.input_len()]);
            layer_backward(
                layer,
                &self.values,
                &acts[i],
                &acts[i + 1],
                &mut grad,
                grads,
                grad_in.as_deref_mut(),
            );
            if let Some(g) = grad_in {
                grad = g;
            }
        }
        loss
    }
}

fn run(layers: &[Layer], params: &[f64], input: &[f64]) -> Vec<f64> {
    let mut cur = input.to_vec();
    for layer in layers {
        let mut out = vec![0.0; layer.output_len()];
        layer_forward(layer, params, &cur, &mut out);
        cur = out;
    }
    cur
}

/// `encode` as a free function.
pub fn encode(x: &ImageTensor, params: &AutoencoderParams) -> Result<LatentVector> {
    params.encode(x)
}

/// `decode` as a free function.
pub fn decode(z: &LatentVector, params: &AutoencoderParams) -> Result<ImageTensor> {
    params.decode(z)
}
