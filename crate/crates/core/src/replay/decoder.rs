use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{BackendId, Capabilities, GenerateRequest, ReplayBackend, ReplayBatch, ReplaySample};
use crate::error::{R2rError, Result};
use crate::gmm::MixtureModel;
use crate::nn::AutoencoderParams;
use crate::tensor::LatentVector;

/// Samples latents from a mixture component and decodes them.
#[derive(Debug)]
pub struct DecoderBackend<'a> {
    model: &'a MixtureModel,
    params: &'a AutoencoderParams,
    /// Multiplier on the component standard deviation; `0` decodes the mean only.
    pub spread: f64,
    calls: usize,
}

impl<'a> DecoderBackend<'a> {
    pub fn new(model: &'a MixtureModel, params: &'a AutoencoderParams) -> Self {
        DecoderBackend {
            model,
            params,
            spread: 1.0,
            calls: 0,
        }
    }
}

impl ReplayBackend for DecoderBackend<'_> {
    fn id(&self) -> BackendId {
        BackendId::Decoder
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            generate: true,
            label: false,
        }
    }

    fn generate(&mut self, req: &GenerateRequest) -> Result<ReplayBatch> {
        self.calls += 1;
        let mut batch = sample_and_decode(self.model, req.cluster, self.params, req.count, req.seed, self.spread)?;
        for s in &mut batch.samples {
            s.label = req.label.clone();
            s.task = req.task;
        }
        Ok(batch)
    }

    fn calls(&self) -> usize {
        self.calls
    }
}

fn sample_and_decode(
    model: &MixtureModel,
    cluster: usize,
    params: &AutoencoderParams,
    count: usize,
    seed: u64,
    spread: f64,
) -> Result<ReplayBatch> {
    if cluster >= model.k() {
        return Err(R2rError::UnknownCluster(cluster));
    }
    if count == 0 {
        return Err(R2rError::invalid("count", "must be at least 1"));
    }
    if model.dim() != params.latent_dim() {
        return Err(R2rError::shape(params.latent_dim(), model.dim()));
    }
    let mean = model.mean(cluster)?;
    let std: Vec<f64> = model.variance(cluster)?.iter().map(|v| spread * v.sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latents: Vec<LatentVector> = (0..count)
        .map(|_| {
            LatentVector(
                mean.iter()
                    .zip(&std)
                    .map(|(m, s)| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        m + s * e
                    })
                    .collect(),
            )
        })
        .collect();
    let samples = latents
        .par_iter()
        .map(|z| {
            Ok(ReplaySample {
                image: params.decode(z)?.clamp_unit(),
                label: format!("cluster_{cluster}"),
                cluster,
                backend: BackendId::Decoder,
                task: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplayBatch {
        samples,
        seed: Some(seed),
    })
}

/// `count` decoded draws from component `cluster`, labeled `cluster_<k>`.
pub fn generate_decoder_replay(
    model: &MixtureModel,
    cluster: usize,
    params: &AutoencoderParams,
    count: usize,
    seed: u64,
) -> Result<ReplayBatch> {
    sample_and_decode(model, cluster, params, count, seed, 1.0)
}
