//! Self-improvement: flag persistently dispersed clusters, fine-tune the autoencoder on
//! synthetic data for them, and extend the fine-tuning set to similar clusters.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{R2rError, Result};
use crate::gmm::MixtureModel;
use crate::nn::{train_in_place, AutoencoderParams, TrainConfig};
use crate::tensor::{ImageTensor, LatentBatch};
use crate::udfm::{dispersion, mean_and_std, ClusterStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineTuneConfig {
    /// Weight on the synthetic reconstruction loss.
    pub lambda1: f64,
    pub delta_sim: f64,
    /// Cutoff on mean dispersion; `None` uses the mean of the per-cluster thresholds.
    pub tau_uncertain: Option<f64>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for FineTuneConfig {
    fn default() -> Self {
        FineTuneConfig {
            lambda1: 1.0,
            delta_sim: 0.9,
            tau_uncertain: None,
            epochs: 10,
            learning_rate: 1e-4,
            gamma: 0.9,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl FineTuneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return Err(R2rError::invalid("lambda1", "must be finite and >= 0"));
        }
        if !(self.delta_sim > -1.0 && self.delta_sim <= 1.0) {
            return Err(R2rError::invalid("delta_sim", "must lie in (-1, 1]"));
        }
        if let Some(t) = self.tau_uncertain {
            if !(t >= 0.0) {
                return Err(R2rError::invalid("tau_uncertain", "must be >= 0"));
            }
        }
        self.train_config().validate()
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            gamma: self.gamma,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
        }
    }
}

/// Mean of the per-cluster thresholds, ignoring empty clusters.
pub fn default_tau_uncertain(stats: &[ClusterStats]) -> f64 {
    let taus: Vec<f64> = stats.iter().filter(|s| !s.is_empty()).map(|s| s.threshold).collect();
    if taus.is_empty() {
        f64::INFINITY
    } else {
        taus.iter().sum::<f64>() / taus.len() as f64
    }
}

/// Clusters whose mean dispersion exceeds `tau_uncertain`.
pub fn identify_low_clusters(stats: &[ClusterStats], tau_uncertain: f64) -> BTreeSet<usize> {
    stats
        .iter()
        .filter(|s| !s.is_empty() && s.mean_dispersion > tau_uncertain)
        .map(|s| s.cluster)
        .collect()
}

pub fn cluster_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(R2rError::shape(a.len(), b.len()));
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(R2rError::invalid("mean", "zero vector has no direction"));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Adds every cluster whose center is more than `delta_sim` cosine-similar to a low
/// cluster's center. One hop only.
pub fn extend_fine_tuning(low: &BTreeSet<usize>, stats: &[ClusterStats], delta_sim: f64) -> Result<BTreeSet<usize>> {
    let mut out = low.clone();
    for &a in low {
        let sa = stats
            .iter()
            .find(|s| s.cluster == a)
            .ok_or(R2rError::UnknownCluster(a))?;
        for sb in stats.iter().filter(|s| s.cluster != a && !s.is_empty()) {
            match cluster_similarity(&sa.center, &sb.center) {
                Ok(sim) if sim > delta_sim => {
                    out.insert(sb.cluster);
                }
                Ok(_) => {}
                Err(R2rError::InvalidArgument { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineTuneOutcome {
    pub params: AutoencoderParams,
    /// Per-epoch `lambda1 * L_synthetic`.
    pub loss: Vec<f64>,
}

/// Trains the whole autoencoder on synthetic images only, minimizing `lambda1 * L_synthetic`.
pub fn fine_tune(params: &AutoencoderParams, synthetic: &[&ImageTensor], cfg: &FineTuneConfig) -> Result<FineTuneOutcome> {
    cfg.validate()?;
    if synthetic.is_empty() {
        return Err(R2rError::Empty("synthetic fine-tuning batch".into()));
    }
    let mut params = params.clone();
    let trace = train_in_place(&mut params, synthetic, &cfg.train_config(), cfg.lambda1)?;
    Ok(FineTuneOutcome {
        params,
        loss: trace.into_iter().map(|l| cfg.lambda1 * l).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reevaluation {
    pub cluster: usize,
    pub members: usize,
    pub mean_dispersion: f64,
    pub flagged_fraction: f64,
    /// Still above the cutoff after fine-tuning.
    pub persistent: bool,
}

/// Recomputes dispersion statistics of `clusters` for fresh `latents` under `model`,
/// flagging against the given per-cluster `thresholds`.
pub fn reevaluate(
    clusters: &BTreeSet<usize>,
    latents: &LatentBatch,
    model: &MixtureModel,
    thresholds: &[f64],
    tau_uncertain: f64,
) -> Result<Vec<Reevaluation>> {
    if thresholds.len() != model.k() {
        return Err(R2rError::shape(model.k(), thresholds.len()));
    }
    let assignment = model.assign_batch(latents)?;
    let members = assignment.members();
    clusters
        .iter()
        .map(|&k| {
            let center = model.mean(k)?;
            let idx = &members[k];
            let disp: Vec<f64> = idx
                .iter()
                .map(|&i| dispersion(latents.row(i), center))
                .collect::<Result<_>>()?;
            let (mean, flagged) = if disp.len() <= 1 {
                (0.0, 0.0)
            } else {
                let flagged = disp.iter().filter(|d| **d > thresholds[k]).count();
                (mean_and_std(&disp)?.0, flagged as f64 / disp.len() as f64)
            };
            Ok(Reevaluation {
                cluster: k,
                members: idx.len(),
                mean_dispersion: mean,
                flagged_fraction: flagged,
                persistent: mean > tau_uncertain,
            })
        })
        .collect()
}
