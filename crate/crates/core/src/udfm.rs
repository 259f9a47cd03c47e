//! Dispersion-based cluster uncertainty: per-sample dispersion, per-cluster
//! thresholds with dynamic updates, kernel-density mode finding and
//! representative selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{R2rError, Result};
use crate::gmm::{log_sum_exp, Assignment, MixtureModel};
use crate::tensor::{squared_distance, LatentBatch};

/// Mean squared per-coordinate distance between `z` and `center`.
pub fn dispersion(z: &[f64], center: &[f64]) -> Result<f64> {
    if z.len() != center.len() {
        return Err(R2rError::shape(center.len(), z.len()));
    }
    if z.is_empty() {
        return Err(R2rError::Empty("latent vector".into()));
    }
    Ok(squared_distance(z, center) / z.len() as f64)
}

/// Mean and population standard deviation.
pub fn mean_and_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(R2rError::Empty("dispersion set".into()));
    }
    let n = values.len() as f64;
    // Shifted by the first value so that a constant set reproduces that value exactly.
    let shift = values[0];
    let mean = shift + values.iter().map(|v| v - shift).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Cluster threshold: mean dispersion plus one population standard deviation.
pub fn compute_threshold(dispersions: &[f64]) -> Result<f64> {
    let (mean, std) = mean_and_std(dispersions)?;
    Ok(mean + std)
}

/// `tau + eta * (mu_before - mu_after)`.
pub fn update_threshold(tau: f64, eta: f64, mu_before: f64, mu_after: f64) -> Result<f64> {
    if !(eta >= 0.0) {
        return Err(R2rError::invalid("eta", "must be >= 0"));
    }
    Ok(tau + eta * (mu_before - mu_after))
}

/// Gaussian-kernel density estimate in log space.
pub fn kde_log_density(z: &[f64], samples: &LatentBatch, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(R2rError::invalid("h", "bandwidth must be positive"));
    }
    if samples.is_empty() {
        return Err(R2rError::Empty("kde samples".into()));
    }
    if z.len() != samples.dim() {
        return Err(R2rError::shape(samples.dim(), z.len()));
    }
    Ok(kde_log_unchecked(z, samples, h))
}

fn kde_log_unchecked(z: &[f64], samples: &LatentBatch, h: f64) -> f64 {
    let d = samples.dim() as f64;
    let inv = 1.0 / (2.0 * h * h);
    let exps: Vec<f64> = samples.rows().map(|s| -squared_distance(z, s) * inv).collect();
    let norm = (samples.len() as f64).ln() + 0.5 * d * (2.0 * std::f64::consts::PI * h * h).ln();
    log_sum_exp(&exps) - norm
}

pub fn kde_density(z: &[f64], samples: &LatentBatch, h: f64) -> Result<f64> {
    kde_log_density(z, samples, h).map(f64::exp)
}

/// Scott's rule: `n^(-1/(d+4))` times the mean per-dimension standard deviation.
pub fn scott_bandwidth(samples: &LatentBatch) -> f64 {
    let n = samples.len().max(1) as f64;
    let d = samples.dim() as f64;
    let mean = samples.mean();
    let mut var = vec![0.0; samples.dim()];
    for z in samples.rows() {
        for ((v, x), m) in var.iter_mut().zip(z).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let sigma = var.iter().map(|v| (v / n).sqrt()).sum::<f64>() / d.max(1.0);
    let h = n.powf(-1.0 / (d + 4.0)) * sigma;
    if h > 0.0 {
        h
    } else {
        1e-6
    }
}

/// Index of the sample with the highest density among the samples themselves.
/// Ties go to the lowest index.
pub fn find_mode(samples: &LatentBatch, h: f64) -> Result<usize> {
    if samples.is_empty() {
        return Err(R2rError::Empty("cluster samples".into()));
    }
    if !(h > 0.0) {
        return Err(R2rError::invalid("h", "bandwidth must be positive"));
    }
    let dens: Vec<f64> = (0..samples.len())
        .into_par_iter()
        .map(|i| kde_log_unchecked(samples.row(i), samples, h))
        .collect();
    let mut best = 0;
    for (i, v) in dens.iter().enumerate() {
        if *v > dens[best] {
            best = i;
        }
    }
    Ok(best)
}

/// The mode followed by the `m` samples nearest to it, nearest first
/// (ties by lower index).
pub fn select_representatives(samples: &LatentBatch, mode: usize, m: usize) -> Result<Vec<usize>> {
    if mode >= samples.len() {
        return Err(R2rError::invalid("mode", format!("index {mode} out of range")));
    }
    if m >= samples.len() {
        return Err(R2rError::invalid(
            "m",
            format!("{m} representatives requested from {} samples", samples.len()),
        ));
    }
    let center = samples.row(mode);
    let mut pool: Vec<(f64, usize)> = (0..samples.len())
        .filter(|&i| i != mode)
        .map(|i| (squared_distance(samples.row(i), center), i))
        .collect();
    let mut out = vec![mode];
    // Greedy: each pick is the nearest remaining candidate.
    for _ in 0..m {
        let (pos, _) = pool
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.1 .1.cmp(&b.1 .1)))
            .unwrap();
        out.push(pool.swap_remove(pos).1);
    }
    Ok(out)
}

/// Per-cluster uncertainty statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub cluster: usize,
    pub center: Vec<f64>,
    /// Indices into the latent batch the statistics were computed from.
    pub members: Vec<usize>,
    pub dispersions: Vec<f64>,
    pub mean_dispersion: f64,
    pub std_dispersion: f64,
    /// Threshold against which samples are flagged.
    pub threshold: f64,
    /// Positions within `members` whose dispersion exceeds `threshold`.
    pub flagged: Vec<usize>,
    pub uncertain: bool,
    /// Member index of the density mode, when computed.
    pub mode: Option<usize>,
    /// Member indices (mode first), when computed.
    pub representatives: Vec<usize>,
}

impl ClusterStats {
    pub fn flagged_fraction(&self) -> f64 {
        if self.members.is_empty() {
            0.0
        } else {
            self.flagged.len() as f64 / self.members.len() as f64
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Re-flags samples against `threshold`.
    pub fn set_threshold(&mut self, threshold: f64) {
        self.threshold = threshold;
        self.flagged = if self.members.len() <= 1 {
            Vec::new()
        } else {
            self.dispersions
                .iter()
                .enumerate()
                .filter(|(_, d)| **d > threshold)
                .map(|(i, _)| i)
                .collect()
        };
    }
}

/// Sample-level flags and the cluster-level decision: a cluster is uncertain when
/// its flagged fraction exceeds `rho`.
pub fn flag_uncertain(stats: &ClusterStats, rho: f64) -> (bool, Vec<usize>) {
    let flagged: Vec<usize> = stats.flagged.iter().map(|&p| stats.members[p]).collect();
    let uncertain = stats.members.len() > 1 && stats.flagged_fraction() > rho;
    (uncertain, flagged)
}

/// Dispersion statistics for every mixture component, using freshly computed
/// `mean + std` thresholds.
pub fn compute_cluster_stats(
    latents: &LatentBatch,
    assignment: &Assignment,
    model: &MixtureModel,
    rho: f64,
) -> Result<Vec<ClusterStats>> {
    if assignment.len() != latents.len() {
        return Err(R2rError::shape(latents.len(), assignment.len()));
    }
    let members = assignment.members();
    let mut out = Vec::with_capacity(model.k());
    for (k, idx) in members.into_iter().enumerate().take(model.k()) {
        let center = model.mean(k)?.to_vec();
        let dispersions: Vec<f64> = if idx.len() <= 1 {
            vec![0.0; idx.len()]
        } else {
            idx.iter()
                .map(|&i| dispersion(latents.row(i), &center))
                .collect::<Result<_>>()?
        };
        let (mean, std) = if dispersions.is_empty() {
            (0.0, 0.0)
        } else {
            mean_and_std(&dispersions)?
        };
        let mut stats = ClusterStats {
            cluster: k,
            center,
            members: idx,
            dispersions,
            mean_dispersion: mean,
            std_dispersion: std,
            threshold: mean + std,
            flagged: Vec::new(),
            uncertain: false,
            mode: None,
            representatives: Vec::new(),
        };
        stats.set_threshold(mean + std);
        stats.uncertain = flag_uncertain(&stats, rho).0;
        out.push(stats);
    }
    Ok(out)
}

/// Fills in the density mode and `m` nearest representatives. When the cluster has
/// more than `cap` members, the density is evaluated on an evenly strided subset.
pub fn locate_representatives(
    stats: &mut ClusterStats,
    latents: &LatentBatch,
    m: usize,
    bandwidth: Option<f64>,
    cap: usize,
) -> Result<()> {
    if stats.members.len() <= 1 {
        stats.mode = stats.members.first().copied();
        stats.representatives = stats.members.clone();
        return Ok(());
    }
    let candidates: Vec<usize> = if stats.members.len() > cap.max(2) {
        let step = stats.members.len() as f64 / cap as f64;
        (0..cap).map(|i| stats.members[(i as f64 * step) as usize]).collect()
    } else {
        stats.members.clone()
    };
    let sub = latents.select(&candidates);
    let h = bandwidth.unwrap_or_else(|| scott_bandwidth(&sub));
    let mode = find_mode(&sub, h)?;
    let reps = select_representatives(&sub, mode, m.min(sub.len() - 1))?;
    stats.mode = Some(candidates[mode]);
    stats.representatives = reps.into_iter().map(|i| candidates[i]).collect();
    Ok(())
}

/// One audited application of the dynamic threshold rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdUpdate {
    pub task: usize,
    pub cluster: usize,
    pub label: String,
    pub tau_before: f64,
    pub tau_after: f64,
    pub mu_before: f64,
    pub mu_after: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTrace {
    pub updates: Vec<ThresholdUpdate>,
}

impl ThresholdTrace {
    pub fn record(&mut self, task: usize, cluster: usize, label: &str, tau: f64, eta: f64, mu_before: f64, mu_after: f64) -> Result<f64> {
        let tau_after = update_threshold(tau, eta, mu_before, mu_after)?;
        self.updates.push(ThresholdUpdate {
            task,
            cluster,
            label: label.to_string(),
            tau_before: tau,
            tau_after,
            mu_before,
            mu_after,
            eta,
        });
        Ok(tau_after)
    }

    /// Largest deviation between logged results and a re-evaluation of the update rule.
    pub fn max_replay_error(&self) -> f64 {
        self.updates
            .iter()
            .map(|u| (u.tau_before + u.eta * (u.mu_before - u.mu_after) - u.tau_after).abs())
            .fold(0.0, f64::max)
    }
}
