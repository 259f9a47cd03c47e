//! Diagonal-covariance Gaussian mixtures fitted by EM, with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{R2rError, Result};
use crate::tensor::{squared_distance, LatentBatch};

/// Lower bound on every variance entry.
pub const COV_FLOOR: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// `log N(z | mean, diag(var))`.
pub fn gaussian_log_pdf(z: &[f64], mean: &[f64], var: &[f64]) -> Result<f64> {
    if z.len() != mean.len() || z.len() != var.len() {
        return Err(R2rError::shape(z.len(), format!("{} / {}", mean.len(), var.len())));
    }
    if let Some(v) = var.iter().find(|v| !(**v > 0.0)) {
        return Err(R2rError::invalid("cov", format!("non-positive variance {v}")));
    }
    Ok(log_pdf_unchecked(z, mean, var))
}

#[inline]
fn log_pdf_unchecked(z: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((x, m), v) in z.iter().zip(mean).zip(var) {
        let d = x - m;
        acc += d * d / v + v.ln() + LN_2PI;
    }
    -0.5 * acc
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct MixtureModel {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    k: usize,
    d: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

impl TryFrom<ModelJson> for MixtureModel {
    type Error = R2rError;
    fn try_from(j: ModelJson) -> Result<Self> {
        let m = MixtureModel::new(j.weights, j.means, j.variances)?;
        if m.k() != j.k || m.dim() != j.d {
            return Err(R2rError::shape(format!("k={} d={}", j.k, j.d), format!("k={} d={}", m.k(), m.dim())));
        }
        Ok(m)
    }
}

impl From<MixtureModel> for ModelJson {
    fn from(m: MixtureModel) -> Self {
        ModelJson {
            k: m.k(),
            d: m.dim(),
            weights: m.weights,
            means: m.means,
            variances: m.variances,
        }
    }
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(R2rError::Empty("mixture components".into()));
        }
        if means.len() != k || variances.len() != k {
            return Err(R2rError::shape(k, format!("{} means / {} variances", means.len(), variances.len())));
        }
        let d = means[0].len();
        if d == 0 || means.iter().chain(&variances).any(|v| v.len() != d) {
            return Err(R2rError::invalid("means", "inconsistent or zero dimension"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(R2rError::invalid("weights", "must be non-negative and sum to 1"));
        }
        if variances.iter().flatten().any(|v| !(*v >= COV_FLOOR) || !v.is_finite()) {
            return Err(R2rError::invalid("cov", format!("variances must be finite and >= {COV_FLOOR}")));
        }
        if means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(R2rError::invalid("means", "non-finite mean"));
        }
        Ok(MixtureModel {
            weights,
            means,
            variances,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn mean(&self, k: usize) -> Result<&[f64]> {
        self.means.get(k).map(Vec::as_slice).ok_or(R2rError::UnknownCluster(k))
    }

    pub fn variances(&self) -> &[Vec<f64>] {
        &self.variances
    }

    pub fn variance(&self, k: usize) -> Result<&[f64]> {
        self.variances.get(k).map(Vec::as_slice).ok_or(R2rError::UnknownCluster(k))
    }

    fn log_joint_into(&self, z: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = if self.weights[k] > 0.0 {
                self.weights[k].ln() + log_pdf_unchecked(z, &self.means[k], &self.variances[k])
            } else {
                f64::NEG_INFINITY
            };
        }
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(R2rError::shape(self.dim(), z.len()));
        }
        Ok(())
    }

    /// `log p(z)` under the mixture.
    pub fn log_likelihood(&self, z: &[f64]) -> Result<f64> {
        self.check_dim(z)?;
        let mut lj = vec![0.0; self.k()];
        self.log_joint_into(z, &mut lj);
        Ok(log_sum_exp(&lj))
    }

    /// Posterior component probabilities, computed in log space.
    pub fn responsibilities(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(z)?;
        let mut lj = vec![0.0; self.k()];
        self.log_joint_into(z, &mut lj);
        let lse = log_sum_exp(&lj);
        Ok(lj.iter().map(|v| (v - lse).exp()).collect())
    }

    /// Most responsible component; ties go to the lowest index.
    pub fn assign(&self, z: &[f64]) -> Result<usize> {
        self.check_dim(z)?;
        let mut lj = vec![0.0; self.k()];
        self.log_joint_into(z, &mut lj);
        Ok(argmax(&lj))
    }

    pub fn assign_batch(&self, latents: &LatentBatch) -> Result<Assignment> {
        if latents.dim() != self.dim() && !latents.is_empty() {
            return Err(R2rError::shape(self.dim(), latents.dim()));
        }
        let clusters = latents
            .as_flat()
            .par_chunks(self.dim())
            .map(|z| {
                let mut lj = vec![0.0; self.k()];
                self.log_joint_into(z, &mut lj);
                argmax(&lj)
            })
            .collect();
        Ok(Assignment {
            k: self.k(),
            clusters,
            responsibilities: None,
        })
    }

    /// Total log-likelihood of a batch.
    pub fn total_log_likelihood(&self, latents: &LatentBatch) -> f64 {
        e_step(self, latents).0
    }

    /// Bayesian information criterion for a diagonal mixture (lower is better).
    pub fn bic(&self, latents: &LatentBatch) -> f64 {
        let k = self.k() as f64;
        let d = self.dim() as f64;
        let params = (k - 1.0) + 2.0 * k * d;
        params * (latents.len() as f64).ln() - 2.0 * self.total_log_likelihood(latents)
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// `responsibilities` as a free function.
pub fn responsibilities(z: &[f64], model: &MixtureModel) -> Result<Vec<f64>> {
    model.responsibilities(z)
}

/// `assign` as a free function.
pub fn assign(z: &[f64], model: &MixtureModel) -> Result<usize> {
    model.assign(z)
}

/// Hard cluster labels, optionally with the `n x k` responsibility matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub k: usize,
    pub clusters: Vec<usize>,
    pub responsibilities: Option<Vec<f64>>,
}

impl Assignment {
    pub fn from_labels(clusters: Vec<usize>) -> Self {
        let k = clusters.iter().max().map_or(0, |m| m + 1);
        Assignment {
            k,
            clusters,
            responsibilities: None,
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Sample indices per cluster id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.clusters.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmOptions {
    pub k: usize,
    pub seed: u64,
    /// Convergence tolerance on the mean per-sample log-likelihood gain.
    pub tol: f64,
    pub max_iter: usize,
    /// Independent k-means++ initializations; the best final likelihood wins.
    pub restarts: usize,
}

impl GmmOptions {
    pub fn new(k: usize, seed: u64) -> Self {
        GmmOptions {
            k,
            seed,
            tol: 1e-6,
            max_iter: 200,
            restarts: 1,
        }
    }
}

/// A fitted model plus EM diagnostics.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: MixtureModel,
    /// Total log-likelihood before each M-step.
    pub log_likelihood: Vec<f64>,
    /// Iterations (indices into `log_likelihood`) after which a component was reseeded.
    pub reseeds: Vec<usize>,
    pub converged: bool,
}

impl GmmFit {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihood.last().unwrap_or(&f64::NEG_INFINITY)
    }
}

/// Fits a `k`-component mixture. See [`fit_gmm_with`] for diagnostics and restarts.
pub fn fit_gmm(latents: &LatentBatch, k: usize, seed: u64, tol: f64, max_iter: usize) -> Result<MixtureModel> {
    let opts = GmmOptions {
        k,
        seed,
        tol,
        max_iter,
        restarts: 1,
    };
    fit_gmm_with(latents, &opts).map(|f| f.model)
}

pub fn fit_gmm_with(latents: &LatentBatch, opts: &GmmOptions) -> Result<GmmFit> {
    let n = latents.len();
    if opts.k == 0 {
        return Err(R2rError::invalid("k", "must be >= 1"));
    }
    if n < opts.k {
        return Err(R2rError::invalid("k", format!("{} samples cannot support {} components", n, opts.k)));
    }
    if latents.dim() == 0 {
        return Err(R2rError::invalid("latents", "zero dimension"));
    }
    if latents.as_flat().iter().any(|v| !v.is_finite()) {
        return Err(R2rError::invalid("latents", "non-finite value"));
    }
    let mut best: Option<GmmFit> = None;
    for r in 0..opts.restarts.max(1) {
        let seed = opts.seed.wrapping_add((r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let fit = fit_once(latents, opts, seed)?;
        if best
            .as_ref()
            .is_none_or(|b| fit.final_log_likelihood() > b.final_log_likelihood())
        {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}

fn fit_once(latents: &LatentBatch, opts: &GmmOptions, seed: u64) -> Result<GmmFit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = kmeans_pp(latents, opts.k, &mut rng);
    let hard: Vec<usize> = latents
        .as_flat()
        .par_chunks(latents.dim())
        .map(|z| nearest(z, &centers))
        .collect();
    let mut resp = vec![0.0; latents.len() * opts.k];
    for (i, &c) in hard.iter().enumerate() {
        resp[i * opts.k + c] = 1.0;
    }
    let (mut model, mut reseeded) = m_step(latents, &resp, opts.k);
    let mut trace = Vec::new();
    let mut reseeds = Vec::new();
    if reseeded {
        reseeds.push(0);
    }
    let n = latents.len() as f64;
    let mut converged = false;
    for iter in 0..opts.max_iter.max(1) {
        let (ll, r) = e_step(&model, latents);
        trace.push(ll);
        resp = r;
        if iter > 0 && !reseeded {
            let gain = (ll - trace[iter - 1]) / n;
            if gain.abs() < opts.tol {
                converged = true;
                break;
            }
        }
        if iter + 1 == opts.max_iter.max(1) {
            break;
        }
        let (next, re) = m_step(latents, &resp, opts.k);
        model = next;
        reseeded = re;
        if re {
            reseeds.push(iter + 1);
        }
    }
    Ok(GmmFit {
        model,
        log_likelihood: trace,
        reseeds,
        converged,
    })
}

fn nearest(z: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(z, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn kmeans_pp<R: Rng>(latents: &LatentBatch, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = latents.len();
    let mut centers = vec![latents.row(rng.random_range(0..n)).to_vec()];
    let mut dist: Vec<f64> = latents.rows().map(|z| squared_distance(z, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, d) in dist.iter().enumerate() {
                if target < *d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = latents.row(pick).to_vec();
        for (d, z) in dist.iter_mut().zip(latents.rows()) {
            *d = d.min(squared_distance(z, &c));
        }
        centers.push(c);
    }
    centers
}

/// Total log-likelihood and the `n x k` responsibility matrix.
fn e_step(model: &MixtureModel, latents: &LatentBatch) -> (f64, Vec<f64>) {
    let k = model.k();
    let rows: Vec<(f64, Vec<f64>)> = latents
        .as_flat()
        .par_chunks(latents.dim())
        .map(|z| {
            let mut lj = vec![0.0; k];
            model.log_joint_into(z, &mut lj);
            let lse = log_sum_exp(&lj);
            lj.iter_mut().for_each(|v| *v = (*v - lse).exp());
            (lse, lj)
        })
        .collect();
    let mut ll = 0.0;
    let mut resp = Vec::with_capacity(latents.len() * k);
    for (l, r) in rows {
        ll += l;
        resp.extend(r);
    }
    (ll, resp)
}

// Components whose effective count falls below this are reseeded.
const EMPTY_COMPONENT: f64 = 1e-8;

fn m_step(latents: &LatentBatch, resp: &[f64], k: usize) -> (MixtureModel, bool) {
    let n = latents.len();
    let d = latents.dim();
    let mut counts = vec![0.0; k];
    let mut means = vec![vec![0.0; d]; k];
    for (i, z) in latents.rows().enumerate() {
        for c in 0..k {
            let g = resp[i * k + c];
            if g == 0.0 {
                continue;
            }
            counts[c] += g;
            for (m, x) in means[c].iter_mut().zip(z) {
                *m += g * x;
            }
        }
    }
    let mut reseeded = false;
    let empty: Vec<usize> = (0..k).filter(|&c| counts[c] < EMPTY_COMPONENT).collect();
    for c in 0..k {
        if counts[c] >= EMPTY_COMPONENT {
            means[c].iter_mut().for_each(|m| *m /= counts[c]);
        }
    }
    let mut vars = vec![vec![0.0; d]; k];
    for (i, z) in latents.rows().enumerate() {
        for c in 0..k {
            let g = resp[i * k + c];
            if g == 0.0 || counts[c] < EMPTY_COMPONENT {
                continue;
            }
            for ((v, x), m) in vars[c].iter_mut().zip(z).zip(&means[c]) {
                *v += g * (x - m) * (x - m);
            }
        }
    }
    for c in 0..k {
        if counts[c] >= EMPTY_COMPONENT {
            vars[c].iter_mut().for_each(|v| *v = (*v / counts[c]).max(COV_FLOOR));
        }
    }
    if !empty.is_empty() {
        reseeded = true;
        let global = latents.mean();
        let mut gvar = vec![0.0; d];
        for z in latents.rows() {
            for ((v, x), m) in gvar.iter_mut().zip(z).zip(&global) {
                *v += (x - m) * (x - m);
            }
        }
        gvar.iter_mut().for_each(|v| *v = (*v / n as f64).max(COV_FLOOR));
        let mut taken: Vec<usize> = Vec::new();
        for &c in &empty {
            // Farthest sample from the mean of its most responsible live component.
            let mut far = 0;
            let mut far_d = -1.0;
            for (i, z) in latents.rows().enumerate() {
                if taken.contains(&i) {
                    continue;
                }
                let owner = (0..k)
                    .filter(|j| counts[*j] >= EMPTY_COMPONENT)
                    .max_by(|a, b| resp[i * k + a].total_cmp(&resp[i * k + b]))
                    .unwrap_or(0);
                let dd = squared_distance(z, &means[owner]);
                if dd > far_d {
                    far_d = dd;
                    far = i;
                }
            }
            taken.push(far);
            means[c] = latents.row(far).to_vec();
            vars[c] = gvar.clone();
            counts[c] = 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    let weights = counts.iter().map(|c| c / total).collect();
    (
        MixtureModel {
            weights,
            means,
            variances: vars,
        },
        reseeded,
    )
}

/// Fits one model per candidate `k` and returns the one with the lowest BIC.
pub fn select_k_bic(latents: &LatentBatch, candidates: &[usize], opts: &GmmOptions) -> Result<(usize, MixtureModel)> {
    let mut best: Option<(f64, usize, MixtureModel)> = None;
    for &k in candidates {
        let fit = fit_gmm_with(latents, &GmmOptions { k, ..opts.clone() })?;
        let bic = fit.model.bic(latents);
        if best.as_ref().is_none_or(|b| bic < b.0) {
            best = Some((bic, k, fit.model));
        }
    }
    best.map(|(_, k, m)| (k, m))
        .ok_or_else(|| R2rError::Empty("BIC candidates".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(centers: &[[f64; 2]], per: usize, sigma: f64, seed: u64) -> (LatentBatch, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut b = LatentBatch::new(2);
        let mut labels = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per {
                b.push(&[center[0] + noise.sample(&mut rng), center[1] + noise.sample(&mut rng)])
                    .unwrap();
                labels.push(c);
            }
        }
        (b, labels)
    }

    #[test]
    fn standard_normal_log_pdf() {
        let v = gaussian_log_pdf(&[0.0], &[0.0], &[1.0]).unwrap();
        assert!((v - (1.0 / (2.0 * std::f64::consts::PI).sqrt()).ln()).abs() < 1e-12);
        assert!((v + 0.9189).abs() < 1e-4);
        assert!(gaussian_log_pdf(&[0.0], &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn log_pdf_at_mean_and_translation() {
        let var = [0.5, 2.0, 3.0];
        let at_mean = gaussian_log_pdf(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &var).unwrap();
        let want: f64 = -0.5 * var.iter().map(|s| (2.0 * std::f64::consts::PI * s).ln()).sum::<f64>();
        assert!((at_mean - want).abs() < 1e-12);
        let a = gaussian_log_pdf(&[0.3, -1.0, 2.0], &[1.0, 0.0, 0.0], &var).unwrap();
        let b = gaussian_log_pdf(&[5.3, 9.0, -8.0], &[6.0, 10.0, -10.0], &var).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn responsibilities_examples() {
        let one = MixtureModel::new(vec![1.0], vec![vec![0.0]], vec![vec![1.0]]).unwrap();
        assert_eq!(one.responsibilities(&[3.0]).unwrap(), vec![1.0]);
        assert_eq!(one.assign(&[3.0]).unwrap(), 0);

        let two = MixtureModel::new(vec![0.5, 0.5], vec![vec![0.0], vec![4.0]], vec![vec![1.0], vec![1.0]]).unwrap();
        let r = two.responsibilities(&[2.0]).unwrap();
        assert!((r[0] - 0.5).abs() < 1e-15 && (r[1] - 0.5).abs() < 1e-15);
        // Tie goes to the lowest index.
        assert_eq!(two.assign(&[2.0]).unwrap(), 0);

        // Direct density arithmetic at z = 1: N(1|0,1) vs N(1|4,1).
        let p0 = 0.5 * (-0.5f64).exp();
        let p1 = 0.5 * (-4.5f64).exp();
        let r = two.responsibilities(&[1.0]).unwrap();
        assert!((r[0] - p0 / (p0 + p1)).abs() < 1e-12);
        assert!((r[1] - p1 / (p0 + p1)).abs() < 1e-12);
        assert!((r[0] - 0.982_013_790_037_908_4).abs() < 1e-12);
    }

    #[test]
    fn far_points_do_not_underflow_to_nan() {
        let two = MixtureModel::new(vec![0.5, 0.5], vec![vec![0.0], vec![1.0]], vec![vec![1e-6], vec![1e-6]]).unwrap();
        let r = two.responsibilities(&[1e6]).unwrap();
        assert!(r.iter().all(|v| v.is_finite()));
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(two.assign(&[1e6]).unwrap(), 1);
    }

    #[test]
    fn recovers_two_blobs() {
        let (data, labels) = blobs(&[[0.0, 0.0], [10.0, 10.0]], 200, 0.5, 7);
        let fit = fit_gmm_with(&data, &GmmOptions::new(2, 1)).unwrap();
        let m = &fit.model;
        let mut centers: Vec<&Vec<f64>> = m.means().iter().collect();
        centers.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!(squared_distance(centers[0], &[0.0, 0.0]).sqrt() < 0.3);
        assert!(squared_distance(centers[1], &[10.0, 10.0]).sqrt() < 0.3);
        let a = m.assign_batch(&data).unwrap();
        let flip = a.clusters[0] != labels[0];
        assert!(a.clusters.iter().zip(&labels).all(|(c, l)| (*c == *l) != flip));
        assert!(fit.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-7));
    }

    #[test]
    fn single_component_is_sample_mle() {
        let (data, _) = blobs(&[[1.0, -2.0]], 100, 0.7, 3);
        let m = fit_gmm(&data, 1, 0, 1e-9, 50).unwrap();
        let mean = data.mean();
        for j in 0..2 {
            assert!((m.means()[0][j] - mean[j]).abs() < 1e-12);
            let var: f64 = data.rows().map(|z| (z[j] - mean[j]).powi(2)).sum::<f64>() / 100.0;
            assert!((m.variances()[0][j] - var).abs() < 1e-12);
        }
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn errors_and_determinism() {
        let (data, _) = blobs(&[[0.0, 0.0], [5.0, 5.0]], 20, 1.0, 4);
        assert!(fit_gmm(&data, 41, 0, 1e-6, 10).is_err());
        let a = fit_gmm(&data, 3, 9, 1e-6, 100).unwrap();
        let b = fit_gmm(&data, 3, 9, 1e-6, 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_points_trigger_reseed_not_nan() {
        let mut data = LatentBatch::new(1);
        for _ in 0..10 {
            data.push(&[1.0]).unwrap();
        }
        data.push(&[5.0]).unwrap();
        let fit = fit_gmm_with(&data, &GmmOptions::new(3, 0)).unwrap();
        assert!(fit.model.variances().iter().flatten().all(|v| *v >= COV_FLOOR));
        assert!((fit.model.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let m = MixtureModel::new(vec![0.25, 0.75], vec![vec![0.0, 1.0], vec![2.0, 3.0]], vec![vec![1.0, 1.0], vec![0.5, 0.5]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"k\":2") && s.contains("\"d\":2"));
        assert_eq!(serde_json::from_str::<MixtureModel>(&s).unwrap(), m);
        assert!(MixtureModel::new(vec![0.5, 0.6], vec![vec![0.0]; 2], vec![vec![1.0]; 2]).is_err());
    }

    #[test]
    fn bic_prefers_true_k() {
        let (data, _) = blobs(&[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]], 80, 0.5, 12);
        let (k, _) = select_k_bic(&data, &[1, 2, 3, 4], &GmmOptions { restarts: 3, ..GmmOptions::new(1, 2) }).unwrap();
        assert_eq!(k, 3);
    }
}
