//! The per-task loop: (A) train the autoencoder, (B) cluster and score uncertainty,
//! (C) replay uncertain clusters, (D) fine-tune on synthetic data, then evaluate.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{ClassOrder, DatasetKind, KPolicy, ReplayMode, RunConfig};
use super::report::{write_latents_csv, EvalReport, FlaggedCluster, SweepReport, SweepRow, TaskReport, ThresholdRecord};
use crate::data::cifar::load_cifar_binary;
use crate::data::pngdir::load_png_dir;
use crate::data::toy::{make_toy_stream_with, ToyConfig};
use crate::data::Dataset;
use crate::error::{R2rError, Result};
use crate::eval::cumulative_evaluate;
use crate::gmm::{fit_gmm_with, select_k_bic, Assignment, GmmOptions, MixtureModel};
use crate::improve::{
    default_tau_uncertain, extend_fine_tuning, fine_tune, identify_low_clusters, reevaluate, FineTuneConfig,
};
use crate::nn::{train_in_place, Architecture, AutoencoderParams, TrainConfig};
use crate::replay::{
    label_cluster, reintegrate, schedule_replay, ClusterLabelMap, DecoderBackend, GenerateRequest, LabelMethod,
    Labeler, ReplayBackend, ReplayBatch, SidecarClient, SyntheticStore, TrainingPool, VlmBackend,
};
use crate::seed::derive_seed;
use crate::silhouette::silhouette;
use crate::stream::{split_tasks, TaskStream};
use crate::tensor::{ImageTensor, LatentBatch, Shape3};
use crate::udfm::{compute_cluster_stats, flag_uncertain, locate_representatives, ClusterStats, ThresholdTrace};

const TAG_TRAIN: u64 = 0xA;
const TAG_CLUSTER: u64 = 0xB;
const TAG_REPLAY: u64 = 0xC;
const TAG_TUNE: u64 = 0xD;
const TAG_EVAL: u64 = 0xE;

/// Builds the dataset a config describes.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    match cfg.dataset {
        DatasetKind::Toy => make_toy_stream_with(&ToyConfig {
            classes: cfg.toy_classes,
            per_class: cfg.toy_per_class,
            shape: Shape3::new(cfg.toy_channels, cfg.toy_size, cfg.toy_size),
            seed: cfg.seed,
            noise: cfg.toy_noise,
            brightness: cfg.toy_brightness,
            test_fraction: 0.2,
        }),
        DatasetKind::Cifar10 => load_cifar_binary(Path::new(&cfg.data_path))?
            .subset_per_class(cfg.train_per_class, cfg.test_per_class),
        DatasetKind::Pngdir => load_png_dir(Path::new(&cfg.data_path))?
            .subset_per_class(cfg.train_per_class, cfg.test_per_class),
    }
}

pub fn encode_all(params: &AutoencoderParams, images: &[&ImageTensor]) -> Result<LatentBatch> {
    let mut flat = vec![0.0; images.len() * params.latent_dim()];
    flat.par_chunks_mut(params.latent_dim().max(1))
        .zip(images.par_iter())
        .try_for_each(|(row, img)| {
            row.copy_from_slice(params.encode(img)?.as_slice());
            Ok::<_, R2rError>(())
        })?;
    LatentBatch::from_flat(params.latent_dim(), flat)
}

/// Silhouette on at most `cap` evenly strided samples; `None` with fewer than two
/// occupied clusters.
fn capped_silhouette(latents: &LatentBatch, clusters: &[usize], cap: usize) -> Option<f64> {
    let n = latents.len();
    let idx: Vec<usize> = if n > cap {
        (0..cap).map(|i| i * n / cap).collect()
    } else {
        (0..n).collect()
    };
    let labels: Vec<usize> = idx.iter().map(|&i| clusters[i]).collect();
    silhouette(&latents.select(&idx), &labels).ok()
}

fn stage<T>(name: &'static str, task: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| R2rError::Stage {
        stage: name,
        task,
        source: Box::new(e),
    })
}

/// State of one run over a task stream.
pub struct Pipeline<'a> {
    cfg: RunConfig,
    ds: &'a Dataset,
    stream: TaskStream,
    arch: Architecture,
    params: Option<AutoencoderParams>,
    pool: TrainingPool,
    labels: ClusterLabelMap,
    /// Identity -> (threshold, mean dispersion) at the end of the last task it was seen.
    memory: BTreeMap<usize, (f64, f64)>,
    next_identity: usize,
    trace: ThresholdTrace,
    report: EvalReport,
    vlm: Option<VlmBackend>,
    store: Option<SyntheticStore>,
    candidates: Vec<String>,
    eval_model: Option<MixtureModel>,
    out: Option<PathBuf>,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: RunConfig, ds: &'a Dataset) -> Result<Self> {
        cfg.validate()?;
        let shuffle = (cfg.class_order == ClassOrder::Shuffled).then_some(cfg.seed);
        let stream = split_tasks(ds, cfg.tasks, shuffle)?;
        let arch = Architecture {
            input: ds.shape(),
            channels: cfg.channels.clone(),
            kernel: cfg.kernel,
            stride: cfg.stride,
            latent_dim: cfg.latent_dim,
        };
        arch.layout()?;
        let out = (!cfg.out_dir.is_empty()).then(|| PathBuf::from(&cfg.out_dir));
        let store = match (&out, cfg.write_synthetic && cfg.replay != ReplayMode::None) {
            (Some(dir), true) => Some(SyntheticStore::new(dir.join("synthetic"))?),
            _ => None,
        };
        let vlm = (cfg.replay == ReplayMode::Vlm).then(|| {
            let client = SidecarClient::new(&cfg.sidecar_url, Duration::from_millis(cfg.sidecar_timeout_ms));
            match client.health() {
                Ok(h) => tracing::info!(url = client.url(), mode = h.mode, "sidecar healthy"),
                Err(e) => tracing::warn!(url = client.url(), error = %e, "sidecar unreachable; replay will fall back to decoder"),
            }
            VlmBackend::new(client, ds.shape())
        });
        let candidates = if cfg.candidates.is_empty() {
            ds.class_names().to_vec()
        } else {
            cfg.candidates.clone()
        };
        let mut report = EvalReport::new(cfg.clone());
        for backend in ["decoder", "vlm"] {
            report.generation_calls.insert(backend.into(), 0);
        }
        Ok(Pipeline {
            pool: TrainingPool::new(ds.shape()),
            cfg,
            ds,
            stream,
            arch,
            params: None,
            labels: ClusterLabelMap::default(),
            memory: BTreeMap::new(),
            next_identity: 0,
            trace: ThresholdTrace::default(),
            report,
            vlm,
            store,
            candidates,
            eval_model: None,
            out,
        })
    }

    pub fn stream(&self) -> &TaskStream {
        &self.stream
    }

    pub fn params(&self) -> Option<&AutoencoderParams> {
        self.params.as_ref()
    }

    pub fn pool(&self) -> &TrainingPool {
        &self.pool
    }

    pub fn report(&self) -> &EvalReport {
        &self.report
    }

    pub fn threshold_trace(&self) -> &ThresholdTrace {
        &self.trace
    }

    pub fn cluster_labels(&self) -> &ClusterLabelMap {
        &self.labels
    }

    /// Mixture used for the most recent evaluation.
    pub fn eval_model(&self) -> Option<&MixtureModel> {
        self.eval_model.as_ref()
    }

    /// Runs every task, then finalizes and (if configured) writes the report. On a stage
    /// failure the partial report is still written before the error is returned.
    pub fn run(mut self) -> Result<EvalReport> {
        let start = Instant::now();
        let mut failure = None;
        for t in 1..=self.stream.len() {
            if let Err(e) = self.run_task(t) {
                tracing::error!(task = t, error = %e, "run aborted");
                failure = Some(e);
                break;
            }
        }
        self.report.completed = failure.is_none();
        self.report.error = failure.as_ref().map(|e| e.to_string());
        self.report.runtime_seconds = start.elapsed().as_secs_f64();
        self.report.summarize();
        if let Some(dir) = &self.out {
            self.report.write(dir)?;
        }
        match failure {
            Some(e) => Err(e),
            None => Ok(self.report),
        }
    }

    fn k_for(&self, t: usize, latents: &LatentBatch) -> Result<(usize, Option<MixtureModel>)> {
        let seen = self.stream.classes_seen(t)?.len();
        Ok(match self.cfg.k_policy {
            KPolicy::ClassesSeen => (seen, None),
            KPolicy::Fixed => (self.cfg.gmm_k, None),
            KPolicy::Bic => {
                let cands: Vec<usize> = (1..=2 * seen).filter(|&k| k <= latents.len()).collect();
                let (k, m) = select_k_bic(latents, &cands, &self.gmm_options(1, derive_seed(self.cfg.seed, &[t as u64, TAG_CLUSTER])))?;
                (k, Some(m))
            }
        })
    }

    fn gmm_options(&self, k: usize, seed: u64) -> GmmOptions {
        GmmOptions {
            tol: self.cfg.gmm_tol,
            max_iter: self.cfg.gmm_max_iter,
            restarts: self.cfg.gmm_restarts,
            ..GmmOptions::new(k, seed)
        }
    }

    fn fit(&self, latents: &LatentBatch, t: usize, tag: u64) -> Result<MixtureModel> {
        let seed = derive_seed(self.cfg.seed, &[t as u64, tag]);
        let (k, bic_model) = self.k_for(t, latents)?;
        if let Some(m) = bic_model {
            return Ok(m);
        }
        if k > latents.len() {
            return Err(R2rError::invalid("k", format!("{k} components for {} samples", latents.len())));
        }
        Ok(fit_gmm_with(latents, &self.gmm_options(k, seed))?.model)
    }

    /// Runs task `t` (1-based) through every stage and appends its report.
    pub fn run_task(&mut self, t: usize) -> Result<&TaskReport> {
        let task = self.stream.task(t)?.clone();
        let cfg = self.cfg.clone();

        // (A) autoencoder on current real data plus the synthetic pool.
        let real: Vec<ImageTensor> = task.train.iter().map(|&i| self.ds.image(i).clone()).collect();
        stage("A", t, self.pool.set_real(real))?;
        let mut params = match (self.params.take(), cfg.reinit_per_task) {
            (Some(p), false) => p,
            _ => {
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(derive_seed(cfg.seed, &[t as u64, TAG_TRAIN, 1]));
                stage("A", t, AutoencoderParams::init(&self.arch, &mut rng))?
            }
        };
        let train_cfg = TrainConfig {
            learning_rate: cfg.learning_rate,
            gamma: cfg.gamma,
            batch_size: cfg.batch_size,
            epochs: cfg.epochs,
            seed: derive_seed(cfg.seed, &[t as u64, TAG_TRAIN]),
        };
        let ae_trace = stage("A", t, train_in_place(&mut params, &self.pool.images(), &train_cfg, 1.0))?;
        let ae_loss = ae_trace.last().copied().unwrap_or(f64::NAN);
        tracing::info!(stage = "A", task = t, loss = ae_loss, real = self.pool.real_len(), synthetic = self.pool.synthetic_len(), "autoencoder trained");

        // (B) cluster the cumulative pool and score uncertainty.
        let latents = stage("B", t, encode_all(&params, &self.pool.images()))?;
        let model = stage("B", t, self.fit(&latents, t, TAG_CLUSTER))?;
        let assignment = stage("B", t, model.assign_batch(&latents))?;
        let mut stats = stage("B", t, compute_cluster_stats(&latents, &assignment, &model, cfg.rho))?;
        let silhouette_before = capped_silhouette(&latents, &assignment.clusters, cfg.silhouette_cap);
        let ids = self.assign_identities(&assignment, model.k());
        stage("B", t, self.apply_thresholds(t, &ids, &mut stats))?;
        tracing::info!(
            stage = "B",
            task = t,
            k = model.k(),
            silhouette = silhouette_before,
            uncertain = stats.iter().filter(|s| s.uncertain).count(),
            "clustered"
        );

        // (C) replay scheduled clusters.
        let schedule = schedule_replay(&stats, cfg.rho);
        let mut replay_backend: BTreeMap<String, usize> = BTreeMap::new();
        let mut replayed = 0;
        let mut degraded = false;
        if cfg.replay != ReplayMode::None && cfg.samples_per_cluster > 0 {
            let mut decoder = DecoderBackend::new(&model, &params);
            for &k in &schedule {
                let id = ids[k];
                let token = stage("C", t, self.token_for(id, k, &mut stats, &latents))?;
                let req = GenerateRequest {
                    cluster: k,
                    label: token,
                    count: cfg.samples_per_cluster,
                    seed: derive_seed(cfg.seed, &[t as u64, TAG_REPLAY, id as u64]),
                    task: t,
                };
                let mut batch: Option<ReplayBatch> = None;
                if let Some(vlm) = self.vlm.as_mut() {
                    match vlm.generate(&req) {
                        Ok(b) => batch = Some(b),
                        Err(e) => {
                            degraded = true;
                            tracing::warn!(stage = "C", task = t, cluster = k, error = %e, "vlm replay failed; falling back to decoder");
                        }
                    }
                }
                if batch.is_none() {
                    match decoder.generate(&req) {
                        Ok(b) => batch = Some(b),
                        Err(e) => {
                            degraded = true;
                            tracing::warn!(stage = "C", task = t, cluster = k, error = %e, "decoder replay failed; skipping cluster");
                        }
                    }
                }
                let Some(batch) = batch else { continue };
                if let Some(b) = batch.samples.first() {
                    *replay_backend.entry(b.backend.to_string()).or_default() += batch.len();
                }
                if let Some(store) = self.store.as_mut() {
                    stage("C", t, store.append(&batch))?;
                }
                replayed += stage("C", t, reintegrate(batch, &mut self.pool))?;
            }
            *self.report.generation_calls.entry("decoder".into()).or_default() += decoder.calls();
        }
        let vlm_calls = self.vlm.as_ref().map_or(0, |v| v.calls());
        self.report.generation_calls.insert("vlm".into(), vlm_calls);
        tracing::info!(stage = "C", task = t, scheduled = schedule.len(), samples = replayed, degraded, "replayed");

        // (D) fine-tune on synthetic samples of dispersed clusters.
        let tau_u = cfg.tau_uncertain_override().unwrap_or_else(|| default_tau_uncertain(&stats));
        let thresholds: Vec<f64> = stats.iter().map(|s| s.threshold).collect();
        let ft_cfg = FineTuneConfig {
            lambda1: cfg.lambda1,
            delta_sim: cfg.delta_sim,
            tau_uncertain: Some(tau_u),
            epochs: cfg.fine_tune_epochs,
            learning_rate: cfg.learning_rate * cfg.fine_tune_lr_scale,
            gamma: cfg.gamma,
            batch_size: cfg.batch_size,
            seed: derive_seed(cfg.seed, &[t as u64, TAG_TUNE]),
        };
        let mut low_all = BTreeSet::new();
        let mut tuned_all = BTreeSet::new();
        let mut ft_samples = 0;
        let mut ft_loss = Vec::new();
        let mut reevaluation = Vec::new();
        for iter in 0..cfg.feedback_iterations {
            let low = identify_low_clusters(&stats, tau_u);
            let ext = stage("D", t, extend_fine_tuning(&low, &stats, cfg.delta_sim))?;
            low_all.extend(low.iter().copied());
            let synth: Vec<&ImageTensor> = self.pool.synthetic_samples().map(|s| &s.image).collect();
            if ext.is_empty() || synth.is_empty() {
                break;
            }
            let z = stage("D", t, encode_all(&params, &synth))?;
            let owner = stage("D", t, model.assign_batch(&z))?;
            let chosen: Vec<&ImageTensor> = synth
                .iter()
                .zip(&owner.clusters)
                .filter(|(_, c)| ext.contains(c))
                .map(|(img, _)| *img)
                .collect();
            if chosen.is_empty() {
                break;
            }
            let outcome = stage("D", t, fine_tune(&params, &chosen, &FineTuneConfig { seed: derive_seed(ft_cfg.seed, &[iter as u64]), ..ft_cfg.clone() }))?;
            params = outcome.params;
            ft_samples += chosen.len();
            ft_loss.extend(outcome.loss);
            tuned_all.extend(ext.iter().copied());
            let fresh = stage("D", t, encode_all(&params, &self.pool.images()))?;
            reevaluation = stage("D", t, reevaluate(&ext, &fresh, &model, &thresholds, tau_u))?;
            if iter + 1 < cfg.feedback_iterations {
                let a = stage("D", t, model.assign_batch(&fresh))?;
                stats = stage("D", t, compute_cluster_stats(&fresh, &a, &model, cfg.rho))?;
                for (s, &tau) in stats.iter_mut().zip(&thresholds) {
                    s.set_threshold(tau);
                }
            }
        }
        for r in reevaluation.iter().filter(|r| r.persistent) {
            self.report.flagged_for_analysis.push(FlaggedCluster {
                task: t,
                cluster: r.cluster,
                label: self.label_of(ids[r.cluster]),
                mean_dispersion: r.mean_dispersion,
                tau_uncertain: tau_u,
            });
        }
        tracing::info!(stage = "D", task = t, low = low_all.len(), tuned = tuned_all.len(), samples = ft_samples, "self-improvement");

        // Evaluation on the cumulative test split.
        let final_latents = stage("eval", t, encode_all(&params, &self.pool.images()))?;
        let eval_model = stage("eval", t, self.fit(&final_latents, t, TAG_EVAL))?;
        let final_assign: Assignment = stage("eval", t, eval_model.assign_batch(&final_latents))?;
        let silhouette_after = capped_silhouette(&final_latents, &final_assign.clusters, cfg.silhouette_cap);
        let real_n = self.pool.real_len();
        let real_idx: Vec<usize> = (0..real_n).collect();
        let silhouette_after_real = capped_silhouette(
            &final_latents.select(&real_idx),
            &final_assign.clusters[..real_n],
            cfg.silhouette_cap,
        );
        let ev = stage("eval", t, cumulative_evaluate(&params, &eval_model, self.ds, &self.stream, t))?;
        if let (Some(dir), true) = (&self.out, cfg.dump_latents) {
            stage("eval", t, std::fs::create_dir_all(dir).map_err(R2rError::from))?;
            stage("eval", t, write_latents_csv(&dir.join(format!("latents_task{t}.csv")), &final_latents, &final_assign.clusters))?;
        }
        tracing::info!(stage = "eval", task = t, accuracy = ev.accuracy, silhouette = silhouette_after, "evaluated");

        self.report.tasks.push(TaskReport {
            task: t,
            classes: task.classes.clone(),
            k: model.k(),
            accuracy: ev.accuracy,
            test_samples: ev.samples,
            per_task_accuracy: ev.per_task,
            silhouette_before,
            silhouette_after,
            silhouette_after_real,
            autoencoder_loss: ae_loss,
            scheduled: schedule,
            replay_samples: replayed,
            replay_backend,
            degraded,
            real_pool: self.pool.real_len(),
            synthetic_pool: self.pool.synthetic_len(),
            low_clusters: low_all.into_iter().collect(),
            fine_tuned: tuned_all.into_iter().collect(),
            fine_tune_samples: ft_samples,
            fine_tune_loss: ft_loss,
            reevaluation,
        });
        self.report.summarize();
        self.params = Some(params);
        self.eval_model = Some(eval_model);
        Ok(self.report.tasks.last().unwrap())
    }

    fn label_of(&self, id: usize) -> String {
        self.labels.get(id).map_or_else(|| format!("id{id}"), |l| l.token.clone())
    }

    /// Matches mixture components to cluster identities from earlier tasks. A component
    /// inherits an identity when a strict majority of its members are synthetic samples
    /// carrying that identity's token; every other component gets a fresh identity.
    fn assign_identities(&mut self, assignment: &Assignment, k: usize) -> Vec<usize> {
        let real_n = self.pool.real_len();
        let tokens: Vec<&str> = self.pool.synthetic_samples().map(|s| s.label.as_str()).collect();
        let mut claims = Vec::new();
        for (c, members) in assignment.members().iter().enumerate().take(k) {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for &i in members.iter().filter(|&&i| i >= real_n) {
                *counts.entry(tokens[i - real_n]).or_default() += 1;
            }
            let top = counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)));
            if let Some((tok, &n)) = top {
                if 2 * n > members.len() {
                    if let Some(id) = self.labels.find_token(tok) {
                        claims.push((n, c, id));
                    }
                }
            }
        }
        claims.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut ids: Vec<Option<usize>> = vec![None; k];
        let mut taken = BTreeSet::new();
        for (_, c, id) in claims {
            if ids[c].is_none() && taken.insert(id) {
                ids[c] = Some(id);
            }
        }
        ids.into_iter()
            .map(|id| {
                id.unwrap_or_else(|| {
                    self.next_identity += 1;
                    self.next_identity - 1
                })
            })
            .collect()
    }

    /// Carries thresholds of persisting identities forward with the dynamic update rule;
    /// new identities keep their fresh `mean + std` threshold.
    fn apply_thresholds(&mut self, t: usize, ids: &[usize], stats: &mut [ClusterStats]) -> Result<()> {
        for (k, s) in stats.iter_mut().enumerate() {
            let id = ids[k];
            let label = self.label_of(id);
            let before = self.memory.get(&id).copied();
            let mut tau_before = None;
            if let (Some((tau, mu)), true) = (before, s.len() > 1) {
                let tau_after = self.trace.record(t, k, &label, tau, self.cfg.eta, mu, s.mean_dispersion)?;
                s.set_threshold(tau_after);
                tau_before = Some(tau);
            }
            s.uncertain = flag_uncertain(s, self.cfg.rho).0;
            if !s.is_empty() {
                self.memory.insert(id, (s.threshold, s.mean_dispersion));
            }
            self.report.thresholds.push(ThresholdRecord {
                task: t,
                cluster: k,
                label,
                tau_before,
                tau_after: s.threshold,
                mean_disp: s.mean_dispersion,
                std_disp: s.std_dispersion,
                flagged_fraction: s.flagged_fraction(),
                uncertain: s.uncertain,
            });
        }
        Ok(())
    }

    /// Token for a scheduled cluster: the identity's existing token, or a new one from
    /// the labeler (sidecar) or the candidate list.
    fn token_for(&mut self, id: usize, k: usize, stats: &mut [ClusterStats], latents: &LatentBatch) -> Result<String> {
        if let Some(l) = self.labels.get(id) {
            return Ok(l.token.clone());
        }
        let bw = (self.cfg.kde_bandwidth > 0.0).then_some(self.cfg.kde_bandwidth);
        locate_representatives(&mut stats[k], latents, self.cfg.representatives.saturating_sub(1), bw, self.cfg.kde_cap)?;
        let images = self.pool.images();
        let reps: Vec<ImageTensor> = stats[k].representatives.iter().map(|&i| images[i].clone()).collect();
        let labeler: Option<&dyn Labeler> = self.vlm.as_ref().map(|v| v.client() as &dyn Labeler);
        let mut label = label_cluster(&reps, &self.candidates, labeler, id)?;
        if label.method == LabelMethod::Vlm && self.labels.find_token(&label.token).is_some() {
            label.token = format!("{}_{id}", label.token);
        }
        let token = label.token.clone();
        self.labels.insert(id, label);
        Ok(token)
    }
}

/// Loads the configured dataset and runs every task.
pub fn run_pipeline(cfg: &RunConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    Pipeline::new(cfg.clone(), &ds)?.run()
}

/// One run per samples-per-cluster value with a shared seed. Output directories, when
/// configured, get a `sweep_<n>` suffix.
pub fn run_sweep(cfg: &RunConfig, samples: &[usize]) -> Result<SweepReport> {
    if samples.is_empty() {
        return Err(R2rError::Empty("sweep values".into()));
    }
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let mut rows = Vec::with_capacity(samples.len());
    for &n in samples {
        let mut c = cfg.clone();
        c.samples_per_cluster = n;
        if !cfg.out_dir.is_empty() {
            c.out_dir = Path::new(&cfg.out_dir).join(format!("sweep_{n}")).to_string_lossy().into_owned();
        }
        let report = Pipeline::new(c, &ds)?.run()?;
        tracing::info!(samples_per_cluster = n, final_accuracy = report.final_accuracy, "sweep point");
        rows.push(SweepRow {
            samples_per_cluster: n,
            final_accuracy: report.final_accuracy,
            mean_accuracy: report.mean_accuracy,
            replay_samples_total: report.replay_samples_total,
        });
    }
    let sweep = SweepReport { seed: cfg.seed, rows };
    if !cfg.out_dir.is_empty() {
        std::fs::create_dir_all(&cfg.out_dir)?;
        std::fs::write(Path::new(&cfg.out_dir).join("sweep.json"), serde_json::to_vec_pretty(&sweep)?)?;
        std::fs::write(Path::new(&cfg.out_dir).join("sweep.csv"), sweep.to_csv())?;
    }
    Ok(sweep)
}
