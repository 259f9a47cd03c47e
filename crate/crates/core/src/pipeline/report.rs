//! Run reports: JSON, one CSV row per task, and latent dumps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::Result;
use crate::improve::Reevaluation;
use crate::tensor::LatentBatch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub task: usize,
    pub cluster: usize,
    pub label: String,
    pub tau_before: Option<f64>,
    pub tau_after: f64,
    pub mean_disp: f64,
    pub std_disp: f64,
    pub flagged_fraction: f64,
    pub uncertain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedCluster {
    pub task: usize,
    pub cluster: usize,
    pub label: String,
    pub mean_dispersion: f64,
    pub tau_uncertain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: usize,
    pub classes: Vec<usize>,
    pub k: usize,
    /// Cumulative accuracy over the test splits of tasks `1..=task`.
    pub accuracy: f64,
    pub test_samples: usize,
    /// Accuracy on each earlier task's test split under the same mapping.
    pub per_task_accuracy: Vec<f64>,
    pub silhouette_before: Option<f64>,
    pub silhouette_after: Option<f64>,
    pub silhouette_after_real: Option<f64>,
    pub autoencoder_loss: f64,
    pub scheduled: Vec<usize>,
    pub replay_samples: usize,
    pub replay_backend: BTreeMap<String, usize>,
    pub degraded: bool,
    pub real_pool: usize,
    pub synthetic_pool: usize,
    pub low_clusters: Vec<usize>,
    pub fine_tuned: Vec<usize>,
    pub fine_tune_samples: usize,
    pub fine_tune_loss: Vec<f64>,
    pub reevaluation: Vec<Reevaluation>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return MeanStd::default();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        MeanStd {
            mean,
            std: var.sqrt(),
            count: xs.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub config: RunConfig,
    pub tasks: Vec<TaskReport>,
    pub mean_accuracy: f64,
    pub final_accuracy: f64,
    pub threshold_summary: MeanStd,
    pub thresholds: Vec<ThresholdRecord>,
    pub generation_calls: BTreeMap<String, usize>,
    pub replay_samples_total: usize,
    pub flagged_for_analysis: Vec<FlaggedCluster>,
    pub completed: bool,
    pub error: Option<String>,
    pub runtime_seconds: f64,
}

impl EvalReport {
    pub fn new(config: RunConfig) -> Self {
        EvalReport {
            seed: config.seed,
            config,
            tasks: Vec::new(),
            mean_accuracy: 0.0,
            final_accuracy: 0.0,
            threshold_summary: MeanStd::default(),
            thresholds: Vec::new(),
            generation_calls: BTreeMap::new(),
            replay_samples_total: 0,
            flagged_for_analysis: Vec::new(),
            completed: false,
            error: None,
            runtime_seconds: 0.0,
        }
    }

    /// Recomputes the derived summary fields from `tasks` and `thresholds`.
    pub fn summarize(&mut self) {
        let accs: Vec<f64> = self.tasks.iter().map(|t| t.accuracy).collect();
        self.mean_accuracy = MeanStd::of(&accs).mean;
        self.final_accuracy = accs.last().copied().unwrap_or(0.0);
        let taus: Vec<f64> = self.thresholds.iter().map(|r| r.tau_after).collect();
        self.threshold_summary = MeanStd::of(&taus);
        self.replay_samples_total = self.tasks.iter().map(|t| t.replay_samples).sum();
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the runtime zeroed, for run-to-run comparison.
    pub fn to_json_without_runtime(&self) -> Result<String> {
        let mut r = self.clone();
        r.runtime_seconds = 0.0;
        r.to_json()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "task,accuracy,test_samples,k,silhouette_before,silhouette_after,scheduled,replay_samples,real_pool,synthetic_pool,fine_tuned,degraded\n",
        );
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        for t in &self.tasks {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                t.task,
                t.accuracy,
                t.test_samples,
                t.k,
                opt(t.silhouette_before),
                opt(t.silhouette_after),
                t.scheduled.len(),
                t.replay_samples,
                t.real_pool,
                t.synthetic_pool,
                t.fine_tuned.len(),
                t.degraded
            );
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(dir.join("report.json"))?)
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "replay={:?} seed={} tasks={} completed={}",
            self.config.replay,
            self.seed,
            self.tasks.len(),
            self.completed
        );
        for t in &self.tasks {
            let _ = writeln!(
                s,
                "task {}: acc={:.4} sil_before={} sil_after={} replayed={} synthetic_pool={}",
                t.task,
                t.accuracy,
                t.silhouette_before.map_or("-".into(), |v| format!("{v:.3}")),
                t.silhouette_after.map_or("-".into(), |v| format!("{v:.3}")),
                t.replay_samples,
                t.synthetic_pool
            );
        }
        let _ = writeln!(
            s,
            "mean_accuracy={:.4} final_accuracy={:.4} tau={:.4}±{:.4} flagged_for_analysis={}",
            self.mean_accuracy,
            self.final_accuracy,
            self.threshold_summary.mean,
            self.threshold_summary.std,
            self.flagged_for_analysis.len()
        );
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error: {e}");
        }
        s
    }
}

/// `sample,cluster,z0,...` rows.
pub fn write_latents_csv(path: &Path, latents: &LatentBatch, clusters: &[usize]) -> Result<()> {
    let mut out = String::from("sample,cluster");
    for j in 0..latents.dim() {
        let _ = write!(out, ",z{j}");
    }
    out.push('\n');
    for (i, (row, c)) in latents.rows().zip(clusters).enumerate() {
        let _ = write!(out, "{i},{c}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One row of a sampling-quantity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub samples_per_cluster: usize,
    pub final_accuracy: f64,
    pub mean_accuracy: f64,
    pub replay_samples_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("samples_per_cluster,final_accuracy,mean_accuracy,replay_samples_total\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.samples_per_cluster, r.final_accuracy, r.mean_accuracy, r.replay_samples_total
            );
        }
        out
    }
}
