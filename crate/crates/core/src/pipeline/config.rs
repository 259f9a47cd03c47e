//! Run configuration: a flat TOML key/value file with documented defaults.

use serde::{Deserialize, Serialize};

use crate::error::{R2rError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Toy,
    Cifar10,
    Pngdir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplayMode {
    None,
    Decoder,
    Vlm,
}

impl std::str::FromStr for ReplayMode {
    type Err = R2rError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ReplayMode::None),
            "decoder" => Ok(ReplayMode::Decoder),
            "vlm" => Ok(ReplayMode::Vlm),
            other => Err(R2rError::Config {
                field: "replay".into(),
                reason: format!("`{other}` is not one of none, decoder, vlm"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KPolicy {
    /// One component per class seen so far.
    ClassesSeen,
    /// Always `gmm_k` components.
    Fixed,
    /// BIC over `1..=2 * classes seen`.
    Bic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassOrder {
    Natural,
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetKind,
    pub data_path: String,
    pub toy_classes: usize,
    pub toy_per_class: usize,
    pub toy_size: usize,
    pub toy_channels: usize,
    pub toy_noise: f64,
    pub toy_brightness: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub tasks: usize,
    pub class_order: ClassOrder,

    pub latent_dim: usize,
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub stride: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub reinit_per_task: bool,

    pub k_policy: KPolicy,
    pub gmm_k: usize,
    pub gmm_restarts: usize,
    pub gmm_max_iter: usize,
    pub gmm_tol: f64,

    pub eta: f64,
    pub rho: f64,
    /// `0` selects Scott's rule.
    pub kde_bandwidth: f64,
    pub kde_cap: usize,
    pub representatives: usize,

    pub lambda1: f64,
    pub delta_sim: f64,
    /// Negative selects the mean of the per-cluster thresholds.
    pub tau_uncertain: f64,
    pub fine_tune_epochs: usize,
    pub fine_tune_lr_scale: f64,
    pub feedback_iterations: usize,

    pub replay: ReplayMode,
    pub samples_per_cluster: usize,
    /// Candidate class tokens; empty uses the dataset's class names.
    pub candidates: Vec<String>,
    pub sidecar_url: String,
    pub sidecar_timeout_ms: u64,

    pub seed: u64,
    pub out_dir: String,
    pub write_synthetic: bool,
    pub dump_latents: bool,
    pub silhouette_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetKind::Toy,
            data_path: String::new(),
            toy_classes: 10,
            toy_per_class: 200,
            toy_size: 16,
            toy_channels: 1,
            toy_noise: 0.1,
            toy_brightness: 0.05,
            train_per_class: 500,
            test_per_class: 100,
            tasks: 5,
            class_order: ClassOrder::Natural,
            latent_dim: 16,
            channels: vec![8, 16],
            kernel: 3,
            stride: 2,
            epochs: 20,
            learning_rate: 1e-3,
            gamma: 0.9,
            batch_size: 32,
            reinit_per_task: false,
            k_policy: KPolicy::ClassesSeen,
            gmm_k: 10,
            gmm_restarts: 3,
            gmm_max_iter: 200,
            gmm_tol: 1e-6,
            eta: 0.1,
            rho: 0.1,
            kde_bandwidth: 0.0,
            kde_cap: 500,
            representatives: 10,
            lambda1: 1.0,
            delta_sim: 0.9,
            tau_uncertain: -1.0,
            fine_tune_epochs: 10,
            fine_tune_lr_scale: 0.1,
            feedback_iterations: 1,
            replay: ReplayMode::Decoder,
            samples_per_cluster: 1000,
            candidates: Vec::new(),
            sidecar_url: "http://127.0.0.1:8765".into(),
            sidecar_timeout_ms: 5000,
            seed: 0,
            out_dir: String::new(),
            write_synthetic: true,
            dump_latents: true,
            silhouette_cap: 2000,
        }
    }
}

fn range(field: &str, ok: bool, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(R2rError::Config {
            field: field.into(),
            reason: reason.into(),
        })
    }
}

impl RunConfig {
    /// Every key the file format accepts, in declaration order.
    pub fn accepted_keys() -> Vec<String> {
        match toml::Value::try_from(RunConfig::default()) {
            Ok(toml::Value::Table(t)) => t.keys().cloned().collect(),
            _ => unreachable!("config serializes to a table"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        range("toy_classes", self.toy_classes >= 2, "must be >= 2")?;
        range("toy_per_class", self.toy_per_class >= 2, "must be >= 2")?;
        range("toy_size", self.toy_size >= 4, "must be >= 4")?;
        range("toy_channels", matches!(self.toy_channels, 1 | 3), "must be 1 or 3")?;
        range("toy_noise", self.toy_noise >= 0.0 && self.toy_noise.is_finite(), "must be >= 0")?;
        range("toy_brightness", (0.0..=1.0).contains(&self.toy_brightness), "must lie in [0, 1]")?;
        range("train_per_class", self.train_per_class >= 1, "must be >= 1")?;
        range("test_per_class", self.test_per_class >= 1, "must be >= 1")?;
        range("tasks", self.tasks >= 1, "must be >= 1")?;
        range(
            "data_path",
            self.dataset == DatasetKind::Toy || !self.data_path.is_empty(),
            "required for cifar10 and pngdir datasets",
        )?;
        range("latent_dim", self.latent_dim >= 1, "must be >= 1")?;
        range("channels", self.channels.iter().all(|&c| c >= 1), "entries must be >= 1")?;
        range("kernel", self.kernel >= 1, "must be >= 1")?;
        range("stride", self.stride >= 1, "must be >= 1")?;
        range("epochs", self.epochs >= 1, "must be >= 1")?;
        range("learning_rate", self.learning_rate > 0.0 && self.learning_rate.is_finite(), "must be > 0")?;
        range("gamma", self.gamma > 0.0 && self.gamma <= 1.0, "must lie in (0, 1]")?;
        range("batch_size", self.batch_size >= 1, "must be >= 1")?;
        range("gmm_k", self.gmm_k >= 1, "must be >= 1")?;
        range("gmm_restarts", self.gmm_restarts >= 1, "must be >= 1")?;
        range("gmm_max_iter", self.gmm_max_iter >= 1, "must be >= 1")?;
        range("gmm_tol", self.gmm_tol > 0.0, "must be > 0")?;
        range("eta", self.eta >= 0.0 && self.eta.is_finite(), "must be >= 0")?;
        range("rho", (0.0..1.0).contains(&self.rho), "must lie in [0, 1)")?;
        range("kde_bandwidth", self.kde_bandwidth >= 0.0 && self.kde_bandwidth.is_finite(), "must be >= 0")?;
        range("kde_cap", self.kde_cap >= 2, "must be >= 2")?;
        range("representatives", self.representatives >= 1, "must be >= 1")?;
        range("lambda1", self.lambda1 >= 0.0 && self.lambda1.is_finite(), "must be >= 0")?;
        range("delta_sim", self.delta_sim > -1.0 && self.delta_sim <= 1.0, "must lie in (-1, 1]")?;
        range(
            "tau_uncertain",
            self.tau_uncertain.is_finite() || self.tau_uncertain == f64::INFINITY,
            "must be a number",
        )?;
        range("fine_tune_epochs", self.fine_tune_epochs >= 1, "must be >= 1")?;
        range(
            "fine_tune_lr_scale",
            self.fine_tune_lr_scale > 0.0 && self.fine_tune_lr_scale.is_finite(),
            "must be > 0",
        )?;
        range("feedback_iterations", self.feedback_iterations <= 10, "must be <= 10")?;
        range("candidates", self.candidates.iter().all(|c| !c.is_empty()), "tokens must be non-empty")?;
        range("sidecar_timeout_ms", self.sidecar_timeout_ms >= 1, "must be >= 1")?;
        range("silhouette_cap", self.silhouette_cap >= 2, "must be >= 2")?;
        Ok(())
    }

    /// The configuration as TOML; parsing it back yields an identical config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// `tau_uncertain` as an explicit cutoff, or `None` for the per-run default.
    pub fn tau_uncertain_override(&self) -> Option<f64> {
        (self.tau_uncertain >= 0.0).then_some(self.tau_uncertain)
    }
}

/// Parses and validates a config file. Missing keys take their defaults.
pub fn validate_config(raw: &str) -> Result<RunConfig> {
    let table: toml::Table = raw.parse().map_err(|e: toml::de::Error| R2rError::Config {
        field: "<file>".into(),
        reason: e.message().to_string(),
    })?;
    let accepted = RunConfig::accepted_keys();
    if let Some(key) = table.keys().find(|k| !accepted.contains(k)) {
        return Err(R2rError::UnknownKey {
            key: key.clone(),
            accepted: accepted.join(", "),
        });
    }
    let mut cfg = RunConfig::default();
    for (key, value) in table {
        let mut one = toml::Table::new();
        one.insert(key.clone(), value);
        let parsed: RunConfig = toml::Value::Table(merge(&cfg, one)).try_into().map_err(|e: toml::de::Error| {
            R2rError::Config {
                field: key.clone(),
                reason: e.message().to_string(),
            }
        })?;
        cfg = parsed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn merge(base: &RunConfig, over: toml::Table) -> toml::Table {
    let mut t = match toml::Value::try_from(base) {
        Ok(toml::Value::Table(t)) => t,
        _ => unreachable!("config serializes to a table"),
    };
    t.extend(over);
    t
}
