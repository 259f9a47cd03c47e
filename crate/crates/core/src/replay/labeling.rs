use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{R2rError, Result};
use crate::tensor::ImageTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMethod {
    Vlm,
    Majority,
    Config,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabel {
    pub token: String,
    pub confidence: f64,
    pub method: LabelMethod,
}

/// Anything that can pick the best-matching candidate token for a set of images.
pub trait Labeler {
    /// Returns the chosen candidate and one score per candidate.
    fn label(&self, images: &[ImageTensor], candidates: &[String]) -> Result<(String, Vec<f64>)>;
}

/// Offline scorer: ranks candidates by how well the images' mean brightness matches a
/// brightness prior for the word. Ties go to the first candidate.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockScorer;

const DARK_WORDS: &[&str] = &["dark", "black", "zero", "zeros", "night", "shadow", "empty"];
const BRIGHT_WORDS: &[&str] = &["bright", "white", "light", "sun", "full", "snow"];

fn brightness_prior(word: &str) -> f64 {
    let w = word.to_ascii_lowercase();
    if DARK_WORDS.contains(&w.as_str()) {
        0.0
    } else if BRIGHT_WORDS.contains(&w.as_str()) {
        1.0
    } else {
        0.5
    }
}

impl Labeler for MockScorer {
    fn label(&self, images: &[ImageTensor], candidates: &[String]) -> Result<(String, Vec<f64>)> {
        if images.is_empty() || candidates.is_empty() {
            return Err(R2rError::Empty("images or candidates".into()));
        }
        let mean = images.iter().map(ImageTensor::mean).sum::<f64>() / images.len() as f64;
        let scores: Vec<f64> = candidates
            .iter()
            .map(|c| 1.0 - (mean - brightness_prior(c)).abs())
            .collect();
        let best = argmax_first(&scores);
        Ok((candidates[best].clone(), scores))
    }
}

fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Deterministic pseudo-token from the candidate list when no labeler is available.
pub fn config_token(candidates: &[String], cluster: usize) -> String {
    if candidates.is_empty() {
        format!("cluster_{cluster}")
    } else {
        format!("{}_{cluster}", candidates[cluster % candidates.len()])
    }
}

/// Names a cluster from its representatives. Without a labeler, or when the labeler
/// fails, falls back to [`config_token`] with zero confidence.
pub fn label_cluster(
    representatives: &[ImageTensor],
    candidates: &[String],
    labeler: Option<&dyn Labeler>,
    cluster: usize,
) -> Result<ClusterLabel> {
    if representatives.is_empty() {
        return Err(R2rError::Empty("representatives".into()));
    }
    if candidates.is_empty() {
        return Err(R2rError::Empty("candidate tokens".into()));
    }
    let fallback = || ClusterLabel {
        token: config_token(candidates, cluster),
        confidence: 0.0,
        method: LabelMethod::Config,
    };
    let Some(labeler) = labeler else {
        return Ok(fallback());
    };
    match labeler.label(representatives, candidates) {
        Ok((token, scores)) => match candidates.iter().position(|c| *c == token) {
            Some(i) => Ok(ClusterLabel {
                confidence: scores.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0),
                token,
                method: LabelMethod::Vlm,
            }),
            None => {
                tracing::warn!(cluster, token, "labeler returned a token outside the candidates");
                Ok(fallback())
            }
        },
        Err(e) => {
            tracing::warn!(cluster, error = %e, "labeling degraded to config tokens");
            Ok(fallback())
        }
    }
}

/// Cluster identity to label. Entries are only added or relabeled, never removed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabelMap {
    entries: BTreeMap<usize, ClusterLabel>,
}

impl ClusterLabelMap {
    pub fn get(&self, id: usize) -> Option<&ClusterLabel> {
        self.entries.get(&id)
    }

    pub fn insert(&mut self, id: usize, label: ClusterLabel) {
        self.entries.insert(id, label);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &ClusterLabel)> {
        self.entries.iter()
    }

    /// Identity currently holding `token`.
    pub fn find_token(&self, token: &str) -> Option<usize> {
        self.entries.iter().find(|(_, l)| l.token == token).map(|(id, _)| *id)
    }
}
