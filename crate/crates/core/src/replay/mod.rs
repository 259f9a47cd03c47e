//! Generative replay: which clusters to replay, how to synthesize and label samples,
//! and how synthetic data re-enters the training pool.

mod batch;
mod decoder;
mod labeling;
mod pool;
mod schedule;
pub mod sidecar;

pub use batch::{BackendId, ReplayBatch, ReplaySample};
pub use decoder::{generate_decoder_replay, DecoderBackend};
pub use labeling::{
    config_token, label_cluster, ClusterLabel, ClusterLabelMap, LabelMethod, Labeler, MockScorer,
};
pub use pool::{reintegrate, PoolCounts, StoreEntry, SyntheticStore, TrainingPool};
pub use schedule::schedule_replay;
pub use sidecar::{generate_vlm_replay, SidecarClient, VlmBackend};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub generate: bool,
    pub label: bool,
}

/// What to synthesize for one scheduled cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateRequest {
    pub cluster: usize,
    pub label: String,
    pub count: usize,
    pub seed: u64,
    pub task: usize,
}

pub trait ReplayBackend {
    fn id(&self) -> BackendId;

    fn capabilities(&self) -> Capabilities;

    /// Returns exactly `req.count` samples, or an error.
    fn generate(&mut self, req: &GenerateRequest) -> Result<ReplayBatch>;

    /// Number of `generate` calls served so far.
    fn calls(&self) -> usize;
}
