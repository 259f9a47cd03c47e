use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BackendId, ReplayBatch, ReplaySample};
use crate::data::png::encode_png;
use crate::error::{R2rError, Result};
use crate::tensor::{ImageTensor, Shape3};

/// Images the autoencoder trains on: the current task's real images plus every
/// synthetic sample reintegrated so far, partitioned by pseudo-label.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPool {
    shape: Shape3,
    real: Vec<ImageTensor>,
    synthetic: BTreeMap<String, Vec<ReplaySample>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolCounts {
    pub real: usize,
    pub synthetic: usize,
    pub per_label: BTreeMap<String, usize>,
}

impl TrainingPool {
    pub fn new(shape: Shape3) -> Self {
        TrainingPool {
            shape,
            real: Vec::new(),
            synthetic: BTreeMap::new(),
        }
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    /// Replaces the real partition (previous tasks' real data is not retained).
    pub fn set_real(&mut self, images: Vec<ImageTensor>) -> Result<()> {
        if let Some(bad) = images.iter().find(|i| i.shape() != self.shape) {
            return Err(R2rError::shape(self.shape, bad.shape()));
        }
        self.real = images;
        Ok(())
    }

    pub fn real(&self) -> &[ImageTensor] {
        &self.real
    }

    pub fn partition(&self, label: &str) -> &[ReplaySample] {
        self.synthetic.get(label).map_or(&[], Vec::as_slice)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.synthetic.keys().map(String::as_str)
    }

    pub fn real_len(&self) -> usize {
        self.real.len()
    }

    pub fn synthetic_len(&self) -> usize {
        self.synthetic.values().map(Vec::len).sum()
    }

    pub fn len(&self) -> usize {
        self.real_len() + self.synthetic_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Synthetic samples in pool order (by label, then insertion).
    pub fn synthetic_samples(&self) -> impl Iterator<Item = &ReplaySample> {
        self.synthetic.values().flatten()
    }

    /// Real images followed by synthetic ones, in [`Self::synthetic_samples`] order.
    pub fn images(&self) -> Vec<&ImageTensor> {
        self.real
            .iter()
            .chain(self.synthetic_samples().map(|s| &s.image))
            .collect()
    }

    pub fn counts(&self) -> PoolCounts {
        PoolCounts {
            real: self.real_len(),
            synthetic: self.synthetic_len(),
            per_label: self.synthetic.iter().map(|(k, v)| (k.clone(), v.len())).collect(),
        }
    }
}

/// Appends a validated batch to the pool. Returns the number of samples added.
pub fn reintegrate(batch: ReplayBatch, pool: &mut TrainingPool) -> Result<usize> {
    batch.validate(pool.shape)?;
    let n = batch.len();
    for s in batch.samples {
        pool.synthetic.entry(s.label.clone()).or_default().push(s);
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub file: String,
    pub label: String,
    pub cluster: usize,
    pub backend: BackendId,
    pub task: usize,
    pub seed: Option<u64>,
}

/// On-disk mirror of the synthetic partitions: `<root>/<label>/<seq>.png` plus
/// `<root>/manifest.json`.
#[derive(Debug)]
pub struct SyntheticStore {
    root: PathBuf,
    entries: Vec<StoreEntry>,
    next: BTreeMap<String, usize>,
}

fn dir_name(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

impl SyntheticStore {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(SyntheticStore {
            root,
            entries: Vec::new(),
            next: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    pub fn append(&mut self, batch: &ReplayBatch) -> Result<()> {
        for s in &batch.samples {
            let dir = dir_name(&s.label);
            let seq = self.next.entry(dir.clone()).or_insert(0);
            let file = format!("{dir}/{seq:06}.png");
            *seq += 1;
            std::fs::create_dir_all(self.root.join(&dir))?;
            std::fs::write(self.root.join(&file), encode_png(&s.image)?)?;
            self.entries.push(StoreEntry {
                file,
                label: s.label.clone(),
                cluster: s.cluster,
                backend: s.backend,
                task: s.task,
                seed: batch.seed,
            });
        }
        self.flush()
    }

    pub fn flush(&self) -> Result<()> {
        std::fs::write(self.root.join("manifest.json"), serde_json::to_vec_pretty(&self.entries)?)?;
        Ok(())
    }
}
