use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{R2rError, Result};
use crate::tensor::{ImageTensor, Shape3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendId {
    Decoder,
    Vlm,
}

impl fmt::Display for BackendId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendId::Decoder => "decoder",
            BackendId::Vlm => "vlm",
        })
    }
}

/// A synthetic image with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySample {
    pub image: ImageTensor,
    pub label: String,
    pub cluster: usize,
    pub backend: BackendId,
    pub task: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayBatch {
    pub samples: Vec<ReplaySample>,
    /// Seed the batch was generated from, when the backend is seeded.
    pub seed: Option<u64>,
}

impl ReplayBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks shape, value range and provenance of every sample.
    pub fn validate(&self, shape: Shape3) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            if s.image.shape() != shape {
                return Err(R2rError::shape(shape, s.image.shape()));
            }
            if s.image.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(R2rError::invalid("replay", format!("sample {i} outside [0, 1]")));
            }
            if s.label.is_empty() {
                return Err(R2rError::invalid("replay", format!("sample {i} has an empty label")));
            }
        }
        Ok(())
    }
}
