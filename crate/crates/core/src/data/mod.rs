//! Datasets: images plus sealed labels and a train/test split.

pub mod cifar;
mod labels;
pub mod png;
pub mod pngdir;
pub mod toy;

pub use labels::{LabelAccess, LabelVault};

use crate::error::{R2rError, Result};
use crate::tensor::{ImageTensor, Shape3};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    shape: Shape3,
    images: Vec<ImageTensor>,
    labels: LabelVault,
    class_names: Vec<String>,
    train: Vec<usize>,
    test: Vec<usize>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        images: Vec<ImageTensor>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        train: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Self> {
        let shape = images
            .first()
            .map(|i| i.shape())
            .ok_or_else(|| R2rError::Empty("dataset images".into()))?;
        if let Some(bad) = images.iter().find(|i| i.shape() != shape) {
            return Err(R2rError::shape(shape, bad.shape()));
        }
        if labels.len() != images.len() {
            return Err(R2rError::shape(images.len(), labels.len()));
        }
        if let Some(l) = labels.iter().find(|l| **l >= class_names.len()) {
            return Err(R2rError::invalid("labels", format!("label {l} without a class name")));
        }
        let mut seen = vec![false; images.len()];
        for &i in train.iter().chain(&test) {
            if i >= images.len() || std::mem::replace(&mut seen[i], true) {
                return Err(R2rError::invalid("split", format!("index {i} out of range or repeated")));
            }
        }
        Ok(Dataset {
            name: name.into(),
            shape,
            images,
            labels: LabelVault::new(labels),
            class_names,
            train,
            test,
        })
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, i: usize) -> &ImageTensor {
        &self.images[i]
    }

    pub fn images(&self) -> &[ImageTensor] {
        &self.images
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test
    }

    pub fn labels(&self) -> &LabelVault {
        &self.labels
    }

    /// Keeps at most `train_per_class` training and `test_per_class` test images per class,
    /// in original order.
    pub fn subset_per_class(&self, train_per_class: usize, test_per_class: usize) -> Result<Dataset> {
        let labels = self.labels.reveal(&LabelAccess::grant("subset")).to_vec();
        let pick = |split: &[usize], cap: usize| {
            let mut counts = vec![0usize; self.num_classes()];
            split
                .iter()
                .copied()
                .filter(|&i| {
                    let c = &mut counts[labels[i]];
                    *c += 1;
                    *c <= cap
                })
                .collect::<Vec<_>>()
        };
        let train = pick(&self.train, train_per_class);
        let test = pick(&self.test, test_per_class);
        let keep: Vec<usize> = train.iter().chain(&test).copied().collect();
        let images = keep.iter().map(|&i| self.images[i].clone()).collect();
        let new_labels = keep.iter().map(|&i| labels[i]).collect();
        Dataset::new(
            self.name.clone(),
            images,
            new_labels,
            self.class_names.clone(),
            (0..train.len()).collect(),
            (train.len()..keep.len()).collect(),
        )
    }
}
