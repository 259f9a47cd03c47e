//! Dataset as a directory of PNGs: `<class>/<index>.png` plus `manifest.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::png::{decode_png, encode_png};
use super::{Dataset, LabelAccess};
use crate::error::{R2rError, Result};
use crate::tensor::Shape3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub shape: Shape3,
    pub classes: Vec<String>,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entry {
    pub file: String,
    pub label: usize,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

pub fn save_png_dir(ds: &Dataset, dir: &Path) -> Result<()> {
    let labels = ds.labels().reveal(&LabelAccess::grant("export"));
    let mut entries = Vec::with_capacity(ds.len());
    let splits = ds
        .train_indices()
        .iter()
        .map(|&i| (i, Split::Train))
        .chain(ds.test_indices().iter().map(|&i| (i, Split::Test)));
    for (i, split) in splits {
        let class = &ds.class_names()[labels[i]];
        let file = format!("{class}/{i:06}.png");
        std::fs::create_dir_all(dir.join(class))?;
        std::fs::write(dir.join(&file), encode_png(ds.image(i))?)?;
        entries.push(Entry {
            file,
            label: labels[i],
            split,
        });
    }
    let manifest = Manifest {
        name: ds.name.clone(),
        shape: ds.shape(),
        classes: ds.class_names().to_vec(),
        entries,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_png_dir(dir: &Path) -> Result<Dataset> {
    let manifest: Manifest = serde_json::from_slice(&std::fs::read(dir.join("manifest.json"))?)?;
    if manifest.entries.is_empty() {
        return Err(R2rError::Empty(format!("{}/manifest.json", dir.display())));
    }
    let mut images = Vec::with_capacity(manifest.entries.len());
    let mut labels = Vec::with_capacity(manifest.entries.len());
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, e) in manifest.entries.iter().enumerate() {
        images.push(decode_png(&std::fs::read(dir.join(&e.file))?, manifest.shape)?);
        labels.push(e.label);
        match e.split {
            Split::Train => train.push(i),
            Split::Test => test.push(i),
        }
    }
    Dataset::new(manifest.name, images, labels, manifest.classes, train, test)
}
