//! CIFAR binary batch files.
//!
//! CIFAR-10 records are 3073 bytes: one label byte followed by 1024 red, 1024 green
//! and 1024 blue pixel bytes of a 32x32 image. CIFAR-100 records carry a coarse and a
//! fine label byte before the pixels; the fine label is used.

use std::path::Path;

use super::Dataset;
use crate::error::{R2rError, Result};
use crate::tensor::{ImageTensor, Shape3};

pub const SHAPE: Shape3 = Shape3::new(3, 32, 32);
const PIXELS: usize = 3 * 32 * 32;

pub const CIFAR10_CLASSES: [&str; 10] = [
    "airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Cifar10,
    Cifar100,
}

impl Variant {
    fn label_bytes(self) -> usize {
        match self {
            Variant::Cifar10 => 1,
            Variant::Cifar100 => 2,
        }
    }
}

/// Parses records from an in-memory batch file.
pub fn parse_records(bytes: &[u8], variant: Variant) -> Result<(Vec<ImageTensor>, Vec<usize>)> {
    let record = variant.label_bytes() + PIXELS;
    if bytes.is_empty() {
        return Err(R2rError::Format {
            offset: 0,
            reason: "empty batch file".into(),
        });
    }
    if !bytes.len().is_multiple_of(record) {
        let offset = bytes.len() / record * record;
        return Err(R2rError::Format {
            offset,
            reason: format!("truncated record: {} of {record} bytes", bytes.len() - offset),
        });
    }
    let mut images = Vec::with_capacity(bytes.len() / record);
    let mut labels = Vec::with_capacity(bytes.len() / record);
    for chunk in bytes.chunks_exact(record) {
        labels.push(chunk[variant.label_bytes() - 1] as usize);
        let data = chunk[variant.label_bytes()..]
            .iter()
            .map(|&b| b as f64 / 255.0)
            .collect();
        images.push(ImageTensor::new(SHAPE, data)?);
    }
    Ok((images, labels))
}

pub fn load_batch_file(path: &Path, variant: Variant) -> Result<(Vec<ImageTensor>, Vec<usize>)> {
    parse_records(&std::fs::read(path)?, variant)
}

/// Loads a CIFAR-10 binary directory (`data_batch_{1..5}.bin` and `test_batch.bin`).
/// A single batch file is also accepted; its records all become training data.
pub fn load_cifar_binary(path: &Path) -> Result<Dataset> {
    let names: Vec<String> = CIFAR10_CLASSES.iter().map(|s| s.to_string()).collect();
    if path.is_file() {
        let (images, labels) = load_batch_file(path, Variant::Cifar10)?;
        let n = images.len();
        return Dataset::new("cifar10", images, labels, names, (0..n).collect(), vec![]);
    }
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for b in 1..=5 {
        let p = path.join(format!("data_batch_{b}.bin"));
        if p.exists() {
            let (i, l) = load_batch_file(&p, Variant::Cifar10)?;
            images.extend(i);
            labels.extend(l);
        }
    }
    if images.is_empty() {
        return Err(R2rError::Format {
            offset: 0,
            reason: format!("no data_batch_*.bin under {}", path.display()),
        });
    }
    let n_train = images.len();
    let test_path = path.join("test_batch.bin");
    if test_path.exists() {
        let (i, l) = load_batch_file(&test_path, Variant::Cifar10)?;
        images.extend(i);
        labels.extend(l);
    }
    let n = images.len();
    Dataset::new("cifar10", images, labels, names, (0..n_train).collect(), (n_train..n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: u8, fill: impl Fn(usize) -> u8) -> Vec<u8> {
        let mut r = vec![label];
        r.extend((0..PIXELS).map(fill));
        r
    }

    #[test]
    fn parses_two_records() {
        let mut bytes = record(3, |_| 0);
        bytes.extend(record(9, |i| if i == 0 { 255 } else if i == 1024 { 51 } else { 0 }));
        let (images, labels) = parse_records(&bytes, Variant::Cifar10).unwrap();
        assert_eq!(labels, vec![3, 9]);
        assert_eq!(images[1].shape(), SHAPE);
        assert_eq!(images[1].get(0, 0, 0), 1.0);
        assert_eq!(images[1].get(1, 0, 0), 0.2);
        assert_eq!(images[0].mean(), 0.0);
    }

    #[test]
    fn empty_and_truncated_are_errors() {
        assert!(matches!(parse_records(&[], Variant::Cifar10), Err(R2rError::Format { offset: 0, .. })));
        let mut bytes = record(1, |_| 7);
        bytes.extend([2, 3, 4]);
        match parse_records(&bytes, Variant::Cifar10) {
            Err(R2rError::Format { offset, .. }) => assert_eq!(offset, 3073),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cifar100_uses_fine_label() {
        let mut bytes = vec![4u8, 77];
        bytes.extend(vec![0u8; PIXELS]);
        let (_, labels) = parse_records(&bytes, Variant::Cifar100).unwrap();
        assert_eq!(labels, vec![77]);
    }
}
