//! Procedural toy stream: one base pattern per class plus pixel noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::error::{R2rError, Result};
use crate::tensor::{ImageTensor, Shape3};

pub const PATTERN_NAMES: [&str; 10] = [
    "zeros", "stripes", "columns", "checks", "ring", "cross", "gradient", "diagonal", "corner",
    "blob",
];

const LO: f64 = 0.1;
const HI: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub classes: usize,
    pub per_class: usize,
    pub shape: Shape3,
    pub seed: u64,
    /// Std of additive per-pixel Gaussian noise.
    pub noise: f64,
    /// Per-image brightness offset drawn uniformly from `[-brightness, brightness]`.
    pub brightness: f64,
    pub test_fraction: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            classes: 10,
            per_class: 200,
            shape: Shape3::new(1, 16, 16),
            seed: 0,
            noise: 0.1,
            brightness: 0.05,
            test_fraction: 0.2,
        }
    }
}

pub fn class_name(class: usize) -> String {
    let base = PATTERN_NAMES[class % PATTERN_NAMES.len()];
    match class / PATTERN_NAMES.len() {
        0 => base.to_string(),
        v => format!("{base}{v}"),
    }
}

/// Noise-free image for `class`.
pub fn base_pattern(class: usize, shape: Shape3) -> ImageTensor {
    let Shape3 { channels, height, width } = shape;
    let variant = class / PATTERN_NAMES.len();
    let mut data = Vec::with_capacity(shape.len());
    for ch in 0..channels {
        let tint = [1.0, 0.8, 0.6][(class + ch) % 3];
        for y in 0..height {
            for x in 0..width {
                let kind = class % PATTERN_NAMES.len();
                let mut p = pattern(kind, x, y, width, height);
                let blend = variant / 2;
                if blend > 0 {
                    let other = (kind + blend) % PATTERN_NAMES.len();
                    p = 0.5 * (p + pattern(other, x, y, width, height));
                }
                if variant % 2 == 1 {
                    p = 1.0 - p;
                }
                data.push(if channels == 1 { p } else { p * tint });
            }
        }
    }
    ImageTensor::new(shape, data).expect("pattern values are finite")
}

fn pattern(kind: usize, x: usize, y: usize, w: usize, h: usize) -> f64 {
    let u = if w > 1 { x as f64 / (w - 1) as f64 } else { 0.5 };
    let v = if h > 1 { y as f64 / (h - 1) as f64 } else { 0.5 };
    let r = ((u - 0.5).powi(2) + (v - 0.5).powi(2)).sqrt();
    let on = |b: bool| if b { HI } else { LO };
    match kind {
        0 => 0.05,
        1 => on((y / (h / 8).max(1)).is_multiple_of(2)),
        2 => on((x / (w / 8).max(1)).is_multiple_of(2)),
        3 => on((x / (w / 4).max(1) + y / (h / 4).max(1)).is_multiple_of(2)),
        4 => on((r - 0.35).abs() < 0.12),
        5 => on((u - 0.5).abs() < 0.15 || (v - 0.5).abs() < 0.15),
        6 => LO + (HI - LO) * u,
        7 => on((u - v).abs() < 0.2),
        8 => on(u < 0.5 && v < 0.5),
        _ => LO + (HI - LO) * (-r * r / 0.05).exp(),
    }
}

/// `classes` procedurally generated classes of `per_class` images each, with default noise.
pub fn make_toy_stream(classes: usize, per_class: usize, shape: Shape3, seed: u64) -> Result<Dataset> {
    make_toy_stream_with(&ToyConfig {
        classes,
        per_class,
        shape,
        seed,
        ..ToyConfig::default()
    })
}

pub fn make_toy_stream_with(cfg: &ToyConfig) -> Result<Dataset> {
    if cfg.classes < 2 {
        return Err(R2rError::invalid("classes", "need at least 2 classes"));
    }
    if cfg.per_class == 0 || cfg.shape.is_empty() {
        return Err(R2rError::Empty("toy stream".into()));
    }
    if !(cfg.noise >= 0.0 && cfg.brightness >= 0.0) {
        return Err(R2rError::invalid("noise", "must be non-negative"));
    }
    if !(0.0..1.0).contains(&cfg.test_fraction) {
        return Err(R2rError::invalid("test_fraction", "must lie in [0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.noise.max(f64::MIN_POSITIVE)).unwrap();
    let n_test = (cfg.per_class as f64 * cfg.test_fraction).round() as usize;
    let mut images = Vec::with_capacity(cfg.classes * cfg.per_class);
    let mut labels = Vec::with_capacity(images.capacity());
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in 0..cfg.classes {
        let base = base_pattern(class, cfg.shape);
        for j in 0..cfg.per_class {
            let offset = if cfg.brightness > 0.0 {
                rng.random_range(-cfg.brightness..=cfg.brightness)
            } else {
                0.0
            };
            let data = base
                .data()
                .iter()
                .map(|&p| {
                    let n = if cfg.noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
                    (p + offset + n).clamp(0.0, 1.0)
                })
                .collect();
            let idx = images.len();
            images.push(ImageTensor::new(cfg.shape, data)?);
            labels.push(class);
            if j < cfg.per_class - n_test {
                train.push(idx);
            } else {
                test.push(idx);
            }
        }
    }
    let names = (0..cfg.classes).map(class_name).collect();
    Dataset::new("toy", images, labels, names, train, test)
}
