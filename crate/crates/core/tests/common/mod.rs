//! Shared fixtures: a small planted toy stream and an autoencoder trained on it.

#![allow(dead_code)]

use r2r_core::data::toy::{make_toy_stream_with, ToyConfig};
use r2r_core::nn::train_autoencoder;
use r2r_core::pipeline::encode_all;
use r2r_core::{Architecture, AutoencoderParams, Dataset, ImageTensor, LatentBatch, Shape3, TrainConfig};

pub const SHAPE: Shape3 = Shape3 { channels: 1, height: 8, width: 8 };

pub fn toy(classes: usize, per_class: usize, noise: f64) -> Dataset {
    make_toy_stream_with(&ToyConfig {
        classes,
        per_class,
        shape: SHAPE,
        seed: 11,
        noise,
        ..ToyConfig::default()
    })
    .unwrap()
}

/// Images of class `c` in the class-major toy layout.
pub fn class_images(ds: &Dataset, per_class: usize, c: usize) -> Vec<ImageTensor> {
    ds.images()[c * per_class..(c + 1) * per_class].to_vec()
}

pub fn arch(latent_dim: usize) -> Architecture {
    Architecture { input: SHAPE, channels: vec![4, 8], kernel: 3, stride: 2, latent_dim }
}

pub fn trained(images: &[ImageTensor], latent_dim: usize, epochs: usize) -> AutoencoderParams {
    let cfg = TrainConfig { epochs, learning_rate: 3e-3, gamma: 1.0, ..TrainConfig::default() };
    train_autoencoder(images, &cfg, &arch(latent_dim), None).unwrap().0
}

pub fn encode(params: &AutoencoderParams, images: &[ImageTensor]) -> LatentBatch {
    encode_all(params, &images.iter().collect::<Vec<_>>()).unwrap()
}
