//! Convolutional autoencoder trained from scratch.

mod arch;
mod autoencoder;
pub mod checkpoint;
pub mod layers;
mod train;

pub use arch::{Activation, Architecture, Layer, LayerKind, Layout};
pub use autoencoder::{decode, encode, AutoencoderParams};
pub use train::{
    gradient_check, loss_and_gradient, reconstruction_loss, train_autoencoder, train_in_place,
    Adam, TrainConfig,
};
