//! Unsupervised class-incremental continual learning with uncertainty-driven
//! generative replay.
//!
//! Per task, the pipeline trains a convolutional autoencoder on unlabeled images,
//! clusters latents with a Gaussian mixture, flags dispersed clusters, replays
//! synthetic samples for them, fine-tunes on synthetic data only, and finally
//! evaluates against held-out labels on the cumulative test split.

// `!(x >= 0.0)` style checks are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Kernel and update functions take their operands explicitly.
#![allow(clippy::too_many_arguments)]

pub mod data;
pub mod error;
pub mod eval;
pub mod gmm;
pub mod improve;
pub mod nn;
pub mod pipeline;
pub mod replay;
pub mod seed;
pub mod silhouette;
pub mod stream;
pub mod tensor;
pub mod udfm;

pub use data::Dataset;
pub use error::{R2rError, Result};
pub use gmm::{Assignment, MixtureModel};
pub use pipeline::{run_pipeline, EvalReport, RunConfig};
pub use nn::{Architecture, AutoencoderParams, TrainConfig};
pub use silhouette::silhouette;
pub use stream::{Task, TaskStream};
pub use tensor::{ImageTensor, LatentBatch, LatentVector, Shape3};
