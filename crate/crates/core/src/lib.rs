//! Single-image super-resolution network built from residual attention
//! feature groups, with a small reverse-mode autodiff engine, the BI/BD
//! degradation pipeline, Y-channel metrics and a deterministic trainer.

pub mod autodiff;
pub mod config;
pub mod data;
pub mod error;
pub mod gradsuite;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod ops;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{CheckpointError, Error, Result};
pub use model::{build_variant, count_params, HranModel, ModelConfig, Placement};
pub use rng::Rng;
pub use tensor::{DType, Scalar, Shape, Tensor4};
