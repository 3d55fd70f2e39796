//! The fixed fully-convolutional network: architecture description,
//! initialization, forward/backward passes and the checkpoint codec.

mod checkpoint;
mod infer;
mod network;
mod spec;
mod weights;

use alloc::string::String;

pub use checkpoint::{Checkpoint, CheckpointError, TrainingMeta, FORMAT_VERSION, MAGIC};
pub use infer::predict_raster;
pub use network::{backward, forward, forward_trace, Gradients, Trace};
pub use spec::{
    default_netspec, halo_of, LayerSpec, NetSpec, DEFAULT_HIDDEN, DEFAULT_KERNELS, DEFAULT_LEAKY_SLOPE, INPUT_CHANNELS,
};
pub use weights::{init_weights, Weights};

use crate::geo::GeoError;
use crate::tensor::TensorError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("input {rows}x{cols} is smaller than the minimum {min}x{min}")]
    UndersizedInput { min: usize, rows: usize, cols: usize },
    #[error(transparent)]
    Shape(#[from] TensorError),
    #[error(transparent)]
    Geo(#[from] GeoError),
}
