//! Adam and the training loop: shuffled mini-batches, train-mode dropout,
//! per-epoch validation loss and best-validation checkpoint selection.

mod adam;
mod split;
mod train;

use alloc::string::String;

pub use adam::{adam_step, AdamParams, AdamState};
pub use split::split_validation;
pub use train::{train, validation_loss, EpochStats, TrainConfig, TrainOutcome};

use crate::model::ModelError;

fn batch_label(batch: &Option<usize>) -> String {
    match batch {
        Some(b) => alloc::format!("batch {b}"),
        None => String::from("validation"),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("need at least 2 tiles to split off a validation set, got {0}")]
    TooFewTiles(usize),
    #[error("divergence: non-finite gradient in layer {layer} {tensor}")]
    NonFiniteGradient { layer: usize, tensor: &'static str },
    #[error("divergence at epoch {epoch}, {}: {detail}", batch_label(.batch))]
    Divergence {
        epoch: usize,
        batch: Option<usize>,
        detail: String,
    },
    #[error("tile {index}: {msg}")]
    TileShape { index: usize, msg: String },
    #[error("no valid labeled pixels in the {0} set")]
    EmptySupport(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}
