//! Dense array math with hand-written forward and backward passes for the
//! layer types of the segmentation network: valid 2-D convolution, leaky
//! ReLU, inverted dropout, sigmoid and masked binary cross-entropy.
//!
//! Every operation is a pure function of its inputs. Dropout takes its
//! seed explicitly.

mod activation;
mod conv;
mod dropout;
mod gradcheck;
mod grid;
mod loss;

use alloc::string::String;

pub use activation::{leaky_relu, leaky_relu_backward, sigmoid, sigmoid_backward};
pub(crate) use conv::conv2d_backward_parts;
pub use conv::{conv2d_backward, conv2d_valid, ConvGrads, ConvKernel};
pub use dropout::{dropout, dropout_backward, DropoutMask, Mode};
pub use gradcheck::{grad_check, grad_check_piecewise, GradCheckOptions, GradReport, MAX_HALVINGS};
pub use grid::{Grid4, Real};
pub use loss::{bce_loss, BCE_EPSILON};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("{op}: shape error: {msg}")]
    Shape { op: &'static str, msg: String },
    #[error("empty loss support: no valid pixels")]
    EmptyLossSupport,
}
