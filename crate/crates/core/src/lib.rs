//! Wetland extraction from scanned historical maps.
//!
//! The crate is `no_std` (with `alloc`) and IO-free. It holds the whole
//! numerical pipeline:
//!
//! * [`tensor`]: 4-axis grids and hand-written forward/backward layers
//! * [`model`]: the fixed 7-layer fully-convolutional network and its checkpoint codec
//! * [`optim`]: Adam and the training loop with best-validation model selection
//! * [`geo`]: georeferenced rasters, polygon rasterization, tiling and stitching
//! * [`folds`]: the 3×3-grid spatial cross-validation partition
//! * [`metrics`]: confusion counts, precision/recall/F1 and agreement maps
//! * [`postproc`]: thresholding, connected components, vectorization and area filtering
//! * [`synth`]: a deterministic generator of synthetic hatched-wetland maps
//!
//! File formats and the command line live in the `wetmap` crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod folds;
pub mod geo;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod postproc;
mod seed;
pub mod synth;
pub mod tensor;

pub use seed::derive_seed;
