//! File formats and the command line around `wetmap-core`: PNG rasters
//! with world files, GeoJSON polygon layers, checkpoint files, the JSON
//! run configuration and the reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod cli;
pub mod config;
mod error;
pub mod geojson;
pub mod raster_io;
pub mod report;

pub use error::{Error, Result};
