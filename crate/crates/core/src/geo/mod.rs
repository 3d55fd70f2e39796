//! Georeferenced rasters, polygon rasterization, and the tiling scheme that
//! cuts a map into fixed-size cores with a context frame and stitches the
//! per-core predictions back together.

mod corpus;
mod raster;
mod rasterize;
mod tiling;
mod transform;

use alloc::string::String;

pub use corpus::{build_corpus, Tile};
pub use raster::{GeoRaster, LabelRaster, Mask, RasterKind};
pub use rasterize::rasterize_polygons;
pub use tiling::{extract_window, plan_tiles, stitch, TilePlan, TilePrediction, CORE_SIZE};
pub use transform::{BBox, GeoTransform};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeoError {
    #[error("unsupported rotation: world-file rotation terms must be 0")]
    UnsupportedRotation,
    #[error("invalid geotransform: {0}")]
    InvalidTransform(String),
    #[error("feature {feature}: ring {ring} has fewer than 3 distinct vertices")]
    DegenerateRing { feature: usize, ring: usize },
    #[error("no prediction for the core at ({row}, {col})")]
    MissingCore { row: usize, col: usize },
    #[error("{0}")]
    Format(String),
}
