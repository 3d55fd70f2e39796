//! Turning a probability raster into a wetland polygon layer: threshold,
//! connected components, pixel-edge vectorization, the minimum-area filter
//! and area accounting.

mod area;
mod label;
mod layer;
mod trace;

pub use area::{area_report, filter_min_area, AreaReport, DEFAULT_MIN_AREA_M2};
pub use label::{connected_components, threshold, Components, Connectivity, DEFAULT_CUT};
pub use layer::{signed_area, Feature, Point, VectorLayer};
pub use trace::vectorize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PostprocError {
    #[error("reference area must be positive, got {0}")]
    NonPositiveReference(f64),
}
