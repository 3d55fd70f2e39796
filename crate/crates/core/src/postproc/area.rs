use alloc::format;
use alloc::string::String;

use super::{PostprocError, VectorLayer};

pub const DEFAULT_MIN_AREA_M2: f64 = 1000.0;

/// Drop features smaller than `min_area`; a feature of exactly `min_area` is kept.
pub fn filter_min_area(layer: &VectorLayer, min_area: f64) -> VectorLayer {
    VectorLayer {
        crs: layer.crs.clone(),
        features: layer
            .features
            .iter()
            .filter(|f| !(f.area_m2 < min_area))
            .cloned()
            .collect(),
        valid_extent: layer.valid_extent,
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AreaReport {
    pub total_m2: f64,
    pub reference_m2: f64,
    pub feature_count: usize,
    pub smallest_m2: Option<f64>,
    pub largest_m2: Option<f64>,
    /// `(total - reference) / reference`.
    pub relative_difference: f64,
}

impl AreaReport {
    /// Relative difference as a signed percentage with one decimal, e.g. `+0.3%`.
    pub fn percent_display(&self) -> String {
        format!("{:+.1}%", self.relative_difference * 100.0)
    }
}

pub fn area_report(layer: &VectorLayer, reference_total: f64) -> Result<AreaReport, PostprocError> {
    if !(reference_total > 0.0) {
        return Err(PostprocError::NonPositiveReference(reference_total));
    }
    let total = layer.total_area();
    let areas = || layer.features.iter().map(|f| f.area_m2);
    Ok(AreaReport {
        total_m2: total,
        reference_m2: reference_total,
        feature_count: layer.features.len(),
        smallest_m2: areas().reduce(f64::min),
        largest_m2: areas().reduce(f64::max),
        relative_difference: (total - reference_total) / reference_total,
    })
}
