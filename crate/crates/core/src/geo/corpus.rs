use alloc::format;
use alloc::vec::Vec;

use super::{extract_window, GeoError, GeoRaster, LabelRaster, TilePlan};
use crate::folds::{assign_fold, FoldSpec};
use crate::tensor::Grid4;

/// One training/evaluation sample: an input window, its label core and the
/// spatial fold the core's center falls in.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub origin: (usize, usize),
    pub core: (usize, usize),
    pub margin: usize,
    /// `1 × C × (core + 2·(halo+margin))²`, values in `[0, 1]`.
    pub image: Grid4<f32>,
    /// `1 × 1 × (core + 2·margin)²`; zero outside the core.
    pub label: Grid4<f32>,
    /// Loss weights matching `label`: 1 on valid core pixels, 0 elsewhere.
    pub valid: Grid4<f32>,
    /// Core pixels this tile owns in the stitched raster (row-major over the core).
    pub owned: Vec<bool>,
    pub fold: usize,
}

impl Tile {
    /// Iterate `(label, pixel counts for evaluation)` over owned valid core pixels,
    /// paired with the matching values of a core-sized prediction.
    pub fn eval_pixels<'a>(&'a self, core_pred: &'a Grid4<f32>) -> impl Iterator<Item = (f32, bool)> + 'a {
        let (h, w) = self.core;
        let m = self.margin;
        (0..h)
            .flat_map(move |y| (0..w).map(move |x| (y, x)))
            .filter_map(move |(y, x)| {
                let owned = self.owned[y * w + x];
                let valid = self.valid[[0, 0, y + m, x + m]] != 0.0;
                (owned && valid).then(|| (core_pred[[0, 0, y, x]], self.label[[0, 0, y + m, x + m]] != 0.0))
            })
    }
}

/// Cut a raster and its labels into tiles per `plan`, tagging each tile with
/// the fold containing its core center.
pub fn build_corpus(
    raster: &GeoRaster,
    labels: &LabelRaster,
    plan: &TilePlan,
    folds: &FoldSpec,
) -> Result<Vec<Tile>, GeoError> {
    if labels.rows() != raster.rows() || labels.cols() != raster.cols() {
        return Err(GeoError::Format(format!(
            "labels {}x{} do not match raster {}x{}",
            labels.rows(),
            labels.cols(),
            raster.rows(),
            raster.cols()
        )));
    }
    if plan.rows != raster.rows() || plan.cols != raster.cols() {
        return Err(GeoError::Format(alloc::string::String::from(
            "tile plan does not match raster size",
        )));
    }
    let (ch, cw) = (plan.core_rows, plan.core_cols);
    let m = plan.margin;
    let mut tiles = Vec::with_capacity(plan.len());
    for (index, origin) in plan.origins().enumerate() {
        let image = extract_window(raster, origin, (ch, cw), plan.pad());
        let dims = [1, 1, ch + 2 * m, cw + 2 * m];
        let mut label = Grid4::zeros(dims).expect("non-empty");
        let mut valid = Grid4::zeros(dims).expect("non-empty");
        let mut owned = Vec::with_capacity(ch * cw);
        for y in 0..ch {
            for x in 0..cw {
                let (r, c) = (origin.0 + y, origin.1 + x);
                if labels.valid.get(r, c) {
                    valid[[0, 0, y + m, x + m]] = 1.0;
                    if labels.label.get(r, c) {
                        label[[0, 0, y + m, x + m]] = 1.0;
                    }
                }
                owned.push(plan.owner(r, c) == index);
            }
        }
        let center_row = origin.0 as f64 + ch as f64 / 2.0 - 0.5;
        let center_col = origin.1 as f64 + cw as f64 / 2.0 - 0.5;
        let (x, y) = raster.transform.pixel_to_crs(center_row, center_col);
        let fold = assign_fold(folds, x, y).map_err(|e| GeoError::Format(format!("tile {origin:?}: {e}")))?;
        tiles.push(Tile {
            origin,
            core: (ch, cw),
            margin: m,
            image,
            label,
            valid,
            owned,
            fold,
        });
    }
    Ok(tiles)
}
