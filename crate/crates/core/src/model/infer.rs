use alloc::vec::Vec;

use super::{forward, ModelError, NetSpec, Weights};
use crate::geo::{extract_window, plan_tiles, stitch, GeoRaster, TilePrediction, CORE_SIZE};
use crate::tensor::{Grid4, Mode};

/// Wetland probability for every pixel of `raster`, predicted core by core
/// and stitched.
pub fn predict_raster(
    spec: &NetSpec,
    weights: &Weights<f32>,
    raster: &GeoRaster,
    margin: usize,
    micro_batch: usize,
) -> Result<GeoRaster, ModelError> {
    let plan = plan_tiles(raster.rows(), raster.cols(), CORE_SIZE, spec.halo(), margin);
    let core = (plan.core_rows, plan.core_cols);
    let origins: Vec<(usize, usize)> = plan.origins().collect();
    let mut preds = Vec::with_capacity(origins.len());
    for chunk in origins.chunks(micro_batch.max(1)) {
        let windows: Vec<Grid4<f32>> = chunk
            .iter()
            .map(|&o| extract_window(raster, o, core, plan.pad()))
            .collect();
        let refs: Vec<&Grid4<f32>> = windows.iter().collect();
        let p = forward(spec, weights, &Grid4::stack(&refs)?, Mode::Eval, 0)?;
        for (n, &origin) in chunk.iter().enumerate() {
            let values = p.item(n).crop(margin, margin, core.0, core.1)?;
            preds.push(TilePrediction { origin, values });
        }
    }
    Ok(stitch(&preds, &plan, &raster.transform)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{GeoTransform, RasterKind};
    use crate::model::init_weights;

    #[test]
    fn tiled_prediction_equals_whole_map_pass() {
        let spec = NetSpec::with_hidden(&[4, 3, 3, 2, 2, 2]).unwrap();
        let w: Weights<f32> = init_weights(&spec, 9);
        let (rows, cols) = (170, 95);
        let values = (0..3 * rows * cols).map(|i| ((i * 37) % 256) as f32).collect();
        let t = GeoTransform::new(0.0, 0.0, 5.0, 5.0, "").unwrap();
        let r = GeoRaster::new(3, rows, cols, values, t, RasterKind::Image).unwrap();
        let tiled = predict_raster(&spec, &w, &r, 6, 4).unwrap();
        // One pass over the whole reflected map gives the same probabilities.
        let whole = extract_window(&r, (0, 0), (rows, cols), spec.halo());
        let p = forward(&spec, &w, &whole, Mode::Eval, 0).unwrap();
        let mut worst = 0.0f32;
        for y in 0..rows {
            for x in 0..cols {
                worst = worst.max((p[[0, 0, y, x]] - tiled.get(0, y, x)).abs());
            }
        }
        assert!(worst < 1e-5, "{worst}");
        assert_eq!(tiled.kind(), RasterKind::Probability);
    }
}
