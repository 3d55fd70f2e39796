use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{GeoError, GeoRaster, GeoTransform, RasterKind};
use crate::tensor::Grid4;

/// Side of the square region each tile owns in the stitched output.
pub const CORE_SIZE: usize = 80;

/// Core layout over a raster.
///
/// Cores sit on a stride-`core` grid; when the raster is not a multiple of
/// the core size, one extra core per axis is shifted inward to end at the
/// raster edge. Each pixel is owned by the first core (in row-major plan
/// order) that contains it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePlan {
    pub rows: usize,
    pub cols: usize,
    pub core_rows: usize,
    pub core_cols: usize,
    pub halo: usize,
    pub margin: usize,
    row_starts: Vec<usize>,
    col_starts: Vec<usize>,
}

fn starts(n: usize, core: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (0..n / core).map(|i| i * core).collect();
    if n % core != 0 {
        s.push(n - core);
    }
    s
}

fn owner_1d(idx: usize, core: usize, count: usize) -> usize {
    (idx / core).min(count - 1)
}

/// Plan `core`-sized cores over a `rows × cols` raster; each input window
/// extends `halo + margin` pixels beyond its core.
pub fn plan_tiles(rows: usize, cols: usize, core: usize, halo: usize, margin: usize) -> TilePlan {
    assert!(rows > 0 && cols > 0 && core > 0, "empty raster or core");
    let core_rows = core.min(rows);
    let core_cols = core.min(cols);
    TilePlan {
        rows,
        cols,
        core_rows,
        core_cols,
        halo,
        margin,
        row_starts: starts(rows, core_rows),
        col_starts: starts(cols, core_cols),
    }
}

impl TilePlan {
    pub fn len(&self) -> usize {
        self.row_starts.len() * self.col_starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid shape of the plan, `(core rows, core cols)` counts.
    pub fn grid(&self) -> (usize, usize) {
        (self.row_starts.len(), self.col_starts.len())
    }

    /// Core origins `(row, col)` in plan order.
    pub fn origins(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_starts
            .iter()
            .flat_map(move |&r| self.col_starts.iter().map(move |&c| (r, c)))
    }

    pub fn origin(&self, index: usize) -> (usize, usize) {
        let n = self.col_starts.len();
        (self.row_starts[index / n], self.col_starts[index % n])
    }

    /// Frame width around each core.
    pub fn pad(&self) -> usize {
        self.halo + self.margin
    }

    pub fn window_dims(&self) -> (usize, usize) {
        (self.core_rows + 2 * self.pad(), self.core_cols + 2 * self.pad())
    }

    /// Plan index of the core owning pixel `(row, col)`.
    pub fn owner(&self, row: usize, col: usize) -> usize {
        let r = owner_1d(row, self.core_rows, self.row_starts.len());
        let c = owner_1d(col, self.core_cols, self.col_starts.len());
        r * self.col_starts.len() + c
    }
}

/// Mirror an out-of-range index back into `0..n` (edge pixel not repeated).
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Input window for the core at `origin` extended by `pad` on every side.
///
/// Pixels beyond the raster are reflected about its edge. Image rasters are
/// scaled from `0..=255` to `[0, 1]`; probability rasters are copied as is.
pub fn extract_window(raster: &GeoRaster, origin: (usize, usize), core: (usize, usize), pad: usize) -> Grid4<f32> {
    let (h, w) = (core.0 + 2 * pad, core.1 + 2 * pad);
    let divisor = match raster.kind() {
        RasterKind::Image => 255.0,
        RasterKind::Probability => 1.0,
    };
    let row0 = origin.0 as isize - pad as isize;
    let col0 = origin.1 as isize - pad as isize;
    let rows: Vec<usize> = (0..h).map(|y| reflect(row0 + y as isize, raster.rows())).collect();
    let cols: Vec<usize> = (0..w).map(|x| reflect(col0 + x as isize, raster.cols())).collect();
    Grid4::from_fn([1, raster.channels(), h, w], |[_, c, y, x]| {
        raster.get(c, rows[y], cols[x]) / divisor
    })
    .expect("non-empty window")
}

/// Network output for one core.
#[derive(Debug, Clone, PartialEq)]
pub struct TilePrediction {
    pub origin: (usize, usize),
    /// `1 × 1 × core_rows × core_cols` probabilities.
    pub values: Grid4<f32>,
}

/// Reassemble per-core predictions into one probability raster.
pub fn stitch(
    predictions: &[TilePrediction],
    plan: &TilePlan,
    transform: &GeoTransform,
) -> Result<GeoRaster, GeoError> {
    let by_origin: BTreeMap<(usize, usize), &TilePrediction> = predictions.iter().map(|p| (p.origin, p)).collect();
    let mut out = vec![0.0f32; plan.rows * plan.cols];
    for (index, origin) in plan.origins().enumerate() {
        let pred = by_origin.get(&origin).ok_or(GeoError::MissingCore {
            row: origin.0,
            col: origin.1,
        })?;
        let want = [1, 1, plan.core_rows, plan.core_cols];
        if pred.values.dims() != want {
            return Err(GeoError::Format(format!(
                "prediction at {origin:?} has dims {:?}, expected {want:?}",
                pred.values.dims()
            )));
        }
        for y in 0..plan.core_rows {
            let row = origin.0 + y;
            for x in 0..plan.core_cols {
                let col = origin.1 + x;
                if plan.owner(row, col) == index {
                    out[row * plan.cols + col] = pred.values[[0, 0, y, x]];
                }
            }
        }
    }
    GeoRaster::new(1, plan.rows, plan.cols, out, transform.clone(), RasterKind::Probability)
}
