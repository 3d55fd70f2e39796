//! Spatial 10-fold cross-validation: a 3×3 grid over the map extent with
//! the central cell cut in two, and the train/evaluate loop over it.
//!
//! Fold ids run row by row from the southern row upward, west to east
//! within a row, with the two center halves taking consecutive ids:
//!
//! ```text
//!   7 | 8 | 9
//!   3 |4/5| 6      4 = north (or west), 5 = south (or east)
//!   0 | 1 | 2
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::derive_seed;
use crate::geo::{BBox, Tile};
use crate::metrics::{confusion_from_pairs, macro_average, precision_recall_f1, Confusion, MetricsError, Scores};
use crate::model::{forward, Checkpoint, ModelError, NetSpec, Weights};
use crate::optim::{train, EpochStats, OptimError, TrainConfig};
use crate::tensor::{Grid4, Mode};

pub const FOLD_COUNT: usize = 10;

/// How the central grid cell is halved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SplitAxis {
    /// North and south halves of equal height.
    #[default]
    NorthSouth,
    /// West and east halves of equal width.
    EastWest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldRegion {
    pub id: usize,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldSpec {
    pub extent: BBox,
    pub axis: SplitAxis,
    /// Indexed by fold id.
    pub regions: Vec<FoldRegion>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FoldError {
    #[error("extent has zero area")]
    DegenerateExtent,
    #[error("point ({x}, {y}) lies outside the fold extent")]
    OutsideExtent { x: f64, y: f64 },
    #[error("fold {0} has no tiles")]
    EmptyFold(usize),
    #[error("fold {fold}: {source}")]
    Training { fold: usize, source: OptimError },
    #[error("fold {fold}: {source}")]
    Model { fold: usize, source: ModelError },
}

fn edges(lo: f64, hi: f64) -> [f64; 4] {
    let step = (hi - lo) / 3.0;
    [lo, lo + step, lo + 2.0 * step, hi]
}

/// Index of the half-open interval `[e[k], e[k+1])` holding `v`, the last
/// interval also taking its upper edge.
fn slot(v: f64, e: &[f64]) -> usize {
    let last = e.len() - 2;
    (0..last).find(|&k| v < e[k + 1]).unwrap_or(last)
}

pub fn make_folds(extent: &BBox, axis: SplitAxis) -> Result<FoldSpec, FoldError> {
    if !(extent.width() > 0.0 && extent.height() > 0.0) || !extent.area().is_finite() {
        return Err(FoldError::DegenerateExtent);
    }
    let xs = edges(extent.min_x, extent.max_x);
    let ys = edges(extent.min_y, extent.max_y);
    let cell = |r: usize, c: usize| BBox::new(xs[c], ys[r], xs[c + 1], ys[r + 1]);
    let mut regions = Vec::with_capacity(FOLD_COUNT);
    for r in 0..3 {
        for c in 0..3 {
            let b = cell(r, c);
            if (r, c) != (1, 1) {
                regions.push(b);
                continue;
            }
            match axis {
                SplitAxis::NorthSouth => {
                    let mid = b.min_y + (b.max_y - b.min_y) / 2.0;
                    regions.push(BBox::new(b.min_x, mid, b.max_x, b.max_y));
                    regions.push(BBox::new(b.min_x, b.min_y, b.max_x, mid));
                }
                SplitAxis::EastWest => {
                    let mid = b.min_x + (b.max_x - b.min_x) / 2.0;
                    regions.push(BBox::new(b.min_x, b.min_y, mid, b.max_y));
                    regions.push(BBox::new(mid, b.min_y, b.max_x, b.max_y));
                }
            }
        }
    }
    Ok(FoldSpec {
        extent: *extent,
        axis,
        regions: regions
            .into_iter()
            .enumerate()
            .map(|(id, bbox)| FoldRegion { id, bbox })
            .collect(),
    })
}

/// Fold containing `(x, y)`. Cells are closed below and open above, except
/// along the extent's own east and north edges.
pub fn assign_fold(spec: &FoldSpec, x: f64, y: f64) -> Result<usize, FoldError> {
    if !spec.extent.contains(x, y) {
        return Err(FoldError::OutsideExtent { x, y });
    }
    let e = &spec.extent;
    let col = slot(x, &edges(e.min_x, e.max_x));
    let row = slot(y, &edges(e.min_y, e.max_y));
    let id = match (row, col) {
        (0, c) => c,
        (1, 0) => 3,
        (1, 2) => 6,
        (2, c) => 7 + c,
        _ => {
            let center = &spec.regions[4].bbox;
            match spec.axis {
                SplitAxis::NorthSouth if y >= center.min_y => 4,
                SplitAxis::EastWest if x < center.max_x => 4,
                _ => 5,
            }
        }
    };
    Ok(id)
}

/// Evaluation of one held-out fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochStats>,
    /// Corpus indices of the evaluated tiles.
    pub evaluated: Vec<usize>,
    /// Core-sized probability maps, parallel to `evaluated`.
    pub predictions: Vec<Grid4<f32>>,
    pub confusion: Confusion,
    pub scores: Result<Scores, MetricsError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    /// Confusion summed over all folds.
    pub pooled: Confusion,
    pub pooled_scores: Result<Scores, MetricsError>,
    /// Unweighted mean over folds with defined scores.
    pub macro_scores: Option<Scores>,
    /// Times each corpus tile was evaluated.
    pub evaluation_counts: Vec<u32>,
}

/// Core prediction for every tile, computed in eval mode.
pub fn predict_tiles(
    spec: &NetSpec,
    weights: &Weights<f32>,
    tiles: &[&Tile],
    micro_batch: usize,
) -> Result<Vec<Grid4<f32>>, ModelError> {
    let mut out = Vec::with_capacity(tiles.len());
    for chunk in tiles.chunks(micro_batch.max(1)) {
        let items: Vec<&Grid4<f32>> = chunk.iter().map(|t| &t.image).collect();
        let x = Grid4::stack(&items)?;
        let p = forward(spec, weights, &x, Mode::Eval, 0)?;
        for (n, t) in chunk.iter().enumerate() {
            let (h, w) = t.core;
            out.push(p.item(n).crop(t.margin, t.margin, h, w)?);
        }
    }
    Ok(out)
}

/// Train on every fold except `fold` and evaluate on `fold` at the 0.5 cut.
///
/// The run seed is `derive_seed(config.seed, [fold])`, so folds are
/// independent of the order or concurrency they run in.
pub fn run_fold(
    tiles: &[Tile],
    fold: usize,
    spec: &NetSpec,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochStats),
) -> Result<FoldResult, FoldError> {
    let (held, rest): (Vec<usize>, Vec<usize>) = (0..tiles.len()).partition(|&i| tiles[i].fold == fold);
    if held.is_empty() {
        return Err(FoldError::EmptyFold(fold));
    }
    let train_tiles: Vec<&Tile> = rest.iter().map(|&i| &tiles[i]).collect();
    let cfg = TrainConfig {
        seed: derive_seed(config.seed, &[fold as u64]),
        ..config.clone()
    };
    let outcome = train(&train_tiles, &cfg, spec, observer).map_err(|source| FoldError::Training { fold, source })?;
    let eval: Vec<&Tile> = held.iter().map(|&i| &tiles[i]).collect();
    let model_err = |source| FoldError::Model { fold, source };
    let predictions = predict_tiles(spec, &outcome.checkpoint.weights, &eval, config.micro_batch).map_err(model_err)?;
    let confusion = confusion_from_pairs(
        eval.iter()
            .zip(&predictions)
            .flat_map(|(t, p)| t.eval_pixels(p).map(|(v, l)| (v > 0.5, l)).collect::<Vec<_>>()),
    );
    let scores = precision_recall_f1(&confusion);
    Ok(FoldResult {
        fold,
        checkpoint: outcome.checkpoint,
        history: outcome.history,
        evaluated: held,
        predictions,
        confusion,
        scores,
    })
}

/// Combine fold results into pooled and per-fold metrics.
pub fn summarize(folds: Vec<FoldResult>, tile_count: usize) -> CvReport {
    let mut counts = vec![0u32; tile_count];
    for f in &folds {
        for &i in &f.evaluated {
            counts[i] += 1;
        }
    }
    let pooled: Confusion = folds.iter().map(|f| f.confusion).sum();
    let per_fold: Vec<_> = folds.iter().map(|f| f.scores).collect();
    CvReport {
        pooled_scores: precision_recall_f1(&pooled),
        macro_scores: macro_average(&per_fold),
        pooled,
        folds,
        evaluation_counts: counts,
    }
}

/// All ten folds, in id order, on one thread.
pub fn cross_validate(
    tiles: &[Tile],
    spec: &NetSpec,
    config: &TrainConfig,
    observer: &mut dyn FnMut(usize, &EpochStats),
) -> Result<CvReport, FoldError> {
    if let Some(f) = (0..FOLD_COUNT).find(|&f| tiles.iter().all(|t| t.fold != f)) {
        return Err(FoldError::EmptyFold(f));
    }
    let mut results = Vec::with_capacity(FOLD_COUNT);
    for fold in 0..FOLD_COUNT {
        results.push(run_fold(tiles, fold, spec, config, &mut |s| observer(fold, s))?);
    }
    Ok(summarize(results, tiles.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square() -> FoldSpec {
        make_folds(&BBox::new(0.0, 0.0, 300.0, 300.0), SplitAxis::NorthSouth).unwrap()
    }

    #[test]
    fn three_hundred_square() {
        let s = square();
        assert_eq!(s.regions.len(), 10);
        let full = s
            .regions
            .iter()
            .filter(|r| r.bbox.width() == 100.0 && r.bbox.height() == 100.0)
            .count();
        let half = s
            .regions
            .iter()
            .filter(|r| r.bbox.width() == 100.0 && r.bbox.height() == 50.0)
            .count();
        assert_eq!((full, half), (8, 2));
        assert_eq!(s.regions.iter().map(|r| r.bbox.area()).sum::<f64>(), 90_000.0);
        assert_eq!(s.regions[4].bbox, BBox::new(100.0, 150.0, 200.0, 200.0));
        assert_eq!(s.regions[5].bbox, BBox::new(100.0, 100.0, 200.0, 150.0));
    }

    #[test]
    fn assignment_examples() {
        let s = square();
        assert_eq!(assign_fold(&s, 150.0, 160.0), Ok(4));
        assert_eq!(assign_fold(&s, 150.0, 140.0), Ok(5));
        assert_eq!(assign_fold(&s, 150.0, 150.0), Ok(4));
        assert_eq!(assign_fold(&s, 0.0, 0.0), Ok(0));
        assert_eq!(assign_fold(&s, 300.0, 0.0), Ok(2));
        assert_eq!(assign_fold(&s, 0.0, 300.0), Ok(7));
        assert_eq!(assign_fold(&s, 300.0, 300.0), Ok(9));
        assert_eq!(assign_fold(&s, 100.0, 100.0), Ok(5));
        assert_eq!(assign_fold(&s, 99.999, 100.0), Ok(3));
        assert!(matches!(
            assign_fold(&s, 300.1, 5.0),
            Err(FoldError::OutsideExtent { .. })
        ));
        let ew = make_folds(&BBox::new(0.0, 0.0, 300.0, 300.0), SplitAxis::EastWest).unwrap();
        assert_eq!(assign_fold(&ew, 120.0, 160.0), Ok(4));
        assert_eq!(assign_fold(&ew, 150.0, 160.0), Ok(5));
    }

    #[test]
    fn degenerate_extent() {
        assert_eq!(
            make_folds(&BBox::new(0.0, 0.0, 0.0, 10.0), SplitAxis::NorthSouth),
            Err(FoldError::DegenerateExtent)
        );
    }

    fn in_region(b: &BBox, x: f64, y: f64, e: &BBox) -> bool {
        let xin = b.min_x <= x && (x < b.max_x || (b.max_x == e.max_x && x == e.max_x));
        let yin = b.min_y <= y && (y < b.max_y || (b.max_y == e.max_y && y == e.max_y));
        xin && yin
    }

    proptest! {
        #[test]
        fn partition_of_random_extents(
            x0 in -1e6f64..1e6, y0 in -1e6f64..1e6, w in 1.0f64..1e5, h in 1.0f64..1e5,
            ew in any::<bool>(),
            pts in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 64),
        ) {
            let ext = BBox::new(x0, y0, x0 + w, y0 + h);
            let axis = if ew { SplitAxis::EastWest } else { SplitAxis::NorthSouth };
            let s = make_folds(&ext, axis).unwrap();
            let total: f64 = s.regions.iter().map(|r| r.bbox.area()).sum();
            prop_assert!((total - ext.area()).abs() <= 1e-9 * ext.area());
            let corners = [(ext.min_x, ext.min_y), (ext.max_x, ext.min_y), (ext.min_x, ext.max_y), (ext.max_x, ext.max_y)];
            let samples = pts.iter().map(|&(u, v)| (x0 + u * w, y0 + v * h)).chain(corners);
            for (x, y) in samples {
                let id = assign_fold(&s, x, y).unwrap();
                let hits: Vec<usize> = s.regions.iter().filter(|r| in_region(&r.bbox, x, y, &ext)).map(|r| r.id).collect();
                prop_assert_eq!(hits, vec![id]);
            }
        }

        #[test]
        fn translation_invariant(dx in -1000i32..1000, dy in -1000i32..1000, px in 0u32..=300, py in 0u32..=300) {
            let a = square();
            let b = make_folds(&BBox::new(dx as f64, dy as f64, dx as f64 + 300.0, dy as f64 + 300.0), SplitAxis::NorthSouth).unwrap();
            prop_assert_eq!(
                assign_fold(&a, px as f64, py as f64).unwrap(),
                assign_fold(&b, (px as i32 + dx) as f64, (py as i32 + dy) as f64).unwrap()
            );
        }
    }
}
