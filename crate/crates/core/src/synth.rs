//! Synthetic stand-in for scanned hand-drawn maps.
//!
//! Wetlands are smooth random blobs filled with short horizontal dashes on
//! a mottled parchment background; line work and speckles are scattered
//! over the whole sheet, wetlands included. The returned labels are the
//! rasterization of the returned polygons, so the two agree exactly.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::folds::{make_folds, FoldSpec, SplitAxis, FOLD_COUNT};
use crate::geo::{
    build_corpus, plan_tiles, rasterize_polygons, GeoError, GeoRaster, GeoTransform, LabelRaster, Mask, RasterKind,
    Tile, CORE_SIZE,
};
use crate::postproc::{Feature, Point, VectorLayer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Palette {
    pub background: [u8; 3],
    pub line: [u8; 3],
    pub hatch: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            background: [232, 221, 192],
            line: [112, 82, 54],
            hatch: [18, 26, 62],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SynthConfig {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    /// Metres per pixel.
    pub pixel_size: f64,
    /// CRS coordinates of the top-left pixel center.
    pub origin: (f64, f64),
    pub crs: String,
    pub wetland_fraction: f64,
    /// Line and speckle clutter; 0 gives a clean sheet, 1 a busy one.
    pub clutter_density: f64,
    pub palette: Palette,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            rows: 1024,
            cols: 1024,
            pixel_size: 5.0,
            origin: (440_002.5, 6_410_002.5),
            crs: String::from("EPSG:3006"),
            wetland_fraction: 0.2,
            clutter_density: 0.5,
            palette: Palette::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic map config: {0}")]
    InvalidConfig(String),
    #[error("fold {0} receives no tiles")]
    EmptyFold(usize),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.rows < 160 || self.cols < 160 {
            return bad(format!("map must be at least 160x160, got {}x{}", self.rows, self.cols));
        }
        if !(0.0..=0.6).contains(&self.wetland_fraction) {
            return bad(format!(
                "wetland_fraction must lie in [0, 0.6], got {}",
                self.wetland_fraction
            ));
        }
        if !(0.0..=1.0).contains(&self.clutter_density) {
            return bad(format!(
                "clutter_density must lie in [0, 1], got {}",
                self.clutter_density
            ));
        }
        if !(self.pixel_size > 0.0 && self.pixel_size.is_finite()) {
            return bad(format!("pixel_size must be positive, got {}", self.pixel_size));
        }
        Ok(())
    }

    pub fn transform(&self) -> Result<GeoTransform, SynthError> {
        Ok(GeoTransform::new(
            self.origin.0,
            self.origin.1,
            self.pixel_size,
            self.pixel_size,
            self.crs.clone(),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthMap {
    pub raster: GeoRaster,
    pub truth: VectorLayer,
    pub labels: LabelRaster,
    /// Pixels inked by the wetland hatching.
    pub hatch: Mask,
}

// Independent random streams.
const BLOBS: u64 = 0;
const PAPER: u64 = 1;
const HATCH: u64 = 2;
const CLUTTER: u64 = 3;

const BLOB_VERTICES: usize = 72;

/// Star-shaped blob in pixel coordinates `(row, col)`.
fn blob(rng: &mut ChaCha8Rng, center: (f64, f64), radius: f64) -> Vec<(f64, f64)> {
    let harmonics: Vec<(f64, f64)> = (2..=5)
        .map(|k| (rng.random_range(0.0..0.4) / k as f64, rng.random_range(0.0..TAU)))
        .collect();
    (0..BLOB_VERTICES)
        .map(|i| {
            let t = TAU * i as f64 / BLOB_VERTICES as f64;
            let wobble: f64 = harmonics
                .iter()
                .enumerate()
                .map(|(k, &(a, phase))| a * Float::cos((k + 2) as f64 * t + phase))
                .sum();
            let r = radius * (1.0 + wobble);
            (center.0 + r * Float::sin(t), center.1 + r * Float::cos(t))
        })
        .collect()
}

/// Pixel-center fill of one ring, restricted to its bounding rows.
fn fill_ring(ring: &[(f64, f64)], rows: usize, cols: usize, mut visit: impl FnMut(usize, usize)) {
    let rmin = ring.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let rmax = ring.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let first = Float::ceil(rmin).max(0.0) as usize;
    let last = Float::floor(rmax).min(rows as f64 - 1.0);
    if last < first as f64 {
        return;
    }
    let mut xs = Vec::new();
    for row in first..=last as usize {
        let y = row as f64;
        xs.clear();
        for i in 0..ring.len() {
            let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
            if (a.0 <= y && y < b.0) || (b.0 <= y && y < a.0) {
                xs.push(a.1 + (y - a.0) * (b.1 - a.1) / (b.0 - a.0));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        for pair in xs.chunks_exact(2) {
            let start = Float::ceil(pair[0]).max(0.0) as usize;
            let end = (Float::ceil(pair[1]).max(0.0) as usize).min(cols);
            for col in start..end {
                visit(row, col);
            }
        }
    }
}

fn place_blobs(cfg: &SynthConfig, transform: &GeoTransform) -> VectorLayer {
    let (rows, cols) = (cfg.rows, cfg.cols);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[BLOBS]));
    let target = (cfg.wetland_fraction * (rows * cols) as f64) as usize;
    // Occupied pixels, dilated so blobs never touch.
    let mut taken = vec![false; rows * cols];
    let mut covered = 0usize;
    let mut layer = VectorLayer::new(transform.crs.clone());
    let max_radius = (rows.min(cols) as f64 / 6.0).min(56.0);
    let gap = 3isize;
    let mut attempts = 0;
    while covered < target && attempts < 20_000 {
        attempts += 1;
        let radius = rng.random_range(max_radius * 0.3..max_radius);
        let reach = radius * 1.5 + 2.0;
        let center = (
            rng.random_range(reach..rows as f64 - reach),
            rng.random_range(reach..cols as f64 - reach),
        );
        let ring = blob(&mut rng, center, radius);
        let mut pixels = Vec::new();
        fill_ring(&ring, rows, cols, |r, c| pixels.push((r, c)));
        let clash = pixels.iter().any(|&(r, c)| taken[r * cols + c]);
        if clash || pixels.is_empty() {
            continue;
        }
        for &(r, c) in &pixels {
            for dr in -gap..=gap {
                for dc in -gap..=gap {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if rr >= 0 && cc >= 0 && (rr as usize) < rows && (cc as usize) < cols {
                        taken[rr as usize * cols + cc as usize] = true;
                    }
                }
            }
        }
        covered += pixels.len();
        let mut exterior: Vec<Point> = ring
            .iter()
            .map(|&(r, c)| {
                let (x, y) = transform.pixel_to_crs(r, c);
                Point::new(x, y)
            })
            .collect();
        // Row-down parametrization runs clockwise on the map; flip to counterclockwise.
        exterior.reverse();
        exterior.push(exterior[0]);
        layer.features.push(Feature {
            id: layer.features.len() as u64 + 1,
            exterior,
            holes: Vec::new(),
            area_m2: 0.0,
            pixel_count: 0,
        });
    }
    layer
}

/// Smooth value noise in `[-1, 1]` on a lattice of spacing `cell` pixels.
fn value_noise(rng: &mut ChaCha8Rng, rows: usize, cols: usize, cell: usize) -> Vec<f64> {
    let (lr, lc) = (rows / cell + 2, cols / cell + 2);
    let lattice: Vec<f64> = (0..lr * lc).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let fy = r as f64 / cell as f64;
        let (y0, ty) = (fy as usize, fy - Float::floor(fy));
        let sy = ty * ty * (3.0 - 2.0 * ty);
        for c in 0..cols {
            let fx = c as f64 / cell as f64;
            let (x0, tx) = (fx as usize, fx - Float::floor(fx));
            let sx = tx * tx * (3.0 - 2.0 * tx);
            let at = |y: usize, x: usize| lattice[y * lc + x];
            let top = at(y0, x0) + (at(y0, x0 + 1) - at(y0, x0)) * sx;
            let bottom = at(y0 + 1, x0) + (at(y0 + 1, x0 + 1) - at(y0 + 1, x0)) * sx;
            out[r * cols + c] = top + (bottom - top) * sy;
        }
    }
    out
}

struct Canvas {
    rows: usize,
    cols: usize,
    rgb: Vec<[f64; 3]>,
}

impl Canvas {
    fn ink(&mut self, r: isize, c: isize, color: [u8; 3], alpha: f64) {
        if r < 0 || c < 0 || r as usize >= self.rows || c as usize >= self.cols {
            return;
        }
        let px = &mut self.rgb[r as usize * self.cols + c as usize];
        for (v, &k) in px.iter_mut().zip(&color) {
            *v += (k as f64 - *v) * alpha;
        }
    }
}

fn draw_clutter(cfg: &SynthConfig, canvas: &mut Canvas) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[CLUTTER]));
    let (rows, cols) = (cfg.rows as f64, cfg.cols as f64);
    let area = rows * cols;
    let line = cfg.palette.line;

    // Meandering contour-like strokes.
    let strokes = (cfg.clutter_density * area / 12_000.0) as usize;
    for _ in 0..strokes {
        let (mut y, mut x) = (rng.random_range(0.0..rows), rng.random_range(0.0..cols));
        let mut heading = rng.random_range(0.0..TAU);
        let turn = rng.random_range(-0.05..0.05);
        let len = rng.random_range(80..500);
        let alpha = rng.random_range(0.55..0.9);
        for _ in 0..len {
            canvas.ink(Float::round(y) as isize, Float::round(x) as isize, line, alpha);
            heading += turn + rng.random_range(-0.15..0.15);
            y += Float::sin(heading);
            x += Float::cos(heading);
        }
    }

    // Straight two-pixel roads.
    let roads = (cfg.clutter_density * area / 150_000.0) as usize;
    for _ in 0..roads {
        let (y0, x0) = (rng.random_range(0.0..rows), rng.random_range(0.0..cols));
        let heading = rng.random_range(0.0..TAU);
        let len = rng.random_range(200.0..rows.max(cols));
        let (dy, dx) = (Float::sin(heading), Float::cos(heading));
        for s in 0..len as usize {
            let (y, x) = (y0 + dy * s as f64, x0 + dx * s as f64);
            for w in 0..2 {
                let (r, c) = (Float::round(y - dx * w as f64), Float::round(x + dy * w as f64));
                canvas.ink(r as isize, c as isize, line, 0.85);
            }
        }
    }

    // Speckles.
    let specks = (cfg.clutter_density * area / 400.0) as usize;
    for _ in 0..specks {
        let r = rng.random_range(0..cfg.rows) as isize;
        let c = rng.random_range(0..cfg.cols) as isize;
        canvas.ink(r, c, line, rng.random_range(0.3..0.7));
    }
}

/// Short horizontal dashes on every other row, clipped to the label mask.
fn draw_hatch(cfg: &SynthConfig, label: &Mask, canvas: &mut Canvas) -> Mask {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[HATCH]));
    let mut hatch = Mask::new(cfg.rows, cfg.cols);
    for r in 0..cfg.rows {
        if r % 2 != 0 {
            continue;
        }
        let mut c = rng.random_range(0..4usize);
        while c < cfg.cols {
            let dash = rng.random_range(6..14usize);
            for cc in c..(c + dash).min(cfg.cols) {
                if label.get(r, cc) {
                    hatch.set(r, cc, true);
                    canvas.ink(r as isize, cc as isize, cfg.palette.hatch, 1.0);
                }
            }
            c += dash + rng.random_range(1..3usize);
        }
    }
    hatch
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthMap, SynthError> {
    cfg.validate()?;
    let transform = cfg.transform()?;
    let (rows, cols) = (cfg.rows, cfg.cols);
    let mut truth = place_blobs(cfg, &transform);
    let labels = rasterize_polygons(&truth, &transform, rows, cols)?;

    for f in &mut truth.features {
        let single = VectorLayer {
            crs: truth.crs.clone(),
            features: vec![f.clone()],
            valid_extent: None,
        };
        let count = rasterize_polygons(&single, &transform, rows, cols)?.label.count() as u64;
        f.pixel_count = count;
        f.area_m2 = f.shoelace_area();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[PAPER]));
    let coarse = value_noise(&mut rng, rows, cols, 64);
    let fine = value_noise(&mut rng, rows, cols, 9);
    let bg = cfg.palette.background;
    let rgb = (0..rows * cols)
        .map(|i| {
            let tone = 10.0 * coarse[i] + 4.0 * fine[i] + rng.random_range(-5.0..5.0);
            [bg[0] as f64 + tone, bg[1] as f64 + tone, bg[2] as f64 + 0.8 * tone]
        })
        .collect();
    let mut canvas = Canvas { rows, cols, rgb };
    let hatch = draw_hatch(cfg, &labels.label, &mut canvas);
    draw_clutter(cfg, &mut canvas);

    let mut values = vec![0.0f32; 3 * rows * cols];
    for (i, px) in canvas.rgb.iter().enumerate() {
        for ch in 0..3 {
            values[ch * rows * cols + i] = Float::round(px[ch].clamp(0.0, 255.0)) as f32;
        }
    }
    let raster = GeoRaster::new(3, rows, cols, values, transform, RasterKind::Image)?;
    Ok(SynthMap {
        raster,
        truth,
        labels,
        hatch,
    })
}

/// Tiles of a generated map with their spatial folds.
pub fn generate_corpus(
    cfg: &SynthConfig,
    halo: usize,
    margin: usize,
    axis: SplitAxis,
) -> Result<(SynthMap, FoldSpec, Vec<Tile>), SynthError> {
    let map = generate(cfg)?;
    let plan = plan_tiles(cfg.rows, cfg.cols, CORE_SIZE, halo, margin);
    let bounds = map.raster.transform.bounds(cfg.rows, cfg.cols);
    let folds = make_folds(&bounds, axis).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let tiles = build_corpus(&map.raster, &map.labels, &plan, &folds)?;
    if let Some(f) = (0..FOLD_COUNT).find(|&f| tiles.iter().all(|t| t.fold != f)) {
        return Err(SynthError::EmptyFold(f));
    }
    Ok((map, folds, tiles))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            rows: 240,
            cols: 200,
            seed: 7,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_and_consistent() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a, b);
        let again = rasterize_polygons(&a.truth, &a.raster.transform, 240, 200).unwrap();
        assert_eq!(again, a.labels);
        let c = generate(&SynthConfig { seed: 8, ..small() }).unwrap();
        assert_ne!(a.raster, c.raster);
    }

    #[test]
    fn hatch_lies_inside_truth_and_rings_are_ccw() {
        let m = generate(&small()).unwrap();
        assert!(m.hatch.count() > 0);
        let inside = m
            .hatch
            .bits()
            .iter()
            .zip(m.labels.label.bits())
            .filter(|&(&h, &l)| h && l)
            .count();
        assert!(inside as f64 >= 0.95 * m.hatch.count() as f64);
        for f in &m.truth.features {
            assert!(crate::postproc::signed_area(&f.exterior) > 0.0);
            assert!(f.pixel_count > 0);
        }
        let total: u64 = m.truth.features.iter().map(|f| f.pixel_count).sum();
        assert_eq!(total as usize, m.labels.label.count());
    }

    #[test]
    fn fraction_near_target() {
        let m = generate(&small()).unwrap();
        let frac = m.labels.label.count() as f64 / (240.0 * 200.0);
        assert!((frac - 0.2).abs() <= 0.05, "{frac}");
        let none = generate(&SynthConfig {
            wetland_fraction: 0.0,
            ..small()
        })
        .unwrap();
        assert_eq!(none.labels.label.count(), 0);
    }

    #[test]
    fn config_bounds() {
        assert!(generate(&SynthConfig { rows: 100, ..small() }).is_err());
        assert!(generate(&SynthConfig {
            wetland_fraction: 0.7,
            ..small()
        })
        .is_err());
    }

    #[test]
    fn corpus_has_all_folds() {
        let cfg = SynthConfig {
            rows: 640,
            cols: 640,
            ..small()
        };
        let (_, folds, tiles) = generate_corpus(&cfg, 21, 0, SplitAxis::NorthSouth).unwrap();
        assert_eq!(folds.regions.len(), 10);
        assert_eq!(tiles.len(), 64);
        assert!(tiles
            .iter()
            .all(|t| t.core == (80, 80) && t.image.dims() == [1, 3, 122, 122]));
        assert!(matches!(
            generate_corpus(
                &SynthConfig {
                    rows: 160,
                    cols: 160,
                    ..small()
                },
                21,
                0,
                SplitAxis::NorthSouth
            ),
            Err(SynthError::EmptyFold(_))
        ));
    }
}
