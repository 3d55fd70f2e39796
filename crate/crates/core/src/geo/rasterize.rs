use alloc::vec::Vec;

use num_traits::Float;

use super::{GeoError, GeoTransform, LabelRaster, Mask};
use crate::postproc::{Point, VectorLayer};

fn distinct_vertices(ring: &[Point]) -> usize {
    let mut pts: Vec<(f64, f64)> = ring.iter().map(|p| (p.x, p.y)).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    pts.dedup();
    pts.len()
}

/// Burn a polygon layer into a label raster on the grid of `reference`.
///
/// A pixel is labeled iff its center lies inside some feature, with each
/// feature evaluated by the even-odd rule over its rings (holes subtract).
/// Validity covers the whole grid, or only centers inside the layer's
/// `valid_extent` when one is declared.
pub fn rasterize_polygons(
    layer: &VectorLayer,
    reference: &GeoTransform,
    rows: usize,
    cols: usize,
) -> Result<LabelRaster, GeoError> {
    let mut label = Mask::new(rows, cols);
    let mut crossings: Vec<f64> = Vec::new();
    for (fi, feature) in layer.features.iter().enumerate() {
        // Rings in fractional (row, col) pixel coordinates.
        let mut rings: Vec<Vec<(f64, f64)>> = Vec::new();
        for (ri, ring) in feature.rings().enumerate() {
            if distinct_vertices(ring) < 3 {
                return Err(GeoError::DegenerateRing { feature: fi, ring: ri });
            }
            rings.push(ring.iter().map(|p| reference.crs_to_pixel(p.x, p.y)).collect());
        }
        let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(r, _) in rings.iter().flatten() {
            rmin = rmin.min(r);
            rmax = rmax.max(r);
        }
        let first = Float::ceil(rmin.max(0.0)) as usize;
        let last = Float::floor(rmax.min(rows as f64 - 1.0));
        if last < 0.0 || first as f64 > last {
            continue;
        }
        for row in first..=last as usize {
            let y = row as f64;
            crossings.clear();
            for ring in &rings {
                let n = ring.len();
                for i in 0..n {
                    let (r0, c0) = ring[i];
                    let (r1, c1) = ring[(i + 1) % n];
                    if (r0 <= y && y < r1) || (r1 <= y && y < r0) {
                        crossings.push(c0 + (y - r0) * (c1 - c0) / (r1 - r0));
                    }
                }
            }
            crossings.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
            for pair in crossings.chunks_exact(2) {
                let start = Float::ceil(pair[0]).max(0.0) as usize;
                let end = (Float::ceil(pair[1]).max(0.0) as usize).min(cols);
                for col in start..end {
                    label.set(row, col, true);
                }
            }
        }
    }
    let valid = match layer.valid_extent {
        None => Mask::filled(rows, cols, true),
        Some(ext) => {
            let mut v = Mask::new(rows, cols);
            for row in 0..rows {
                for col in 0..cols {
                    let (x, y) = reference.pixel_to_crs(row as f64, col as f64);
                    v.set(row, col, ext.contains(x, y));
                }
            }
            v
        }
    };
    LabelRaster::new(label, valid, reference.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::BBox;
    use crate::postproc::Feature;
    use alloc::vec;

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point> {
        vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
            Point::new(x0, y0),
        ]
    }

    fn layer_of(features: Vec<(Vec<Point>, Vec<Vec<Point>>)>) -> VectorLayer {
        let mut layer = VectorLayer::new("test");
        for (i, (exterior, holes)) in features.into_iter().enumerate() {
            layer.features.push(Feature {
                id: i as u64,
                exterior,
                holes,
                area_m2: 0.0,
                pixel_count: 0,
            });
        }
        layer
    }

    // Unit pixels, pixel (row, col) centered at (col, -row).
    fn unit() -> GeoTransform {
        GeoTransform::new(0.0, 0.0, 1.0, 1.0, "test").unwrap()
    }

    #[test]
    fn aligned_square_covers_block() {
        // Pixels rows 1..3, cols 2..4 have edges x in [1.5, 3.5], y in [-2.5, -0.5].
        let layer = layer_of(vec![(square(1.5, -2.5, 3.5, -0.5), vec![])]);
        let lr = rasterize_polygons(&layer, &unit(), 5, 6).unwrap();
        for r in 0..5 {
            for c in 0..6 {
                let inside = (1..3).contains(&r) && (2..4).contains(&c);
                assert_eq!(lr.label.get(r, c), inside, "({r},{c})");
            }
        }
        assert_eq!(lr.valid.count(), 30);
    }

    #[test]
    fn hole_subtracts() {
        let outer = square(-0.5, -4.5, 4.5, 0.5);
        let hole: Vec<Point> = square(0.5, -3.5, 3.5, -0.5).into_iter().rev().collect();
        let lr = rasterize_polygons(&layer_of(vec![(outer, vec![hole])]), &unit(), 5, 5).unwrap();
        for r in 0..5 {
            for c in 0..5 {
                let ring = r == 0 || r == 4 || c == 0 || c == 4;
                assert_eq!(lr.label.get(r, c), ring);
            }
        }
    }

    #[test]
    fn degenerate_ring_named() {
        let bad = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 0.0)];
        let layer = layer_of(vec![(square(0.0, 0.0, 1.0, 1.0), vec![]), (bad, vec![])]);
        assert_eq!(
            rasterize_polygons(&layer, &unit(), 3, 3),
            Err(GeoError::DegenerateRing { feature: 1, ring: 0 })
        );
    }

    #[test]
    fn valid_extent_limits_validity_and_labels() {
        let mut layer = layer_of(vec![(square(-0.5, -3.5, 3.5, 0.5), vec![])]);
        layer.valid_extent = Some(BBox::new(-0.5, -1.5, 3.5, 0.5));
        let lr = rasterize_polygons(&layer, &unit(), 4, 4).unwrap();
        assert_eq!(lr.valid.count(), 8);
        assert_eq!(lr.label.count(), 8);
        assert!(!lr.label.get(3, 0));
    }

    #[test]
    fn polygon_partly_outside_is_clipped() {
        let layer = layer_of(vec![(square(-10.0, -1.5, 1.5, 10.0), vec![])]);
        let lr = rasterize_polygons(&layer, &unit(), 3, 3).unwrap();
        assert_eq!(lr.label.count(), 4);
    }
}
