use alloc::vec;
use alloc::vec::Vec;

use super::{Components, Connectivity, Feature, Point, VectorLayer};
use crate::geo::GeoTransform;

// Pixel-edge directions in counterclockwise order with y pointing north.
const EAST: u8 = 0;
const NORTH: u8 = 1;
const WEST: u8 = 2;
const SOUTH: u8 = 3;

/// Lattice step `(d_row, d_col)` for a direction.
fn step(d: u8) -> (isize, isize) {
    match d {
        EAST => (0, 1),
        NORTH => (-1, 0),
        WEST => (0, -1),
        _ => (1, 0),
    }
}

/// Pixel on the left of the edge leaving lattice vertex `(i, j)` in direction `d`.
fn left_pixel(i: usize, j: usize, d: u8) -> (usize, usize) {
    match d {
        EAST => (i - 1, j),
        NORTH => (i - 1, j - 1),
        WEST => (i, j - 1),
        _ => (i, j),
    }
}

struct Lattice {
    cols: usize,
    out: Vec<u8>,
}

impl Lattice {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.cols + 1) + j
    }

    /// Boundary edges of the foreground, oriented with foreground on the left.
    fn build(c: &Components) -> Self {
        let (rows, cols) = (c.rows, c.cols);
        let fg = |r: isize, col: isize| {
            r >= 0 && col >= 0 && (r as usize) < rows && (col as usize) < cols && c.label(r as usize, col as usize) != 0
        };
        let mut lat = Lattice {
            cols,
            out: vec![0u8; (rows + 1) * (cols + 1)],
        };
        for r in 0..rows {
            for col in 0..cols {
                if c.label(r, col) == 0 {
                    continue;
                }
                let (ri, ci) = (r as isize, col as isize);
                if !fg(ri + 1, ci) {
                    let k = lat.idx(r + 1, col);
                    lat.out[k] |= 1 << EAST;
                }
                if !fg(ri, ci + 1) {
                    let k = lat.idx(r + 1, col + 1);
                    lat.out[k] |= 1 << NORTH;
                }
                if !fg(ri - 1, ci) {
                    let k = lat.idx(r, col + 1);
                    lat.out[k] |= 1 << WEST;
                }
                if !fg(ri, ci - 1) {
                    let k = lat.idx(r, col);
                    lat.out[k] |= 1 << SOUTH;
                }
            }
        }
        lat
    }

    /// Outgoing direction after arriving with heading `d`.
    fn next(&self, k: usize, d: u8, conn: Connectivity) -> u8 {
        let (right, straight, left) = ((d + 3) % 4, d, (d + 1) % 4);
        let order = match conn {
            Connectivity::Eight => [right, straight, left],
            Connectivity::Four => [left, straight, right],
        };
        let bits = self.out[k];
        *order
            .iter()
            .find(|&&o| bits & (1 << o) != 0)
            .expect("boundary is closed")
    }
}

/// Polygonize every component along pixel edges.
///
/// Each feature's id is its component label and its area is
/// `pixel_count × pixel_area`. Collinear vertices are merged, so rings carry
/// corners only.
pub fn vectorize(components: &Components, transform: &GeoTransform) -> VectorLayer {
    let lat = Lattice::build(components);
    let mut used = vec![0u8; lat.out.len()];
    let k_count = components.count();
    let mut exteriors: Vec<Option<Vec<Point>>> = vec![None; k_count];
    let mut holes: Vec<Vec<Vec<Point>>> = vec![Vec::new(); k_count];
    let to_crs = |i: usize, j: usize| {
        let (x, y) = transform.pixel_to_crs(i as f64 - 0.5, j as f64 - 0.5);
        Point::new(x, y)
    };

    for start in 0..lat.out.len() {
        for d0 in [EAST, NORTH, WEST, SOUTH] {
            if lat.out[start] & !used[start] & (1 << d0) == 0 {
                continue;
            }
            let (i0, j0) = (start / (lat.cols + 1), start % (lat.cols + 1));
            let (pr, pc) = left_pixel(i0, j0, d0);
            let owner = components.label(pr, pc) as usize - 1;

            // Walk the cycle, keeping vertices where the heading changes.
            let mut corners: Vec<(usize, usize)> = Vec::new();
            let (mut i, mut j, mut d) = (i0, j0, d0);
            loop {
                let k = lat.idx(i, j);
                used[k] |= 1 << d;
                let (di, dj) = step(d);
                i = (i as isize + di) as usize;
                j = (j as isize + dj) as usize;
                let k = lat.idx(i, j);
                let nd = lat.next(k, d, components.connectivity);
                if nd != d {
                    corners.push((i, j));
                }
                if k == start && nd == d0 {
                    break;
                }
                d = nd;
            }
            let mut ring: Vec<Point> = corners.iter().map(|&(i, j)| to_crs(i, j)).collect();
            ring.push(ring[0]);
            if super::signed_area(&ring) > 0.0 {
                debug_assert!(exteriors[owner].is_none(), "component {owner} has two exteriors");
                exteriors[owner] = Some(ring);
            } else {
                holes[owner].push(ring);
            }
        }
    }

    let pixel_area = transform.pixel_area();
    let mut layer = VectorLayer::new(transform.crs.clone());
    for (k, (exterior, holes)) in exteriors.into_iter().zip(holes).enumerate() {
        let size = components.sizes[k];
        layer.features.push(Feature {
            id: k as u64 + 1,
            exterior: exterior.expect("every component has an exterior"),
            holes,
            area_m2: size as f64 * pixel_area,
            pixel_count: size,
        });
    }
    layer
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{rasterize_polygons, Mask};
    use crate::postproc::connected_components;
    use proptest::prelude::*;

    fn mask(rows: usize, cols: usize, bits: &[u8]) -> Mask {
        Mask::from_bits(rows, cols, bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    fn five_m() -> GeoTransform {
        GeoTransform::new(1002.5, 2997.5, 5.0, 5.0, "EPSG:3006").unwrap()
    }

    #[test]
    fn single_pixel_square() {
        let c = connected_components(&mask(1, 1, &[1]), Connectivity::Eight);
        let layer = vectorize(&c, &five_m());
        assert_eq!(layer.features.len(), 1);
        let f = &layer.features[0];
        let expect = [(1000.0, 2995.0), (1005.0, 2995.0), (1005.0, 3000.0), (1000.0, 3000.0)];
        let got: Vec<(f64, f64)> = f.exterior.iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(got.len(), 5);
        assert_eq!(got[0], got[4]);
        for e in expect {
            assert!(got.contains(&e), "{e:?} missing from {got:?}");
        }
        assert_eq!(f.area_m2, 25.0);
        assert_eq!(f.shoelace_area(), 25.0);
        assert!(f.holes.is_empty());
        assert_eq!(layer.crs, "EPSG:3006");
    }

    #[test]
    fn ring_with_hole() {
        let m = mask(3, 3, &[1, 1, 1, 1, 0, 1, 1, 1, 1]);
        let layer = vectorize(&connected_components(&m, Connectivity::Eight), &five_m());
        assert_eq!(layer.features.len(), 1);
        let f = &layer.features[0];
        assert_eq!(f.exterior.len(), 5);
        assert_eq!(f.holes.len(), 1);
        assert_eq!(f.holes[0].len(), 5);
        assert!(signed_area(&f.holes[0]) < 0.0);
        assert_eq!(f.area_m2, 200.0);
        assert_eq!(f.shoelace_area(), 200.0);
    }

    use super::super::signed_area;

    #[test]
    fn pinch_follows_connectivity() {
        let m = mask(2, 2, &[1, 0, 0, 1]);
        let eight = vectorize(&connected_components(&m, Connectivity::Eight), &five_m());
        assert_eq!(eight.features.len(), 1);
        assert_eq!(eight.features[0].exterior.len(), 9);
        let four = vectorize(&connected_components(&m, Connectivity::Four), &five_m());
        assert_eq!(four.features.len(), 2);
        assert!(four.features.iter().all(|f| f.exterior.len() == 5));
    }

    fn round_trips(m: &Mask, conn: Connectivity) -> Result<(), TestCaseError> {
        let t = five_m();
        let c = connected_components(m, conn);
        let layer = vectorize(&c, &t);
        prop_assert_eq!(layer.features.len(), c.count());
        let back = rasterize_polygons(&layer, &t, m.rows(), m.cols()).unwrap();
        prop_assert_eq!(&back.label, m);
        prop_assert_eq!(layer.total_area(), m.count() as f64 * 25.0);
        for f in &layer.features {
            prop_assert!(signed_area(&f.exterior) > 0.0);
            prop_assert!((f.shoelace_area() - f.area_m2).abs() <= 1e-6 * f.area_m2);
        }
        Ok(())
    }

    proptest! {
        #[test]
        fn raster_vector_round_trip(bits in proptest::collection::vec(any::<bool>(), 16 * 13), four in any::<bool>()) {
            let m = Mask::from_bits(16, 13, bits).unwrap();
            round_trips(&m, if four { Connectivity::Four } else { Connectivity::Eight })?;
        }
    }
}
