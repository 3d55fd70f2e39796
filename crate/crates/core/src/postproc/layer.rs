use alloc::string::String;
use alloc::vec::Vec;

use crate::geo::BBox;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Shoelace area of a closed ring: positive when counterclockwise.
pub fn signed_area(ring: &[Point]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    // Shift to the first vertex to keep large CRS offsets from eating precision.
    let o = ring[0];
    let mut twice = 0.0;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        twice += (a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y);
    }
    twice / 2.0
}

/// One polygon: a counterclockwise exterior ring and clockwise holes, all
/// closed (first vertex repeated at the end).
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub id: u64,
    pub exterior: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
    /// Area in square CRS units (m² for metric CRSs).
    pub area_m2: f64,
    pub pixel_count: u64,
}

impl Feature {
    /// Exterior area minus hole areas, from the ring geometry.
    pub fn shoelace_area(&self) -> f64 {
        signed_area(&self.exterior).abs() - self.holes.iter().map(|h| signed_area(h).abs()).sum::<f64>()
    }

    pub fn rings(&self) -> impl Iterator<Item = &[Point]> {
        core::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }
}

/// A polygon layer in a single planar CRS.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorLayer {
    pub crs: String,
    pub features: Vec<Feature>,
    /// Region the features claim to describe exhaustively; `None` means the whole raster.
    pub valid_extent: Option<BBox>,
}

impl VectorLayer {
    pub fn new(crs: impl Into<String>) -> Self {
        VectorLayer {
            crs: crs.into(),
            features: Vec::new(),
            valid_extent: None,
        }
    }

    pub fn total_area(&self) -> f64 {
        self.features.iter().fold(0.0, |acc, f| acc + f.area_m2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn shoelace_orientation() {
        let ccw = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
            Point::new(0.0, 0.0),
        ];
        assert_eq!(signed_area(&ccw), 4.0);
        let cw: Vec<Point> = ccw.iter().rev().copied().collect();
        assert_eq!(signed_area(&cw), -4.0);
        let f = Feature {
            id: 1,
            exterior: ccw,
            holes: vec![vec![
                Point::new(0.5, 0.5),
                Point::new(0.5, 1.5),
                Point::new(1.5, 1.5),
                Point::new(1.5, 0.5),
                Point::new(0.5, 0.5),
            ]],
            area_m2: 3.0,
            pixel_count: 3,
        };
        assert_eq!(f.shoelace_area(), 3.0);
    }
}
