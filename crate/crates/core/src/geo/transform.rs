use alloc::string::String;

use super::GeoError;

/// Axis-aligned rectangle in CRS units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        BBox {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed containment test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

/// North-up affine mapping between pixel indices and CRS coordinates.
///
/// `origin` is the center of the top-left pixel; row indices grow
/// southward, so `y = origin_y - row * pixel_size_y`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeoTransform {
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_size_x: f64,
    pub pixel_size_y: f64,
    pub crs: String,
}

impl GeoTransform {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        pixel_size_x: f64,
        pixel_size_y: f64,
        crs: impl Into<String>,
    ) -> Result<Self, GeoError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(pixel_size_x) || !ok(pixel_size_y) || !origin_x.is_finite() || !origin_y.is_finite() {
            return Err(GeoError::InvalidTransform(alloc::format!(
                "pixel sizes must be finite and positive, got {pixel_size_x} x {pixel_size_y}"
            )));
        }
        Ok(GeoTransform {
            origin_x,
            origin_y,
            pixel_size_x,
            pixel_size_y,
            crs: crs.into(),
        })
    }

    /// From the six world-file parameters in file order
    /// `[x size, y rotation, x rotation, -y size, origin x, origin y]`.
    pub fn from_world_params(p: [f64; 6], crs: impl Into<String>) -> Result<Self, GeoError> {
        if p[1] != 0.0 || p[2] != 0.0 {
            return Err(GeoError::UnsupportedRotation);
        }
        if p[3] >= 0.0 {
            return Err(GeoError::InvalidTransform(alloc::format!(
                "y pixel size must be negative in a north-up world file, got {}",
                p[3]
            )));
        }
        GeoTransform::new(p[4], p[5], p[0], -p[3], crs)
    }

    pub fn world_params(&self) -> [f64; 6] {
        [
            self.pixel_size_x,
            0.0,
            0.0,
            -self.pixel_size_y,
            self.origin_x,
            self.origin_y,
        ]
    }

    /// CRS coordinates of the center of pixel `(row, col)`; fractional indices allowed.
    pub fn pixel_to_crs(&self, row: f64, col: f64) -> (f64, f64) {
        (
            self.origin_x + col * self.pixel_size_x,
            self.origin_y - row * self.pixel_size_y,
        )
    }

    /// Inverse of [`pixel_to_crs`](Self::pixel_to_crs): fractional `(row, col)`.
    pub fn crs_to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (self.origin_y - y) / self.pixel_size_y,
            (x - self.origin_x) / self.pixel_size_x,
        )
    }

    pub fn pixel_area(&self) -> f64 {
        self.pixel_size_x * self.pixel_size_y
    }

    /// Outer pixel-edge bounds of a `rows × cols` raster.
    pub fn bounds(&self, rows: usize, cols: usize) -> BBox {
        let (x0, y0) = self.pixel_to_crs(-0.5, -0.5);
        let (x1, y1) = self.pixel_to_crs(rows as f64 - 0.5, cols as f64 - 0.5);
        BBox::new(x0, y1, x1, y0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn world_file_convention() {
        let t = GeoTransform::from_world_params([5.0, 0.0, 0.0, -5.0, 100.0, 200.0], "EPSG:3006").unwrap();
        assert_eq!(t.pixel_to_crs(0.0, 0.0), (100.0, 200.0));
        assert_eq!(t.pixel_to_crs(1.0, 1.0), (105.0, 195.0));
        assert_eq!(t.world_params(), [5.0, 0.0, 0.0, -5.0, 100.0, 200.0]);
        assert_eq!(t.bounds(2, 2), BBox::new(97.5, 192.5, 107.5, 202.5));
    }

    #[test]
    fn rotation_rejected() {
        assert_eq!(
            GeoTransform::from_world_params([5.0, 0.1, 0.0, -5.0, 0.0, 0.0], ""),
            Err(GeoError::UnsupportedRotation)
        );
        assert!(GeoTransform::from_world_params([5.0, 0.0, 0.0, 5.0, 0.0, 0.0], "").is_err());
        assert!(GeoTransform::new(0.0, 0.0, 0.0, 1.0, "").is_err());
    }

    #[test]
    fn inverse_composition_on_integer_pixels() {
        let t = GeoTransform::new(512_345.5, 6_400_001.25, 2.5, 2.5, "").unwrap();
        for row in (0..5000).step_by(37) {
            for col in (0..5000).step_by(41) {
                let (x, y) = t.pixel_to_crs(row as f64, col as f64);
                let (r, c) = t.crs_to_pixel(x, y);
                assert_eq!((r.round() as usize, c.round() as usize), (row, col));
                assert!((r - row as f64).abs() < 1e-6 && (c - col as f64).abs() < 1e-6);
            }
        }
    }
}
