use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{GeoError, GeoTransform};

/// What the values of a [`GeoRaster`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterKind {
    /// 8-bit intensities stored as `0.0..=255.0`.
    Image,
    /// Probabilities in `[0, 1]`.
    Probability,
}

/// Georeferenced pixel grid, channel-major (`channel, row, col`).
#[derive(Debug, Clone, PartialEq)]
pub struct GeoRaster {
    channels: usize,
    rows: usize,
    cols: usize,
    values: Vec<f32>,
    pub transform: GeoTransform,
    kind: RasterKind,
}

impl GeoRaster {
    pub fn new(
        channels: usize,
        rows: usize,
        cols: usize,
        values: Vec<f32>,
        transform: GeoTransform,
        kind: RasterKind,
    ) -> Result<Self, GeoError> {
        if channels != 1 && channels != 3 {
            return Err(GeoError::Format(format!("expected 1 or 3 channels, got {channels}")));
        }
        if rows == 0 || cols == 0 {
            return Err(GeoError::Format(format!("empty raster {rows}x{cols}")));
        }
        if values.len() != channels * rows * cols {
            return Err(GeoError::Format(format!(
                "{channels}x{rows}x{cols} raster needs {} values, got {}",
                channels * rows * cols,
                values.len()
            )));
        }
        let max = match kind {
            RasterKind::Image => 255.0,
            RasterKind::Probability => 1.0,
        };
        if let Some(v) = values.iter().find(|v| !(0.0..=max).contains(*v)) {
            return Err(GeoError::Format(format!("value {v} outside [0, {max}]")));
        }
        Ok(GeoRaster {
            channels,
            rows,
            cols,
            values,
            transform,
            kind,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> RasterKind {
        self.kind
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.values[(channel * self.rows + row) * self.cols + col]
    }
}

/// Binary raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize) -> Self {
        Mask {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: bool) -> Self {
        Mask {
            rows,
            cols,
            bits: vec![value; rows * cols],
        }
    }

    pub fn from_bits(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self, GeoError> {
        if bits.len() != rows * cols {
            return Err(GeoError::Format(format!(
                "{rows}x{cols} mask needs {} bits, got {}",
                rows * cols,
                bits.len()
            )));
        }
        Ok(Mask { rows, cols, bits })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.cols + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_dims(&self, other: &Mask) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

/// Wetland mask plus validity mask sharing one geotransform. Invalid
/// pixels always carry label 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRaster {
    pub label: Mask,
    pub valid: Mask,
    pub transform: GeoTransform,
}

impl LabelRaster {
    pub fn new(label: Mask, valid: Mask, transform: GeoTransform) -> Result<Self, GeoError> {
        if !label.same_dims(&valid) {
            return Err(GeoError::Format(String::from(
                "label and validity masks differ in size",
            )));
        }
        let mut label = label;
        for (l, &v) in label.bits.iter_mut().zip(&valid.bits) {
            *l &= v;
        }
        Ok(LabelRaster {
            label,
            valid,
            transform,
        })
    }

    pub fn rows(&self) -> usize {
        self.label.rows()
    }

    pub fn cols(&self) -> usize {
        self.label.cols()
    }
}
