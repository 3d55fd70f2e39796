use alloc::vec;
use alloc::vec::Vec;

use crate::geo::{GeoRaster, Mask};

pub const DEFAULT_CUT: f32 = 0.5;

/// Mask of pixels whose first-channel value is strictly greater than `cut`.
pub fn threshold(prob: &GeoRaster, cut: f32) -> Mask {
    let n = prob.rows() * prob.cols();
    let bits = prob.values()[..n].iter().map(|&v| v > cut).collect();
    Mask::from_bits(prob.rows(), prob.cols(), bits).expect("dims from raster")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Connectivity {
    #[default]
    Eight,
    Four,
}

/// Labeled raster: 0 is background, components are `1..=count()` numbered
/// in row-major order of their first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub rows: usize,
    pub cols: usize,
    pub labels: Vec<u32>,
    /// Pixel count of component `k` at index `k - 1`.
    pub sizes: Vec<u64>,
    pub connectivity: Connectivity,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    #[inline]
    pub fn label(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.cols + col]
    }

    pub fn foreground(&self) -> Mask {
        let bits = self.labels.iter().map(|&l| l != 0).collect();
        Mask::from_bits(self.rows, self.cols, bits).expect("dims match")
    }
}

const FOUR: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
const EIGHT: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

pub fn connected_components(mask: &Mask, connectivity: Connectivity) -> Components {
    let (rows, cols) = (mask.rows(), mask.cols());
    let offsets: &[(isize, isize)] = match connectivity {
        Connectivity::Eight => &EIGHT,
        Connectivity::Four => &FOUR,
    };
    let mut labels = vec![0u32; rows * cols];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..rows * cols {
        if !mask.bits()[start] || labels[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        let mut size = 0u64;
        labels[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (r, c) = ((i / cols) as isize, (i % cols) as isize);
            for &(dr, dc) in offsets {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                    continue;
                }
                let j = nr as usize * cols + nc as usize;
                if mask.bits()[j] && labels[j] == 0 {
                    labels[j] = id;
                    stack.push(j);
                }
            }
        }
        sizes.push(size);
    }
    Components {
        rows,
        cols,
        labels,
        sizes,
        connectivity,
    }
}
