use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Index, IndexMut};

use num_traits::Float;

use super::TensorError;

/// Scalar type usable for network math.
///
/// Implemented for `f32` (training) and `f64` (gradient checks). The GEMM
/// entry point lets the convolution dispatch to the matching kernel.
pub trait Real: Float + Default + Debug + Send + Sync + core::iter::Sum + 'static {
    /// `C = alpha * A * B + beta * C` over strided row/column views.
    ///
    /// # Safety
    /// The pointers and strides must describe valid, non-aliasing (for `c`)
    /// matrices of the given sizes.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f32 {
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }

    #[inline]
    fn lit(x: f64) -> f32 {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }

    #[inline]
    fn lit(x: f64) -> f64 {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Dense 4-axis array in (batch, channel, row, col) order, row-major.
#[derive(Clone, PartialEq)]
pub struct Grid4<T> {
    dims: [usize; 4],
    data: Vec<T>,
}

impl<T: Debug> Debug for Grid4<T> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Grid4")
            .field("dims", &self.dims)
            .field("len", &self.data.len())
            .finish()
    }
}

fn check_dims(dims: [usize; 4]) -> Result<usize, TensorError> {
    if dims.contains(&0) {
        return Err(TensorError::Shape {
            op: "grid",
            msg: format!("all dims must be >= 1, got {dims:?}"),
        });
    }
    Ok(dims.iter().product())
}

impl<T: Copy + Default> Grid4<T> {
    pub fn zeros(dims: [usize; 4]) -> Result<Self, TensorError> {
        let len = check_dims(dims)?;
        Ok(Grid4 {
            dims,
            data: vec![T::default(); len],
        })
    }

    pub fn filled(dims: [usize; 4], value: T) -> Result<Self, TensorError> {
        let len = check_dims(dims)?;
        Ok(Grid4 {
            dims,
            data: vec![value; len],
        })
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<T>) -> Result<Self, TensorError> {
        let len = check_dims(dims)?;
        if data.len() != len {
            return Err(TensorError::Shape {
                op: "grid",
                msg: format!("dims {dims:?} need {len} values, got {}", data.len()),
            });
        }
        Ok(Grid4 { dims, data })
    }

    pub fn from_fn(dims: [usize; 4], mut f: impl FnMut([usize; 4]) -> T) -> Result<Self, TensorError> {
        let len = check_dims(dims)?;
        let mut data = Vec::with_capacity(len);
        for n in 0..dims[0] {
            for c in 0..dims[1] {
                for y in 0..dims[2] {
                    for x in 0..dims[3] {
                        data.push(f([n, c, y, x]));
                    }
                }
            }
        }
        Ok(Grid4 { dims, data })
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> Grid4<U> {
        Grid4 {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two equally shaped grids.
    pub fn zip_map<U: Copy + Default, V: Copy + Default>(
        &self,
        other: &Grid4<U>,
        op: &'static str,
        f: impl Fn(T, U) -> V,
    ) -> Result<Grid4<V>, TensorError> {
        self.expect_dims(other.dims, op)?;
        Ok(Grid4 {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Copy of batch items `items` stacked along the batch axis.
    pub fn stack(items: &[&Grid4<T>]) -> Result<Self, TensorError> {
        let first = items.first().ok_or_else(|| TensorError::Shape {
            op: "stack",
            msg: String::from("no items"),
        })?;
        let [_, c, h, w] = first.dims;
        let mut data = Vec::with_capacity(items.iter().map(|g| g.len()).sum());
        let mut n = 0;
        for g in items {
            if g.dims[1..] != [c, h, w] {
                return Err(TensorError::Shape {
                    op: "stack",
                    msg: format!("item dims {:?} differ from {:?}", g.dims, first.dims),
                });
            }
            n += g.dims[0];
            data.extend_from_slice(&g.data);
        }
        Grid4::from_vec([n, c, h, w], data)
    }

    /// The single batch item `n` as a 1×c×h×w grid.
    pub fn item(&self, n: usize) -> Grid4<T> {
        let stride = self.item_len();
        Grid4 {
            dims: [1, self.dims[1], self.dims[2], self.dims[3]],
            data: self.data[n * stride..(n + 1) * stride].to_vec(),
        }
    }

    /// Spatial crop `[top, top+rows) × [left, left+cols)` on every batch item and channel.
    pub fn crop(&self, top: usize, left: usize, rows: usize, cols: usize) -> Result<Grid4<T>, TensorError> {
        let [n, c, h, w] = self.dims;
        if top + rows > h || left + cols > w {
            return Err(TensorError::Shape {
                op: "crop",
                msg: format!("window {rows}x{cols} at ({top},{left}) exceeds {h}x{w}"),
            });
        }
        Grid4::from_fn([n, c, rows, cols], |[b, ch, y, x]| self[[b, ch, top + y, left + x]])
    }
}

impl<T> Grid4<T> {
    #[inline]
    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Values per batch item (c·h·w).
    #[inline]
    pub fn item_len(&self) -> usize {
        self.dims[1] * self.dims[2] * self.dims[3]
    }

    #[inline]
    fn offset(&self, [n, c, y, x]: [usize; 4]) -> usize {
        debug_assert!(n < self.dims[0] && c < self.dims[1] && y < self.dims[2] && x < self.dims[3]);
        ((n * self.dims[1] + c) * self.dims[2] + y) * self.dims[3] + x
    }

    pub fn expect_dims(&self, dims: [usize; 4], op: &'static str) -> Result<(), TensorError> {
        if self.dims != dims {
            return Err(TensorError::Shape {
                op,
                msg: format!("expected dims {dims:?}, got {:?}", self.dims),
            });
        }
        Ok(())
    }
}

impl<T: Float> Grid4<T> {
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T> Index<[usize; 4]> for Grid4<T> {
    type Output = T;

    #[inline]
    fn index(&self, idx: [usize; 4]) -> &T {
        &self.data[self.offset(idx)]
    }
}

impl<T> IndexMut<[usize; 4]> for Grid4<T> {
    #[inline]
    fn index_mut(&mut self, idx: [usize; 4]) -> &mut T {
        let o = self.offset(idx);
        &mut self.data[o]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dims_rejected() {
        assert!(Grid4::<f32>::zeros([1, 0, 2, 2]).is_err());
        assert!(Grid4::<f32>::from_vec([1, 1, 2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn indexing_is_row_major() {
        let g = Grid4::from_fn([2, 3, 4, 5], |[n, c, y, x]| (n * 1000 + c * 100 + y * 10 + x) as f64).unwrap();
        assert_eq!(g[[1, 2, 3, 4]], 1234.0);
        assert_eq!(g.as_slice()[5], 10.0);
        assert_eq!(g.item(1)[[0, 0, 0, 1]], 1001.0);
    }

    #[test]
    fn crop_and_stack() {
        let g = Grid4::from_fn([1, 1, 4, 4], |[_, _, y, x]| (y * 4 + x) as f32).unwrap();
        let c = g.crop(1, 1, 2, 2).unwrap();
        assert_eq!(c.as_slice(), &[5.0, 6.0, 9.0, 10.0]);
        assert!(g.crop(3, 3, 2, 2).is_err());
        let s = Grid4::stack(&[&c, &c]).unwrap();
        assert_eq!(s.dims(), [2, 1, 2, 2]);
    }
}
