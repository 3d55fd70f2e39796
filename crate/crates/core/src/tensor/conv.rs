use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Grid4, Real, TensorError};

/// Square convolution kernel: weights `(out, in, k, k)` plus one bias per
/// output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel<T> {
    weights: Grid4<T>,
    bias: Vec<T>,
}

impl<T: Real> ConvKernel<T> {
    pub fn new(weights: Grid4<T>, bias: Vec<T>) -> Result<Self, TensorError> {
        let [out, _, kh, kw] = weights.dims();
        if kh != kw {
            return Err(TensorError::Shape {
                op: "conv kernel",
                msg: format!("kernel must be square, got {kh}x{kw}"),
            });
        }
        if bias.len() != out {
            return Err(TensorError::Shape {
                op: "conv kernel",
                msg: format!("{out} output channels but {} biases", bias.len()),
            });
        }
        Ok(ConvKernel { weights, bias })
    }

    pub fn zeros(out_channels: usize, in_channels: usize, size: usize) -> Result<Self, TensorError> {
        ConvKernel::new(
            Grid4::zeros([out_channels, in_channels, size, size])?,
            vec![T::zero(); out_channels],
        )
    }
}

impl<T> ConvKernel<T> {
    pub fn out_channels(&self) -> usize {
        self.weights.dims()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weights.dims()[1]
    }

    pub fn size(&self) -> usize {
        self.weights.dims()[2]
    }

    pub fn weights(&self) -> &Grid4<T> {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut Grid4<T> {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [T] {
        &mut self.bias
    }

    pub fn parts_mut(&mut self) -> (&mut Grid4<T>, &mut [T]) {
        (&mut self.weights, &mut self.bias)
    }

    pub fn into_parts(self) -> (Grid4<T>, Vec<T>) {
        (self.weights, self.bias)
    }
}

/// Gradients of a valid convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<T> {
    pub input: Grid4<T>,
    pub weights: Grid4<T>,
    pub bias: Vec<T>,
}

// Upper bound on im2col buffer elements; output rows are processed in chunks.
const COL_BUDGET: usize = 1 << 20;

struct Geometry {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    oc: usize,
    oh: usize,
    ow: usize,
}

impl Geometry {
    fn of<T: Real>(input: &Grid4<T>, kernel: &ConvKernel<T>, op: &'static str) -> Result<Self, TensorError> {
        let [n, c, h, w] = input.dims();
        let k = kernel.size();
        if c != kernel.in_channels() {
            return Err(TensorError::Shape {
                op,
                msg: format!("input has {c} channels, kernel expects {}", kernel.in_channels()),
            });
        }
        if h < k || w < k {
            return Err(TensorError::Shape {
                op,
                msg: format!("input {h}x{w} smaller than kernel {k}x{k}"),
            });
        }
        Ok(Geometry {
            n,
            c,
            h,
            w,
            k,
            oc: kernel.out_channels(),
            oh: h - k + 1,
            ow: w - k + 1,
        })
    }

    fn ckk(&self) -> usize {
        self.c * self.k * self.k
    }

    fn chunk_rows(&self) -> usize {
        (COL_BUDGET / (self.ckk() * self.ow)).clamp(1, self.oh)
    }

    /// Unfold output rows `[r0, r0+rows)` of one batch item into `cols`,
    /// laid out as `(c·k·k) × (rows·ow)`.
    fn im2col<T: Real>(&self, item: &[T], r0: usize, rows: usize, cols: &mut [T]) {
        let (k, h, w, ow) = (self.k, self.h, self.w, self.ow);
        let ncols = rows * ow;
        for ci in 0..self.c {
            for ky in 0..k {
                for kx in 0..k {
                    let q = (ci * k + ky) * k + kx;
                    let dst = &mut cols[q * ncols..(q + 1) * ncols];
                    for yy in 0..rows {
                        let src = ci * h * w + (r0 + yy + ky) * w + kx;
                        dst[yy * ow..(yy + 1) * ow].copy_from_slice(&item[src..src + ow]);
                    }
                }
            }
        }
    }

    fn col2im_add<T: Real>(&self, cols: &[T], r0: usize, rows: usize, item: &mut [T]) {
        let (k, h, w, ow) = (self.k, self.h, self.w, self.ow);
        let ncols = rows * ow;
        for ci in 0..self.c {
            for ky in 0..k {
                for kx in 0..k {
                    let q = (ci * k + ky) * k + kx;
                    let src = &cols[q * ncols..(q + 1) * ncols];
                    for yy in 0..rows {
                        let dst = ci * h * w + (r0 + yy + ky) * w + kx;
                        for (d, &s) in item[dst..dst + ow].iter_mut().zip(&src[yy * ow..(yy + 1) * ow]) {
                            *d = *d + s;
                        }
                    }
                }
            }
        }
    }
}

/// Valid (unpadded, stride 1) 2-D cross-correlation.
///
/// Output dims are `(n, out_channels, h-k+1, w-k+1)`.
pub fn conv2d_valid<T: Real>(input: &Grid4<T>, kernel: &ConvKernel<T>) -> Result<Grid4<T>, TensorError> {
    let g = Geometry::of(input, kernel, "conv2d_valid")?;
    let plane = g.oh * g.ow;
    let mut out = Grid4::zeros([g.n, g.oc, g.oh, g.ow])?;
    for (o, chunk) in out.as_mut_slice().chunks_mut(plane).enumerate() {
        chunk.fill(kernel.bias()[o % g.oc]);
    }
    let ckk = g.ckk();
    let step = g.chunk_rows();
    let mut cols = vec![T::zero(); ckk * step * g.ow];
    let in_len = input.item_len();
    let out_len = g.oc * plane;
    for b in 0..g.n {
        let item = &input.as_slice()[b * in_len..(b + 1) * in_len];
        let out_item = &mut out.as_mut_slice()[b * out_len..(b + 1) * out_len];
        let mut r0 = 0;
        while r0 < g.oh {
            let rows = step.min(g.oh - r0);
            let ncols = rows * g.ow;
            g.im2col(item, r0, rows, &mut cols);
            // SAFETY: all views lie inside their buffers; out_item does not alias.
            unsafe {
                T::gemm(
                    g.oc,
                    ckk,
                    ncols,
                    T::one(),
                    kernel.weights().as_slice().as_ptr(),
                    ckk as isize,
                    1,
                    cols.as_ptr(),
                    ncols as isize,
                    1,
                    T::one(),
                    out_item.as_mut_ptr().add(r0 * g.ow),
                    plane as isize,
                    1,
                );
            }
            r0 += rows;
        }
    }
    Ok(out)
}

/// Analytic gradients of [`conv2d_valid`] with respect to input, weights and bias.
pub fn conv2d_backward<T: Real>(
    input: &Grid4<T>,
    kernel: &ConvKernel<T>,
    grad_out: &Grid4<T>,
) -> Result<ConvGrads<T>, TensorError> {
    let (grad_input, weights, bias) = conv2d_backward_parts(input, kernel, grad_out, true)?;
    Ok(ConvGrads {
        input: grad_input.expect("requested"),
        weights,
        bias,
    })
}

pub(crate) type ConvGradParts<T> = (Option<Grid4<T>>, Grid4<T>, Vec<T>);

pub(crate) fn conv2d_backward_parts<T: Real>(
    input: &Grid4<T>,
    kernel: &ConvKernel<T>,
    grad_out: &Grid4<T>,
    want_input: bool,
) -> Result<ConvGradParts<T>, TensorError> {
    let g = Geometry::of(input, kernel, "conv2d_backward")?;
    grad_out.expect_dims([g.n, g.oc, g.oh, g.ow], "conv2d_backward")?;
    let plane = g.oh * g.ow;
    let ckk = g.ckk();

    let mut grad_w = Grid4::zeros(kernel.weights().dims())?;
    let mut grad_b = vec![T::zero(); g.oc];
    for (o, chunk) in grad_out.as_slice().chunks(plane).enumerate() {
        let s = chunk.iter().fold(T::zero(), |acc, &v| acc + v);
        grad_b[o % g.oc] = grad_b[o % g.oc] + s;
    }
    let mut grad_in = if want_input {
        Some(Grid4::zeros(input.dims())?)
    } else {
        None
    };

    let step = g.chunk_rows();
    let mut cols = vec![T::zero(); ckk * step * g.ow];
    let mut gcols = if want_input {
        vec![T::zero(); ckk * step * g.ow]
    } else {
        Vec::new()
    };
    let in_len = input.item_len();
    let out_len = g.oc * plane;
    for b in 0..g.n {
        let item = &input.as_slice()[b * in_len..(b + 1) * in_len];
        let go = &grad_out.as_slice()[b * out_len..(b + 1) * out_len];
        let mut r0 = 0;
        while r0 < g.oh {
            let rows = step.min(g.oh - r0);
            let ncols = rows * g.ow;
            g.im2col(item, r0, rows, &mut cols);
            // SAFETY: strided views stay inside `go`, `cols`, `grad_w` and `gcols`.
            unsafe {
                // dW[oc, ckk] += G[oc, ncols] · colsᵀ
                T::gemm(
                    g.oc,
                    ncols,
                    ckk,
                    T::one(),
                    go.as_ptr().add(r0 * g.ow),
                    plane as isize,
                    1,
                    cols.as_ptr(),
                    1,
                    ncols as isize,
                    T::one(),
                    grad_w.as_mut_slice().as_mut_ptr(),
                    ckk as isize,
                    1,
                );
                if want_input {
                    // dcols[ckk, ncols] = Wᵀ · G
                    T::gemm(
                        ckk,
                        g.oc,
                        ncols,
                        T::one(),
                        kernel.weights().as_slice().as_ptr(),
                        1,
                        ckk as isize,
                        go.as_ptr().add(r0 * g.ow),
                        plane as isize,
                        1,
                        T::zero(),
                        gcols.as_mut_ptr(),
                        ncols as isize,
                        1,
                    );
                }
            }
            if let Some(gi) = grad_in.as_mut() {
                let gi_item = &mut gi.as_mut_slice()[b * in_len..(b + 1) * in_len];
                g.col2im_add(&gcols[..ckk * ncols], r0, rows, gi_item);
            }
            r0 += rows;
        }
    }
    Ok((grad_in, grad_w, grad_b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(w: Grid4<f64>, b: Vec<f64>) -> ConvKernel<f64> {
        ConvKernel::new(w, b).unwrap()
    }

    #[test]
    fn constant_input_gives_constant_output() {
        let x = Grid4::filled([1, 1, 3, 3], 1.0).unwrap();
        let k = kernel(Grid4::filled([1, 1, 2, 2], 1.0).unwrap(), vec![0.0]);
        let y = conv2d_valid(&x, &k).unwrap();
        assert_eq!(y.dims(), [1, 1, 2, 2]);
        assert!(y.as_slice().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn diagonal_kernel_hand_case() {
        let x = Grid4::from_vec([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let k = kernel(
            Grid4::from_vec([1, 1, 2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            vec![0.0],
        );
        let y = conv2d_valid(&x, &k).unwrap();
        assert_eq!(y.dims(), [1, 1, 1, 1]);
        assert_eq!(y.as_slice(), &[5.0]);
    }

    #[test]
    fn bias_is_added_once() {
        let x = Grid4::filled([2, 1, 3, 3], 0.0).unwrap();
        let k = kernel(Grid4::filled([2, 1, 3, 3], 1.0).unwrap(), vec![0.5, -1.5]);
        let y = conv2d_valid(&x, &k).unwrap();
        assert_eq!(y.as_slice(), &[0.5, -1.5, 0.5, -1.5]);
    }

    #[test]
    fn shape_errors() {
        let x = Grid4::<f64>::zeros([1, 2, 4, 4]).unwrap();
        let k = ConvKernel::<f64>::zeros(1, 3, 3).unwrap();
        let err = conv2d_valid(&x, &k).unwrap_err();
        assert!(matches!(err, TensorError::Shape { .. }));
        let k = ConvKernel::<f64>::zeros(1, 2, 5).unwrap();
        assert!(conv2d_valid(&x, &k).is_err());
        let k = ConvKernel::<f64>::zeros(1, 2, 3).unwrap();
        let bad = Grid4::<f64>::zeros([1, 1, 3, 3]).unwrap();
        assert!(conv2d_backward(&x, &k, &bad).is_err());
        assert!(ConvKernel::new(Grid4::<f64>::zeros([1, 1, 3, 2]).unwrap(), vec![0.0]).is_err());
        assert!(ConvKernel::new(Grid4::<f64>::zeros([2, 1, 3, 3]).unwrap(), vec![0.0]).is_err());
    }

    #[test]
    fn zero_grad_out_gives_zero_grads() {
        let x = Grid4::from_fn([2, 2, 5, 5], |[n, c, y, x]| (n + c * 3 + y * 7 + x) as f64 * 0.1).unwrap();
        let k = kernel(Grid4::filled([3, 2, 3, 3], 0.7).unwrap(), vec![1.0, 2.0, 3.0]);
        let go = Grid4::zeros([2, 3, 3, 3]).unwrap();
        let g = conv2d_backward(&x, &k, &go).unwrap();
        assert!(g.input.as_slice().iter().all(|&v| v == 0.0));
        assert!(g.weights.as_slice().iter().all(|&v| v == 0.0));
        assert!(g.bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_chain_rule() {
        let x = Grid4::from_vec([1, 1, 1, 1], vec![3.0]).unwrap();
        let k = kernel(Grid4::from_vec([1, 1, 1, 1], vec![-2.0]).unwrap(), vec![0.25]);
        let go = Grid4::from_vec([1, 1, 1, 1], vec![0.5]).unwrap();
        let g = conv2d_backward(&x, &k, &go).unwrap();
        assert_eq!(g.weights.as_slice(), &[3.0 * 0.5]);
        assert_eq!(g.input.as_slice(), &[-2.0 * 0.5]);
        assert_eq!(g.bias, vec![0.5]);
    }

    #[test]
    fn chunked_path_matches_single_chunk() {
        // Wide enough that the im2col budget forces several row chunks.
        let x = Grid4::from_fn([1, 4, 200, 200], |[_, c, y, x]| {
            ((c * 31 + y * 7 + x * 3) % 17) as f32 - 8.0
        })
        .unwrap();
        let w = Grid4::from_fn([2, 4, 9, 9], |[o, c, y, x]| ((o + c + y * 2 + x) % 5) as f32 - 2.0).unwrap();
        let k = ConvKernel::new(w, vec![0.0, 1.0]).unwrap();
        let geo = Geometry::of(&x, &k, "t").unwrap();
        assert!(geo.chunk_rows() < geo.oh);
        let y = conv2d_valid(&x, &k).unwrap();
        // Spot-check a few outputs against direct summation (exact in small integers).
        for &(o, r, c) in &[(0usize, 0usize, 0usize), (1, 100, 37), (0, 191, 191), (1, 57, 190)] {
            let mut acc = k.bias()[o];
            for ci in 0..4 {
                for ky in 0..9 {
                    for kx in 0..9 {
                        acc += k.weights()[[o, ci, ky, kx]] * x[[0, ci, r + ky, c + kx]];
                    }
                }
            }
            assert_eq!(y[[0, o, r, c]], acc);
        }
    }
}
