use super::{Grid4, Real, TensorError};

/// `x` for `x >= 0`, `slope * x` otherwise.
///
/// Panics if `slope` is outside `(0, 1)`.
pub fn leaky_relu<T: Real>(input: &Grid4<T>, slope: f64) -> Grid4<T> {
    assert!(
        slope > 0.0 && slope < 1.0,
        "leaky slope must lie in (0, 1), got {slope}"
    );
    let a = T::lit(slope);
    input.map(|x| if x >= T::zero() { x } else { a * x })
}

/// Backward of [`leaky_relu`], given the pre-activation input.
pub fn leaky_relu_backward<T: Real>(
    input: &Grid4<T>,
    grad_out: &Grid4<T>,
    slope: f64,
) -> Result<Grid4<T>, TensorError> {
    let a = T::lit(slope);
    input.zip_map(
        grad_out,
        "leaky_relu_backward",
        |x, g| if x >= T::zero() { g } else { a * g },
    )
}

#[inline]
fn sigmoid_scalar<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid<T: Real>(input: &Grid4<T>) -> Grid4<T> {
    input.map(sigmoid_scalar)
}

/// Backward of [`sigmoid`], given its output.
pub fn sigmoid_backward<T: Real>(output: &Grid4<T>, grad_out: &Grid4<T>) -> Result<Grid4<T>, TensorError> {
    output.zip_map(grad_out, "sigmoid_backward", |s, g| g * s * (T::one() - s))
}
