use num_traits::Float;

use super::{Grid4, Real, TensorError};

/// Probabilities are clamped to `[ε, 1-ε]` before taking logs.
pub const BCE_EPSILON: f64 = 1e-7;

/// Mean binary cross-entropy over valid pixels, with its gradient.
///
/// Pixels whose `validity` is zero contribute to neither loss nor gradient.
/// The loss is accumulated in `f64` regardless of `T`.
pub fn bce_loss<T: Real>(
    prob: &Grid4<T>,
    label: &Grid4<T>,
    validity: &Grid4<T>,
) -> Result<(f64, Grid4<T>), TensorError> {
    label.expect_dims(prob.dims(), "bce_loss")?;
    validity.expect_dims(prob.dims(), "bce_loss")?;
    let count = validity.as_slice().iter().filter(|&&v| v != T::zero()).count();
    if count == 0 {
        return Err(TensorError::EmptyLossSupport);
    }
    let inv = 1.0 / count as f64;
    let mut total = 0.0f64;
    let mut grad = Grid4::zeros(prob.dims())?;
    let it = prob
        .as_slice()
        .iter()
        .zip(label.as_slice())
        .zip(validity.as_slice())
        .zip(grad.as_mut_slice());
    for (((&p, &y), &v), g) in it {
        if v == T::zero() {
            continue;
        }
        let raw = p.as_f64();
        let p = raw.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
        let y = y.as_f64();
        total -= y * Float::ln(p) + (1.0 - y) * Float::ln(1.0 - p);
        // The clamp is flat outside its range.
        if raw > BCE_EPSILON && raw < 1.0 - BCE_EPSILON {
            *g = T::lit(-(y / p - (1.0 - y) / (1.0 - p)) * inv);
        }
    }
    Ok((total * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn half_probability_costs_ln2() {
        let p = Grid4::from_vec([1, 1, 1, 1], vec![0.5f64]).unwrap();
        let y = Grid4::from_vec([1, 1, 1, 1], vec![1.0]).unwrap();
        let v = y.clone();
        let (loss, g) = bce_loss(&p, &y, &v).unwrap();
        assert!((loss - core::f64::consts::LN_2).abs() < 1e-12);
        assert!((g.as_slice()[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_is_near_zero() {
        let y = Grid4::from_vec([1, 1, 2, 2], vec![0.0f64, 1.0, 1.0, 0.0]).unwrap();
        let v = Grid4::filled([1, 1, 2, 2], 1.0).unwrap();
        let (loss, _) = bce_loss(&y, &y, &v).unwrap();
        assert!(loss <= 1e-6);
    }

    #[test]
    fn masked_pixels_are_ignored() {
        let p = Grid4::from_vec([1, 1, 1, 4], vec![0.2f64, 0.7, 0.9, 0.01]).unwrap();
        let y = Grid4::from_vec([1, 1, 1, 4], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let v = Grid4::from_vec([1, 1, 1, 4], vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let (loss, g) = bce_loss(&p, &y, &v).unwrap();
        let sub_p = Grid4::from_vec([1, 1, 1, 2], vec![0.2f64, 0.7]).unwrap();
        let sub_y = Grid4::from_vec([1, 1, 1, 2], vec![0.0, 1.0]).unwrap();
        let sub_v = Grid4::filled([1, 1, 1, 2], 1.0).unwrap();
        let (sub_loss, sub_g) = bce_loss(&sub_p, &sub_y, &sub_v).unwrap();
        assert_eq!(loss, sub_loss);
        assert_eq!(&g.as_slice()[..2], sub_g.as_slice());
        assert_eq!(&g.as_slice()[2..], &[0.0, 0.0]);
    }

    #[test]
    fn empty_support_is_an_error() {
        let p = Grid4::filled([1, 1, 2, 2], 0.5f32).unwrap();
        let z = Grid4::zeros([1, 1, 2, 2]).unwrap();
        assert_eq!(bce_loss(&p, &z, &z).unwrap_err(), TensorError::EmptyLossSupport);
    }
}
