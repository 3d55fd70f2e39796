use num_traits::Float;

use super::OptimError;
use crate::model::{NetSpec, Weights};
use crate::tensor::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, shaped like the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Weights<T>,
    pub v: Weights<T>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(spec: &NetSpec) -> Self {
        let zeros = Weights::zeros(spec).expect("validated spec");
        AdamState {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One bias-corrected Adam update, computed in `f64`.
///
/// A non-finite gradient aborts before anything is modified.
pub fn adam_step<T: Real>(
    weights: &mut Weights<T>,
    grads: &Weights<T>,
    state: &mut AdamState<T>,
    params: &AdamParams,
) -> Result<(), OptimError> {
    let shapes = |w: &Weights<T>| w.tensors().map(|t| t.len()).collect::<alloc::vec::Vec<_>>();
    let want = shapes(weights);
    if shapes(grads) != want || shapes(&state.m) != want || shapes(&state.v) != want {
        return Err(OptimError::InvalidConfig(alloc::string::String::from(
            "gradient or moment shapes differ from the weights",
        )));
    }
    for (i, g) in grads.tensors().enumerate() {
        if g.iter().any(|x| !x.is_finite()) {
            return Err(OptimError::NonFiniteGradient {
                layer: i / 2,
                tensor: if i % 2 == 0 { "weights" } else { "bias" },
            });
        }
    }
    state.t += 1;
    let AdamParams {
        learning_rate: lr,
        beta1: b1,
        beta2: b2,
        epsilon: eps,
    } = *params;
    let c1 = 1.0 - Float::powi(b1, state.t as i32);
    let c2 = 1.0 - Float::powi(b2, state.t as i32);
    let it = weights
        .tensors_mut()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut().zip(state.v.tensors_mut()));
    for ((w, g), (m, v)) in it {
        for (((w, &g), m), v) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            let g = g.as_f64();
            let mn = b1 * m.as_f64() + (1.0 - b1) * g;
            let vn = b2 * v.as_f64() + (1.0 - b2) * g * g;
            *m = T::lit(mn);
            *v = T::lit(vn);
            let step = lr * (mn / c1) / (Float::sqrt(vn / c2) + eps);
            *w = T::lit(w.as_f64() - step);
        }
    }
    Ok(())
}
