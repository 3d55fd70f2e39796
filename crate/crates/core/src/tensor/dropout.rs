use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Grid4, Real, TensorError};

/// Whether a pass is used for fitting (dropout active) or inference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Eval,
    Train { dropout_rate: f64 },
}

/// Keep-mask and survivor scale recorded by a dropout forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    keep: Vec<bool>,
    scale: f64,
}

impl DropoutMask {
    pub fn keep_all(len: usize) -> Self {
        DropoutMask {
            keep: vec![true; len],
            scale: 1.0,
        }
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dropped(&self) -> usize {
        self.keep.iter().filter(|&&k| !k).count()
    }
}

/// Inverted dropout: in training each element is zeroed with probability
/// `dropout_rate` and survivors are scaled by `1/(1-rate)`. Eval mode is
/// the identity.
///
/// Panics if the rate is outside `[0, 1)`.
pub fn dropout<T: Real>(input: &Grid4<T>, mode: Mode, seed: u64) -> (Grid4<T>, DropoutMask) {
    let rate = match mode {
        Mode::Eval => return (input.clone(), DropoutMask::keep_all(input.len())),
        Mode::Train { dropout_rate } => dropout_rate,
    };
    assert!(
        (0.0..1.0).contains(&rate),
        "dropout rate must lie in [0, 1), got {rate}"
    );
    if rate == 0.0 {
        return (input.clone(), DropoutMask::keep_all(input.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep: Vec<bool> = (0..input.len()).map(|_| !rng.random_bool(rate)).collect();
    let scale = 1.0 / (1.0 - rate);
    let s = T::lit(scale);
    let mut out = input.clone();
    for (v, &k) in out.as_mut_slice().iter_mut().zip(&keep) {
        *v = if k { *v * s } else { T::zero() };
    }
    (out, DropoutMask { keep, scale })
}

pub fn dropout_backward<T: Real>(mask: &DropoutMask, grad_out: &Grid4<T>) -> Result<Grid4<T>, TensorError> {
    if mask.keep.len() != grad_out.len() {
        return Err(TensorError::Shape {
            op: "dropout_backward",
            msg: alloc::format!("mask has {} entries, gradient {}", mask.keep.len(), grad_out.len()),
        });
    }
    let s = T::lit(mask.scale);
    let mut g = grad_out.clone();
    for (v, &k) in g.as_mut_slice().iter_mut().zip(&mask.keep) {
        *v = if k { *v * s } else { T::zero() };
    }
    Ok(g)
}
