use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{ModelError, NetSpec};
use crate::derive_seed;
use crate::tensor::{ConvKernel, Grid4, Real};

/// Learned parameters: one kernel per layer, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights<T> {
    layers: Vec<ConvKernel<T>>,
}

impl<T: Real> Weights<T> {
    pub fn from_layers(layers: Vec<ConvKernel<T>>) -> Self {
        Weights { layers }
    }

    pub fn zeros(spec: &NetSpec) -> Result<Self, ModelError> {
        let layers = spec
            .layers
            .iter()
            .map(|l| ConvKernel::zeros(l.out_channels, l.in_channels, l.kernel))
            .collect::<Result<_, _>>()?;
        Ok(Weights { layers })
    }

    /// Check that every kernel has the shape `spec` prescribes.
    pub fn check_against(&self, spec: &NetSpec) -> Result<(), ModelError> {
        if self.layers.len() != spec.layers.len() {
            return Err(ModelError::InvalidSpec(format!(
                "weights have {} layers, spec {}",
                self.layers.len(),
                spec.layers.len()
            )));
        }
        for (i, (k, l)) in self.layers.iter().zip(&spec.layers).enumerate() {
            let got = k.weights().dims();
            let want = [l.out_channels, l.in_channels, l.kernel, l.kernel];
            if got != want {
                return Err(ModelError::InvalidSpec(format!(
                    "layer {i} weights {got:?}, spec wants {want:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> Weights<U> {
        let layers = self
            .layers
            .iter()
            .map(|k| {
                let w = k.weights().map(|v| U::lit(v.as_f64()));
                let b = k.bias().iter().map(|v| U::lit(v.as_f64())).collect();
                ConvKernel::new(w, b).expect("shape preserved")
            })
            .collect();
        Weights { layers }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

impl<T> Weights<T> {
    pub fn layers(&self) -> &[ConvKernel<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [ConvKernel<T>] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.tensors().map(|t| t.len()).sum()
    }

    /// Flat parameter tensors: weights then bias, per layer.
    pub fn tensors(&self) -> impl Iterator<Item = &[T]> {
        self.layers.iter().flat_map(|k| [k.weights().as_slice(), k.bias()])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [T]> {
        self.layers.iter_mut().flat_map(|k| {
            let (w, b) = k.parts_mut();
            [w.as_mut_slice(), b]
        })
    }
}

/// Zero-mean Gaussian weights with variance `2 / ((1+a²)·in·k²)` (`a` the
/// leaky slope) and zero biases. Deterministic per seed.
pub fn init_weights<T: Real>(spec: &NetSpec, seed: u64) -> Weights<T> {
    let a2 = spec.leaky_slope * spec.leaky_slope;
    let layers = spec
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let fan_in = (l.in_channels * l.kernel * l.kernel) as f64;
            let std = num_traits::Float::sqrt(2.0 / ((1.0 + a2) * fan_in));
            let normal = Normal::new(0.0, std).expect("positive std");
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64]));
            let dims = [l.out_channels, l.in_channels, l.kernel, l.kernel];
            let w = Grid4::from_fn(dims, |_| T::lit(normal.sample(&mut rng))).expect("non-zero dims");
            ConvKernel::new(w, alloc::vec![T::zero(); l.out_channels]).expect("matching bias")
        })
        .collect();
    Weights { layers }
}
