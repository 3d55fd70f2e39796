use alloc::vec::Vec;

use super::{ModelError, NetSpec, Weights};
use crate::derive_seed;
use crate::tensor::{
    conv2d_backward_parts, conv2d_valid, dropout, dropout_backward, leaky_relu, leaky_relu_backward, sigmoid,
    sigmoid_backward, DropoutMask, Grid4, Mode, Real,
};

/// Intermediate values of a forward pass, kept for [`backward`].
#[derive(Debug, Clone)]
pub struct Trace<T> {
    /// Input of each convolution (the network input, then post-dropout activations).
    inputs: Vec<Grid4<T>>,
    /// Convolution outputs before the nonlinearity.
    pre: Vec<Grid4<T>>,
    masks: Vec<DropoutMask>,
    output: Grid4<T>,
}

impl<T> Trace<T> {
    pub fn output(&self) -> &Grid4<T> {
        &self.output
    }

    /// Convolution outputs before each nonlinearity, one per layer.
    pub fn pre_activations(&self) -> &[Grid4<T>] {
        &self.pre
    }
}

/// Parameter gradients, plus the input gradient when requested.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub weights: Weights<T>,
    pub input: Option<Grid4<T>>,
}

fn check_input<T: Real>(spec: &NetSpec, weights: &Weights<T>, input: &Grid4<T>) -> Result<(), ModelError> {
    weights.check_against(spec)?;
    let [_, c, h, w] = input.dims();
    if c != spec.input_channels {
        return Err(ModelError::Shape(crate::tensor::TensorError::Shape {
            op: "forward",
            msg: alloc::format!("input has {c} channels, network expects {}", spec.input_channels),
        }));
    }
    let min = spec.min_input();
    if h < min || w < min {
        return Err(ModelError::UndersizedInput { min, rows: h, cols: w });
    }
    Ok(())
}

/// Probability map of `input`; spatial dims shrink by `2·halo`.
pub fn forward<T: Real>(
    spec: &NetSpec,
    weights: &Weights<T>,
    input: &Grid4<T>,
    mode: Mode,
    seed: u64,
) -> Result<Grid4<T>, ModelError> {
    check_input(spec, weights, input)?;
    let mut x = None::<Grid4<T>>;
    for (i, (layer, kernel)) in spec.layers.iter().zip(weights.layers()).enumerate() {
        let z = conv2d_valid(x.as_ref().unwrap_or(input), kernel)?;
        x = Some(if layer.activation {
            let a = leaky_relu(&z, spec.leaky_slope);
            dropout(&a, mode, derive_seed(seed, &[i as u64])).0
        } else {
            sigmoid(&z)
        });
    }
    Ok(x.expect("at least one layer"))
}

/// [`forward`] that records what the backward pass needs.
pub fn forward_trace<T: Real>(
    spec: &NetSpec,
    weights: &Weights<T>,
    input: &Grid4<T>,
    mode: Mode,
    seed: u64,
) -> Result<Trace<T>, ModelError> {
    check_input(spec, weights, input)?;
    let n = spec.layers.len();
    let mut inputs = Vec::with_capacity(n);
    let mut pre = Vec::with_capacity(n);
    let mut masks = Vec::with_capacity(n);
    inputs.push(input.clone());
    for (i, (layer, kernel)) in spec.layers.iter().zip(weights.layers()).enumerate() {
        let z = conv2d_valid(&inputs[i], kernel)?;
        if layer.activation {
            let a = leaky_relu(&z, spec.leaky_slope);
            let (d, mask) = dropout(&a, mode, derive_seed(seed, &[i as u64]));
            inputs.push(d);
            masks.push(mask);
            pre.push(z);
        } else {
            let output = sigmoid(&z);
            pre.push(z);
            return Ok(Trace {
                inputs,
                pre,
                masks,
                output,
            });
        }
    }
    unreachable!("validated spec ends in a sigmoid layer")
}

/// Backpropagate `grad_prob` (gradient of the loss w.r.t. the output
/// probabilities) through a recorded forward pass.
pub fn backward<T: Real>(
    spec: &NetSpec,
    weights: &Weights<T>,
    trace: &Trace<T>,
    grad_prob: &Grid4<T>,
    want_input: bool,
) -> Result<Gradients<T>, ModelError> {
    let n = spec.layers.len();
    let mut kernels = Vec::with_capacity(n);
    let mut grad = sigmoid_backward(&trace.output, grad_prob)?;
    let mut input_grad = None;
    for i in (0..n).rev() {
        let need = i > 0 || want_input;
        let (gi, gw, gb) = conv2d_backward_parts(&trace.inputs[i], &weights.layers()[i], &grad, need)?;
        kernels.push(crate::tensor::ConvKernel::new(gw, gb)?);
        match gi {
            Some(gi) if i > 0 => {
                let g = dropout_backward(&trace.masks[i - 1], &gi)?;
                grad = leaky_relu_backward(&trace.pre[i - 1], &g, spec.leaky_slope)?;
            }
            other => input_grad = other,
        }
    }
    kernels.reverse();
    Ok(Gradients {
        weights: Weights::from_layers(kernels),
        input: input_grad,
    })
}
