//! Oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wetmap_core::model::{backward, forward_trace, init_weights, NetSpec, Weights};
use wetmap_core::tensor::{bce_loss, grad_check_piecewise, ConvKernel, GradCheckOptions, GradReport, Grid4, Mode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, dims: [usize; 4], lo: f64, hi: f64) -> Grid4<f64> {
    Grid4::from_fn(dims, |_| rng.random_range(lo..hi)).unwrap()
}

/// Valid cross-correlation by the definition, one output value at a time.
pub fn naive_conv(input: &Grid4<f64>, weights: &Grid4<f64>, bias: &[f64]) -> Grid4<f64> {
    let [n, c, h, w] = input.dims();
    let [o, wc, k, _] = weights.dims();
    assert_eq!(c, wc);
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let mut out = Grid4::zeros([n, o, oh, ow]).unwrap();
    for b in 0..n {
        for oc in 0..o {
            for y in 0..oh {
                for x in 0..ow {
                    let mut acc = bias[oc];
                    for ic in 0..c {
                        for dy in 0..k {
                            for dx in 0..k {
                                acc += weights[[oc, ic, dy, dx]] * input[[b, ic, y + dy, x + dx]];
                            }
                        }
                    }
                    out[[b, oc, y, x]] = acc;
                }
            }
        }
    }
    out
}

fn to_inputs(x: &Grid4<f64>, w: &Weights<f64>) -> Vec<Grid4<f64>> {
    let mut v = vec![x.clone()];
    for l in w.layers() {
        v.push(l.weights().clone());
        v.push(Grid4::from_vec([1, 1, 1, l.bias().len()], l.bias().to_vec()).unwrap());
    }
    v
}

fn from_params(v: &[Grid4<f64>]) -> Weights<f64> {
    Weights::from_layers(
        v.chunks(2)
            .map(|p| ConvKernel::new(p[0].clone(), p[1].as_slice().to_vec()).unwrap())
            .collect(),
    )
}

/// Finite-difference check of the whole network under masked BCE, with
/// respect to the input and every weight and bias tensor. Reports are
/// ordered input, layer-0 weights, layer-0 bias, layer-1 weights, ...
///
/// The input is probed with `input_step`; parameters with `opts.step`.
/// The smooth piece is the sign pattern of every leaky-ReLU input, so no
/// difference is taken across a kink.
pub fn stack_gradcheck(
    spec: &NetSpec,
    seed: u64,
    (batch, size): (usize, usize),
    mode: Mode,
    opts: &GradCheckOptions,
    input_step: f64,
) -> GradReport {
    let mut r = rng(seed);
    let mut w: Weights<f64> = init_weights(spec, seed);
    for l in w.layers_mut() {
        for b in l.bias_mut() {
            *b = r.random_range(-0.1..0.1);
        }
    }
    let x = uniform(&mut r, [batch, spec.input_channels, size, size], 0.0, 1.0);
    let out = [batch, 1, size - 2 * spec.halo(), size - 2 * spec.halo()];
    let label = Grid4::from_fn(out, |_| if r.random_bool(0.4) { 1.0 } else { 0.0 }).unwrap();
    let mut valid = Grid4::from_fn(out, |_| if r.random_bool(0.8) { 1.0 } else { 0.0 }).unwrap();
    valid.as_mut_slice()[0] = 1.0;
    let dropout_seed = seed ^ 0xD80;

    let trace = forward_trace(spec, &w, &x, mode, dropout_seed).unwrap();
    let (_, grad_prob) = bce_loss(trace.output(), &label, &valid).unwrap();
    let g = backward(spec, &w, &trace, &grad_prob, true).unwrap();
    let analytic = to_inputs(&g.input.unwrap(), &g.weights);
    let params = to_inputs(&x, &w);

    let loss = |x: &Grid4<f64>, w: &Weights<f64>| {
        let t = forward_trace(spec, w, x, mode, dropout_seed).unwrap();
        let mut piece = DefaultHasher::new();
        let pre = t.pre_activations();
        for layer in &pre[..pre.len() - 1] {
            layer.as_slice().iter().for_each(|&v| (v > 0.0).hash(&mut piece));
        }
        (bce_loss(t.output(), &label, &valid).unwrap().0, piece.finish())
    };
    let input_opts = GradCheckOptions {
        step: input_step,
        ..opts.clone()
    };
    let mut rep = grad_check_piecewise(|v| loss(&v[0], &w), &params[..1], &analytic[..1], &input_opts).unwrap();
    let rest = grad_check_piecewise(|v| loss(&x, &from_params(v)), &params[1..], &analytic[1..], opts).unwrap();
    rep.max_rel_error.extend(rest.max_rel_error);
    rep.probes.extend(rest.probes);
    rep.refined.extend(rest.refined);
    rep
}
