use alloc::format;
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Grid4, TensorError};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    /// Inputs with at most this many entries are checked entry by entry;
    /// larger inputs get a random sample of this size.
    pub max_entries: usize,
    /// Random directional-derivative probes per input, in addition to entries.
    pub directions: usize,
    /// Relative errors are measured against `max(|a|, |n|, floor)` where
    /// `floor = floor_fraction · max|analytic|` of that input.
    pub floor_fraction: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-6,
            max_entries: 256,
            directions: 2,
            floor_fraction: 1e-3,
            seed: 0,
        }
    }
}

/// Per-input outcome of a gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub max_rel_error: Vec<f64>,
    pub probes: Vec<usize>,
    /// Probes whose step was shrunk to stay on one smooth piece.
    pub refined: Vec<usize>,
}

impl GradReport {
    pub fn worst(&self) -> f64 {
        self.max_rel_error.iter().copied().fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.worst() < tolerance
    }
}

fn rel_error(a: f64, n: f64, floor: f64) -> f64 {
    let denom = a.abs().max(n.abs()).max(floor);
    if denom == 0.0 {
        0.0
    } else {
        (a - n).abs() / denom
    }
}

/// Compare analytic gradients of the scalar function `loss` against central
/// differences, input by input.
pub fn grad_check<F>(
    mut loss: F,
    inputs: &[Grid4<f64>],
    analytic: &[Grid4<f64>],
    opts: &GradCheckOptions,
) -> Result<GradReport, TensorError>
where
    F: FnMut(&[Grid4<f64>]) -> f64,
{
    grad_check_piecewise(|v| (loss(v), 0), inputs, analytic, opts)
}

/// Most times a probe step is halved while looking for a difference that
/// stays on one smooth piece.
pub const MAX_HALVINGS: usize = 12;

/// [`grad_check`] for piecewise-smooth functions. `loss` also returns a
/// fingerprint of the smooth piece its argument lies on (for a ReLU-type
/// network, a hash of the activation sign pattern). A probe whose end
/// points leave the piece of the base point has its step halved, up to
/// [`MAX_HALVINGS`] times; such probes are counted in `GradReport::refined`.
pub fn grad_check_piecewise<F>(
    mut loss: F,
    inputs: &[Grid4<f64>],
    analytic: &[Grid4<f64>],
    opts: &GradCheckOptions,
) -> Result<GradReport, TensorError>
where
    F: FnMut(&[Grid4<f64>]) -> (f64, u64),
{
    if inputs.len() != analytic.len() {
        return Err(TensorError::Shape {
            op: "grad_check",
            msg: format!("{} inputs but {} gradients", inputs.len(), analytic.len()),
        });
    }
    for (x, g) in inputs.iter().zip(analytic) {
        g.expect_dims(x.dims(), "grad_check")?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut work: Vec<Grid4<f64>> = inputs.to_vec();
    let piece = loss(&work).1;
    let mut report = GradReport {
        max_rel_error: Vec::with_capacity(inputs.len()),
        probes: Vec::with_capacity(inputs.len()),
        refined: Vec::with_capacity(inputs.len()),
    };
    for (i, grad) in analytic.iter().enumerate() {
        let len = grad.len();
        let scale = grad.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = opts.floor_fraction * scale;
        let (mut worst, mut probes, mut refined) = (0.0f64, 0, 0);

        let entries: Vec<usize> = if len <= opts.max_entries {
            (0..len).collect()
        } else {
            index::sample(&mut rng, len, opts.max_entries).into_vec()
        };
        let directions: Vec<Vec<f64>> = (0..opts.directions)
            .map(|_| (0..len).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let mut probe = |work: &mut Vec<Grid4<f64>>, set: &mut dyn FnMut(&mut [f64], f64)| {
            let mut h = opts.step;
            let mut halvings = 0;
            loop {
                set(work[i].as_mut_slice(), h);
                let (up, up_piece) = loss(work);
                set(work[i].as_mut_slice(), -h);
                let (down, down_piece) = loss(work);
                set(work[i].as_mut_slice(), 0.0);
                let same = up_piece == piece && down_piece == piece;
                if same || halvings == MAX_HALVINGS {
                    return ((up - down) / (2.0 * h), halvings > 0);
                }
                h /= 2.0;
                halvings += 1;
            }
        };

        for e in entries {
            let orig = inputs[i].as_slice()[e];
            let (numeric, shrunk) = probe(&mut work, &mut |x, d| x[e] = orig + d);
            worst = worst.max(rel_error(grad.as_slice()[e], numeric, floor));
            probes += 1;
            refined += shrunk as usize;
        }
        for dir in &directions {
            let analytic_dd: f64 = dir.iter().zip(grad.as_slice()).map(|(d, g)| d * g).sum();
            let base = inputs[i].as_slice();
            let (numeric, shrunk) = probe(&mut work, &mut |x, t| {
                for (w, (&b, &d)) in x.iter_mut().zip(base.iter().zip(dir)) {
                    *w = b + t * d;
                }
            });
            worst = worst.max(rel_error(analytic_dd, numeric, 0.0));
            probes += 1;
            refined += shrunk as usize;
        }
        report.max_rel_error.push(worst);
        report.probes.push(probes);
        report.refined.push(refined);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn quadratic_passes_and_wrong_gradient_fails() {
        let x = Grid4::from_vec([1, 1, 1, 3], vec![0.5, -1.0, 2.0]).unwrap();
        let f = |xs: &[Grid4<f64>]| xs[0].as_slice().iter().map(|v| v * v).sum::<f64>();
        let good = x.map(|v| 2.0 * v);
        let r = grad_check(f, core::slice::from_ref(&x), &[good], &GradCheckOptions::default()).unwrap();
        assert!(r.passes(1e-8), "{r:?}");
        let bad = x.map(|v| 2.1 * v);
        let r = grad_check(f, &[x], &[bad], &GradCheckOptions::default()).unwrap();
        assert!(!r.passes(1e-3));
    }

    #[test]
    fn probes_straddling_a_kink_are_refined() {
        // |x| near its kink: a step of 1e-2 at x = 1e-3 crosses zero.
        let x = Grid4::from_vec([1, 1, 1, 1], vec![1e-3]).unwrap();
        let g = x.map(|_| 1.0);
        let opts = GradCheckOptions {
            step: 1e-2,
            directions: 0,
            ..GradCheckOptions::default()
        };
        let plain = grad_check(
            |v| v[0].as_slice()[0].abs(),
            core::slice::from_ref(&x),
            core::slice::from_ref(&g),
            &opts,
        )
        .unwrap();
        assert!(!plain.passes(1e-3));
        let piecewise = |v: &[Grid4<f64>]| {
            let t = v[0].as_slice()[0];
            (t.abs(), (t > 0.0) as u64)
        };
        let r = grad_check_piecewise(piecewise, &[x], &[g], &opts).unwrap();
        assert!(r.passes(1e-9), "{r:?}");
        assert_eq!(r.refined, [1]);
    }
}
