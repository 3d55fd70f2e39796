use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adam_step, split_validation, AdamParams, AdamState, OptimError};
use crate::derive_seed;
use crate::geo::Tile;
use crate::model::{backward, forward, forward_trace, init_weights, Checkpoint, NetSpec, TrainingMeta, Weights};
use crate::tensor::{bce_loss, Grid4, Mode};

// Seed streams derived from the run seed.
const INIT: u64 = 0;
const SPLIT: u64 = 1;
const SHUFFLE: u64 = 2;
const DROPOUT: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Tiles per forward/backward pass inside a batch. Gradients of the
    /// pieces are combined into the exact full-batch gradient, so this only
    /// bounds memory.
    pub micro_batch: usize,
    pub learning_rate: f64,
    pub dropout_rate: f64,
    pub validation_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamParams::default();
        TrainConfig {
            epochs: 150,
            batch_size: 128,
            micro_batch: 16,
            learning_rate: adam.learning_rate,
            dropout_rate: 0.3,
            validation_fraction: 0.2,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |msg: &str| Err(OptimError::InvalidConfig(msg.to_string()));
        if self.epochs == 0 || self.batch_size == 0 || self.micro_batch == 0 {
            return bad("epochs, batch_size and micro_batch must be at least 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Weights from the epoch with the lowest validation loss.
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochStats>,
    /// Indices into the training corpus.
    pub training: Vec<usize>,
    pub validation: Vec<usize>,
    /// How many backward passes each corpus tile took part in.
    pub gradient_contributions: Vec<u32>,
}

fn valid_count(g: &Grid4<f32>) -> usize {
    g.as_slice().iter().filter(|&&v| v != 0.0).count()
}

fn stack<'a>(tiles: impl Iterator<Item = &'a Grid4<f32>>) -> Grid4<f32> {
    let items: Vec<&Grid4<f32>> = tiles.collect();
    Grid4::stack(&items).expect("tiles checked to share dims")
}

fn check_tiles(tiles: &[&Tile], spec: &NetSpec) -> Result<(), OptimError> {
    let first = tiles.first().ok_or(OptimError::TooFewTiles(0))?;
    let [_, _, h, w] = first.image.dims();
    let halo = spec.halo();
    for (index, t) in tiles.iter().enumerate() {
        let err = |msg| Err(OptimError::TileShape { index, msg });
        let [n, c, th, tw] = t.image.dims();
        if n != 1 || c != spec.input_channels {
            return err(format!(
                "image has {n} items of {c} channels, expected 1 of {}",
                spec.input_channels
            ));
        }
        if (th, tw) != (h, w) {
            return err(format!("window {th}x{tw} differs from {h}x{w}"));
        }
        if th < spec.min_input() || tw < spec.min_input() {
            return err(format!(
                "window {th}x{tw} is smaller than the network minimum {}",
                spec.min_input()
            ));
        }
        let out = [1, 1, th - 2 * halo, tw - 2 * halo];
        if t.label.dims() != out || t.valid.dims() != out {
            return err(format!(
                "label dims {:?} do not match network output {out:?}",
                t.label.dims()
            ));
        }
    }
    Ok(())
}

/// Mean BCE over all valid pixels of `tiles`, in eval mode.
pub fn validation_loss(
    spec: &NetSpec,
    weights: &Weights<f32>,
    tiles: &[&Tile],
    micro_batch: usize,
) -> Result<f64, OptimError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for chunk in tiles.chunks(micro_batch.max(1)) {
        let v = stack(chunk.iter().map(|t| &t.valid));
        let n = valid_count(&v);
        if n == 0 {
            continue;
        }
        let x = stack(chunk.iter().map(|t| &t.image));
        let y = stack(chunk.iter().map(|t| &t.label));
        let p = forward(spec, weights, &x, Mode::Eval, 0)?;
        let (loss, _) = bce_loss(&p, &y, &v).map_err(crate::model::ModelError::from)?;
        sum += loss * n as f64;
        count += n;
    }
    if count == 0 {
        return Err(OptimError::EmptySupport("validation"));
    }
    Ok(sum / count as f64)
}

/// Fit a freshly initialized network to `tiles`.
///
/// A random `validation_fraction` of the tiles is held out and only used
/// for the per-epoch validation loss. `observer` sees every epoch's stats
/// as soon as they are known.
pub fn train(
    tiles: &[&Tile],
    config: &TrainConfig,
    spec: &NetSpec,
    observer: &mut dyn FnMut(&EpochStats),
) -> Result<TrainOutcome, OptimError> {
    config.validate()?;
    spec.validate()?;
    check_tiles(tiles, spec)?;
    let seed = config.seed;
    let (training, validation) =
        split_validation(tiles.len(), config.validation_fraction, derive_seed(seed, &[SPLIT]))?;
    let val_tiles: Vec<&Tile> = validation.iter().map(|&i| tiles[i]).collect();
    if training.iter().all(|&i| valid_count(&tiles[i].valid) == 0) {
        return Err(OptimError::EmptySupport("training"));
    }
    if val_tiles.iter().all(|t| valid_count(&t.valid) == 0) {
        return Err(OptimError::EmptySupport("validation"));
    }

    let adam = config.adam();
    let mode = Mode::Train {
        dropout_rate: config.dropout_rate,
    };
    let mut weights: Weights<f32> = init_weights(spec, derive_seed(seed, &[INIT]));
    let mut state = AdamState::new(spec);
    let mut contributions = vec![0u32; tiles.len()];
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(Weights<f32>, usize, f64)> = None;

    for epoch in 1..=config.epochs {
        let mut order = training.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
            seed,
            &[SHUFFLE, epoch as u64],
        )));
        let (mut loss_sum, mut loss_count) = (0.0f64, 0usize);

        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let total: usize = batch.iter().map(|&i| valid_count(&tiles[i].valid)).sum();
            if total == 0 {
                continue;
            }
            let diverged = |detail: alloc::string::String| OptimError::Divergence {
                epoch,
                batch: Some(b),
                detail,
            };
            let mut grads = Weights::<f32>::zeros(spec)?;
            for (mi, micro) in batch.chunks(config.micro_batch).enumerate() {
                let v = stack(micro.iter().map(|&i| &tiles[i].valid));
                let n = valid_count(&v);
                if n == 0 {
                    continue;
                }
                let x = stack(micro.iter().map(|&i| &tiles[i].image));
                let y = stack(micro.iter().map(|&i| &tiles[i].label));
                let drop_seed = derive_seed(seed, &[DROPOUT, epoch as u64, b as u64, mi as u64]);
                let trace = forward_trace(spec, &weights, &x, mode, drop_seed)?;
                let (loss, g) = bce_loss(trace.output(), &y, &v).map_err(crate::model::ModelError::from)?;
                if !loss.is_finite() {
                    return Err(diverged(format!("loss is {loss}")));
                }
                let share = n as f32 / total as f32;
                let g = g.map(|e| e * share);
                let part = backward(spec, &weights, &trace, &g, false)?;
                for (acc, p) in grads.tensors_mut().zip(part.weights.tensors()) {
                    for (a, &q) in acc.iter_mut().zip(p) {
                        *a += q;
                    }
                }
                for &i in micro {
                    contributions[i] += 1;
                }
                loss_sum += loss * n as f64;
                loss_count += n;
            }
            adam_step(&mut weights, &grads, &mut state, &adam).map_err(|e| diverged(e.to_string()))?;
        }

        let val = validation_loss(spec, &weights, &val_tiles, config.micro_batch)?;
        if !val.is_finite() {
            return Err(OptimError::Divergence {
                epoch,
                batch: None,
                detail: format!("validation loss is {val}"),
            });
        }
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / loss_count.max(1) as f64,
            validation_loss: val,
        };
        observer(&stats);
        history.push(stats);
        if best.as_ref().map_or(true, |&(_, _, b)| val < b) {
            best = Some((weights.clone(), epoch, val));
        }
    }

    let (weights, epoch, validation_loss) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            spec: spec.clone(),
            weights,
            meta: TrainingMeta {
                seed,
                epoch: epoch as u32,
                validation_loss,
            },
        },
        history,
        training,
        validation,
        gradient_contributions: contributions,
    })
}
