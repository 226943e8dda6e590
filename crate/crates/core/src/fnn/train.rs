use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Dense, LabeledSample, NetworkWeights, HIDDEN};
use crate::error::{Error, Result};
use crate::profile::INPUT_DIM;
use crate::scalar::Scalar;

const INIT_STREAM: u64 = 0;
const SPLIT_STREAM: u64 = 1;
const EPOCH_STREAM_BASE: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 4,
            epochs: 200,
            seed: 0,
            validation_fraction: 0.2,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidTraining("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidTraining("batch_size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidTraining("epochs must be >= 1".into()));
        }
        if !(self.validation_fraction >= 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidTraining("validation_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss<T = f64> {
    pub epoch: usize,
    /// Mean of the per-batch losses seen during the epoch, before each update.
    pub train_mse: T,
    /// Validation MSE after the epoch; `None` when the split left no validation rows.
    pub val_mse: Option<T>,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome<T = f64> {
    pub weights: NetworkWeights<T>,
    pub history: Vec<EpochLoss<T>>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seeded train/validation split of `0..n`; validation gets `floor(n * fraction)` rows.
pub fn split_indices(n: usize, cfg: &TrainingConfig) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(cfg.seed, SPLIT_STREAM));
    let n_val = ((n as f64) * cfg.validation_fraction).floor() as usize;
    let n_val = n_val.min(n.saturating_sub(1));
    let val = idx.split_off(n - n_val);
    (idx, val)
}

/// Order in which the training rows are visited during `epoch`.
pub fn epoch_order(train_indices: &[usize], cfg: &TrainingConfig, epoch: usize) -> Vec<usize> {
    let mut order = train_indices.to_vec();
    order.shuffle(&mut stream_rng(cfg.seed, EPOCH_STREAM_BASE + epoch as u64));
    order
}

/// Glorot-uniform weights, zero hidden biases, output bias at `output_bias`.
pub fn initial_weights<T: Scalar>(cfg: &TrainingConfig, feature_bounds: Vec<T>, output_bias: T) -> NetworkWeights<T> {
    let mut rng = stream_rng(cfg.seed, INIT_STREAM);
    let mut layer = |rows: usize, cols: usize| {
        let r = (6.0 / (rows + cols) as f64).sqrt();
        let mut d = Dense::zeros(rows, cols);
        for w in d.weights.iter_mut() {
            *w = T::lit(rng.random_range(-r..=r));
        }
        d
    };
    let layer_1 = layer(HIDDEN, INPUT_DIM);
    let layer_2 = layer(HIDDEN, HIDDEN);
    let mut output = layer(1, HIDDEN);
    output.biases[0] = output_bias;
    NetworkWeights {
        layer_1,
        layer_2,
        output,
        feature_bounds,
    }
}

/// Mini-batch SGD on the MSE loss. Bit-reproducible for a fixed `cfg.seed`.
pub fn train<T: Scalar>(
    dataset: &[LabeledSample<T>],
    cfg: &TrainingConfig,
    feature_bounds: Vec<T>,
) -> Result<TrainingOutcome<T>> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidTraining("empty dataset".into()));
    }
    if let Some(i) = dataset.iter().position(|s| !s.target.is_finite()) {
        return Err(Error::InvalidTraining(format!("sample {i} has a non-finite target")));
    }
    let (train_idx, val_idx) = split_indices(dataset.len(), cfg);
    let mean_target =
        train_idx.iter().map(|&i| dataset[i].target).sum::<T>() / T::from_usize(train_idx.len()).expect("fits");
    let mut weights = initial_weights(cfg, feature_bounds, mean_target);
    weights.validate()?;

    let lr = T::lit(cfg.learning_rate);
    let val: Vec<LabeledSample<T>> = val_idx.iter().map(|&i| dataset[i].clone()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        let order = epoch_order(&train_idx, cfg, epoch);
        let mut loss_sum = T::zero();
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| dataset[i].clone()));
            let (grads, loss) = weights.backward(&batch)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            loss_sum += loss * T::from_usize(chunk.len()).expect("fits");
            weights.sgd_step(&grads, lr);
        }
        let train_mse = loss_sum / T::from_usize(order.len()).expect("fits");
        if !train_mse.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let val_mse = if val.is_empty() { None } else { Some(weights.mse(&val)?) };
        if matches!(val_mse, Some(v) if !v.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        history.push(EpochLoss {
            epoch,
            train_mse,
            val_mse,
        });
    }
    Ok(TrainingOutcome {
        weights,
        history,
        train_indices: train_idx,
        val_indices: val_idx,
    })
}
