//! Feedforward slowdown predictor: 40 inputs, two ReLU hidden layers of 18, one ReLU output.

mod network;
mod persist;
mod train;

pub use network::{Dense, Gradients, LabeledSample, NetworkWeights, HIDDEN};
pub use persist::{load_weights, save_weights, weights_from_json, weights_to_json, FORMAT_VERSION};
pub use train::{epoch_order, initial_weights, split_indices, train, EpochLoss, TrainingConfig, TrainingOutcome};
