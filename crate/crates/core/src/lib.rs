//! Co-scheduling of CPU/GPU job pairs under a node power budget.
//!
//! A small feedforward network predicts per-job slowdowns from profile counters, an exhaustive
//! search picks partitions and power caps for every candidate pair, and a minimum-weight perfect
//! matching decides which jobs share the node. `simenv` supplies an analytic ground truth.

pub mod error;
pub mod estimator;
pub mod fnn;
pub mod hwopt;
pub mod matcher;
pub mod profile;
pub mod scheduler;
pub mod simenv;
pub mod scalar;
pub mod space;

pub use error::{Error, Result};
pub use estimator::{Estimator, SlowdownModel, SlowdownQuery, SLOWDOWN_FLOOR};
pub use fnn::{LabeledSample, NetworkWeights, TrainingConfig};
pub use hwopt::{decide_pair, PairDecision};
pub use matcher::{brute_force_matching, min_weight_perfect_matching, Matching, PairGraph};
pub use profile::{JobProfile, FEATURE_COUNT, INPUT_DIM};
pub use scalar::Scalar;
pub use space::{ConfigSpace, HardwareConfig};

pub type Profile32 = JobProfile<f32>;
pub type Profile64 = JobProfile<f64>;
pub type Weights32 = NetworkWeights<f32>;
pub type Weights64 = NetworkWeights<f64>;
pub type Sample32 = LabeledSample<f32>;
pub type Sample64 = LabeledSample<f64>;
