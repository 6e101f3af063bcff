//! Miniature trainable network with sharpenable activations.
//!
//! Activations start as bounded ReLUs (or logistic units) and are sharpened
//! toward binary step functions during training, one layer group at a time,
//! under either a fixed schedule or a loss-monitoring adaptive controller.
//! Outputs are population-coded: each class owns a group of output neurons
//! and the class score is that group's mean.

pub mod activation;
pub mod layers;
pub mod network;
pub mod optim;
pub mod output_key;
pub mod schedule;
pub mod train;

pub use activation::{activation_backward, activation_forward, ActivationKind};
pub use layers::{Batch, Layer};
pub use network::{Network, NetworkBuilder};
pub use optim::{adadelta_step, rmsprop_step, Optimizer, OptimizerHyper, OptimizerKind};
pub use output_key::{make_output_key, population_logits, population_loss, OutputKey};
pub use schedule::{
    AdaptiveSharpener, ScheduleValidation, SharpenerDecision, SharpeningSchedule,
};
pub use train::{
    evaluate_accuracy, split_train_val, train, EpochStats, LabeledBatch, Sharpener, TrainConfig,
    TrainHistory,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WhetstoneError {
    #[error("sharpness must lie in [0,1], got {0}")]
    InvalidSharpness(f64),
    #[error("sharpening duration must be at least 1 epoch")]
    ZeroDuration,
    #[error("output key infeasible: {0}")]
    InfeasibleKey(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
