//! Bayesian hyperparameter optimization over mixed discrete search spaces,
//! paired with a miniature trainer for networks whose activations sharpen
//! into binary step functions on a per-layer schedule.
//!
//! The crate is organised around five subsystems:
//!
//! * [`space`] — search-space modelling: specs, configurations, enumeration,
//!   uniform sampling, and `[0,1]`-encoded points for the surrogate.
//! * [`surrogate`] — Gaussian-process regression (Matérn 5/2) with
//!   grid-tuned kernel hyperparameters.
//! * [`optimizer`] — acquisition functions (EI/UCB/POI), the sequential
//!   Bayesian loop, and the exhaustive grid baseline.
//! * [`whetstone`] — the sharpenable network: bounded-ReLU/sigmoid
//!   activations, scheduled and adaptive sharpeners, population-coded
//!   outputs, batch normalization, Gaussian noise layers, and
//!   Adadelta/RMSprop updates.
//! * [`objectives`] — objective adapters: tabular benchmarks, deterministic
//!   synthetic landscapes, and the real trainer objective.
//!
//! [`runlog`] and [`report`] carry the experiment-log format and the
//! derived report rows consumed by the CLI.

pub mod objectives;
pub mod optimizer;
pub mod report;
pub mod runlog;
pub mod space;
pub mod surrogate;
pub mod whetstone;

pub use space::{Configuration, EncodedPoint, HyperparameterSpec, OptionValue, SearchSpace};
