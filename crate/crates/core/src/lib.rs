//! Symbolic regression and program synthesis with a layered softmax network.
//!
//! A [`network::Network`] holds one categorical distribution per argument slot
//! (and per output) over the values visible at that layer. Sampling one edge per
//! row yields a function-specifying DAG over a vocabulary of [`bases::Basis`]
//! primitives. The [`trainer`] reinforces the best-fitting samples of every epoch
//! until the distribution concentrates on a single composition, which the
//! [`expression`] module turns into a readable formula.

pub mod bases;
pub mod data;
pub mod error;
pub mod experiment;
pub mod expression;
pub mod network;
pub mod rng;
pub mod sampler;
pub mod trainer;

pub use bases::Basis;
pub use error::{Error, Result};
pub use expression::Expression;
pub use network::{Network, NetworkConfig};
pub use sampler::SampledDag;
pub use trainer::{TrainConfig, TrainRun, Verdict};
