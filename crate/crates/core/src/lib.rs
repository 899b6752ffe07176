//! Sequential discretized Q-learning for continuous action spaces, with the
//! supporting autodiff engine, environments, baselines and training harness.

pub mod agents;
pub mod autodiff;
pub mod discretize;
pub mod env;
pub mod error;
pub mod explore;
pub mod harness;
pub mod replay;

pub use error::{Error, Result};

/// Random number generator used throughout; seeded runs are reproducible.
pub type Rng = rand_chacha::ChaCha8Rng;
