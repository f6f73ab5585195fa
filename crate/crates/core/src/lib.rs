//! Computational quantum information on a desk: exact and gate-budgeted hypothesis testing,
//! divergence inequalities, compression and distillation bounds, and small separation experiments.
//!
//! All logarithms are natural.

pub mod bounded;
pub mod circuits;
pub mod compression;
pub mod entanglement;
pub mod error;
pub mod exact;
pub mod harness;
pub mod measured;
pub mod nats;
pub mod random;
pub mod regularization;
pub mod separations;
pub mod tensor;
pub mod types;

pub use error::{Error, Result};
