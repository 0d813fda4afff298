//! Flow Lenia with localized, mutating rule parameters, system-level
//! metrics, and goal-driven exploration of those metrics.

pub mod archive;
pub mod engine;
pub mod error;
pub mod explorer;
pub mod genome;
pub mod metrics;
pub mod rng;
pub mod run;
pub mod sum;

pub use error::{Error, Result};
