//! Support-recovery limits for noisy phase retrieval.
//!
//! The crate evaluates the single-letter mutual-information quantities and
//! sample-complexity thresholds for recovering the support of a sparse signal
//! from phaseless Gaussian measurements, and provides Monte Carlo machinery to
//! check the bounds and to run small-scale recovery experiments.

pub mod densities;
pub mod error;
pub mod limits;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod simulator;
pub mod verify;

pub use error::{Error, Result};
