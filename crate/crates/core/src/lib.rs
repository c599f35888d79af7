//! Shield synthesis for timed I/O specifications.

pub mod error;
pub mod game;
pub mod io;
pub mod monitor;
pub mod platoon;
pub mod scalar;
pub mod runtime;
pub mod shield;
pub mod tioa;
pub mod zones;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use num_rational::Rational64;
pub use scalar::{ClockValue, DelayWindow};
pub use zones::{Bound, ClockId, Constraint, Federation, Rel, Zone};

/// Exact time and clock values used at runtime.
pub type Time = Rational64;
