//! Clock constraints, difference-bound matrices and federations.

mod bound;
mod constraint;
mod dbm;
mod federation;

pub use bound::Bound;
pub use constraint::{ClockId, Constraint, ConstraintDisplay, Rel};
pub use dbm::{Zone, ZoneDisplay};
pub use federation::Federation;
