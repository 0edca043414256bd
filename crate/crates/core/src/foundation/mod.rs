//! Numeric building blocks shared by every other module: phasors, the
//! per-unit system, uniformly sampled series, and angle utilities.
//!
//! Angles are carried unwrapped through the whole pipeline. Wrapping to
//! (-pi, pi] happens only where a PMU emits a frame.

mod angle;
mod series;
mod units;

pub use angle::{unwrap_angles, wrap_angle};
pub use series::{diff, TimeSeries};
pub use units::{FeederBases, PerUnitBase, Phasor};

/// Nominal system frequency of the Continental Europe synchronous area.
pub const NOMINAL_FREQUENCY_HZ: f64 = 50.0;
