//! Co-simulation of a distribution feeder with a battery converter providing
//! frequency regulation, a synthetic PMU chain, and the rRoCoF / rPADD
//! metrics used to compare grid-forming against grid-following control.

pub mod converter;
pub mod engine;
pub mod error;
pub mod foundation;
pub mod frequency;
pub mod io;
pub mod metrics;
pub mod network;
pub mod pmu;

pub use converter::{BessState, ControlMode, ConverterParams, GflState, GfrState};
pub use engine::{
    run_comparison, run_scenario, Comparison, ComparisonReport, MetricsResult, RunArtifacts,
    RunSummary, Scenario,
};
pub use error::{Error, Result};
pub use foundation::{FeederBases, PerUnitBase, Phasor, TimeSeries};
pub use frequency::{FrequencyTrace, SynthParams};
pub use metrics::{Cdf, DominanceReport, MetricSeries};
pub use network::{BusState, FeederModel};
pub use pmu::{PmuConfig, PmuFrame, PmuLocation};
