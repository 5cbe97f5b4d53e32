//! Discrete-event simulation of a beacon-enabled IEEE 802.15.4 body area
//! network under CAP and CFP attacks, with the 802.15.4 security suites.

pub mod adversary;
pub mod csma;
pub mod error;
pub mod experiment;
pub mod gts;
pub mod kernel;
pub mod metrics;
pub mod scenario;
pub mod security;
pub mod sim;
pub mod superframe;

pub use error::{ConfigError, RunError, SimError};
pub use experiment::{emit, run_scenario, sweep, Aggregate, Format, SweepTable};
pub use kernel::{EntityId, SimTime};
pub use metrics::{metrics_from_trace, RunMetrics, TraceRecord};
pub use scenario::Scenario;
pub use sim::{run_once, Simulation, TraceMode};
