use thiserror::Error;

use crate::kernel::{EntityId, SimTime};

/// Programming errors raised by the simulation machinery.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("event scheduled at {at} but the clock is already at {now}")]
    ScheduleInPast { at: SimTime, now: SimTime },
    #[error("entity {0} is already transmitting")]
    AlreadyTransmitting(EntityId),
    #[error("empty transmission interval [{start}, {end})")]
    EmptyTransmission { start: SimTime, end: SimTime },
    #[error("CCA requested at {0} outside the contention access period")]
    CcaOutsideCap(SimTime),
    #[error("unknown transmission handle {0}")]
    UnknownTransmission(u64),
}

/// Invalid scenario or superframe configuration. `path` is the dotted
/// scenario key that failed.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{path}: {reason}")]
pub struct ConfigError {
    pub path: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

/// Anything that can stop a scenario run.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("simulation error: {0}")]
    Sim(#[from] SimError),
}
