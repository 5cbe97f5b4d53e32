//! Per-run counters and the trace records they are derived from.

use serde::{Deserialize, Serialize};

use crate::gts::Denial;
use crate::kernel::{EntityId, EventKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestResult {
    Granted,
    CapAccessFailure,
    Collision,
    Denied(Denial),
}

/// Metric-relevant result attached to a dispatched event.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    Request {
        device: EntityId,
        result: RequestResult,
    },
    Slot {
        device: EntityId,
        slot: u32,
        payload_symbols: u64,
        corrupted: bool,
        delivered: bool,
    },
    JamLaunched {
        attacker: EntityId,
        device: EntityId,
    },
    JammedEmpty {
        slots: u32,
    },
}

/// One dispatched event. `outcomes` is empty for purely internal steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceRecord {
    pub at: u64,
    pub seq: u64,
    pub kind: EventKind,
    pub target: EntityId,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<Outcome>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunMetrics {
    pub gts_requests_total: u64,
    pub gts_requests_failed: u64,
    pub failed_cap_access: u64,
    pub failed_collision: u64,
    pub failed_denied: u64,
    pub gts_slots_scheduled: u64,
    pub gts_slots_corrupted: u64,
    pub gts_slots_jammed_empty: u64,
    pub payload_symbols_offered: u64,
    pub payload_symbols_delivered: u64,
    /// Uncorrupted frames the receiver's security processing refused.
    pub frames_rejected: u64,
    pub jams_launched: u64,
}

impl RunMetrics {
    /// Names of the reported fields, in column order.
    pub const FIELDS: [&'static str; 15] = [
        "gts_requests_total",
        "gts_requests_failed",
        "failed_cap_access",
        "failed_collision",
        "failed_denied",
        "gts_slots_scheduled",
        "gts_slots_corrupted",
        "gts_slots_jammed_empty",
        "payload_symbols_offered",
        "payload_symbols_delivered",
        "frames_rejected",
        "jams_launched",
        "failed_request_probability",
        "bandwidth_utilization",
        "bandwidth_utilization_decrease",
    ];

    /// Field values in [`RunMetrics::FIELDS`] order.
    pub fn values(&self) -> [f64; 15] {
        [
            self.gts_requests_total as f64,
            self.gts_requests_failed as f64,
            self.failed_cap_access as f64,
            self.failed_collision as f64,
            self.failed_denied as f64,
            self.gts_slots_scheduled as f64,
            self.gts_slots_corrupted as f64,
            self.gts_slots_jammed_empty as f64,
            self.payload_symbols_offered as f64,
            self.payload_symbols_delivered as f64,
            self.frames_rejected as f64,
            self.jams_launched as f64,
            self.failed_request_probability(),
            self.bandwidth_utilization(),
            self.bandwidth_utilization_decrease(),
        ]
    }

    pub fn failed_request_probability(&self) -> f64 {
        if self.gts_requests_total == 0 {
            0.0
        } else {
            self.gts_requests_failed as f64 / self.gts_requests_total as f64
        }
    }

    /// Delivered over offered GTS payload; 1 when nothing was offered.
    pub fn bandwidth_utilization(&self) -> f64 {
        if self.payload_symbols_offered == 0 {
            1.0
        } else {
            self.payload_symbols_delivered as f64 / self.payload_symbols_offered as f64
        }
    }

    /// `(offered - delivered) / offered`, 0 when nothing was offered.
    pub fn bandwidth_utilization_decrease(&self) -> f64 {
        1.0 - self.bandwidth_utilization()
    }

    /// Utilization decrease relative to a baseline run of the same seed.
    pub fn relative_decrease(&self, baseline: &RunMetrics) -> f64 {
        let base = baseline.bandwidth_utilization();
        if base == 0.0 {
            return 0.0;
        }
        (1.0 - self.bandwidth_utilization() / base).clamp(0.0, 1.0)
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        let split = self.failed_cap_access + self.failed_collision + self.failed_denied;
        if self.gts_requests_failed > self.gts_requests_total {
            return Err("failed > total".into());
        }
        if split != self.gts_requests_failed {
            return Err(format!("failure split {split} != failed {}", self.gts_requests_failed));
        }
        if self.gts_slots_corrupted > self.gts_slots_scheduled {
            return Err("corrupted > scheduled".into());
        }
        if self.payload_symbols_delivered > self.payload_symbols_offered {
            return Err("delivered > offered".into());
        }
        Ok(())
    }
}

/// Recomputes the counters from a trace alone.
pub fn metrics_from_trace<'a>(trace: impl IntoIterator<Item = &'a TraceRecord>) -> RunMetrics {
    let mut m = RunMetrics::default();
    for outcome in trace.into_iter().flat_map(|r| &r.outcomes) {
        match *outcome {
            Outcome::Request { result, .. } => {
                m.gts_requests_total += 1;
                match result {
                    RequestResult::Granted => {}
                    RequestResult::CapAccessFailure => m.failed_cap_access += 1,
                    RequestResult::Collision => m.failed_collision += 1,
                    RequestResult::Denied(_) => m.failed_denied += 1,
                }
                if result != RequestResult::Granted {
                    m.gts_requests_failed += 1;
                }
            }
            Outcome::Slot {
                payload_symbols,
                corrupted,
                delivered,
                ..
            } => {
                m.gts_slots_scheduled += 1;
                m.payload_symbols_offered += payload_symbols;
                if corrupted {
                    m.gts_slots_corrupted += 1;
                } else if delivered {
                    m.payload_symbols_delivered += payload_symbols;
                } else {
                    m.frames_rejected += 1;
                }
            }
            Outcome::JamLaunched { .. } => m.jams_launched += 1,
            Outcome::JammedEmpty { slots } => m.gts_slots_jammed_empty += slots as u64,
        }
    }
    m
}
