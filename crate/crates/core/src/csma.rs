//! Slotted CSMA/CA as used in the CAP.
//!
//! Backoff periods are aligned to the superframe start. A CCA "at boundary b"
//! samples the medium at `b + CCA_DETECTION_SYMBOLS`, the end of the
//! detection window, so a frame that starts exactly on `b` is seen as busy.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::kernel::{RngStream, SimTime};
use crate::superframe::{CapWindow, ChannelState, SuperframeConfig};

pub const CCA_DETECTION_SYMBOLS: u64 = 8;

/// Superframes an attempt may be pushed back before [`attempt_access`] gives up.
pub const MAX_DEFERRALS: u32 = 1024;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsmaParams {
    pub min_be: u8,
    pub max_be: u8,
    pub max_csma_backoffs: u8,
    pub cw_init: u8,
    pub unit_backoff_symbols: u64,
}

impl Default for CsmaParams {
    fn default() -> Self {
        CsmaParams {
            min_be: 3,
            max_be: 5,
            max_csma_backoffs: 4,
            cw_init: 2,
            unit_backoff_symbols: 20,
        }
    }
}

impl CsmaParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.min_be > self.max_be {
            return Err(ConfigError::new("csma.min_be", "must not exceed max_be"));
        }
        if self.max_be > 16 {
            return Err(ConfigError::new("csma.max_be", "must be at most 16"));
        }
        if self.cw_init == 0 {
            return Err(ConfigError::new("csma.cw_init", "must be at least 1"));
        }
        if self.unit_backoff_symbols <= CCA_DETECTION_SYMBOLS {
            return Err(ConfigError::new(
                "csma.unit_backoff_symbols",
                "must exceed the CCA detection time",
            ));
        }
        Ok(())
    }
}

/// How a contender picks its random delay.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackoffPolicy {
    /// Uniform over `[0, 2^BE - 1]`.
    Standard,
    /// Always the given number of periods, ignoring BE.
    Fixed(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackoffState {
    pub nb: u8,
    pub be: u8,
    pub cw: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CcaStep {
    /// Idle, more CCAs required: assess again at the next boundary.
    CcaAgain,
    /// Contention window exhausted: transmit at the next boundary.
    Transmit,
    /// Busy, budget left: draw a new backoff.
    Backoff,
    /// Busy with NB past the budget.
    Failure,
}

impl BackoffState {
    pub fn new(params: &CsmaParams) -> Self {
        BackoffState {
            nb: 0,
            be: params.min_be,
            cw: params.cw_init,
        }
    }

    pub fn next_backoff(&self, rng: &mut RngStream, policy: BackoffPolicy) -> u32 {
        match policy {
            BackoffPolicy::Standard => {
                let hi = (1i64 << self.be) - 1;
                rng.draw_uniform(0, hi) as u32
            }
            BackoffPolicy::Fixed(n) => n,
        }
    }

    pub fn on_cca(&mut self, channel: ChannelState, params: &CsmaParams) -> CcaStep {
        match channel {
            ChannelState::Idle => {
                self.cw -= 1;
                if self.cw == 0 {
                    CcaStep::Transmit
                } else {
                    CcaStep::CcaAgain
                }
            }
            ChannelState::Busy => {
                self.cw = params.cw_init;
                self.nb += 1;
                self.be = (self.be + 1).min(params.max_be);
                if self.nb > params.max_csma_backoffs {
                    CcaStep::Failure
                } else {
                    CcaStep::Backoff
                }
            }
        }
    }
}

/// Smallest backoff boundary `>= t`, where boundaries are `origin + k*unit`.
pub fn next_boundary(t: SimTime, origin: SimTime, unit: u64) -> SimTime {
    let off = t.0.saturating_sub(origin.0);
    SimTime(origin.0 + off.div_ceil(unit) * unit)
}

/// A frame granted the medium at `t_grant` must finish by the CAP end.
pub fn frame_fits_in_cap(t_grant: SimTime, frame_symbols: u64, cap: &CapWindow) -> bool {
    cap.start <= t_grant && t_grant.0 + frame_symbols <= cap.end.0
}

/// Boundary of the first CCA after waiting `backoff` periods from `now`, or
/// `None` when the CCAs plus the frame would overrun the CAP and the attempt
/// has to move to the next superframe.
pub fn plan_cca(
    now: SimTime,
    cap: &CapWindow,
    superframe_start: SimTime,
    params: &CsmaParams,
    cw: u8,
    backoff: u32,
    frame_symbols: u64,
) -> Option<SimTime> {
    let unit = params.unit_backoff_symbols;
    let from = if now < cap.start { cap.start } else { now };
    let b = next_boundary(from, superframe_start, unit) + backoff as u64 * unit;
    let tx = b + cw as u64 * unit;
    frame_fits_in_cap(tx, frame_symbols, cap).then_some(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccessFailure {
    /// NB exceeded the budget.
    ChannelBusy,
    /// The frame can never fit in a CAP of this layout.
    FrameTooLong,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccessOutcome {
    Granted { at: SimTime },
    Failure { at: SimTime, reason: AccessFailure },
}

/// Fixed superframe layout used by [`attempt_access`].
#[derive(Clone, Debug)]
pub struct FixedLayout {
    pub cfg: SuperframeConfig,
    pub gts_slots: u32,
}

impl FixedLayout {
    /// CAP of the superframe containing `t`, or of the next one if `t` is
    /// already past this CAP's end.
    pub fn cap_at_or_after(&self, t: SimTime) -> (SimTime, CapWindow) {
        let idx = self.cfg.superframe_index(t);
        let cap = self.cfg.cap_window(t, self.gts_slots);
        if t < cap.end {
            (self.cfg.superframe_start(idx), cap)
        } else {
            let next = self.cfg.superframe_start(idx + 1);
            (next, self.cfg.cap_window(next, self.gts_slots))
        }
    }
}

/// Runs the whole access procedure against a busy-oracle `busy(t)`.
///
/// This drives the same [`BackoffState`] transitions the event-driven
/// simulation uses, without an event queue. Attempts that cannot complete in
/// the current CAP are deferred to the next superframe with NB and BE kept.
#[allow(clippy::too_many_arguments)]
pub fn attempt_access(
    state: &mut BackoffState,
    params: &CsmaParams,
    rng: &mut RngStream,
    policy: BackoffPolicy,
    start: SimTime,
    frame_symbols: u64,
    layout: &FixedLayout,
    mut busy: impl FnMut(SimTime) -> bool,
) -> AccessOutcome {
    let unit = params.unit_backoff_symbols;
    let (first_sf, first_cap) = layout.cap_at_or_after(start);
    let too_long = AccessOutcome::Failure {
        at: start,
        reason: AccessFailure::FrameTooLong,
    };
    if plan_cca(
        first_cap.start,
        &first_cap,
        first_sf,
        params,
        params.cw_init,
        0,
        frame_symbols,
    )
    .is_none()
    {
        return too_long;
    }
    let mut t = start;
    let mut deferrals = 0u32;
    loop {
        let (sf_start, cap) = layout.cap_at_or_after(t);
        let delay = state.next_backoff(rng, policy);
        let Some(mut b) = plan_cca(t, &cap, sf_start, params, state.cw, delay, frame_symbols) else {
            deferrals += 1;
            if deferrals > MAX_DEFERRALS {
                return too_long;
            }
            let next = layout.cfg.superframe_start(layout.cfg.superframe_index(cap.start) + 1);
            t = next;
            continue;
        };
        loop {
            let sample = b + CCA_DETECTION_SYMBOLS;
            let channel = if busy(sample) {
                ChannelState::Busy
            } else {
                ChannelState::Idle
            };
            match state.on_cca(channel, params) {
                CcaStep::CcaAgain => b = b + unit,
                CcaStep::Transmit => return AccessOutcome::Granted { at: b + unit },
                CcaStep::Backoff => {
                    t = b + unit;
                    break;
                }
                CcaStep::Failure => {
                    return AccessOutcome::Failure {
                        at: sample,
                        reason: AccessFailure::ChannelBusy,
                    }
                }
            }
        }
    }
}
