//! Deterministic discrete-event engine.
//!
//! Time is counted in PHY symbol periods. Events are dispatched in
//! `(at, seq)` order, where `seq` is the insertion counter, so two events
//! scheduled for the same instant fire in the order they were scheduled.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Symbol count since simulation start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn symbols(self) -> u64 {
        self.0
    }
}

impl std::ops::Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: u64) -> SimTime {
        SimTime(self.0 + rhs)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}sym", self.0)
    }
}

/// Simulation participant. 0 is the coordinator by convention.
pub type EntityId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    BeaconTx,
    BackoffSlotBoundary,
    Cca,
    FrameTxStart,
    FrameTxEnd,
    GtsSlotStart,
    GtsSlotEnd,
    JamStart,
    JamEnd,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event<P> {
    pub at: SimTime,
    pub seq: u64,
    pub kind: EventKind,
    pub target: EntityId,
    pub payload: P,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

struct Queued<P> {
    event: Event<P>,
}

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl<P> Eq for Queued<P> {}
impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<P> Ord for Queued<P> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}
impl<P> Queued<P> {
    fn key(&self) -> (SimTime, u64) {
        (self.event.at, self.event.seq)
    }
}

/// Event queue plus virtual clock.
pub struct Kernel<P> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Reverse<Queued<P>>>,
    cancelled: HashSet<u64>,
    dispatched: u64,
}

impl<P> Default for Kernel<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Kernel<P> {
    pub fn new() -> Self {
        Kernel {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            cancelled: HashSet::new(),
            dispatched: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of events handed to a handler so far.
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn pending(&self) -> usize {
        self.queue.len() - self.cancelled.len()
    }

    pub fn schedule(
        &mut self,
        at: SimTime,
        kind: EventKind,
        target: EntityId,
        payload: P,
    ) -> Result<EventHandle, SimError> {
        if at < self.now {
            return Err(SimError::ScheduleInPast { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Queued {
            event: Event {
                at,
                seq,
                kind,
                target,
                payload,
            },
        }));
        Ok(EventHandle(seq))
    }

    /// Cancelling an already dispatched or unknown handle has no effect.
    pub fn cancel(&mut self, handle: EventHandle) {
        if self.queue.iter().any(|q| q.0.event.seq == handle.0) {
            self.cancelled.insert(handle.0);
        }
    }

    fn pop_due(&mut self, end: SimTime) -> Option<Event<P>> {
        loop {
            let due = matches!(self.queue.peek(), Some(Reverse(q)) if q.event.at <= end);
            if !due {
                return None;
            }
            let Reverse(q) = self.queue.pop().expect("peeked");
            if self.cancelled.remove(&q.event.seq) {
                continue;
            }
            return Some(q.event);
        }
    }

    /// Dispatches every event with `at <= end` in `(at, seq)` order, then
    /// sets the clock to `end`.
    pub fn run_until<E, F>(&mut self, end: SimTime, mut handler: F) -> Result<u64, E>
    where
        F: FnMut(&mut Self, Event<P>) -> Result<(), E>,
        E: From<SimError>,
    {
        if end < self.now {
            return Err(SimError::ScheduleInPast { at: end, now: self.now }.into());
        }
        let before = self.dispatched;
        while let Some(ev) = self.pop_due(end) {
            debug_assert!(ev.at >= self.now);
            self.now = ev.at;
            self.dispatched += 1;
            handler(self, ev)?;
        }
        self.now = end;
        Ok(self.dispatched - before)
    }
}

/// Per-entity pseudo-random stream.
///
/// The stream is ChaCha8 keyed by the master seed with the stream id as the
/// ChaCha stream number, so draws are identical on every platform and one
/// entity's stream is unaffected by how many other entities exist.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
    draws: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
            draws: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform integer in the closed range `[lo, hi]`.
    ///
    /// # Panics
    /// If `lo > hi`.
    pub fn draw_uniform(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "draw_uniform: empty range [{lo}, {hi}]");
        self.draws += 1;
        self.rng.gen_range(lo..=hi)
    }

    /// Uniform in `[0, 1)`.
    pub fn draw_unit(&mut self) -> f64 {
        self.draws += 1;
        self.rng.gen::<f64>()
    }
}

/// SplitMix64 finalizer, used to derive replication seeds.
pub fn mix_seed(master: u64, salt: u64) -> u64 {
    let mut z = master.wrapping_add(salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
