//! Beacon-enabled network simulation: one coordinator, legitimate nodes that
//! request and use GTSs, and attackers.
//!
//! Entity 0 is the coordinator, nodes are `1..=N`, attackers follow in
//! roster order (smart, random, weak). Each entity draws from its own RNG
//! stream so adding attackers never perturbs the nodes' draws.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::{DefaultHasher, Hash, Hasher};

use crate::adversary::{cap_attack_policy, jam, AttackerKind, AttackerState, JamPlan};
use crate::csma::{plan_cca, BackoffPolicy, BackoffState, CcaStep, CCA_DETECTION_SYMBOLS};
use crate::error::{ConfigError, RunError, SimError};
use crate::gts::{build_beacon, BeaconPayload, Direction, GtsError, GtsRequest, GtsTable};
use crate::kernel::{EntityId, Event, EventKind, Kernel, RngStream, SimTime};
use crate::metrics::{Outcome, RequestResult, RunMetrics, TraceRecord};
use crate::scenario::Scenario;
use crate::security::{Acl, KeyRecord, SecuredFrame, SecuritySuite};
use crate::superframe::{CapWindow, Medium, TxHandle, TxKind};

pub const COORDINATOR: EntityId = 0;

/// Stream id for attacker `index` of `kind`. Kept disjoint from node ids.
pub fn attacker_stream(kind: AttackerKind, index: u32) -> u64 {
    let class = match kind {
        AttackerKind::Smart => 0u64,
        AttackerKind::Random => 1,
        AttackerKind::Weak => 2,
    };
    (1 << 32) | (class << 16) | index as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceMode {
    Off,
    /// Keep a running hash of every record.
    Digest,
    /// Keep every record.
    Full,
}

#[derive(Debug)]
enum Payload {
    Beacon,
    Access,
    Cca {
        boundary: SimTime,
    },
    TxStart,
    TxEnd {
        handle: TxHandle,
    },
    SlotStart {
        slot: u32,
        last: bool,
    },
    SlotEnd {
        handle: TxHandle,
        slot: u32,
        last: bool,
        frame: Option<Box<SecuredFrame>>,
    },
    JamStart {
        plan: JamPlan,
    },
    JamEnd {
        handle: TxHandle,
    },
}

#[derive(Clone, Copy, Debug)]
struct Contention {
    state: BackoffState,
    policy: BackoffPolicy,
    frame_symbols: u64,
    /// Waiting for the next CAP.
    deferred: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Idle { until: u64 },
    Requesting,
    AwaitGrant,
    Holding { remaining: u64 },
}

struct Node {
    id: EntityId,
    gts_len: u32,
    direction: Direction,
    payload_symbols: u64,
    suite: SecuritySuite,
    rng: RngStream,
    phase: Phase,
    access: Option<Contention>,
    releasing: bool,
    /// Uplink sender record and downlink receiver record.
    tx_key: KeyRecord,
    rx_key: KeyRecord,
}

struct Attacker {
    id: EntityId,
    state: AttackerState,
    access: Option<Contention>,
}

pub struct RunOutput {
    pub metrics: RunMetrics,
    pub trace: Vec<TraceRecord>,
    pub trace_digest: u64,
    pub events: u64,
}

pub struct Simulation {
    sc: Scenario,
    kernel: Kernel<Payload>,
    medium: Medium,
    table: GtsTable,
    beacon: BeaconPayload,
    superframe: u64,
    sf_start: SimTime,
    cap: CapWindow,
    nodes: Vec<Node>,
    attackers: Vec<Attacker>,
    acl: Acl,
    downlink_keys: BTreeMap<EntityId, KeyRecord>,
    /// Slots scheduled to carry data in the current superframe.
    used_slots: BTreeSet<u32>,
    jammed_empty: BTreeSet<u32>,
    plaintext: Vec<u8>,
    metrics: RunMetrics,
    mode: TraceMode,
    trace: Vec<TraceRecord>,
    digest: DefaultHasher,
    outcomes: Vec<Outcome>,
    end: SimTime,
}

impl Simulation {
    /// Builds a run of `scenario` under `seed` (the scenario's own seed
    /// field is ignored here so replications can supply theirs).
    pub fn new(scenario: &Scenario, seed: u64, mode: TraceMode) -> Result<Self, ConfigError> {
        scenario.validate()?;
        let sc = scenario.clone();
        let cfg = &sc.superframe;
        let mut acl = Acl::new();
        let mut downlink_keys = BTreeMap::new();
        let mut nodes = Vec::with_capacity(sc.nodes as usize);
        for id in 1..=sc.nodes {
            let key = sc.security.key_for(id);
            acl.insert(KeyRecord::new(key, id));
            downlink_keys.insert(id, KeyRecord::new(key, id));
            let mut rng = RngStream::new(seed, id as u64);
            let until = rng.draw_uniform(0, sc.traffic.idle_max as i64) as u64;
            nodes.push(Node {
                id,
                gts_len: sc.node_gts_length(id),
                direction: sc.node_direction(id),
                payload_symbols: sc.node_payload_symbols(id),
                suite: sc.security.suite_for(id),
                rng,
                phase: Phase::Idle { until },
                access: None,
                releasing: false,
                tx_key: KeyRecord::new(key, COORDINATOR),
                rx_key: KeyRecord::new(key, COORDINATOR),
            });
        }
        let attackers = sc
            .attackers
            .profiles()
            .into_iter()
            .enumerate()
            .map(|(i, (profile, idx))| Attacker {
                id: sc.nodes + 1 + i as u32,
                state: AttackerState::new(profile, RngStream::new(seed, attacker_stream(profile.kind, idx))),
                access: None,
            })
            .collect();
        let table = GtsTable::new(sc.gts_capacity);
        let beacon = build_beacon(&table, cfg);
        let mut kernel = Kernel::new();
        kernel
            .schedule(SimTime::ZERO, EventKind::BeaconTx, COORDINATOR, Payload::Beacon)
            .expect("schedule at time zero");
        let end = SimTime(sc.horizon * cfg.beacon_interval());
        let cap = cfg.cap_window(SimTime::ZERO, 0);
        let plaintext = (0..sc.security.payload_octets).map(|i| i as u8).collect();
        Ok(Simulation {
            kernel,
            medium: Medium::new(),
            table,
            beacon,
            superframe: 0,
            sf_start: SimTime::ZERO,
            cap,
            nodes,
            attackers,
            acl,
            downlink_keys,
            used_slots: BTreeSet::new(),
            jammed_empty: BTreeSet::new(),
            plaintext,
            metrics: RunMetrics::default(),
            mode,
            trace: Vec::new(),
            digest: DefaultHasher::new(),
            outcomes: Vec::new(),
            end,
            sc,
        })
    }

    /// Symbol time at which the configured horizon ends.
    pub fn horizon_end(&self) -> SimTime {
        self.end
    }

    pub fn metrics(&self) -> RunMetrics {
        self.metrics
    }

    pub fn now(&self) -> SimTime {
        self.kernel.now()
    }

    /// Advances the clock to `end`, dispatching every due event, and returns
    /// the counters so far.
    pub fn run_until(&mut self, end: SimTime) -> Result<RunMetrics, SimError> {
        let mut kernel = std::mem::take(&mut self.kernel);
        let result = kernel.run_until(end, |k, ev| self.dispatch(k, ev));
        self.kernel = kernel;
        result?;
        Ok(self.metrics)
    }

    pub fn run(mut self) -> Result<RunOutput, SimError> {
        let end = self.end;
        self.run_until(end)?;
        Ok(RunOutput {
            metrics: self.metrics,
            trace_digest: self.digest.finish(),
            events: self.kernel.dispatched(),
            trace: self.trace,
        })
    }

    fn dispatch(&mut self, k: &mut Kernel<Payload>, ev: Event<Payload>) -> Result<(), SimError> {
        let (at, seq, kind, target) = (ev.at, ev.seq, ev.kind, ev.target);
        self.handle(k, ev)?;
        if self.mode != TraceMode::Off {
            let rec = TraceRecord {
                at: at.0,
                seq,
                kind,
                target,
                outcomes: std::mem::take(&mut self.outcomes),
            };
            rec.hash(&mut self.digest);
            if self.mode == TraceMode::Full {
                self.trace.push(rec);
            }
        } else {
            self.outcomes.clear();
        }
        Ok(())
    }

    fn handle(&mut self, k: &mut Kernel<Payload>, ev: Event<Payload>) -> Result<(), SimError> {
        let t = ev.at;
        let e = ev.target;
        match ev.payload {
            Payload::Beacon => self.on_beacon(k, t),
            Payload::Access => self.start_backoff(k, e, t),
            Payload::Cca { boundary } => self.on_cca(k, e, t, boundary),
            Payload::TxStart => {
                let frame = self.contention(e).map(|c| c.frame_symbols).unwrap_or(0);
                let kind = if self.is_node(e) {
                    TxKind::GtsRequest
                } else {
                    TxKind::Data
                };
                let handle = self.medium.begin_transmission(e, kind, t, t + frame)?;
                k.schedule(t + frame, EventKind::FrameTxEnd, e, Payload::TxEnd { handle })?;
                Ok(())
            }
            Payload::TxEnd { handle } => self.on_tx_end(k, e, t, handle),
            Payload::SlotStart { slot, last } => self.on_slot_start(k, e, t, slot, last),
            Payload::SlotEnd {
                handle,
                slot,
                last,
                frame,
            } => self.on_slot_end(e, handle, slot, last, frame),
            Payload::JamStart { plan } => {
                let handle = self.medium.begin_transmission(e, TxKind::Jam, plan.start, plan.end)?;
                k.schedule(plan.end, EventKind::JamEnd, e, Payload::JamEnd { handle })?;
                self.metrics.jams_launched += 1;
                self.outcomes.push(Outcome::JamLaunched {
                    attacker: e,
                    device: plan.target.device,
                });
                let mut empty = 0;
                for slot in plan.target.slots() {
                    if !self.used_slots.contains(&slot) && self.jammed_empty.insert(slot) {
                        empty += 1;
                    }
                }
                if empty > 0 {
                    self.metrics.gts_slots_jammed_empty += empty as u64;
                    self.outcomes.push(Outcome::JammedEmpty { slots: empty });
                }
                Ok(())
            }
            Payload::JamEnd { handle } => {
                self.medium.end_transmission(handle)?;
                Ok(())
            }
        }
    }

    fn is_node(&self, e: EntityId) -> bool {
        e >= 1 && e <= self.sc.nodes
    }

    fn node_mut(&mut self, e: EntityId) -> &mut Node {
        &mut self.nodes[e as usize - 1]
    }

    fn attacker_mut(&mut self, e: EntityId) -> &mut Attacker {
        let base = self.sc.nodes as usize + 1;
        &mut self.attackers[e as usize - base]
    }

    fn contention(&mut self, e: EntityId) -> Option<&mut Contention> {
        if self.is_node(e) {
            self.node_mut(e).access.as_mut()
        } else {
            self.attacker_mut(e).access.as_mut()
        }
    }

    fn on_beacon(&mut self, k: &mut Kernel<Payload>, t: SimTime) -> Result<(), SimError> {
        let cfg = self.sc.superframe.clone();
        let index = cfg.superframe_index(t);
        self.superframe = index;
        self.sf_start = t;
        self.beacon = build_beacon(&self.table, &cfg);
        self.cap = cfg.cap_window(t, self.beacon.total_slots());
        self.used_slots.clear();
        self.jammed_empty.clear();

        let bend = t + cfg.beacon_symbols;
        let handle = self.medium.begin_transmission(COORDINATOR, TxKind::Beacon, t, bend)?;
        k.schedule(bend, EventKind::FrameTxEnd, COORDINATOR, Payload::TxEnd { handle })?;
        if index + 1 < self.sc.horizon {
            k.schedule(
                t + cfg.beacon_interval(),
                EventKind::BeaconTx,
                COORDINATOR,
                Payload::Beacon,
            )?;
        }

        let hold = (self.sc.traffic.hold_min as i64, self.sc.traffic.hold_max as i64);
        for i in 0..self.nodes.len() {
            let cap_start = self.cap.start;
            let beacon = &self.beacon;
            let node = &mut self.nodes[i];
            if let Phase::Idle { until } = node.phase {
                if index >= until {
                    node.phase = Phase::Requesting;
                    node.access = Some(Contention {
                        state: BackoffState::new(&self.sc.csma),
                        policy: BackoffPolicy::Standard,
                        frame_symbols: self.sc.traffic.request_frame_symbols,
                        deferred: true,
                    });
                }
            }
            let desc = beacon
                .gts
                .iter()
                .find(|d| d.device == node.id && d.direction == node.direction)
                .copied();
            if node.phase == Phase::AwaitGrant && desc.is_some() {
                let h = node.rng.draw_uniform(hold.0, hold.1) as u64;
                node.phase = Phase::Holding { remaining: h };
            }
            match node.phase {
                Phase::Holding { remaining } => {
                    if let Some(d) = desc {
                        let remaining = remaining - 1;
                        node.phase = Phase::Holding { remaining };
                        node.releasing = remaining == 0;
                        let id = node.id;
                        for slot in d.slots() {
                            self.used_slots.insert(slot);
                            let (start, _) = cfg.slot_interval(index, slot);
                            let last = slot + 1 == d.end_slot();
                            k.schedule(start, EventKind::GtsSlotStart, id, Payload::SlotStart { slot, last })?;
                        }
                    }
                }
                Phase::Requesting => {
                    if let Some(c) = node.access.as_mut().filter(|c| c.deferred) {
                        c.deferred = false;
                        k.schedule(cap_start, EventKind::BackoffSlotBoundary, node.id, Payload::Access)?;
                    }
                }
                _ => {}
            }
        }

        let receive = self.sc.attackers.receive_beacons;
        let attacker_frame = self.sc.attackers.frame_symbols;
        for a in &mut self.attackers {
            if receive {
                a.state.on_beacon(&self.beacon);
            }
            let active = a.state.draw_activation();
            a.access = None;
            if !(active && a.state.synchronized) {
                continue;
            }
            if let Some(target) = a.state.target() {
                let plan = jam(&target, &cfg, index);
                k.schedule(plan.start, EventKind::JamStart, a.id, Payload::JamStart { plan })?;
            }
            if let Some(dir) = cap_attack_policy(&a.state.profile) {
                debug_assert!(dir.greedy);
                a.access = Some(Contention {
                    state: BackoffState::new(&self.sc.csma),
                    policy: dir.backoff,
                    frame_symbols: attacker_frame,
                    deferred: false,
                });
                k.schedule(self.cap.start, EventKind::BackoffSlotBoundary, a.id, Payload::Access)?;
            }
        }
        Ok(())
    }

    /// Draws a backoff at `now` and schedules the first CCA, or parks the
    /// attempt until the next CAP when it cannot complete in this one.
    fn start_backoff(&mut self, k: &mut Kernel<Payload>, e: EntityId, now: SimTime) -> Result<(), SimError> {
        let (cap, sf_start, params) = (self.cap, self.sf_start, self.sc.csma.clone());
        let is_node = self.is_node(e);
        let (access, rng) = if is_node {
            let n = self.node_mut(e);
            (&mut n.access, &mut n.rng)
        } else {
            let a = self.attacker_mut(e);
            (&mut a.access, &mut a.state.rng)
        };
        let Some(c) = access.as_mut() else {
            return Ok(());
        };
        let delay = c.state.next_backoff(rng, c.policy);
        match plan_cca(now, &cap, sf_start, &params, c.state.cw, delay, c.frame_symbols) {
            Some(b) => {
                k.schedule(
                    b + CCA_DETECTION_SYMBOLS,
                    EventKind::Cca,
                    e,
                    Payload::Cca { boundary: b },
                )?;
            }
            None if is_node => c.deferred = true,
            // Attackers simply stop until their next active superframe.
            None => *access = None,
        }
        Ok(())
    }

    fn on_cca(&mut self, k: &mut Kernel<Payload>, e: EntityId, t: SimTime, b: SimTime) -> Result<(), SimError> {
        let channel = self.medium.cca(t, &self.cap)?;
        let params = self.sc.csma.clone();
        let unit = params.unit_backoff_symbols;
        let is_node = self.is_node(e);
        let Some(c) = self.contention(e) else {
            return Ok(());
        };
        match c.state.on_cca(channel, &params) {
            CcaStep::CcaAgain => {
                k.schedule(
                    b + unit + CCA_DETECTION_SYMBOLS,
                    EventKind::Cca,
                    e,
                    Payload::Cca { boundary: b + unit },
                )?;
            }
            CcaStep::Transmit => {
                k.schedule(b + unit, EventKind::FrameTxStart, e, Payload::TxStart)?;
            }
            CcaStep::Backoff => self.start_backoff(k, e, t)?,
            CcaStep::Failure => {
                if is_node {
                    self.resolve_request(e, RequestResult::CapAccessFailure);
                } else {
                    c.state = BackoffState::new(&params);
                    self.start_backoff(k, e, t)?;
                }
            }
        }
        Ok(())
    }

    fn on_tx_end(
        &mut self,
        k: &mut Kernel<Payload>,
        e: EntityId,
        t: SimTime,
        handle: TxHandle,
    ) -> Result<(), SimError> {
        let tx = self.medium.end_transmission(handle)?;
        if e == COORDINATOR {
            return Ok(());
        }
        if !self.is_node(e) {
            // Greedy attacker: contend again straight away.
            let params = self.sc.csma.clone();
            if let Some(c) = self.contention(e) {
                c.state = BackoffState::new(&params);
                self.start_backoff(k, e, t)?;
            }
            return Ok(());
        }
        if tx.collided {
            self.resolve_request(e, RequestResult::Collision);
            return Ok(());
        }
        let node = &self.nodes[e as usize - 1];
        let req = GtsRequest::new(e, node.gts_len, node.direction).expect("validated length");
        let result = match self.table.handle_request(&req, &self.sc.superframe) {
            Ok(_) => RequestResult::Granted,
            Err(GtsError::Denied(d)) => RequestResult::Denied(d),
            Err(GtsError::Malformed) => unreachable!("request lengths are validated"),
        };
        self.resolve_request(e, result);
        Ok(())
    }

    fn resolve_request(&mut self, e: EntityId, result: RequestResult) {
        let m = &mut self.metrics;
        m.gts_requests_total += 1;
        match result {
            RequestResult::Granted => {}
            RequestResult::CapAccessFailure => m.failed_cap_access += 1,
            RequestResult::Collision => m.failed_collision += 1,
            RequestResult::Denied(_) => m.failed_denied += 1,
        }
        let node = self.node_mut(e);
        if result == RequestResult::Granted {
            node.phase = Phase::AwaitGrant;
            node.access = None;
        } else {
            // Retry from scratch in the next CAP.
            self.metrics.gts_requests_failed += 1;
            let csma = self.sc.csma.clone();
            let node = self.node_mut(e);
            if let Some(c) = node.access.as_mut() {
                c.state = BackoffState::new(&csma);
                c.deferred = true;
            }
        }
        self.outcomes.push(Outcome::Request { device: e, result });
    }

    fn on_slot_start(
        &mut self,
        k: &mut Kernel<Payload>,
        e: EntityId,
        t: SimTime,
        slot: u32,
        last: bool,
    ) -> Result<(), SimError> {
        let plaintext = &self.plaintext;
        let node = &mut self.nodes[e as usize - 1];
        let (sender, record) = match node.direction {
            Direction::Uplink => (e, &mut node.tx_key),
            Direction::Downlink => (COORDINATOR, self.downlink_keys.get_mut(&e).expect("key per node")),
        };
        let counter = record.next_send_counter();
        let frame = record
            .protect(sender, node.suite, plaintext, counter)
            .ok()
            .map(Box::new);
        let end = t + node.payload_symbols;
        let handle = self.medium.begin_transmission(sender, TxKind::Data, t, end)?;
        k.schedule(
            end,
            EventKind::GtsSlotEnd,
            e,
            Payload::SlotEnd {
                handle,
                slot,
                last,
                frame,
            },
        )?;
        Ok(())
    }

    fn on_slot_end(
        &mut self,
        e: EntityId,
        handle: TxHandle,
        slot: u32,
        last: bool,
        frame: Option<Box<SecuredFrame>>,
    ) -> Result<(), SimError> {
        let tx = self.medium.end_transmission(handle)?;
        let symbols = tx.end.0 - tx.start.0;
        let corrupted = tx.collided;
        let delivered = !corrupted
            && match frame {
                None => false,
                Some(f) => {
                    let node = &mut self.nodes[e as usize - 1];
                    let got = match node.direction {
                        Direction::Uplink => self.acl.unprotect(&f),
                        Direction::Downlink => node.rx_key.unprotect(&f),
                    };
                    got.is_ok_and(|p| p == self.plaintext)
                }
            };
        let m = &mut self.metrics;
        m.gts_slots_scheduled += 1;
        m.payload_symbols_offered += symbols;
        if corrupted {
            m.gts_slots_corrupted += 1;
        } else if delivered {
            m.payload_symbols_delivered += symbols;
        } else {
            m.frames_rejected += 1;
        }
        self.outcomes.push(Outcome::Slot {
            device: e,
            slot,
            payload_symbols: symbols,
            corrupted,
            delivered,
        });
        if last && self.nodes[e as usize - 1].releasing {
            let cfg = self.sc.superframe.clone();
            let idle = (self.sc.traffic.idle_min as i64, self.sc.traffic.idle_max as i64);
            let index = self.superframe;
            let node = &mut self.nodes[e as usize - 1];
            node.releasing = false;
            let gap = node.rng.draw_uniform(idle.0, idle.1) as u64;
            node.phase = Phase::Idle { until: index + 1 + gap };
            let dir = node.direction;
            self.table.deallocate(e, dir, &cfg);
        }
        Ok(())
    }
}

/// One untraced run.
pub fn run_once(scenario: &Scenario, seed: u64) -> Result<RunMetrics, RunError> {
    Ok(Simulation::new(scenario, seed, TraceMode::Off)?.run()?.metrics)
}
