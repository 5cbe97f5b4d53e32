//! Beacon-enabled superframe timing and the shared radio medium.
//!
//! A beacon interval starts with the beacon, followed by the contention
//! access period (CAP), the contention free period (CFP) made of the granted
//! GTS slots at the tail of the active portion, and an optional inactive
//! period when `superframe_order < beacon_order`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SimError};
use crate::gts::GtsTable;
use crate::kernel::{EntityId, SimTime};

pub const MAX_ORDER: u8 = 14;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperframeConfig {
    pub beacon_order: u8,
    pub superframe_order: u8,
    pub num_slots: u32,
    pub base_slot_symbols: u64,
    /// Upper bound on the number of slots handed out as GTS.
    pub cfp_slot_capacity: u32,
    pub beacon_symbols: u64,
    pub min_cap_symbols: u64,
}

impl Default for SuperframeConfig {
    fn default() -> Self {
        SuperframeConfig {
            beacon_order: 3,
            superframe_order: 3,
            num_slots: 16,
            base_slot_symbols: 60,
            cfp_slot_capacity: 7,
            beacon_symbols: 80,
            min_cap_symbols: 440,
        }
    }
}

impl SuperframeConfig {
    pub fn with_orders(beacon_order: u8, superframe_order: u8) -> Self {
        SuperframeConfig {
            beacon_order,
            superframe_order,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.beacon_order > MAX_ORDER {
            return Err(ConfigError::new("superframe.beacon_order", "must be in 0..=14"));
        }
        if self.superframe_order > self.beacon_order {
            return Err(ConfigError::new(
                "superframe.superframe_order",
                "must not exceed beacon_order",
            ));
        }
        if self.num_slots < 2 {
            return Err(ConfigError::new("superframe.num_slots", "must be at least 2"));
        }
        if self.base_slot_symbols == 0 {
            return Err(ConfigError::new("superframe.base_slot_symbols", "must be positive"));
        }
        if self.beacon_symbols == 0 || self.beacon_symbols >= self.active_symbols() {
            return Err(ConfigError::new(
                "superframe.beacon_symbols",
                "must be positive and shorter than the active portion",
            ));
        }
        if self.beacon_symbols + self.min_cap_symbols > self.active_symbols() {
            return Err(ConfigError::new(
                "superframe.min_cap_symbols",
                "beacon plus minimum CAP exceeds the active portion",
            ));
        }
        if self.cfp_slot_capacity >= self.num_slots {
            return Err(ConfigError::new(
                "superframe.cfp_slot_capacity",
                "must leave at least one slot for beacon and CAP",
            ));
        }
        Ok(())
    }

    pub fn slot_symbols(&self) -> u64 {
        self.base_slot_symbols << self.superframe_order
    }

    /// Beacon + CAP + CFP.
    pub fn active_symbols(&self) -> u64 {
        self.slot_symbols() * self.num_slots as u64
    }

    pub fn beacon_interval(&self) -> u64 {
        (self.base_slot_symbols * self.num_slots as u64) << self.beacon_order
    }

    pub fn superframe_index(&self, t: SimTime) -> u64 {
        t.0 / self.beacon_interval()
    }

    pub fn superframe_start(&self, index: u64) -> SimTime {
        SimTime(index * self.beacon_interval())
    }

    /// Offset (from superframe start) where the CFP begins when `gts_slots`
    /// slots are granted. Equals the active duration when no GTS exists.
    pub fn cfp_start_offset(&self, gts_slots: u32) -> u64 {
        (self.num_slots.saturating_sub(gts_slots)) as u64 * self.slot_symbols()
    }

    pub fn cap_symbols(&self, gts_slots: u32) -> u64 {
        self.cfp_start_offset(gts_slots).saturating_sub(self.beacon_symbols)
    }

    /// CAP of the superframe containing `t` under the given layout.
    pub fn cap_window(&self, t: SimTime, gts_slots: u32) -> CapWindow {
        let base = self.superframe_start(self.superframe_index(t));
        CapWindow {
            start: base + self.beacon_symbols,
            end: base + self.cfp_start_offset(gts_slots),
        }
    }

    /// Absolute interval `[start, end)` of slot `slot` in superframe `index`.
    pub fn slot_interval(&self, index: u64, slot: u32) -> (SimTime, SimTime) {
        let s = self.superframe_start(index) + slot as u64 * self.slot_symbols();
        (s, s + self.slot_symbols())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CapWindow {
    pub start: SimTime,
    pub end: SimTime,
}

impl CapWindow {
    pub fn contains(&self, t: SimTime) -> bool {
        self.start <= t && t < self.end
    }

    pub fn len(&self) -> u64 {
        self.end.0.saturating_sub(self.start.0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PeriodTag {
    Beacon,
    Cap,
    Cfp(u32),
    Inactive,
}

/// Which part of the superframe `t` falls in, given the granted GTS layout.
pub fn period_of(t: SimTime, cfg: &SuperframeConfig, table: &GtsTable) -> PeriodTag {
    let offset = t.0 % cfg.beacon_interval();
    if offset < cfg.beacon_symbols {
        PeriodTag::Beacon
    } else if offset >= cfg.active_symbols() {
        PeriodTag::Inactive
    } else if offset >= cfg.cfp_start_offset(table.total_slots()) {
        PeriodTag::Cfp((offset / cfg.slot_symbols()) as u32)
    } else {
        PeriodTag::Cap
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TxKind {
    Data,
    GtsRequest,
    Beacon,
    Jam,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub entity: EntityId,
    pub kind: TxKind,
    pub start: SimTime,
    pub end: SimTime,
    pub collided: bool,
}

impl Transmission {
    fn overlaps_at(&self, t: SimTime) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TxHandle(u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelState {
    Idle,
    Busy,
}

/// Shared channel bookkeeping. Occupancy intervals are half-open.
#[derive(Debug, Default)]
pub struct Medium {
    occupants: BTreeMap<TxHandle, Transmission>,
    next_id: u64,
}

impl Medium {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_busy_at(&self, t: SimTime) -> bool {
        self.occupants.values().any(|o| o.overlaps_at(t))
    }

    pub fn is_transmitting(&self, entity: EntityId, t: SimTime) -> bool {
        self.occupants.values().any(|o| o.entity == entity && o.end > t)
    }

    /// Registers a transmission starting now. Overlapping non-beacon
    /// transmissions mark each other collided; jam and beacon occupancy is
    /// never marked.
    pub fn begin_transmission(
        &mut self,
        entity: EntityId,
        kind: TxKind,
        start: SimTime,
        end: SimTime,
    ) -> Result<TxHandle, SimError> {
        if end <= start {
            return Err(SimError::EmptyTransmission { start, end });
        }
        if self.is_transmitting(entity, start) {
            return Err(SimError::AlreadyTransmitting(entity));
        }
        let mut collided = false;
        if kind != TxKind::Beacon {
            for other in self.occupants.values_mut() {
                if other.kind == TxKind::Beacon || other.end <= start {
                    continue;
                }
                if other.kind != TxKind::Jam {
                    other.collided = true;
                }
                if kind != TxKind::Jam {
                    collided = true;
                }
            }
        }
        let handle = TxHandle(self.next_id);
        self.next_id += 1;
        self.occupants.insert(
            handle,
            Transmission {
                entity,
                kind,
                start,
                end,
                collided,
            },
        );
        Ok(handle)
    }

    /// Removes the transmission and reports its final state.
    pub fn end_transmission(&mut self, handle: TxHandle) -> Result<Transmission, SimError> {
        self.occupants
            .remove(&handle)
            .ok_or(SimError::UnknownTransmission(handle.0))
    }

    pub fn peek(&self, handle: TxHandle) -> Option<&Transmission> {
        self.occupants.get(&handle)
    }

    /// Clear channel assessment. Only meaningful inside the CAP.
    pub fn cca(&self, t: SimTime, cap: &CapWindow) -> Result<ChannelState, SimError> {
        if !cap.contains(t) {
            return Err(SimError::CcaOutsideCap(t));
        }
        Ok(if self.is_busy_at(t) {
            ChannelState::Busy
        } else {
            ChannelState::Idle
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gts::{Direction, GtsDescriptor};
    use proptest::prelude::*;

    fn so0() -> SuperframeConfig {
        SuperframeConfig {
            beacon_order: 0,
            superframe_order: 0,
            beacon_symbols: 20,
            ..Default::default()
        }
    }

    #[test]
    fn duration_formulas() {
        let c = SuperframeConfig::with_orders(1, 0);
        assert_eq!(c.active_symbols(), 960);
        assert_eq!(c.beacon_interval(), 1920);
        let c = SuperframeConfig::with_orders(3, 3);
        assert_eq!(c.slot_symbols(), 480);
        assert_eq!(c.active_symbols(), 7680);
        assert_eq!(c.beacon_interval(), 7680);
    }

    #[test]
    fn start_of_superframe_is_beacon() {
        let c = SuperframeConfig::default();
        assert_eq!(period_of(SimTime(0), &c, &GtsTable::new(7)), PeriodTag::Beacon);
    }

    #[test]
    fn inactive_portion() {
        let c = SuperframeConfig::with_orders(1, 0);
        assert_eq!(period_of(SimTime(1000), &c, &GtsTable::new(7)), PeriodTag::Inactive);
        assert_eq!(period_of(SimTime(959), &c, &GtsTable::new(7)), PeriodTag::Cap);
        assert_eq!(period_of(SimTime(1920), &c, &GtsTable::new(7)), PeriodTag::Beacon);
    }

    #[test]
    fn cfp_slot_lookup() {
        let c = so0();
        let table = GtsTable::from_descriptors(
            7,
            vec![GtsDescriptor {
                device: 1,
                start_slot: 13,
                length_slots: 3,
                direction: Direction::Uplink,
            }],
        );
        assert_eq!(period_of(SimTime(13 * 60 + 1), &c, &table), PeriodTag::Cfp(13));
        assert_eq!(period_of(SimTime(779), &c, &table), PeriodTag::Cap);
        assert_eq!(period_of(SimTime(959), &c, &table), PeriodTag::Cfp(15));
    }

    #[test]
    fn validate_rejects_bad_orders() {
        assert!(SuperframeConfig::with_orders(2, 3).validate().is_err());
        assert!(SuperframeConfig::with_orders(15, 3).validate().is_err());
        assert!(SuperframeConfig::with_orders(3, 3).validate().is_ok());
    }

    #[test]
    fn sole_occupant_is_delivered() {
        let mut m = Medium::new();
        let h = m.begin_transmission(1, TxKind::Data, SimTime(0), SimTime(10)).unwrap();
        assert!(!m.end_transmission(h).unwrap().collided);
    }

    #[test]
    fn overlapping_requests_collide() {
        let mut m = Medium::new();
        let a = m
            .begin_transmission(1, TxKind::GtsRequest, SimTime(0), SimTime(10))
            .unwrap();
        let b = m
            .begin_transmission(2, TxKind::GtsRequest, SimTime(5), SimTime(15))
            .unwrap();
        assert!(m.end_transmission(a).unwrap().collided);
        assert!(m.end_transmission(b).unwrap().collided);
    }

    #[test]
    fn jam_corrupts_data_but_not_itself() {
        let mut m = Medium::new();
        let jam = m
            .begin_transmission(9, TxKind::Jam, SimTime(780), SimTime(960))
            .unwrap();
        let data = m
            .begin_transmission(1, TxKind::Data, SimTime(840), SimTime(900))
            .unwrap();
        assert!(m.end_transmission(data).unwrap().collided);
        assert!(!m.end_transmission(jam).unwrap().collided);
    }

    #[test]
    fn back_to_back_frames_do_not_collide() {
        let mut m = Medium::new();
        let a = m.begin_transmission(1, TxKind::Data, SimTime(0), SimTime(10)).unwrap();
        let b = m.begin_transmission(2, TxKind::Data, SimTime(10), SimTime(20)).unwrap();
        assert!(!m.end_transmission(a).unwrap().collided);
        assert!(!m.end_transmission(b).unwrap().collided);
    }

    #[test]
    fn double_transmission_is_an_error() {
        let mut m = Medium::new();
        m.begin_transmission(1, TxKind::Data, SimTime(0), SimTime(10)).unwrap();
        assert_eq!(
            m.begin_transmission(1, TxKind::Data, SimTime(5), SimTime(8)),
            Err(SimError::AlreadyTransmitting(1))
        );
    }

    #[test]
    fn cca_states() {
        let cap = CapWindow {
            start: SimTime(20),
            end: SimTime(500),
        };
        let mut m = Medium::new();
        assert_eq!(m.cca(SimTime(30), &cap).unwrap(), ChannelState::Idle);
        m.begin_transmission(7, TxKind::Data, SimTime(40), SimTime(100))
            .unwrap();
        assert_eq!(m.cca(SimTime(60), &cap).unwrap(), ChannelState::Busy);
        assert_eq!(m.cca(SimTime(100), &cap).unwrap(), ChannelState::Idle);
        assert!(m.cca(SimTime(10), &cap).is_err());
        assert!(m.cca(SimTime(500), &cap).is_err());
    }

    fn arb_config() -> impl Strategy<Value = SuperframeConfig> {
        (0u8..=6, 0u8..=6, 1u64..200).prop_map(|(a, b, beacon)| {
            let (bo, so) = if a >= b { (a, b) } else { (b, a) };
            SuperframeConfig {
                beacon_order: bo,
                superframe_order: so,
                beacon_symbols: beacon,
                min_cap_symbols: 0,
                ..Default::default()
            }
        })
    }

    proptest! {
        #[test]
        fn periods_partition_the_interval(cfg in arb_config(), gts in 0u32..8) {
            let mut table = GtsTable::new(7);
            if gts > 0 {
                table = GtsTable::from_descriptors(7, vec![GtsDescriptor {
                    device: 1,
                    start_slot: cfg.num_slots - gts,
                    length_slots: gts,
                    direction: Direction::Uplink,
                }]);
            }
            let bi = cfg.beacon_interval();
            let step = (bi / 997).max(1);
            let (mut beacon, mut cap, mut cfp, mut inactive) = (0u64, 0u64, 0u64, 0u64);
            let mut t = 0;
            while t < bi {
                match period_of(SimTime(t + 2 * bi), &cfg, &table) {
                    PeriodTag::Beacon => beacon += 1,
                    PeriodTag::Cap => cap += 1,
                    PeriodTag::Cfp(k) => {
                        prop_assert!(k >= cfg.num_slots - gts && k < cfg.num_slots);
                        cfp += 1
                    }
                    PeriodTag::Inactive => inactive += 1,
                }
                t += step;
            }
            prop_assert_eq!(beacon + cap + cfp + inactive, bi.div_ceil(step));
            // Exact durations per tag.
            let exact_cfp = gts as u64 * cfg.slot_symbols();
            prop_assert_eq!(
                cfg.beacon_symbols + cfg.cap_symbols(gts) + exact_cfp
                    + (bi - cfg.active_symbols()),
                bi
            );
            if cfg.beacon_order == cfg.superframe_order {
                prop_assert_eq!(inactive, 0);
            }
        }

        #[test]
        fn collision_marks_ignore_start_order(
            spans in prop::collection::vec((0u64..40, 1u64..30, prop::bool::ANY), 1..8),
            perm_seed: u64,
        ) {
            // Process the same geometry twice with ties at equal start times
            // shuffled differently.
            let run = |order_seed: u64| {
                let mut idx: Vec<usize> = (0..spans.len()).collect();
                idx.sort_by_key(|&i| (spans[i].0, (i as u64).wrapping_mul(order_seed | 1) % 97));
                let mut m = Medium::new();
                let mut handles = vec![None; spans.len()];
                for &i in &idx {
                    let (s, len, jam) = spans[i];
                    let kind = if jam { TxKind::Jam } else { TxKind::Data };
                    handles[i] = Some(
                        m.begin_transmission(i as EntityId, kind, SimTime(s), SimTime(s + len))
                            .unwrap(),
                    );
                }
                handles
                    .into_iter()
                    .map(|h| m.end_transmission(h.unwrap()).unwrap().collided)
                    .collect::<Vec<bool>>()
            };
            prop_assert_eq!(run(1), run(perm_seed));
        }
    }
}
