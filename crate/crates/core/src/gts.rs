//! Coordinator-side guaranteed time slot bookkeeping.
//!
//! Granted slots are packed against the end of the active portion: the first
//! descriptor in the table ends at the last slot, each later grant sits
//! immediately below the previous one, so the CFP grows downward into the CAP.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::EntityId;
use crate::superframe::SuperframeConfig;

pub const DEFAULT_GTS_CAPACITY: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Uplink,
    Downlink,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtsRequest {
    pub device: EntityId,
    pub length_slots: u32,
    pub direction: Direction,
}

impl GtsRequest {
    pub fn new(device: EntityId, length_slots: u32, direction: Direction) -> Result<Self, GtsError> {
        if length_slots == 0 {
            return Err(GtsError::Malformed);
        }
        Ok(GtsRequest {
            device,
            length_slots,
            direction,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GtsDescriptor {
    pub device: EntityId,
    pub start_slot: u32,
    pub length_slots: u32,
    pub direction: Direction,
}

impl GtsDescriptor {
    pub fn end_slot(&self) -> u32 {
        self.start_slot + self.length_slots
    }

    pub fn slots(&self) -> std::ops::Range<u32> {
        self.start_slot..self.end_slot()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denial {
    /// Descriptor count already at capacity.
    Capacity,
    /// Not enough CFP slots, or the CAP would drop below its minimum.
    Space,
    /// Device already holds a GTS in this direction.
    Duplicate,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GtsError {
    #[error("GTS request with zero length")]
    Malformed,
    #[error("GTS request denied: {0:?}")]
    Denied(Denial),
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GtsTable {
    descriptors: Vec<GtsDescriptor>,
    capacity: usize,
}

impl GtsTable {
    pub fn new(capacity: usize) -> Self {
        GtsTable {
            descriptors: Vec::new(),
            capacity,
        }
    }

    /// Builds a table from an announced descriptor list without checks.
    pub fn from_descriptors(capacity: usize, descriptors: Vec<GtsDescriptor>) -> Self {
        GtsTable { descriptors, capacity }
    }

    pub fn descriptors(&self) -> &[GtsDescriptor] {
        &self.descriptors
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn total_slots(&self) -> u32 {
        self.descriptors.iter().map(|d| d.length_slots).sum()
    }

    pub fn find(&self, device: EntityId, direction: Direction) -> Option<&GtsDescriptor> {
        self.descriptors
            .iter()
            .find(|d| d.device == device && d.direction == direction)
    }

    pub fn cfp_start_slot(&self, cfg: &SuperframeConfig) -> u32 {
        cfg.num_slots - self.total_slots()
    }

    /// Grants the request or explains why not. The grant becomes visible to
    /// devices through the next beacon.
    pub fn handle_request(&mut self, req: &GtsRequest, cfg: &SuperframeConfig) -> Result<GtsDescriptor, GtsError> {
        if req.length_slots == 0 {
            return Err(GtsError::Malformed);
        }
        if self.find(req.device, req.direction).is_some() {
            return Err(GtsError::Denied(Denial::Duplicate));
        }
        if self.descriptors.len() >= self.capacity {
            return Err(GtsError::Denied(Denial::Capacity));
        }
        let total = self.total_slots() + req.length_slots;
        if total > cfg.cfp_slot_capacity || total >= cfg.num_slots {
            return Err(GtsError::Denied(Denial::Space));
        }
        let cap = cfg.cap_symbols(total);
        if cap < cfg.min_cap_symbols.max(1) {
            return Err(GtsError::Denied(Denial::Space));
        }
        let desc = GtsDescriptor {
            device: req.device,
            start_slot: self.cfp_start_slot(cfg) - req.length_slots,
            length_slots: req.length_slots,
            direction: req.direction,
        };
        self.descriptors.push(desc);
        Ok(desc)
    }

    /// Removes the device's descriptor and repacks the survivors against the
    /// end of the active portion. Returns `None` (and logs) when there is no
    /// such descriptor.
    pub fn deallocate(
        &mut self,
        device: EntityId,
        direction: Direction,
        cfg: &SuperframeConfig,
    ) -> Option<GtsDescriptor> {
        let Some(pos) = self
            .descriptors
            .iter()
            .position(|d| d.device == device && d.direction == direction)
        else {
            log::warn!("deallocate: no {direction:?} GTS held by device {device}");
            return None;
        };
        let removed = self.descriptors.remove(pos);
        let mut cursor = cfg.num_slots;
        for d in &mut self.descriptors {
            cursor -= d.length_slots;
            d.start_slot = cursor;
        }
        Some(removed)
    }
}

/// Superframe specification echoed in every beacon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperframeSpec {
    pub beacon_order: u8,
    pub superframe_order: u8,
    pub final_cap_slot: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaconPayload {
    pub spec: SuperframeSpec,
    pub gts: Vec<GtsDescriptor>,
}

impl BeaconPayload {
    pub fn total_slots(&self) -> u32 {
        self.gts.iter().map(|d| d.length_slots).sum()
    }

    pub fn as_table(&self, capacity: usize) -> GtsTable {
        GtsTable::from_descriptors(capacity, self.gts.clone())
    }
}

/// Snapshot of the table for broadcast.
pub fn build_beacon(table: &GtsTable, cfg: &SuperframeConfig) -> BeaconPayload {
    BeaconPayload {
        spec: SuperframeSpec {
            beacon_order: cfg.beacon_order,
            superframe_order: cfg.superframe_order,
            final_cap_slot: table.cfp_start_slot(cfg).saturating_sub(1),
        },
        gts: table.descriptors.clone(),
    }
}
