//! Brute-force slot-array model of the allocation table.

use wbansim::gts::{Denial, Direction, GtsDescriptor, GtsError, GtsRequest, GtsTable};
use wbansim::kernel::RngStream;
use wbansim::superframe::SuperframeConfig;

pub const CAPACITY: usize = 7;

#[derive(Clone, Copy, Debug)]
pub enum Op {
    Request { device: u32, len: u32, dir: Direction },
    Release { device: u32, dir: Direction },
}

/// Reference model: grant order plus an explicit owner per slot.
#[derive(Default)]
pub struct SlotOracle {
    grants: Vec<(u32, Direction, u32)>,
}

impl SlotOracle {
    fn slots(&self, cfg: &SuperframeConfig) -> Vec<Option<(u32, Direction)>> {
        let mut owner = vec![None; cfg.num_slots as usize];
        let mut cursor = cfg.num_slots as usize;
        for &(dev, dir, len) in &self.grants {
            for _ in 0..len {
                cursor -= 1;
                assert!(owner[cursor].is_none(), "oracle overlap");
                owner[cursor] = Some((dev, dir));
            }
        }
        owner
    }

    fn descriptors(&self, cfg: &SuperframeConfig) -> Vec<GtsDescriptor> {
        let owner = self.slots(cfg);
        self.grants
            .iter()
            .map(|&(dev, dir, len)| {
                let start = owner.iter().position(|o| *o == Some((dev, dir))).unwrap() as u32;
                GtsDescriptor {
                    device: dev,
                    start_slot: start,
                    length_slots: len,
                    direction: dir,
                }
            })
            .collect()
    }

    fn request(&mut self, cfg: &SuperframeConfig, dev: u32, len: u32, dir: Direction) -> Result<(), GtsError> {
        if len == 0 {
            return Err(GtsError::Malformed);
        }
        if self.grants.iter().any(|g| g.0 == dev && g.1 == dir) {
            return Err(GtsError::Denied(Denial::Duplicate));
        }
        if self.grants.len() >= CAPACITY {
            return Err(GtsError::Denied(Denial::Capacity));
        }
        let used = self.slots(cfg).iter().filter(|o| o.is_some()).count() as u32;
        let total = used + len;
        let cap_symbols = (cfg.num_slots as i64 - total as i64) * cfg.slot_symbols() as i64 - cfg.beacon_symbols as i64;
        if total > cfg.cfp_slot_capacity || total >= cfg.num_slots || cap_symbols < cfg.min_cap_symbols.max(1) as i64 {
            return Err(GtsError::Denied(Denial::Space));
        }
        self.grants.push((dev, dir, len));
        Ok(())
    }

    fn release(&mut self, dev: u32, dir: Direction) -> bool {
        match self.grants.iter().position(|g| g.0 == dev && g.1 == dir) {
            Some(i) => {
                self.grants.remove(i);
                true
            }
            None => false,
        }
    }
}

pub fn random_ops(rng: &mut RngStream) -> Vec<Op> {
    let n = rng.draw_uniform(1, 20) as usize;
    (0..n)
        .map(|_| {
            let device = rng.draw_uniform(1, 9) as u32;
            let dir = if rng.draw_uniform(0, 3) == 0 {
                Direction::Downlink
            } else {
                Direction::Uplink
            };
            if rng.draw_uniform(0, 2) == 0 {
                Op::Release { device, dir }
            } else {
                Op::Request {
                    device,
                    len: rng.draw_uniform(0, 5) as u32,
                    dir,
                }
            }
        })
        .collect()
}

pub fn check_disjoint(descs: &[GtsDescriptor], cfg: &SuperframeConfig) {
    let mut seen = vec![false; cfg.num_slots as usize];
    for d in descs {
        for s in d.slots() {
            assert!(!seen[s as usize], "overlapping slot {s} in {descs:?}");
            seen[s as usize] = true;
        }
    }
    // Packed against the end of the active portion.
    let total: u32 = descs.iter().map(|d| d.length_slots).sum();
    let first = cfg.num_slots - total;
    assert!(seen[first as usize..].iter().all(|&b| b), "CFP has holes: {descs:?}");
}

pub fn replay(cfg: &SuperframeConfig, ops: &[Op]) -> usize {
    let mut table = GtsTable::new(CAPACITY);
    let mut oracle = SlotOracle::default();
    let mut mismatches = 0;
    for op in ops {
        match *op {
            Op::Request { device, len, dir } => {
                let got = match GtsRequest::new(device, len, dir) {
                    Ok(req) => table.handle_request(&req, cfg).map(|_| ()),
                    Err(e) => Err(e),
                };
                let want = oracle.request(cfg, device, len, dir);
                if got != want {
                    mismatches += 1;
                }
            }
            Op::Release { device, dir } => {
                let got = table.deallocate(device, dir, cfg).is_some();
                if got != oracle.release(device, dir) {
                    mismatches += 1;
                }
            }
        }
        if table.descriptors() != oracle.descriptors(cfg).as_slice() {
            mismatches += 1;
        }
        check_disjoint(table.descriptors(), cfg);
    }
    mismatches
}

/// Replays `sequences` random operation lists against table and oracle and
/// returns the number of disagreeing steps.
pub fn oracle_mismatches(sequences: usize) -> usize {
    let mut rng = RngStream::new(2024, 7);
    let configs = [
        SuperframeConfig::default(),
        SuperframeConfig {
            cfp_slot_capacity: 14,
            ..SuperframeConfig::default()
        },
        SuperframeConfig {
            cfp_slot_capacity: 15,
            min_cap_symbols: 1200,
            ..SuperframeConfig::default()
        },
    ];
    let mut mismatches = 0;
    for i in 0..sequences {
        let ops = random_ops(&mut rng);
        mismatches += replay(&configs[i % configs.len()], &ops);
    }
    mismatches
}
