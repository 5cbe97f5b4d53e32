//! Attacker classes: backoff manipulation in the CAP and beacon-informed
//! jamming of GTS slots in the CFP.
//!
//! Attackers learn the GTS layout only from beacons they receive. Smart
//! attackers contend in the CAP with a zero backoff and jam the longest GTS;
//! random attackers jam the GTS whose length is nearest the mean; weak
//! attackers jam the shortest one.

use serde::{Deserialize, Serialize};

use crate::csma::BackoffPolicy;
use crate::gts::{BeaconPayload, GtsDescriptor};
use crate::kernel::{RngStream, SimTime};
use crate::superframe::SuperframeConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackerKind {
    Smart,
    Random,
    Weak,
}

impl AttackerKind {
    pub const ALL: [AttackerKind; 3] = [AttackerKind::Smart, AttackerKind::Random, AttackerKind::Weak];

    pub fn name(self) -> &'static str {
        match self {
            AttackerKind::Smart => "smart",
            AttackerKind::Random => "random",
            AttackerKind::Weak => "weak",
        }
    }

    pub fn attacks_cap(self) -> bool {
        matches!(self, AttackerKind::Smart)
    }

    pub fn attacks_cfp(self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackerProfile {
    pub kind: AttackerKind,
    /// Per-superframe probability that the attacker acts.
    pub activation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CapDirective {
    pub backoff: BackoffPolicy,
    /// Keep sending dummy frames back to back for the rest of the CAP.
    pub greedy: bool,
}

/// CAP behaviour override; `None` means the attacker does not contend.
pub fn cap_attack_policy(profile: &AttackerProfile) -> Option<CapDirective> {
    profile.kind.attacks_cap().then_some(CapDirective {
        backoff: BackoffPolicy::Fixed(0),
        greedy: true,
    })
}

/// Picks the descriptor to jam from the attacker's beacon knowledge.
///
/// Ties go to the lowest start slot.
pub fn choose_target_slot(known: &[GtsDescriptor], kind: AttackerKind) -> Option<GtsDescriptor> {
    let by_start = |d: &&GtsDescriptor| d.start_slot;
    match kind {
        AttackerKind::Smart => {
            let max = known.iter().map(|d| d.length_slots).max()?;
            known
                .iter()
                .filter(|d| d.length_slots == max)
                .min_by_key(by_start)
                .copied()
        }
        AttackerKind::Weak => {
            let min = known.iter().map(|d| d.length_slots).min()?;
            known
                .iter()
                .filter(|d| d.length_slots == min)
                .min_by_key(by_start)
                .copied()
        }
        AttackerKind::Random => {
            // |len - sum/n| compared as |len*n - sum| to stay in integers.
            let n = known.len() as i64;
            let sum: i64 = known.iter().map(|d| d.length_slots as i64).sum();
            known
                .iter()
                .min_by_key(|d| ((d.length_slots as i64 * n - sum).abs(), d.start_slot))
                .copied()
        }
    }
}

#[derive(Clone, Debug)]
pub struct AttackerState {
    pub profile: AttackerProfile,
    pub synchronized: bool,
    pub known_gts: Vec<GtsDescriptor>,
    pub rng: RngStream,
}

impl AttackerState {
    pub fn new(profile: AttackerProfile, rng: RngStream) -> Self {
        AttackerState {
            profile,
            synchronized: false,
            known_gts: Vec::new(),
            rng,
        }
    }

    pub fn on_beacon(&mut self, payload: &BeaconPayload) {
        self.synchronized = true;
        self.known_gts = payload.gts.clone();
    }

    /// One Bernoulli draw per superframe. The uniform is consumed even when
    /// the probability is 0 or 1 so streams stay aligned across sweeps.
    pub fn draw_activation(&mut self) -> bool {
        let u = self.rng.draw_unit();
        u < self.profile.activation
    }

    pub fn target(&self) -> Option<GtsDescriptor> {
        if !self.synchronized {
            return None;
        }
        choose_target_slot(&self.known_gts, self.profile.kind)
    }
}

/// Interference burst covering every slot of one descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JamPlan {
    pub start: SimTime,
    pub end: SimTime,
    pub target: GtsDescriptor,
}

/// Jam covering `target` in superframe `index`.
pub fn jam(target: &GtsDescriptor, cfg: &SuperframeConfig, index: u64) -> JamPlan {
    let (start, _) = cfg.slot_interval(index, target.start_slot);
    let (_, end) = cfg.slot_interval(index, target.end_slot() - 1);
    JamPlan {
        start,
        end,
        target: *target,
    }
}
