//! Scenario configuration.
//!
//! Scenario files are flat `key = value` lines with dotted keys; `#` starts
//! a comment. List-valued traffic keys take comma-separated values that are
//! assigned to nodes round-robin. `Scenario::KEYS` lists every key.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversary::{AttackerKind, AttackerProfile};
use crate::csma::CsmaParams;
use crate::error::ConfigError;
use crate::gts::{Direction, DEFAULT_GTS_CAPACITY};
use crate::security::{Key128, SecuritySuite, MAX_PAYLOAD};
use crate::superframe::SuperframeConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Traffic {
    /// Requested GTS length per node, cycled over nodes.
    pub gts_lengths: Vec<u32>,
    pub directions: Vec<Direction>,
    /// Data frame duration per GTS slot, cycled over nodes.
    pub payload_symbols: Vec<u64>,
    pub request_frame_symbols: u64,
    /// Superframes a node keeps its GTS, drawn uniformly per session.
    pub hold_min: u64,
    pub hold_max: u64,
    /// Superframes between release and the next request.
    pub idle_min: u64,
    pub idle_max: u64,
}

impl Default for Traffic {
    fn default() -> Self {
        Traffic {
            gts_lengths: vec![1, 2, 3],
            directions: vec![Direction::Uplink],
            payload_symbols: vec![400],
            request_frame_symbols: 40,
            hold_min: 5,
            hold_max: 20,
            idle_min: 10,
            idle_max: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackerClass {
    pub count: u32,
    pub activation: f64,
}

impl Default for AttackerClass {
    fn default() -> Self {
        AttackerClass {
            count: 0,
            activation: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackerRoster {
    pub smart: AttackerClass,
    pub random: AttackerClass,
    pub weak: AttackerClass,
    /// Duration of the dummy frames smart attackers send in the CAP.
    pub frame_symbols: u64,
    /// When false attackers never hear beacons.
    pub receive_beacons: bool,
}

impl Default for AttackerRoster {
    fn default() -> Self {
        AttackerRoster {
            smart: AttackerClass::default(),
            random: AttackerClass::default(),
            weak: AttackerClass::default(),
            frame_symbols: 266,
            receive_beacons: true,
        }
    }
}

impl AttackerRoster {
    pub fn class(&self, kind: AttackerKind) -> &AttackerClass {
        match kind {
            AttackerKind::Smart => &self.smart,
            AttackerKind::Random => &self.random,
            AttackerKind::Weak => &self.weak,
        }
    }

    fn class_mut(&mut self, kind: AttackerKind) -> &mut AttackerClass {
        match kind {
            AttackerKind::Smart => &mut self.smart,
            AttackerKind::Random => &mut self.random,
            AttackerKind::Weak => &mut self.weak,
        }
    }

    /// Expanded roster in entity order: smart, random, weak.
    pub fn profiles(&self) -> Vec<(AttackerProfile, u32)> {
        AttackerKind::ALL
            .iter()
            .flat_map(|&kind| {
                let c = self.class(kind);
                (0..c.count).map(move |i| {
                    (
                        AttackerProfile {
                            kind,
                            activation: c.activation,
                        },
                        i,
                    )
                })
            })
            .collect()
    }

    pub fn total(&self) -> u32 {
        self.smart.count + self.random.count + self.weak.count
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeSecurity {
    pub suite: Option<SecuritySuite>,
    pub key: Option<Key128>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityConfig {
    pub suite: SecuritySuite,
    pub key: Key128,
    /// Application payload carried in each GTS data frame.
    pub payload_octets: usize,
    /// Per-node overrides, keyed by 1-based node index.
    pub nodes: BTreeMap<u32, NodeSecurity>,
}

impl Default for SecurityConfig {
    fn default() -> Self {
        SecurityConfig {
            suite: SecuritySuite::AesCcm64,
            key: Key128([
                0xc0, 0xc1, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xcb, 0xcc, 0xcd, 0xce, 0xcf,
            ]),
            payload_octets: 32,
            nodes: BTreeMap::new(),
        }
    }
}

impl SecurityConfig {
    pub fn suite_for(&self, node: u32) -> SecuritySuite {
        self.nodes.get(&node).and_then(|n| n.suite).unwrap_or(self.suite)
    }

    pub fn key_for(&self, node: u32) -> Key128 {
        self.nodes.get(&node).and_then(|n| n.key).unwrap_or(self.key)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub superframe: SuperframeConfig,
    pub csma: CsmaParams,
    pub gts_capacity: usize,
    pub nodes: u32,
    pub traffic: Traffic,
    pub attackers: AttackerRoster,
    pub security: SecurityConfig,
    /// Run length in superframes.
    pub horizon: u64,
    pub seed: u64,
    pub replications: u32,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            superframe: SuperframeConfig::default(),
            csma: CsmaParams::default(),
            gts_capacity: DEFAULT_GTS_CAPACITY,
            nodes: 10,
            traffic: Traffic::default(),
            attackers: AttackerRoster::default(),
            security: SecurityConfig::default(),
            horizon: 2000,
            seed: 1,
            replications: 1,
        }
    }
}

fn parse<T: FromStr>(path: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| ConfigError::new(path, format!("cannot parse `{value}`: {e}")))
}

fn parse_list<T: FromStr>(path: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: Display,
{
    let items = value
        .split(',')
        .map(|v| parse(path, v))
        .collect::<Result<Vec<T>, _>>()?;
    if items.is_empty() {
        return Err(ConfigError::new(path, "empty list"));
    }
    Ok(items)
}

fn parse_bool(path: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(ConfigError::new(path, format!("expected a boolean, got `{other}`"))),
    }
}

fn parse_direction(path: &str, value: &str) -> Result<Direction, ConfigError> {
    match value.trim() {
        "uplink" | "up" => Ok(Direction::Uplink),
        "downlink" | "down" => Ok(Direction::Downlink),
        other => Err(ConfigError::new(path, format!("unknown direction `{other}`"))),
    }
}

impl Scenario {
    /// Every settable key other than the per-node `security.node.<i>.*`
    /// family.
    pub const KEYS: &'static [&'static str] = &[
        "superframe.beacon_order",
        "superframe.superframe_order",
        "superframe.num_slots",
        "superframe.base_slot_symbols",
        "superframe.cfp_slot_capacity",
        "superframe.beacon_symbols",
        "superframe.min_cap_symbols",
        "csma.min_be",
        "csma.max_be",
        "csma.max_csma_backoffs",
        "csma.cw_init",
        "csma.unit_backoff_symbols",
        "gts.capacity",
        "nodes.count",
        "traffic.gts_length",
        "traffic.direction",
        "traffic.payload_symbols",
        "traffic.request_frame_symbols",
        "traffic.hold_min",
        "traffic.hold_max",
        "traffic.idle_min",
        "traffic.idle_max",
        "attackers.smart.count",
        "attackers.smart.activation",
        "attackers.random.count",
        "attackers.random.activation",
        "attackers.weak.count",
        "attackers.weak.activation",
        "attackers.frame_symbols",
        "attackers.receive_beacons",
        "security.suite",
        "security.key",
        "security.payload_octets",
        "run.horizon",
        "run.seed",
        "run.replications",
    ];

    /// Sets one key from its textual value.
    pub fn set(&mut self, path: &str, value: &str) -> Result<(), ConfigError> {
        let p = path;
        match path {
            "superframe.beacon_order" => self.superframe.beacon_order = parse(p, value)?,
            "superframe.superframe_order" => self.superframe.superframe_order = parse(p, value)?,
            "superframe.num_slots" => self.superframe.num_slots = parse(p, value)?,
            "superframe.base_slot_symbols" => self.superframe.base_slot_symbols = parse(p, value)?,
            "superframe.cfp_slot_capacity" => self.superframe.cfp_slot_capacity = parse(p, value)?,
            "superframe.beacon_symbols" => self.superframe.beacon_symbols = parse(p, value)?,
            "superframe.min_cap_symbols" => self.superframe.min_cap_symbols = parse(p, value)?,
            "csma.min_be" => self.csma.min_be = parse(p, value)?,
            "csma.max_be" => self.csma.max_be = parse(p, value)?,
            "csma.max_csma_backoffs" => self.csma.max_csma_backoffs = parse(p, value)?,
            "csma.cw_init" => self.csma.cw_init = parse(p, value)?,
            "csma.unit_backoff_symbols" => self.csma.unit_backoff_symbols = parse(p, value)?,
            "gts.capacity" => self.gts_capacity = parse(p, value)?,
            "nodes.count" => self.nodes = parse(p, value)?,
            "traffic.gts_length" => self.traffic.gts_lengths = parse_list(p, value)?,
            "traffic.direction" => {
                self.traffic.directions = value
                    .split(',')
                    .map(|v| parse_direction(p, v))
                    .collect::<Result<_, _>>()?
            }
            "traffic.payload_symbols" => self.traffic.payload_symbols = parse_list(p, value)?,
            "traffic.request_frame_symbols" => self.traffic.request_frame_symbols = parse(p, value)?,
            "traffic.hold_min" => self.traffic.hold_min = parse(p, value)?,
            "traffic.hold_max" => self.traffic.hold_max = parse(p, value)?,
            "traffic.idle_min" => self.traffic.idle_min = parse(p, value)?,
            "traffic.idle_max" => self.traffic.idle_max = parse(p, value)?,
            "attackers.frame_symbols" => self.attackers.frame_symbols = parse(p, value)?,
            "attackers.receive_beacons" => self.attackers.receive_beacons = parse_bool(p, value)?,
            "security.suite" => self.security.suite = value.parse().map_err(|e| ConfigError::new(p, e))?,
            "security.key" => self.security.key = value.parse().map_err(|e| ConfigError::new(p, e))?,
            "security.payload_octets" => self.security.payload_octets = parse(p, value)?,
            "run.horizon" => self.horizon = parse(p, value)?,
            "run.seed" => self.seed = parse(p, value)?,
            "run.replications" => self.replications = parse(p, value)?,
            _ => return self.set_dynamic(path, value),
        }
        Ok(())
    }

    fn set_dynamic(&mut self, path: &str, value: &str) -> Result<(), ConfigError> {
        let parts: Vec<&str> = path.split('.').collect();
        match parts.as_slice() {
            ["attackers", class, field] => {
                let kind = match *class {
                    "smart" => AttackerKind::Smart,
                    "random" => AttackerKind::Random,
                    "weak" => AttackerKind::Weak,
                    _ => return Err(ConfigError::new(path, "unknown attacker class")),
                };
                let c = self.attackers.class_mut(kind);
                match *field {
                    "count" => c.count = parse(path, value)?,
                    "activation" => c.activation = parse(path, value)?,
                    _ => return Err(ConfigError::new(path, "unknown key")),
                }
            }
            ["security", "node", idx, field] => {
                let idx: u32 = parse(path, idx)?;
                let entry = self.security.nodes.entry(idx).or_default();
                match *field {
                    "suite" => entry.suite = Some(value.parse().map_err(|e| ConfigError::new(path, e))?),
                    "key" => entry.key = Some(value.parse().map_err(|e| ConfigError::new(path, e))?),
                    _ => return Err(ConfigError::new(path, "unknown key")),
                }
            }
            _ => return Err(ConfigError::new(path, "unknown key")),
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Scenario, ConfigError> {
        let mut s = Scenario::default();
        s.apply_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(
                    format!("line {}", n + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::new(path.display().to_string(), e.to_string()))?;
        Scenario::parse_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.superframe.validate()?;
        self.csma.validate()?;
        if self.nodes == 0 {
            return Err(ConfigError::new("nodes.count", "need at least one node"));
        }
        if self.horizon == 0 {
            return Err(ConfigError::new("run.horizon", "must be at least one superframe"));
        }
        if self.replications == 0 {
            return Err(ConfigError::new("run.replications", "must be at least 1"));
        }
        if self.gts_capacity == 0 {
            return Err(ConfigError::new("gts.capacity", "must be at least 1"));
        }
        let t = &self.traffic;
        if t.gts_lengths.is_empty() || t.gts_lengths.contains(&0) {
            return Err(ConfigError::new("traffic.gts_length", "lengths must be >= 1"));
        }
        if t.directions.is_empty() {
            return Err(ConfigError::new("traffic.direction", "empty list"));
        }
        let slot = self.superframe.slot_symbols();
        if t.payload_symbols.is_empty() || t.payload_symbols.iter().any(|&p| p == 0 || p > slot) {
            return Err(ConfigError::new(
                "traffic.payload_symbols",
                format!("each value must be in 1..={slot} (one slot)"),
            ));
        }
        if t.request_frame_symbols == 0 {
            return Err(ConfigError::new("traffic.request_frame_symbols", "must be positive"));
        }
        if t.hold_min == 0 || t.hold_min > t.hold_max {
            return Err(ConfigError::new("traffic.hold_min", "need 1 <= hold_min <= hold_max"));
        }
        if t.idle_min > t.idle_max {
            return Err(ConfigError::new("traffic.idle_min", "need idle_min <= idle_max"));
        }
        for kind in AttackerKind::ALL {
            let a = self.attackers.class(kind).activation;
            if !(0.0..=1.0).contains(&a) {
                return Err(ConfigError::new(
                    format!("attackers.{}.activation", kind.name()),
                    "must be within [0, 1]",
                ));
            }
        }
        if self.attackers.frame_symbols == 0 {
            return Err(ConfigError::new("attackers.frame_symbols", "must be positive"));
        }
        if self.security.payload_octets > MAX_PAYLOAD {
            return Err(ConfigError::new(
                "security.payload_octets",
                format!("at most {MAX_PAYLOAD}"),
            ));
        }
        if let Some((&idx, _)) = self.security.nodes.iter().find(|(&i, _)| i == 0 || i > self.nodes) {
            return Err(ConfigError::new(
                format!("security.node.{idx}"),
                "node index out of range",
            ));
        }
        Ok(())
    }

    pub fn node_gts_length(&self, node: u32) -> u32 {
        let l = &self.traffic.gts_lengths;
        l[(node as usize - 1) % l.len()]
    }

    pub fn node_direction(&self, node: u32) -> Direction {
        let d = &self.traffic.directions;
        d[(node as usize - 1) % d.len()]
    }

    pub fn node_payload_symbols(&self, node: u32) -> u64 {
        let p = &self.traffic.payload_symbols;
        p[(node as usize - 1) % p.len()]
    }

    /// Renders the scenario back into the file format.
    pub fn to_file_string(&self) -> String {
        fn join<T: ToString>(xs: &[T]) -> String {
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        let sf = &self.superframe;
        let mut out = vec![
            format!("superframe.beacon_order = {}", sf.beacon_order),
            format!("superframe.superframe_order = {}", sf.superframe_order),
            format!("superframe.num_slots = {}", sf.num_slots),
            format!("superframe.base_slot_symbols = {}", sf.base_slot_symbols),
            format!("superframe.cfp_slot_capacity = {}", sf.cfp_slot_capacity),
            format!("superframe.beacon_symbols = {}", sf.beacon_symbols),
            format!("superframe.min_cap_symbols = {}", sf.min_cap_symbols),
            format!("csma.min_be = {}", self.csma.min_be),
            format!("csma.max_be = {}", self.csma.max_be),
            format!("csma.max_csma_backoffs = {}", self.csma.max_csma_backoffs),
            format!("csma.cw_init = {}", self.csma.cw_init),
            format!("csma.unit_backoff_symbols = {}", self.csma.unit_backoff_symbols),
            format!("gts.capacity = {}", self.gts_capacity),
            format!("nodes.count = {}", self.nodes),
            format!("traffic.gts_length = {}", join(&self.traffic.gts_lengths)),
            format!(
                "traffic.direction = {}",
                self.traffic
                    .directions
                    .iter()
                    .map(|d| match d {
                        Direction::Uplink => "uplink",
                        Direction::Downlink => "downlink",
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            format!("traffic.payload_symbols = {}", join(&self.traffic.payload_symbols)),
            format!("traffic.request_frame_symbols = {}", self.traffic.request_frame_symbols),
            format!("traffic.hold_min = {}", self.traffic.hold_min),
            format!("traffic.hold_max = {}", self.traffic.hold_max),
            format!("traffic.idle_min = {}", self.traffic.idle_min),
            format!("traffic.idle_max = {}", self.traffic.idle_max),
        ];
        for kind in AttackerKind::ALL {
            let c = self.attackers.class(kind);
            out.push(format!("attackers.{}.count = {}", kind.name(), c.count));
            out.push(format!("attackers.{}.activation = {}", kind.name(), c.activation));
        }
        out.push(format!("attackers.frame_symbols = {}", self.attackers.frame_symbols));
        out.push(format!(
            "attackers.receive_beacons = {}",
            self.attackers.receive_beacons
        ));
        out.push(format!("security.suite = {}", self.security.suite));
        out.push(format!("security.key = {}", hex_key(&self.security.key)));
        out.push(format!("security.payload_octets = {}", self.security.payload_octets));
        for (idx, n) in &self.security.nodes {
            if let Some(s) = n.suite {
                out.push(format!("security.node.{idx}.suite = {s}"));
            }
            if let Some(k) = &n.key {
                out.push(format!("security.node.{idx}.key = {}", hex_key(k)));
            }
        }
        out.push(format!("run.horizon = {}", self.horizon));
        out.push(format!("run.seed = {}", self.seed));
        out.push(format!("run.replications = {}", self.replications));
        out.join("\n") + "\n"
    }
}

fn hex_key(k: &Key128) -> String {
    k.0.iter().map(|b| format!("{b:02x}")).collect()
}
