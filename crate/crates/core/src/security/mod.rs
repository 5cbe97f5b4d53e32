//! Link-layer security suites for simulated data frames.
//!
//! | suite            | access control | confidentiality | integrity | freshness |
//! |------------------|:--:|:--:|:--:|:--:|
//! | Null             |    |    |    |    |
//! | AES-CTR          | x  | x  |    | x  |
//! | AES-CBC-MAC-128/64/32 | x |  | x  |    |
//! | AES-CCM-128/64/32     | x | x | x  | x  |
//!
//! The nonce is the 8-octet source address, the 4-octet frame counter and
//! the key sequence octet. The authenticated header carries the same fields.
//! The suite identifier is not authenticated, so the truncated CBC-MAC tags
//! stay prefixes of the 128-bit tag for the same frame; CCM binds its tag
//! length through the first MAC block instead.

pub mod block;
pub mod modes;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::EntityId;
use block::Aes128Block;
use modes::{Nonce, NONCE_LEN};

/// Largest payload a protected frame may carry, in octets.
pub const MAX_PAYLOAD: usize = 102;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SecuritySuite {
    Null,
    AesCtr,
    AesCcm128,
    AesCcm64,
    AesCcm32,
    AesCbcMac128,
    AesCbcMac64,
    AesCbcMac32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SuiteProperties {
    pub access_control: bool,
    pub confidentiality: bool,
    pub integrity: bool,
    pub freshness: bool,
}

impl SecuritySuite {
    pub const ALL: [SecuritySuite; 8] = [
        SecuritySuite::Null,
        SecuritySuite::AesCtr,
        SecuritySuite::AesCbcMac128,
        SecuritySuite::AesCbcMac64,
        SecuritySuite::AesCbcMac32,
        SecuritySuite::AesCcm128,
        SecuritySuite::AesCcm64,
        SecuritySuite::AesCcm32,
    ];

    /// Suite identifier octet.
    pub fn id(self) -> u8 {
        match self {
            SecuritySuite::Null => 0,
            SecuritySuite::AesCtr => 1,
            SecuritySuite::AesCcm128 => 2,
            SecuritySuite::AesCcm64 => 3,
            SecuritySuite::AesCcm32 => 4,
            SecuritySuite::AesCbcMac128 => 5,
            SecuritySuite::AesCbcMac64 => 6,
            SecuritySuite::AesCbcMac32 => 7,
        }
    }

    pub fn tag_len(self) -> usize {
        match self {
            SecuritySuite::Null | SecuritySuite::AesCtr => 0,
            SecuritySuite::AesCcm128 | SecuritySuite::AesCbcMac128 => 16,
            SecuritySuite::AesCcm64 | SecuritySuite::AesCbcMac64 => 8,
            SecuritySuite::AesCcm32 | SecuritySuite::AesCbcMac32 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SecuritySuite::Null => "null",
            SecuritySuite::AesCtr => "aes-ctr",
            SecuritySuite::AesCcm128 => "aes-ccm-128",
            SecuritySuite::AesCcm64 => "aes-ccm-64",
            SecuritySuite::AesCcm32 => "aes-ccm-32",
            SecuritySuite::AesCbcMac128 => "aes-cbc-mac-128",
            SecuritySuite::AesCbcMac64 => "aes-cbc-mac-64",
            SecuritySuite::AesCbcMac32 => "aes-cbc-mac-32",
        }
    }

    fn is_ccm(self) -> bool {
        matches!(
            self,
            SecuritySuite::AesCcm128 | SecuritySuite::AesCcm64 | SecuritySuite::AesCcm32
        )
    }
}

impl fmt::Display for SecuritySuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SecuritySuite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        SecuritySuite::ALL
            .into_iter()
            .find(|suite| suite.name() == norm)
            .ok_or_else(|| format!("unknown security suite `{s}`"))
    }
}

pub fn suite_properties(suite: SecuritySuite) -> SuiteProperties {
    use SecuritySuite::*;
    match suite {
        Null => SuiteProperties::default(),
        AesCtr => SuiteProperties {
            access_control: true,
            confidentiality: true,
            integrity: false,
            freshness: true,
        },
        AesCbcMac128 | AesCbcMac64 | AesCbcMac32 => SuiteProperties {
            access_control: true,
            confidentiality: false,
            integrity: true,
            freshness: false,
        },
        AesCcm128 | AesCcm64 | AesCcm32 => SuiteProperties {
            access_control: true,
            confidentiality: true,
            integrity: true,
            freshness: true,
        },
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum SecurityError {
    #[error("no key record for the frame source")]
    AccessDenied,
    #[error("integrity check failed")]
    AuthFailure,
    #[error("frame counter {counter} not newer than {last_seen}")]
    ReplayRejected { counter: u32, last_seen: u32 },
    #[error("tag length {got} does not match suite (expected {expected})")]
    Malformed { expected: usize, got: usize },
    #[error("frame counter exhausted; rekey required")]
    RekeyRequired,
    #[error("frame counter {counter} already used (last sent {last_sent})")]
    CounterReuse { counter: u32, last_sent: u32 },
    #[error("payload of {0} octets exceeds the frame limit")]
    PayloadTooLong(usize),
}

#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Key128(pub [u8; 16]);

impl fmt::Debug for Key128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Key128(..)")
    }
}

impl FromStr for Key128 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.len() != 32 || !s.is_ascii() {
            return Err("key must be 32 hex digits".into());
        }
        let mut out = [0u8; 16];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|e| format!("bad key hex: {e}"))?;
        }
        Ok(Key128(out))
    }
}

/// Keying material shared with one peer plus the freshness counters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyRecord {
    pub key: Key128,
    pub peer: EntityId,
    pub key_sequence: u8,
    /// Highest counter accepted from the peer under a freshness suite.
    pub last_counter_seen: Option<u32>,
    /// Highest counter used when sending to the peer.
    pub last_counter_sent: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecuredFrame {
    pub source: EntityId,
    pub frame_counter: u32,
    pub key_sequence: u8,
    pub suite: SecuritySuite,
    pub body: Vec<u8>,
    pub tag: Vec<u8>,
}

impl SecuredFrame {
    pub fn nonce(&self) -> Nonce {
        make_nonce(self.source, self.frame_counter, self.key_sequence)
    }

    /// Authenticated header: source, frame counter and key sequence.
    pub fn header(&self) -> [u8; NONCE_LEN] {
        self.nonce()
    }
}

pub fn make_nonce(source: EntityId, frame_counter: u32, key_sequence: u8) -> Nonce {
    let mut n = [0u8; NONCE_LEN];
    n[..8].copy_from_slice(&(source as u64).to_be_bytes());
    n[8..12].copy_from_slice(&frame_counter.to_be_bytes());
    n[12] = key_sequence;
    n
}

impl KeyRecord {
    pub fn new(key: Key128, peer: EntityId) -> Self {
        KeyRecord {
            key,
            peer,
            key_sequence: 0,
            last_counter_seen: None,
            last_counter_sent: None,
        }
    }

    /// Next counter this record would accept for sending.
    pub fn next_send_counter(&self) -> u32 {
        self.last_counter_sent.map_or(0, |c| c.saturating_add(1))
    }

    /// Applies `suite` to `plaintext` as sent by `source`.
    pub fn protect(
        &mut self,
        source: EntityId,
        suite: SecuritySuite,
        plaintext: &[u8],
        frame_counter: u32,
    ) -> Result<SecuredFrame, SecurityError> {
        if plaintext.len() > MAX_PAYLOAD {
            return Err(SecurityError::PayloadTooLong(plaintext.len()));
        }
        // 0xffffffff marks an exhausted counter.
        if frame_counter == u32::MAX {
            return Err(SecurityError::RekeyRequired);
        }
        if let Some(last_sent) = self.last_counter_sent {
            if frame_counter <= last_sent {
                return Err(SecurityError::CounterReuse {
                    counter: frame_counter,
                    last_sent,
                });
            }
        }
        let mut frame = SecuredFrame {
            source,
            frame_counter,
            key_sequence: self.key_sequence,
            suite,
            body: plaintext.to_vec(),
            tag: Vec::new(),
        };
        let nonce = frame.nonce();
        let header = frame.header();
        let cipher = Aes128Block::new(&self.key.0);
        match suite {
            SecuritySuite::Null => {}
            SecuritySuite::AesCtr => modes::ctr_apply(&cipher, &nonce, &mut frame.body),
            s if s.is_ccm() => {
                let (ct, tag) = modes::ccm_encrypt(&cipher, &nonce, &header, plaintext, s.tag_len());
                frame.body = ct;
                frame.tag = tag;
            }
            s => frame.tag = modes::cbc_mac(&cipher, &nonce, &header, plaintext, s.tag_len()),
        }
        if suite != SecuritySuite::Null {
            self.last_counter_sent = Some(frame_counter);
        }
        Ok(frame)
    }

    /// Verifies, decrypts and checks freshness as the suite requires.
    pub fn unprotect(&mut self, frame: &SecuredFrame) -> Result<Vec<u8>, SecurityError> {
        let suite = frame.suite;
        if frame.tag.len() != suite.tag_len() {
            return Err(SecurityError::Malformed {
                expected: suite.tag_len(),
                got: frame.tag.len(),
            });
        }
        let props = suite_properties(suite);
        if props.access_control && frame.source != self.peer {
            return Err(SecurityError::AccessDenied);
        }
        if props.freshness {
            if let Some(last_seen) = self.last_counter_seen {
                if frame.frame_counter <= last_seen {
                    return Err(SecurityError::ReplayRejected {
                        counter: frame.frame_counter,
                        last_seen,
                    });
                }
            }
        }
        let nonce = frame.nonce();
        let header = frame.header();
        let cipher = Aes128Block::new(&self.key.0);
        let plaintext = match suite {
            SecuritySuite::Null => frame.body.clone(),
            SecuritySuite::AesCtr => {
                let mut body = frame.body.clone();
                modes::ctr_apply(&cipher, &nonce, &mut body);
                body
            }
            s if s.is_ccm() => modes::ccm_decrypt(&cipher, &nonce, &header, &frame.body, &frame.tag)
                .ok_or(SecurityError::AuthFailure)?,
            s => {
                let tag = modes::cbc_mac(&cipher, &nonce, &header, &frame.body, s.tag_len());
                if !modes::ct_eq(&tag, &frame.tag) {
                    return Err(SecurityError::AuthFailure);
                }
                frame.body.clone()
            }
        };
        if props.freshness {
            self.last_counter_seen = Some(frame.frame_counter);
        }
        Ok(plaintext)
    }
}

/// Receiver-side access control list: one key record per permitted source.
#[derive(Clone, Debug, Default)]
pub struct Acl {
    records: BTreeMap<EntityId, KeyRecord>,
}

impl Acl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: KeyRecord) {
        self.records.insert(record.peer, record);
    }

    pub fn get(&self, peer: EntityId) -> Option<&KeyRecord> {
        self.records.get(&peer)
    }

    /// Null frames bypass the list; every other suite needs a record.
    pub fn unprotect(&mut self, frame: &SecuredFrame) -> Result<Vec<u8>, SecurityError> {
        if frame.suite == SecuritySuite::Null {
            if !frame.tag.is_empty() {
                return Err(SecurityError::Malformed {
                    expected: 0,
                    got: frame.tag.len(),
                });
            }
            return Ok(frame.body.clone());
        }
        self.records
            .get_mut(&frame.source)
            .ok_or(SecurityError::AccessDenied)?
            .unprotect(frame)
    }
}
