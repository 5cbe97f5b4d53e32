//! Suite matrix checks: round trip, tamper detection, replay handling.

use wbansim::kernel::RngStream;
use wbansim::security::{suite_properties, Key128, KeyRecord, SecurityError, SecuritySuite, MAX_PAYLOAD};

pub const NODE: u32 = 7;
pub const KEY: Key128 = Key128([0x4b; 16]);

pub fn sender() -> KeyRecord {
    KeyRecord::new(KEY, 0)
}

pub fn receiver() -> KeyRecord {
    KeyRecord::new(KEY, NODE)
}

pub fn round_trip_every_suite_every_length() {
    let mut rng = RngStream::new(11, 0);
    for suite in SecuritySuite::ALL {
        let mut tx = sender();
        let mut rx = receiver();
        for (counter, len) in (0..=MAX_PAYLOAD).enumerate() {
            let pt: Vec<u8> = (0..len).map(|_| rng.draw_uniform(0, 255) as u8).collect();
            let frame = tx.protect(NODE, suite, &pt, counter as u32).unwrap();
            assert_eq!(frame.tag.len(), suite.tag_len());
            assert_eq!(rx.unprotect(&frame).unwrap(), pt, "{suite} len {len}");
        }
    }
}

pub fn single_bit_tamper_fails_integrity_suites() {
    let pt = *b"vitals!!";
    for suite in SecuritySuite::ALL
        .into_iter()
        .filter(|s| suite_properties(*s).integrity)
    {
        let frame = sender().protect(NODE, suite, &pt, 5).unwrap();
        // Every bit of body and tag.
        for field in 0..2 {
            let len = if field == 0 { frame.body.len() } else { frame.tag.len() };
            for bit in 0..len * 8 {
                let mut f = frame.clone();
                let target = if field == 0 { &mut f.body } else { &mut f.tag };
                target[bit / 8] ^= 1 << (bit % 8);
                assert_eq!(
                    receiver().unprotect(&f),
                    Err(SecurityError::AuthFailure),
                    "{suite} field {field} bit {bit}"
                );
            }
        }
        // Authenticated header fields.
        for bit in 0..32 {
            let mut f = frame.clone();
            f.frame_counter ^= 1 << bit;
            assert_eq!(
                receiver().unprotect(&f),
                Err(SecurityError::AuthFailure),
                "{suite} counter bit {bit}"
            );
        }
        for bit in 0..8 {
            let mut f = frame.clone();
            f.key_sequence ^= 1 << bit;
            assert_eq!(
                receiver().unprotect(&f),
                Err(SecurityError::AuthFailure),
                "{suite} keyseq bit {bit}"
            );
        }
    }
}

pub fn integrity_matrix_matches_table() {
    use SecuritySuite::*;
    let with_integrity: Vec<_> = SecuritySuite::ALL
        .into_iter()
        .filter(|s| suite_properties(*s).integrity)
        .collect();
    assert_eq!(
        with_integrity,
        vec![AesCbcMac128, AesCbcMac64, AesCbcMac32, AesCcm128, AesCcm64, AesCcm32]
    );
}

pub fn replay_matrix() {
    use SecuritySuite::*;
    for suite in SecuritySuite::ALL {
        let mut tx = sender();
        let mut rx = receiver();
        let first = tx.protect(NODE, suite, b"one", 10).unwrap();
        rx.unprotect(&first).unwrap();
        let again = rx.unprotect(&first);
        let expect_reject = matches!(suite, AesCtr | AesCcm128 | AesCcm64 | AesCcm32);
        assert_eq!(suite_properties(suite).freshness, expect_reject, "{suite}");
        if expect_reject {
            assert_eq!(
                again,
                Err(SecurityError::ReplayRejected {
                    counter: 10,
                    last_seen: 10
                }),
                "{suite}"
            );
            // Older counters are rejected too; newer ones pass.
            let mut old_tx = sender();
            let older = old_tx.protect(NODE, suite, b"old", 9).unwrap();
            assert!(matches!(
                rx.unprotect(&older),
                Err(SecurityError::ReplayRejected { .. })
            ));
            let newer = tx.protect(NODE, suite, b"two", 11).unwrap();
            assert_eq!(rx.unprotect(&newer).unwrap(), b"two");
        } else {
            assert_eq!(again.unwrap(), b"one", "{suite}");
        }
    }
}
