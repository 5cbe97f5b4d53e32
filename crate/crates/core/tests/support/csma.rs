//! Randomised traces through the CSMA/CA state machine.

use wbansim::csma::{
    attempt_access, AccessFailure, AccessOutcome, BackoffPolicy, BackoffState, CcaStep, CsmaParams, FixedLayout,
    CCA_DETECTION_SYMBOLS,
};
use wbansim::kernel::{RngStream, SimTime};
use wbansim::superframe::{ChannelState, SuperframeConfig};

fn random_params(rng: &mut RngStream) -> CsmaParams {
    let min_be = rng.draw_uniform(0, 5) as u8;
    CsmaParams {
        min_be,
        max_be: rng.draw_uniform(min_be as i64, 8) as u8,
        max_csma_backoffs: rng.draw_uniform(0, 5) as u8,
        cw_init: rng.draw_uniform(1, 3) as u8,
        unit_backoff_symbols: 20,
    }
}

pub fn step_invariants_hold_on_random_channels(traces: u64) {
    let mut rng = RngStream::new(606, 1);
    for _ in 0..traces {
        let p = random_params(&mut rng);
        let busy_per_mille = rng.draw_uniform(0, 1000);
        let mut st = BackoffState::new(&p);
        let mut busy_seen = 0u32;
        for _ in 0..200 {
            assert!((p.min_be..=p.max_be).contains(&st.be), "{st:?} {p:?}");
            let delay = st.next_backoff(&mut rng, BackoffPolicy::Standard);
            assert!(delay < (1u32 << st.be), "delay {delay} be {}", st.be);
            let busy = rng.draw_uniform(0, 999) < busy_per_mille;
            let ch = if busy { ChannelState::Busy } else { ChannelState::Idle };
            let before = st;
            let step = st.on_cca(ch, &p);
            assert!((p.min_be..=p.max_be).contains(&st.be), "{st:?} {p:?}");
            if busy {
                busy_seen += 1;
                assert_eq!(st.nb as u32, busy_seen);
                assert_eq!(st.cw, p.cw_init);
                // Failure exactly when the budget is exhausted.
                assert_eq!(step == CcaStep::Failure, busy_seen > p.max_csma_backoffs as u32);
                if step == CcaStep::Failure {
                    break;
                }
                assert_eq!(step, CcaStep::Backoff);
            } else {
                assert_eq!(st.nb, before.nb);
                assert_eq!(st.cw, before.cw - 1);
                assert_eq!(step == CcaStep::Transmit, st.cw == 0);
                if step == CcaStep::Transmit {
                    break;
                }
            }
        }
    }
}

pub fn driver_outcome_matches_busy_count(traces: u64) {
    let mut rng = RngStream::new(607, 2);
    for _ in 0..traces {
        let p = random_params(&mut rng);
        let layout = FixedLayout {
            cfg: SuperframeConfig::default(),
            gts_slots: rng.draw_uniform(0, 7) as u32,
        };
        let busy_per_mille = rng.draw_uniform(0, 1000);
        let mut chan = RngStream::new(rng.draw_uniform(0, i64::MAX) as u64, 3);
        let start = SimTime(rng.draw_uniform(0, 4 * 7680) as u64);
        let frame = rng.draw_uniform(1, 300) as u64;
        let mut st = BackoffState::new(&p);
        let mut samples = Vec::new();
        let out = attempt_access(
            &mut st,
            &p,
            &mut rng,
            BackoffPolicy::Standard,
            start,
            frame,
            &layout,
            |t| {
                let busy = chan.draw_uniform(0, 999) < busy_per_mille;
                samples.push((t, busy));
                busy
            },
        );
        let busy_count = samples.iter().filter(|s| s.1).count() as u32;
        for &(t, _) in &samples {
            let (_, cap) = layout.cap_at_or_after(t);
            assert!(cap.contains(t), "CCA at {t} outside CAP {cap:?}");
            assert_eq!(
                (t.0 - CCA_DETECTION_SYMBOLS) % p.unit_backoff_symbols,
                0,
                "unaligned CCA at {t}"
            );
        }
        match out {
            AccessOutcome::Failure {
                reason: AccessFailure::ChannelBusy,
                ..
            } => {
                assert_eq!(busy_count, p.max_csma_backoffs as u32 + 1);
                assert!(samples.last().unwrap().1);
            }
            AccessOutcome::Granted { at } => {
                assert!(busy_count <= p.max_csma_backoffs as u32);
                let tail = &samples[samples.len() - p.cw_init as usize..];
                assert!(tail.iter().all(|s| !s.1), "grant after busy CCA");
                let (_, cap) = layout.cap_at_or_after(at);
                assert!(at.0 + frame <= cap.end.0, "frame overruns CAP");
            }
            AccessOutcome::Failure {
                reason: AccessFailure::FrameTooLong,
                ..
            } => panic!("frame of {frame} symbols fits an empty CAP"),
        }
    }
}

pub fn single_node_on_idle_channel_succeeds_within_one_cap(traces: u64) {
    let mut rng = RngStream::new(608, 4);
    let p = CsmaParams::default();
    for _ in 0..traces {
        let cfg = SuperframeConfig {
            cfp_slot_capacity: 14,
            ..SuperframeConfig::default()
        };
        let layout = FixedLayout {
            gts_slots: rng.draw_uniform(0, 14) as u32,
            cfg,
        };
        let sf = rng.draw_uniform(0, 100) as u64;
        let sf_start = layout.cfg.superframe_start(sf);
        let cap = layout.cfg.cap_window(sf_start, layout.gts_slots);
        let frame = rng.draw_uniform(1, 120) as u64;
        let mut st = BackoffState::new(&p);
        let out = attempt_access(
            &mut st,
            &p,
            &mut rng,
            BackoffPolicy::Standard,
            cap.start,
            frame,
            &layout,
            |_| false,
        );
        match out {
            AccessOutcome::Granted { at } => {
                assert!(cap.contains(at) && at.0 + frame <= cap.end.0, "{at} not inside {cap:?}");
                assert_eq!(st.nb, 0);
            }
            other => panic!("idle channel gave {other:?}"),
        }
    }
}
