//! Independent oracles for derived values: the FCS by bitwise long
//! division and the combining probability by Monte-Carlo.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use whisper_core::codec::{build_signaling_packet, compute_fcs, PackletConfig, TxMode};
use whisper_core::radio::{ClockProfile, CombiningRule, LinkModel};
use whisper_core::sim::experiment::T_STAR;
use whisper_core::sim::slot::{run_slot, SlotParams};
use whisper_core::sim::SlotInfo;
use whisper_core::whisper::{WhisperConfig, WhisperNode};
use whisper_core::Nanos;

/// CRC-16 with polynomial 0x1021, input bits fed least-significant first,
/// zero initial value, result bit-reversed.
fn fcs_oracle(payload: &[u8]) -> u16 {
    let mut reg: u32 = 0;
    for &byte in payload {
        for bit in 0..8 {
            let feedback = ((reg >> 15) & 1) ^ ((byte >> bit) & 1) as u32;
            reg = (reg << 1) & 0xffff;
            if feedback == 1 {
                reg ^= 0x1021;
            }
        }
    }
    (reg as u16).reverse_bits()
}

#[test]
fn fcs_matches_long_division_on_random_payloads() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfc5);
    for _ in 0..10_000 {
        let len = 1 + (rng.next_u32() % 32) as usize;
        let mut payload = vec![0u8; len];
        rng.fill_bytes(&mut payload);
        assert_eq!(compute_fcs(&payload), fcs_oracle(&payload), "{payload:02x?}");
    }
}

#[test]
fn fcs_check_value() {
    assert_eq!(fcs_oracle(b"123456789"), 0x2189);
}

#[test]
fn single_packlet_bytes_use_oracle_fcs() {
    let stream = build_signaling_packet(PackletConfig::default(), 1, 5, TxMode::Looping).unwrap();
    let [hi, lo] = fcs_oracle(&[0x05]).to_be_bytes();
    assert_eq!(stream, [0x00, 0x00, 0xA7, 0x03, 0x05, hi, lo]);
    let [hi, lo] = fcs_oracle(&[0x00]).to_be_bytes();
    let zero = build_signaling_packet(PackletConfig::default(), 1, 0, TxMode::Looping).unwrap();
    assert_eq!(&zero[5..], &[hi, lo]);
}

/// Two aligned initiators reach a listener over links of PRR 0.5 each; a
/// single packlet is sent, so the listener decodes it with probability
/// 1 - 0.5 * 0.5.
#[test]
fn two_half_links_combine_to_three_quarters() {
    let mut links = LinkModel::new(3);
    links.add_link(0, 2, 0.5).unwrap();
    links.add_link(1, 2, 0.5).unwrap();
    let cfg = WhisperConfig {
        n_tx: 1,
        clock: ClockProfile::IDEAL,
        ..WhisperConfig::lazy()
    };
    let params = SlotParams {
        info: SlotInfo {
            t_star: T_STAR,
            slot_end: T_STAR + cfg.t_slot,
            signaling: true,
        },
        radio: cfg.radio,
        packlet: cfg.packlet,
        rule: CombiningRule::IndependentSuccess,
        sender_skew: Nanos::ZERO,
    };
    let trials = 100_000u64;
    let mut hits = 0u64;
    for seed in 0..trials {
        let mut nodes: Vec<_> = (0..3).map(|_| WhisperNode::new(cfg)).collect();
        let trace = run_slot(&links, &mut nodes, &[0, 1], &params, seed).unwrap();
        hits += trace.nodes[2].received() as u64;
    }
    let p = hits as f64 / trials as f64;
    assert!((p - 0.75).abs() <= 0.01, "empirical {p}");
}
