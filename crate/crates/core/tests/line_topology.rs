use whisper_core::glossy::{GlossyConfig, GlossyNode};
use whisper_core::radio::{ClockProfile, CombiningRule, RadioState};
use whisper_core::sim::experiment::T_STAR;
use whisper_core::sim::slot::{run_slot, SlotParams, SlotTrace};
use whisper_core::sim::{FloodEngine, SlotInfo, Topology};
use whisper_core::whisper::{WhisperConfig, WhisperNode};
use whisper_core::Nanos;

fn ideal_whisper(cfg: WhisperConfig) -> WhisperConfig {
    WhisperConfig {
        clock: ClockProfile::IDEAL,
        ..cfg
    }
}

fn run<E: FloodEngine>(topo: &Topology, engines: &mut [E], params: SlotParams, seed: u64) -> SlotTrace {
    run_slot(&topo.links, engines, &[0], &params, seed).unwrap()
}

fn whisper_params(cfg: &WhisperConfig) -> SlotParams {
    SlotParams {
        info: SlotInfo {
            t_star: T_STAR,
            slot_end: T_STAR + cfg.t_slot,
            signaling: true,
        },
        radio: cfg.radio,
        packlet: cfg.packlet,
        rule: CombiningRule::default(),
        sender_skew: Nanos::ZERO,
    }
}

/// Counter each hop first receives, by an independent model of the line:
/// hop h decodes the first packlet whose counter k satisfies the variant's
/// acceptance rule, then relays starting from k + 2.
fn counter_oracle(hops: usize, compliant: bool) -> Vec<u8> {
    let mut out = Vec::new();
    let mut upstream_first_tx = 0u32;
    for _ in 0..hops {
        // In buffered mode the first packlet of every train carries the
        // frame length and is not decodable as a packlet.
        let first = if compliant {
            upstream_first_tx + 1
        } else {
            upstream_first_tx
        };
        out.push(first as u8);
        upstream_first_tx = first + 2;
    }
    out
}

fn first_counters(trace: &SlotTrace) -> Vec<u8> {
    trace.nodes[1..]
        .iter()
        .map(|n| n.first_counter.expect("every hop receives"))
        .collect()
}

#[test]
fn standard_progression_is_two_per_hop() {
    let topo = Topology::line(7, 1.0).unwrap();
    let cfg = ideal_whisper(WhisperConfig::default());
    let mut nodes: Vec<_> = (0..7).map(|_| WhisperNode::new(cfg)).collect();
    let trace = run(&topo, &mut nodes, whisper_params(&cfg), 1);
    assert_eq!(first_counters(&trace), [0, 2, 4, 6, 8, 10]);
    assert_eq!(first_counters(&trace), counter_oracle(6, false));
}

#[test]
fn compliant_progression_is_three_per_hop() {
    let topo = Topology::line(7, 1.0).unwrap();
    let cfg = ideal_whisper(WhisperConfig {
        n_tx: 20,
        t_slot: Nanos::from_ms(8),
        timeout: Some(Nanos::from_ms(8)),
        ..WhisperConfig::compliant()
    });
    let mut nodes: Vec<_> = (0..7).map(|_| WhisperNode::new(cfg)).collect();
    let trace = run(&topo, &mut nodes, whisper_params(&cfg), 1);
    assert_eq!(first_counters(&trace), [1, 4, 7, 10, 13, 16]);
    assert_eq!(first_counters(&trace), counter_oracle(6, true));
}

#[test]
fn progression_holds_on_longer_lines() {
    for n in 2..12 {
        let topo = Topology::line(n, 1.0).unwrap();
        let cfg = ideal_whisper(WhisperConfig {
            t_slot: Nanos::from_ms(10),
            timeout: None,
            ..Default::default()
        });
        let mut nodes: Vec<_> = (0..n).map(|_| WhisperNode::new(cfg)).collect();
        let trace = run(&topo, &mut nodes, whisper_params(&cfg), n as u64);
        assert_eq!(first_counters(&trace), counter_oracle(n - 1, false), "line of {n}");
    }
}

#[test]
fn sender_and_forwarder_spans() {
    let topo = Topology::line(7, 1.0).unwrap();
    let cfg = ideal_whisper(WhisperConfig::default());
    let mut nodes: Vec<_> = (0..7).map(|_| WhisperNode::new(cfg)).collect();
    let trace = run(&topo, &mut nodes, whisper_params(&cfg), 3);

    let sender = trace.nodes[0].timeline.intervals();
    assert_eq!(sender.len(), 1);
    assert_eq!(sender[0].state, RadioState::Transmitting);
    assert_eq!(sender[0].duration(), Nanos::from_us(672));
    let units = &trace.transmissions[0].units;
    assert!(units.windows(2).all(|w| w[0].end == w[1].start));

    for node in 1..7 {
        let tl = &trace.nodes[node].timeline;
        let rx = tl
            .intervals()
            .iter()
            .find(|i| i.state == RadioState::Receiving)
            .unwrap();
        let tx = tl
            .intervals()
            .iter()
            .find(|i| i.state == RadioState::Transmitting)
            .unwrap();
        assert_eq!(tx.end - rx.start, Nanos::from_us(1_120), "node {node}");
        // Only the turnaround and the wait sit between reception and transmission.
        let between: Vec<_> = tl
            .intervals()
            .iter()
            .filter(|i| i.start >= rx.end && i.end <= tx.start)
            .collect();
        assert_eq!(between.len(), 2);
        assert_eq!(between[0].state, RadioState::TurnaroundRxTx);
        assert_eq!(between[1].state, RadioState::TxReady);
        assert_eq!(between[1].duration(), Nanos::from_us(29));
        tl.check_invariants(cfg.radio.t_turn).unwrap();
    }
}

#[test]
fn every_aligned_reception_succeeds() {
    let topo = Topology::line(7, 1.0).unwrap();
    let cfg = ideal_whisper(WhisperConfig::default());
    let mut nodes: Vec<_> = (0..7).map(|_| WhisperNode::new(cfg)).collect();
    let trace = run(&topo, &mut nodes, whisper_params(&cfg), 4);
    for node in &trace.nodes[1..] {
        assert_eq!(node.rx_failed, 0);
        assert_eq!(node.rx_ok, 1);
    }
    assert!(trace.conservation.holds());
}

fn glossy_back_of_envelope() -> GlossyConfig {
    let mut cfg = GlossyConfig {
        software_delay: Nanos::ZERO,
        t_guard: Nanos::ZERO,
        clock: ClockProfile::IDEAL,
        ..GlossyConfig::two_byte_preamble()
    };
    cfg.radio.t_d = Nanos::ZERO;
    cfg
}

fn glossy_params(cfg: &GlossyConfig) -> SlotParams {
    SlotParams {
        info: SlotInfo {
            t_star: T_STAR,
            slot_end: T_STAR + cfg.slot_timeout,
            signaling: true,
        },
        radio: cfg.radio,
        packlet: cfg.packlet,
        rule: CombiningRule::default(),
        sender_skew: Nanos::ZERO,
    }
}

#[test]
fn glossy_node_radio_on_matches_hand_count() {
    let topo = Topology::line(7, 1.0).unwrap();
    for (n_tx, expected_us) in [(3u32, 2_304i64), (2, 1_472)] {
        let cfg = GlossyConfig {
            n_tx,
            ..glossy_back_of_envelope()
        };
        let mut nodes: Vec<_> = (0..7).map(|_| GlossyNode::new(cfg)).collect();
        let trace = run(&topo, &mut nodes, glossy_params(&cfg), 9);
        assert_eq!(trace.nodes[1].radio_on(), Nanos::from_us(expected_us), "n_tx={n_tx}");
    }
}

#[test]
fn glossy_relay_counter_equals_hop() {
    let topo = Topology::line(7, 1.0).unwrap();
    let cfg = GlossyConfig {
        clock: ClockProfile::IDEAL,
        ..Default::default()
    };
    let mut nodes: Vec<_> = (0..7).map(|_| GlossyNode::new(cfg)).collect();
    let trace = run(&topo, &mut nodes, glossy_params(&cfg), 2);
    for h in 1..7 {
        assert_eq!(trace.nodes[h].first_counter, Some(h as u8 - 1));
        let sent = trace.transmissions.iter().find(|t| t.node == h).unwrap();
        assert_eq!(sent.stream[cfg.packlet.preamble_len as usize + 2], h as u8);
    }
}

#[test]
fn glossy_leaves_gaps_between_transmissions() {
    let topo = Topology::line(7, 1.0).unwrap();
    let cfg = GlossyConfig::two_byte_preamble();
    let mut nodes: Vec<_> = (0..7).map(|_| GlossyNode::new(cfg)).collect();
    let trace = run(&topo, &mut nodes, glossy_params(&cfg), 5);
    for node in &trace.nodes {
        let tx: Vec<_> = node
            .timeline
            .intervals()
            .iter()
            .filter(|i| i.state == RadioState::Transmitting)
            .collect();
        assert_eq!(tx.len(), 3);
        for w in tx.windows(2) {
            assert!(w[1].start - w[0].end >= cfg.radio.t_turn);
        }
        node.timeline.check_invariants(cfg.radio.t_turn).unwrap();
    }
}

#[test]
fn glossy_costs_more_radio_time_than_whisper() {
    let topo = Topology::line(7, 1.0).unwrap();
    let wcfg = WhisperConfig::lazy();
    let gcfg = GlossyConfig::two_byte_preamble();
    let mut w: Vec<_> = (0..7).map(|_| WhisperNode::new(wcfg)).collect();
    let mut g: Vec<_> = (0..7).map(|_| GlossyNode::new(gcfg)).collect();
    let wt = run(&topo, &mut w, whisper_params(&wcfg), 6);
    let gt = run(&topo, &mut g, glossy_params(&gcfg), 6);
    for node in 0..7 {
        assert!(gt.nodes[node].radio_on() > wt.nodes[node].radio_on(), "node {node}");
    }
}

#[test]
fn idle_slot_radio_on() {
    let topo = Topology::line(5, 1.0).unwrap();
    let lazy = WhisperConfig::lazy();
    let mut nodes: Vec<_> = (0..5).map(|_| WhisperNode::new(lazy)).collect();
    let trace = run_slot(&topo.links, &mut nodes, &[], &whisper_params(&lazy), 0).unwrap();
    assert!(trace.nodes.iter().all(|n| n.radio_on() == Nanos::from_ms(5)));

    let g = GlossyConfig::default();
    let mut nodes: Vec<_> = (0..5).map(|_| GlossyNode::new(g)).collect();
    let trace = run_slot(&topo.links, &mut nodes, &[], &glossy_params(&g), 0).unwrap();
    assert!(trace.nodes.iter().all(|n| n.radio_on() == Nanos::from_ms(5)));
}
