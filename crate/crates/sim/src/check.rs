//! Acceptance criteria, grouped into suites runnable from the command line
//! and from the `acceptance` test target.

use std::fmt;

use rand_core::RngCore;
use whisper_core::codec::{compute_fcs, packlet_duration, scan_for_packlet, PackletConfig, SignalingPacket, TxMode};
use whisper_core::glossy::{GlossyConfig, GlossyNode};
use whisper_core::radio::{ClockProfile, CombiningRule, RadioState};
use whisper_core::sim::experiment::{Protocol, ProtocolConfig, T_STAR};
use whisper_core::sim::metrics::MetricsReport;
use whisper_core::sim::rng::node_rng;
use whisper_core::sim::slot::{run_slot, SlotParams, SlotTrace};
use whisper_core::sim::{FloodEngine, SlotInfo, Topology};
use whisper_core::whisper::{compute_t_slot, compute_wait, StopPolicy, WhisperConfig, WhisperNode};
use whisper_core::Nanos;

use crate::error::SimError;
use crate::graphs::{self, TxPower};
use crate::runner::run_parallel;
use crate::scenario::{ScenarioName, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Criteria 1 to 9: exact timing arithmetic and the codec.
    Timing,
    Ratio,
    Idle,
    Concurrent,
    Compliant,
    Preamble,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["timing", "ratio", "idle", "concurrent", "compliant", "preamble", "all"];

    pub fn parse(name: &str) -> Result<Self, SimError> {
        Ok(match name {
            "timing" => Suite::Timing,
            "ratio" => Suite::Ratio,
            "idle" => Suite::Idle,
            "concurrent" => Suite::Concurrent,
            "compliant" => Suite::Compliant,
            "preamble" => Suite::Preamble,
            "all" => Suite::All,
            other => return Err(SimError::UnknownSuite(other.to_string())),
        })
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub measured: String,
    pub expected: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{tag}] {:>2} {}: measured {}; expected {}",
            self.id, self.name, self.measured, self.expected
        )
    }
}

/// Size of the statistical runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub floods: u64,
    pub reps: u64,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            floods: 10_000,
            reps: 3,
            seed: crate::DEFAULT_SEED,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &CheckOptions) -> Result<Vec<CriterionResult>, SimError> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Timing | Suite::All) {
        out.extend(timing_suite()?);
    }
    if matches!(suite, Suite::Ratio | Suite::Idle | Suite::All) {
        let runs = FixedRuns::run(opts)?;
        if suite != Suite::Idle {
            out.push(criterion_10(&runs));
        }
        if suite != Suite::Ratio {
            out.push(criterion_11(&runs));
        }
    }
    if matches!(suite, Suite::Concurrent | Suite::All) {
        out.push(criterion_12(opts)?);
    }
    if matches!(suite, Suite::Compliant | Suite::All) {
        out.push(criterion_13(opts)?);
    }
    if matches!(suite, Suite::Preamble | Suite::All) {
        out.push(criterion_14(opts)?);
    }
    Ok(out)
}

fn result(id: u8, name: &'static str, passed: bool, measured: String, expected: impl Into<String>) -> CriterionResult {
    CriterionResult {
        id,
        name,
        passed,
        measured,
        expected: expected.into(),
    }
}

fn us(t: Nanos) -> String {
    format!("{:.3} us", t.as_us_f64())
}

// ---------------------------------------------------------------------------
// Deterministic criteria

pub fn timing_suite() -> Result<Vec<CriterionResult>, SimError> {
    Ok(vec![
        criterion_1(),
        criterion_2()?,
        criterion_3()?,
        criterion_4()?,
        criterion_5()?,
        criterion_6(),
        criterion_7()?,
        criterion_8()?,
        criterion_9(),
    ])
}

fn ideal_whisper(cfg: WhisperConfig) -> WhisperConfig {
    WhisperConfig {
        clock: ClockProfile::IDEAL,
        ..cfg
    }
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

/// One flood from node 0 along an ideal line of `n` nodes.
fn line_flood<E: FloodEngine>(
    n: usize,
    mut make: impl FnMut() -> E,
    params: &SlotParams,
) -> Result<SlotTrace, SimError> {
    let topo = Topology::line(n, 1.0)?;
    let mut engines: Vec<E> = (0..n).map(|_| make()).collect();
    Ok(run_slot(&topo.links, &mut engines, &[0], params, 1)?)
}

fn whisper_line(n: usize, cfg: WhisperConfig) -> Result<SlotTrace, SimError> {
    line_flood(n, || WhisperNode::new(cfg), &whisper_params(&cfg))
}

fn glossy_line(n: usize, cfg: GlossyConfig) -> Result<SlotTrace, SimError> {
    line_flood(n, || GlossyNode::new(cfg), &glossy_params(&cfg))
}

fn criterion_1() -> CriterionResult {
    let short = packlet_duration(&PackletConfig::default());
    let long = packlet_duration(&PackletConfig::default().with_preamble(4));
    result(
        1,
        "packlet duration",
        short == Nanos::from_us(224) && long == Nanos::from_us(288),
        format!("{} / {}", us(short), us(long)),
        "224.000 us / 288.000 us, exact",
    )
}

fn criterion_2() -> Result<CriterionResult, SimError> {
    let trace = whisper_line(7, ideal_whisper(WhisperConfig::default()))?;
    let tx: Vec<_> = trace.nodes[0]
        .timeline
        .intervals()
        .iter()
        .filter(|i| i.state == RadioState::Transmitting)
        .collect();
    let span = tx.iter().map(|i| i.duration()).fold(Nanos::ZERO, |a, b| a + b);
    let sender = trace.transmissions.iter().find(|t| t.node == 0);
    let contiguous = sender.is_some_and(|t| t.units.windows(2).all(|w| w[0].end == w[1].start));
    Ok(result(
        2,
        "sender TX interval",
        tx.len() == 1 && span == Nanos::from_us(672) && contiguous,
        format!("{} in {} interval(s), contiguous={contiguous}", us(span), tx.len()),
        "672.000 us in 1 interval, contiguous",
    ))
}

fn criterion_3() -> Result<CriterionResult, SimError> {
    let trace = whisper_line(7, ideal_whisper(WhisperConfig::default()))?;
    let mut spans = Vec::new();
    for node in &trace.nodes[1..] {
        let iv = node.timeline.intervals();
        let rx = iv.iter().find(|i| i.state == RadioState::Receiving);
        let tx = iv.iter().rev().find(|i| i.state == RadioState::Transmitting);
        if let (Some(rx), Some(tx)) = (rx, tx) {
            spans.push(tx.end - rx.start);
        }
    }
    let ok = spans.len() == 6 && spans.iter().all(|&s| s == Nanos::from_us(1_120));
    let shown = spans.first().copied().unwrap_or(Nanos::ZERO);
    Ok(result(
        3,
        "forwarder active span",
        ok,
        format!("{} at all {} forwarders", us(shown), spans.len()),
        "1120.000 us at every forwarder",
    ))
}

/// Glossy on an ideal chain, counted the back-of-the-envelope way: no
/// software delay, data delay or guard time.
fn glossy_ideal(n_tx: u32, packlet: PackletConfig) -> GlossyConfig {
    let mut cfg = GlossyConfig {
        packlet,
        n_tx,
        software_delay: Nanos::ZERO,
        t_guard: Nanos::ZERO,
        clock: ClockProfile::IDEAL,
        ..GlossyConfig::default()
    };
    cfg.radio.t_d = Nanos::ZERO;
    cfg
}

fn criterion_4() -> Result<CriterionResult, SimError> {
    let trace = glossy_line(7, glossy_ideal(3, PackletConfig::default()))?;
    let on = trace.nodes[1].radio_on();
    Ok(result(
        4,
        "Glossy forwarder radio-on",
        on == Nanos::from_us(2_304),
        us(on),
        "2304.000 us, exact",
    ))
}

fn criterion_5() -> Result<CriterionResult, SimError> {
    let wait = compute_wait(Nanos::from_us(224), Nanos::from_us(192), Nanos::from_us(3))?;
    Ok(result(
        5,
        "T_wait",
        wait == Nanos::from_us(29),
        us(wait),
        "29.000 us, exact",
    ))
}

fn criterion_6() -> CriterionResult {
    let slot = compute_t_slot(6, 3, Nanos::from_us(224));
    result(
        6,
        "T_slot",
        slot == Nanos::from_us(3_360),
        us(slot),
        "3360.000 us, exact ((2*6+3)*224; the prose figure of 4.48 ms equals 20 packlets)",
    )
}

fn criterion_7() -> Result<CriterionResult, SimError> {
    let standard = whisper_line(7, ideal_whisper(WhisperConfig::default()))?;
    let compliant = whisper_line(
        7,
        ideal_whisper(WhisperConfig {
            n_tx: 20,
            t_slot: Nanos::from_ms(8),
            timeout: Some(Nanos::from_ms(8)),
            ..WhisperConfig::compliant()
        }),
    )?;
    let firsts = |t: &SlotTrace| t.nodes[1..].iter().map(|n| n.first_counter).collect::<Vec<_>>();
    let s = firsts(&standard);
    let c = firsts(&compliant);
    let want_s: Vec<Option<u8>> = [0, 2, 4, 6, 8, 10].into_iter().map(Some).collect();
    let want_c: Vec<Option<u8>> = [1, 4, 7, 10, 13, 16].into_iter().map(Some).collect();
    let show = |v: &[Option<u8>]| {
        v.iter()
            .map(|c| c.map_or("-".into(), |c| c.to_string()))
            .collect::<Vec<_>>()
            .join(",")
    };
    Ok(result(
        7,
        "counter progression",
        s == want_s && c == want_c,
        format!("standard [{}], compliant [{}]", show(&s), show(&c)),
        "standard [0,2,4,6,8,10], compliant [1,4,7,10,13,16]",
    ))
}

/// Radio-on increment of the first forwarder when `n_tx` grows by one.
fn glossy_increment() -> Result<Nanos, SimError> {
    let cfg = |n_tx| {
        let mut c = GlossyConfig {
            n_tx,
            clock: ClockProfile::IDEAL,
            ..GlossyConfig::default()
        };
        c.t_guard = Nanos::ZERO;
        c
    };
    let a = glossy_line(7, cfg(3))?.nodes[1].radio_on();
    let b = glossy_line(7, cfg(4))?.nodes[1].radio_on();
    Ok(b - a)
}

fn whisper_lazy_increment() -> Result<Nanos, SimError> {
    let cfg = |n_tx| {
        ideal_whisper(WhisperConfig {
            n_tx,
            packlet: PackletConfig::default().with_preamble(4),
            ..WhisperConfig::lazy()
        })
    };
    let a = whisper_line(7, cfg(3))?.nodes[1].radio_on();
    let b = whisper_line(7, cfg(4))?.nodes[1].radio_on();
    Ok(b - a)
}

fn criterion_8() -> Result<CriterionResult, SimError> {
    let glossy = glossy_increment()?;
    let whisper = whisper_lazy_increment()?;
    let glossy_expected = Nanos::from_us(288 + 288 + 192 + 23);
    Ok(result(
        8,
        "radio-on increment per N_tx (4-byte preamble)",
        glossy == glossy_expected && whisper == Nanos::from_us(288),
        format!("Glossy {}, Whisper-lazy {}", us(glossy), us(whisper)),
        "Glossy 791.000 us (288+288+192+23), Whisper-lazy 288.000 us",
    ))
}

/// Bitwise long division, MSB-first over bit-reversed input: the textbook
/// form of the reflected CRC the codec computes with a table.
fn fcs_long_division(payload: &[u8]) -> u16 {
    let mut reg: u32 = 0;
    for &byte in payload {
        for bit in 0..8 {
            let inbit = ((byte >> bit) & 1) as u32;
            let top = (reg >> 15) & 1;
            reg = (reg << 1) & 0xffff;
            if top ^ inbit == 1 {
                reg ^= 0x1021;
            }
        }
    }
    (reg as u16).reverse_bits()
}

fn criterion_9() -> CriterionResult {
    let mut rng = node_rng(0x5eed, 9);
    let mut fcs_ok = 0u32;
    let mut flips_ok = true;
    for _ in 0..10_000 {
        let len = 1 + (rng.next_u32() % 16) as usize;
        let mut payload = vec![0u8; len];
        rng.fill_bytes(&mut payload);
        let fcs = compute_fcs(&payload);
        if fcs == fcs_long_division(&payload) {
            fcs_ok += 1;
        }
        let bit = (rng.next_u32() as usize) % (len * 8);
        payload[bit / 8] ^= 1 << (bit % 8);
        flips_ok &= compute_fcs(&payload) != fcs;
    }

    let cfg = PackletConfig::default();
    let mut round_trip = true;
    let mut offsets = true;
    for start in [0u32, 5, 100, 250] {
        let Ok(packet) = SignalingPacket::new(cfg, 3, start, TxMode::Looping) else {
            round_trip = false;
            continue;
        };
        let stream = packet.encode();
        let mut bit = 0;
        for k in 0..3 {
            match scan_for_packlet(&cfg, &stream, bit) {
                Some((p, next)) => {
                    round_trip &= p.counter as u32 == start + k;
                    bit = next;
                }
                None => round_trip = false,
            }
        }
        // Waking after the preamble of packlet 0 locks onto packlet 1.
        let size = cfg.packlet_size_bytes() * 8;
        for offset in [24, size / 2, size - 1] {
            offsets &= scan_for_packlet(&cfg, &stream, offset).map(|(p, _)| p.counter as u32) == Some(start + 1);
        }
    }
    result(
        9,
        "codec properties",
        fcs_ok == 10_000 && flips_ok && round_trip && offsets,
        format!("FCS oracle {fcs_ok}/10000, bit flips detected={flips_ok}, round-trip={round_trip}, offsets={offsets}"),
        "10000/10000 and every property true",
    )
}

// ---------------------------------------------------------------------------
// Statistical criteria

fn run(spec: &ScenarioSpec, seed: u64) -> Result<MetricsReport, SimError> {
    let links = spec.load_links(None)?;
    let scenario = spec.to_scenario(seed)?;
    scenario.validate(links.n_nodes())?;
    run_parallel(&scenario, &links)
}

fn spec(name: ScenarioName, protocol: Protocol, opts: &CheckOptions) -> ScenarioSpec {
    ScenarioSpec {
        floods: opts.floods,
        reps: opts.reps,
        ..ScenarioSpec::new(name, protocol)
    }
}

fn mean(s: Option<whisper_core::sim::metrics::Stat>) -> f64 {
    s.map_or(f64::NAN, |s| s.mean)
}

/// diss.fixed on the 0 dBm graph with idle slots mixed in, shared by the
/// ratio and idle criteria.
struct FixedRuns {
    whisper: MetricsReport,
    lazy: MetricsReport,
    glossy: MetricsReport,
}

impl FixedRuns {
    fn run(opts: &CheckOptions) -> Result<Self, SimError> {
        let go = |p| {
            let mut s = spec(ScenarioName::DissFixed, p, opts);
            s.idle_slots = opts.floods / 2;
            run(&s, opts.seed)
        };
        Ok(FixedRuns {
            whisper: go(Protocol::Whisper)?,
            lazy: go(Protocol::WhisperLazy)?,
            glossy: go(Protocol::Glossy)?,
        })
    }
}

fn criterion_10(r: &FixedRuns) -> CriterionResult {
    let rel = |m: &MetricsReport| mean(m.network_reliability) * 100.0;
    let on = |m: &MetricsReport| mean(m.radio_on_signal_ms);
    let (rw, rl, rg) = (rel(&r.whisper), rel(&r.lazy), rel(&r.glossy));
    let ratio = on(&r.whisper) / on(&r.glossy);
    let ratio_lazy = on(&r.lazy) / on(&r.glossy);
    let band = 0.45..=0.65;
    let passed = rw >= rg && rl >= rg && rw.min(rl).min(rg) >= 99.0 && band.contains(&ratio);
    result(
        10,
        "diss.fixed 0 dBm reliability and radio-on ratio",
        passed,
        format!(
            "reliability whisper {rw:.3}%, whisper-lazy {rl:.3}%, glossy {rg:.3}%; radio-on whisper {:.3} ms, \
             whisper-lazy {:.3} ms, glossy {:.3} ms; ratio whisper/glossy {ratio:.3} (whisper-lazy/glossy {ratio_lazy:.3})",
            on(&r.whisper),
            on(&r.lazy),
            on(&r.glossy)
        ),
        "whisper, whisper-lazy >= glossy, all >= 99%; whisper/glossy ratio in [0.450, 0.650]",
    )
}

fn criterion_11(r: &FixedRuns) -> CriterionResult {
    let idle = |m: &MetricsReport| mean(m.radio_on_idle_ms);
    let (w, l, g) = (idle(&r.whisper), idle(&r.lazy), idle(&r.glossy));
    let exact5 = |x: f64| (x - 5.0).abs() < 1e-9;
    result(
        11,
        "radio-on without signaling",
        w < 3.0 && exact5(l) && exact5(g),
        format!("whisper {w:.3} ms, whisper-lazy {l:.3} ms, glossy {g:.3} ms"),
        "whisper < 3.000 ms; whisper-lazy and glossy 5.000 ms exactly",
    )
}

fn criterion_12(opts: &CheckOptions) -> Result<CriterionResult, SimError> {
    let mut parts = Vec::new();
    let mut passed = true;
    for name in [ScenarioName::DissClose, ScenarioName::DissFar] {
        let lazy = run(&spec(name, Protocol::WhisperLazy, opts), opts.seed)?;
        let glossy = run(&spec(name, Protocol::Glossy2b, opts), opts.seed)?;
        let (rl, rg) = (
            mean(lazy.network_reliability) * 100.0,
            mean(glossy.network_reliability) * 100.0,
        );
        let (dl, dg) = (
            mean(lazy.dropped_fraction) * 100.0,
            mean(glossy.dropped_fraction) * 100.0,
        );
        if name == ScenarioName::DissFar {
            passed &= rl - rg >= 0.5 && dg > dl;
        }
        parts.push(format!(
            "{name}: whisper-lazy {rl:.3}% vs glossy-2b {rg:.3}% (gap {:.3} pp), dropped {dl:.3}% vs {dg:.3}%",
            rl - rg
        ));
    }
    Ok(result(
        12,
        "concurrent senders",
        passed,
        parts.join("; "),
        "diss.far: gap >= 0.500 pp and glossy-2b dropped fraction strictly higher",
    ))
}

fn criterion_13(opts: &CheckOptions) -> Result<CriterionResult, SimError> {
    let links = graphs::near_ideal();
    let go = |protocol: Protocol| -> Result<MetricsReport, SimError> {
        let mut s = spec(ScenarioName::DissFixed, protocol, opts);
        s.tx_power = TxPower::MinusTenDbm;
        let mut scenario = s.to_scenario(opts.seed)?;
        if let ProtocolConfig::Whisper(w) = &mut scenario.protocol {
            if protocol == Protocol::WhisperLazy {
                w.packlet = w.packlet.with_preamble(4);
                w.n_tx = 14;
                w.stop = StopPolicy::Simultaneous;
            }
        }
        scenario.validate(links.n_nodes())?;
        run_parallel(&scenario, &links)
    };
    let compliant = go(Protocol::WhisperCompliant)?;
    let standard = go(Protocol::WhisperLazy)?;
    let min_rel = |m: &MetricsReport| {
        m.nodes
            .iter()
            .filter_map(|n| n.reliability)
            .fold(f64::INFINITY, f64::min)
    };
    let (mc, ms) = (min_rel(&compliant), min_rel(&standard));
    let hc = compliant.hop_mean_counter();
    let hs = standard.hop_mean_counter();
    let slower = hs
        .iter()
        .filter(|(&h, _)| h >= 2)
        .all(|(h, s)| hc.get(h).is_some_and(|c| c > s))
        && hs.keys().any(|&h| h >= 2);
    let show = |m: &std::collections::BTreeMap<u32, f64>| {
        m.iter()
            .map(|(h, c)| format!("{h}:{c:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Ok(result(
        13,
        "compliant vs standard, 14 packlets",
        mc == 1.0 && ms == 1.0 && slower,
        format!(
            "min per-node reliability compliant {:.3}%, standard {:.3}%; first counter per hop compliant [{}], standard [{}]",
            mc * 100.0,
            ms * 100.0,
            show(&hc),
            show(&hs)
        ),
        "100.000% per node for both; compliant counter > standard at every hop >= 2",
    ))
}

fn criterion_14(opts: &CheckOptions) -> Result<CriterionResult, SimError> {
    let go = |preamble: u8| {
        let mut s = spec(ScenarioName::DissFixed, Protocol::WhisperLazy, opts);
        s.preamble = Some(preamble);
        run(&s, opts.seed)
    };
    let two = go(2)?;
    let four = go(4)?;
    let rise = mean(four.radio_on_signal_ms) / mean(two.radio_on_signal_ms) - 1.0;
    let delta = (mean(four.network_reliability) - mean(two.network_reliability)) * 100.0;
    Ok(result(
        14,
        "preamble 2 -> 4 bytes, whisper-lazy",
        (0.15..=0.30).contains(&rise) && delta.abs() <= 0.2,
        format!(
            "radio-on {:.3} -> {:.3} ms (+{:.3}%), reliability change {delta:.3} pp",
            mean(two.radio_on_signal_ms),
            mean(four.radio_on_signal_ms),
            rise * 100.0
        ),
        "radio-on +15.000% to +30.000%, |reliability change| <= 0.200 pp",
    ))
}
