//! Simulated half-duplex PHY: radio-state timelines, reception verdicts
//! for concurrent transmissions, link model and the node clock model.

use alloc::vec::Vec;
use core::ops::Range;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::time::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadioTimingParams {
    /// RX/TX turnaround.
    pub t_turn: Nanos,
    /// Delay between a sender's SFD edge and the receiver's SFD edge.
    pub t_d: Nanos,
    /// Maximum start-time spread for concurrent transmissions to still be
    /// received.
    pub ci_window: Nanos,
    pub bitrate: u32,
}

impl Default for RadioTimingParams {
    fn default() -> Self {
        RadioTimingParams {
            t_turn: Nanos::from_us(192),
            t_d: Nanos::from_us(3),
            ci_window: Nanos::from_ns(500),
            bitrate: 250_000,
        }
    }
}

impl RadioTimingParams {
    pub fn validate(&self) -> Result<()> {
        if self.t_turn <= Nanos::ZERO {
            return Err(Error::InvalidConfig("t_turn must be positive"));
        }
        if self.t_d < Nanos::ZERO {
            return Err(Error::InvalidConfig("t_d must not be negative"));
        }
        if self.ci_window <= Nanos::ZERO {
            return Err(Error::InvalidConfig("ci_window must be positive"));
        }
        if self.bitrate == 0 {
            return Err(Error::InvalidConfig("bitrate must be positive"));
        }
        Ok(())
    }
}

/// Timestamp of the receiver-side SFD edge for a sender SFD at `tx_sfd_time`.
pub fn rx_timestamp_of_sfd(params: &RadioTimingParams, tx_sfd_time: Nanos, propagation: Nanos) -> Nanos {
    tx_sfd_time + params.t_d + propagation
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadioState {
    Off,
    Listening,
    Receiving,
    TurnaroundRxTx,
    /// Transmitter ready after turnaround, waiting for its scheduled start.
    TxReady,
    Transmitting,
    TurnaroundTxRx,
}

impl RadioState {
    pub fn is_on(self) -> bool {
        self != RadioState::Off
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateInterval {
    pub state: RadioState,
    pub start: Nanos,
    pub end: Nanos,
}

impl StateInterval {
    pub fn duration(&self) -> Nanos {
        self.end - self.start
    }
}

/// Ordered, non-overlapping record of one node's radio states.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RadioTimeline {
    intervals: Vec<StateInterval>,
}

impl RadioTimeline {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an interval; zero-length intervals are dropped and adjacent
    /// intervals of the same state are merged.
    pub fn push(&mut self, state: RadioState, start: Nanos, end: Nanos) -> Result<()> {
        if end < start {
            return Err(Error::Internal("timeline interval ends before it starts"));
        }
        if let Some(last) = self.intervals.last_mut() {
            if start < last.end {
                return Err(Error::Internal("timeline intervals overlap"));
            }
            if last.state == state && last.end == start {
                last.end = end;
                return Ok(());
            }
        }
        if end > start {
            self.intervals.push(StateInterval { state, start, end });
        }
        Ok(())
    }

    pub fn intervals(&self) -> &[StateInterval] {
        &self.intervals
    }

    pub fn radio_on_time(&self) -> Nanos {
        self.intervals
            .iter()
            .filter(|i| i.state.is_on())
            .map(StateInterval::duration)
            .sum()
    }

    pub fn time_in(&self, state: RadioState) -> Nanos {
        self.intervals
            .iter()
            .filter(|i| i.state == state)
            .map(StateInterval::duration)
            .sum()
    }

    /// First instant the radio is on and the last instant it is on.
    pub fn active_span(&self) -> Option<(Nanos, Nanos)> {
        let mut on = self.intervals.iter().filter(|i| i.state.is_on());
        let first = on.next()?;
        let last = on.next_back().unwrap_or(first);
        Some((first.start, last.end))
    }

    /// Checks ordering, the exact-turnaround rule and the allowed state
    /// transitions.
    pub fn check_invariants(&self, t_turn: Nanos) -> Result<()> {
        use RadioState::*;
        for w in self.intervals.windows(2) {
            if w[1].start < w[0].end {
                return Err(Error::Internal("timeline intervals overlap"));
            }
            let ok = matches!(
                (w[0].state, w[1].state),
                (_, Off)
                    | (Off, _)
                    | (Listening, Receiving)
                    | (Receiving, Listening)
                    | (Receiving, TurnaroundRxTx)
                    | (Listening, TurnaroundRxTx)
                    | (TurnaroundRxTx, TxReady)
                    | (TurnaroundRxTx, Transmitting)
                    | (TxReady, Transmitting)
                    | (Transmitting, TurnaroundTxRx)
                    | (TurnaroundTxRx, Listening)
            );
            if !ok {
                return Err(Error::Internal("illegal radio state transition"));
            }
        }
        for i in &self.intervals {
            if matches!(i.state, TurnaroundRxTx | TurnaroundTxRx) && i.duration() != t_turn {
                return Err(Error::Internal("turnaround interval differs from t_turn"));
            }
        }
        Ok(())
    }
}

/// Directed per-link packet reception ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    n_nodes: usize,
    inbound: Vec<Vec<Link>>,
    outbound: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub src: usize,
    pub dst: usize,
    pub prr: f64,
    pub propagation: Nanos,
}

impl LinkModel {
    pub fn new(n_nodes: usize) -> Self {
        LinkModel {
            n_nodes,
            inbound: alloc::vec![Vec::new(); n_nodes],
            outbound: alloc::vec![Vec::new(); n_nodes],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Adds or replaces the link `src -> dst`.
    pub fn add_link(&mut self, src: usize, dst: usize, prr: f64) -> Result<()> {
        self.add_link_with_delay(src, dst, prr, Nanos::ZERO)
    }

    pub fn add_link_with_delay(&mut self, src: usize, dst: usize, prr: f64, propagation: Nanos) -> Result<()> {
        if src >= self.n_nodes {
            return Err(Error::UnknownNode(src));
        }
        if dst >= self.n_nodes {
            return Err(Error::UnknownNode(dst));
        }
        if src == dst || !(0.0..=1.0).contains(&prr) || propagation < Nanos::ZERO {
            return Err(Error::InvalidLink { src, dst });
        }
        let link = Link {
            src,
            dst,
            prr,
            propagation,
        };
        match self.inbound[dst].iter_mut().find(|l| l.src == src) {
            Some(existing) => *existing = link,
            None => {
                self.inbound[dst].push(link);
                self.inbound[dst].sort_by_key(|l| l.src);
                self.outbound[src].push(dst);
                self.outbound[src].sort_unstable();
            }
        }
        Ok(())
    }

    pub fn add_symmetric(&mut self, a: usize, b: usize, prr: f64) -> Result<()> {
        self.add_link(a, b, prr)?;
        self.add_link(b, a, prr)
    }

    pub fn link(&self, src: usize, dst: usize) -> Option<&Link> {
        self.inbound.get(dst)?.iter().find(|l| l.src == src)
    }

    pub fn prr(&self, src: usize, dst: usize) -> f64 {
        self.link(src, dst).map_or(0.0, |l| l.prr)
    }

    /// Links into `dst`, sorted by source.
    pub fn inbound(&self, dst: usize) -> &[Link] {
        &self.inbound[dst]
    }

    /// Destinations reachable from `src`, sorted.
    pub fn outbound(&self, src: usize) -> &[usize] {
        &self.outbound[src]
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.inbound.iter().flatten()
    }
}

/// One decodable frame inside a transmission: a packlet, or a whole
/// Glossy packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub start: Nanos,
    pub end: Nanos,
    /// Byte range inside the transmission's stream.
    pub bytes: Range<usize>,
}

/// A single continuous transmission by one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub node: usize,
    pub start: Nanos,
    pub end: Nanos,
    pub stream: Vec<u8>,
    pub units: Vec<Unit>,
}

impl Transmission {
    pub fn unit_bytes(&self, unit: &Unit) -> &[u8] {
        &self.stream[unit.bytes.clone()]
    }

    /// Length of overlap with `[start, end)`.
    pub fn overlap(&self, start: Nanos, end: Nanos) -> Nanos {
        (self.end.min(end) - self.start.max(start)).max(Nanos::ZERO)
    }
}

/// How per-link success probabilities of aligned, identical transmitters
/// combine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CombiningRule {
    /// `1 - prod(1 - prr_i)`.
    #[default]
    IndependentSuccess,
    /// Only the best link counts.
    BestLink,
}

impl CombiningRule {
    pub fn combine(self, prrs: impl Iterator<Item = f64>) -> f64 {
        match self {
            CombiningRule::IndependentSuccess => 1.0 - prrs.fold(1.0, |miss, p| miss * (1.0 - p)),
            CombiningRule::BestLink => prrs.fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// Aligned, identical signals: delivered with `success_prob`.
    Receivable { success_prob: f64, contributors: usize },
    /// Differing content or misaligned starts: the frame fails its FCS.
    Corrupted { contributors: usize },
    /// Nothing from a connected transmitter overlaps the interval.
    Silent,
}

/// A connected transmitter as seen by one receiver.
#[derive(Debug, Clone, Copy)]
pub struct Heard<'a> {
    pub tx: &'a Transmission,
    pub prr: f64,
    pub propagation: Nanos,
}

/// Reception verdict for the frame occupying `[start, end)` at the
/// receiver with content `expected`.
///
/// Every connected transmission overlapping the interval by more than the
/// alignment window must carry a unit that starts within the window of
/// all other such units and whose bytes equal `expected`; otherwise the
/// overlapping bytes are corrupted.
pub fn deliverable_transmissions(
    params: &RadioTimingParams,
    rule: CombiningRule,
    start: Nanos,
    end: Nanos,
    expected: &[u8],
    heard: &[Heard<'_>],
) -> Verdict {
    let mut earliest: Option<Nanos> = None;
    let mut latest: Option<Nanos> = None;
    let mut contributors = 0;
    let mut corrupted = false;
    for h in heard {
        let (tx_start, tx_end) = (h.tx.start + h.propagation, h.tx.end + h.propagation);
        let overlap = (tx_end.min(end) - tx_start.max(start)).max(Nanos::ZERO);
        if overlap <= params.ci_window {
            continue;
        }
        contributors += 1;
        let matching =
            h.tx.units.iter().find(|u| {
                (u.start + h.propagation - start).abs() <= params.ci_window && h.tx.unit_bytes(u) == expected
            });
        match matching {
            Some(u) => {
                let s = u.start + h.propagation;
                earliest = Some(earliest.map_or(s, |e| e.min(s)));
                latest = Some(latest.map_or(s, |l| l.max(s)));
            }
            None => corrupted = true,
        }
    }
    if contributors == 0 {
        return Verdict::Silent;
    }
    if let (Some(e), Some(l)) = (earliest, latest) {
        if l - e > params.ci_window {
            corrupted = true;
        }
    }
    if corrupted {
        return Verdict::Corrupted { contributors };
    }
    let prrs = heard
        .iter()
        .filter(|h| (h.tx.end + h.propagation).min(end) - (h.tx.start + h.propagation).max(start) > params.ci_window);
    Verdict::Receivable {
        success_prob: rule.combine(prrs.map(|h| h.prr)),
        contributors,
    }
}

/// MCU clock behaviour of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClockProfile {
    /// Frequency offset in parts per billion.
    pub drift_ppb: i64,
    /// Timing jitter is drawn uniformly from `[-jitter, +jitter]`.
    pub jitter: Nanos,
}

impl ClockProfile {
    pub const IDEAL: ClockProfile = ClockProfile {
        drift_ppb: 0,
        jitter: Nanos::ZERO,
    };

    /// DCO-compensated node: no residual drift and jitter small enough that
    /// any two compensated nodes stay within a 0.5 us alignment window.
    pub const COMPENSATED: ClockProfile = ClockProfile {
        drift_ppb: 0,
        jitter: Nanos(250),
    };

    pub fn with_ppm(ppm: i64, jitter: Nanos) -> Self {
        ClockProfile {
            drift_ppb: ppm * 1_000,
            jitter,
        }
    }

    /// Drift applied to `nominal`, rounded to the nearest nanosecond.
    pub fn drift(&self, nominal: Nanos) -> Nanos {
        let scaled = nominal.as_ns() as i128 * self.drift_ppb as i128;
        let half = if scaled >= 0 { 500_000_000 } else { -500_000_000 };
        Nanos(((scaled + half) / 1_000_000_000) as i64)
    }
}

/// Draws an integer uniformly from `[-bound, bound]`.
pub fn uniform_symmetric<R: RngCore + ?Sized>(rng: &mut R, bound: Nanos) -> Nanos {
    if bound <= Nanos::ZERO {
        return Nanos::ZERO;
    }
    let span = (2 * bound.as_ns() + 1) as u128;
    let draw = ((rng.next_u64() as u128 * span) >> 64) as i64;
    Nanos(draw - bound.as_ns())
}

/// Uniform draw in `[0, 1)`.
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// `nominal * (1 + drift) + jitter`, in integer nanoseconds.
pub fn apply_clock_model<R: RngCore + ?Sized>(profile: &ClockProfile, nominal: Nanos, rng: &mut R) -> Nanos {
    nominal + profile.drift(nominal) + uniform_symmetric(rng, profile.jitter)
}
