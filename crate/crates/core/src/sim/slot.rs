//! One flooding slot: nodes wake, listen, lock onto packlets, decode or
//! drop them, and relay, all against a shared air log.
//!
//! Reception is evaluated per decodable unit. A listening node locks onto
//! the earliest unit whose preamble it can still catch, stays in
//! `Receiving` until the unit ends plus the data delay, and then gets the
//! verdict for everything it heard during that interval.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::codec::{decode_packlet, PackletConfig};
use crate::error::{Error, Result};
use crate::radio::{
    deliverable_transmissions, uniform_symmetric, unit_f64, CombiningRule, Heard, LinkModel, RadioState, RadioTimeline,
    RadioTimingParams, Transmission, Verdict,
};
use crate::sim::engine::{Command, FloodEngine, Received, SlotInfo, SlotRole, Start};
use crate::sim::event::{EventKind, EventQueue};
use crate::sim::rng::node_rng;
use crate::time::Nanos;

const MAX_EVENTS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotParams {
    pub info: SlotInfo,
    pub radio: RadioTimingParams,
    /// Frame format receivers expect.
    pub packlet: PackletConfig,
    pub rule: CombiningRule,
    /// Concurrent initiators other than the first start up to this far
    /// from `t_star`; the first sender defines the network's time base.
    pub sender_skew: Nanos,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeTrace {
    pub timeline: RadioTimeline,
    /// Counter of the first successfully decoded frame.
    pub first_counter: Option<u8>,
    /// End of that first reception.
    pub first_rx_end: Option<Nanos>,
    pub rx_ok: u32,
    pub rx_failed: u32,
    pub transmitted: bool,
    /// Frames sent by in-range neighbours during the slot.
    pub frames_in_range: u32,
    /// Of those, frames that took part in a failed reception.
    pub frames_dropped: u32,
}

impl NodeTrace {
    pub fn received(&self) -> bool {
        self.first_counter.is_some()
    }

    pub fn radio_on(&self) -> Nanos {
        self.timeline.radio_on_time()
    }
}

/// Per-unit reception outcome counts over all in-range receivers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Conservation {
    pub in_range: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub unheard: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.delivered + self.dropped + self.unheard == self.in_range
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotTrace {
    pub nodes: Vec<NodeTrace>,
    pub transmissions: Vec<Transmission>,
    pub conservation: Conservation,
    pub events: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Anchor {
    tx: usize,
    unit: usize,
    start: Nanos,
    end: Nanos,
}

struct NodeRt {
    state: RadioState,
    since: Nanos,
    listen_since: Nanos,
    deadline: Nanos,
    anchor: Option<Anchor>,
    woken: bool,
    rng: ChaCha8Rng,
}

const UNHEARD: u8 = 0;
const DELIVERED: u8 = 1;
const DROPPED: u8 = 2;

struct Slot<'a, E> {
    links: &'a LinkModel,
    engines: &'a mut [E],
    params: &'a SlotParams,
    queue: EventQueue,
    nodes: Vec<NodeRt>,
    traces: Vec<NodeTrace>,
    txs: Vec<Transmission>,
    tx_by_node: Vec<Vec<usize>>,
    /// Per transmission: `units * n_nodes` outcome marks.
    marks: Vec<Vec<u8>>,
}

/// Runs one slot to completion.
///
/// `senders` initiate a flood; every other node forwards. The trace is a
/// pure function of the inputs and `slot_seed`.
pub fn run_slot<E: FloodEngine>(
    links: &LinkModel,
    engines: &mut [E],
    senders: &[usize],
    params: &SlotParams,
    slot_seed: u64,
) -> Result<SlotTrace> {
    let n = links.n_nodes();
    if engines.len() != n {
        return Err(Error::InvalidConfig("one engine per node required"));
    }
    if let Some(&bad) = senders.iter().find(|&&s| s >= n) {
        return Err(Error::UnknownNode(bad));
    }
    let mut slot = Slot {
        links,
        engines,
        params,
        queue: EventQueue::new(Nanos(i64::MIN)),
        nodes: (0..n)
            .map(|i| NodeRt {
                state: RadioState::Off,
                since: Nanos::ZERO,
                listen_since: Nanos::ZERO,
                deadline: Nanos::ZERO,
                anchor: None,
                woken: false,
                rng: node_rng(slot_seed, i),
            })
            .collect(),
        traces: vec![NodeTrace::default(); n],
        txs: Vec::new(),
        tx_by_node: vec![Vec::new(); n],
        marks: Vec::new(),
    };
    slot.start(senders)?;
    let events = slot.run()?;
    Ok(slot.finish(events))
}

impl<'a, E: FloodEngine> Slot<'a, E> {
    fn start(&mut self, senders: &[usize]) -> Result<()> {
        let info = self.params.info;
        for node in 0..self.nodes.len() {
            let role = match senders.iter().position(|&s| s == node) {
                Some(0) => SlotRole::Sender { skew: Nanos::ZERO },
                Some(_) => SlotRole::Sender {
                    skew: uniform_symmetric(&mut self.nodes[node].rng, self.params.sender_skew),
                },
                None => SlotRole::Forwarder,
            };
            let start = self.engines[node].begin_slot(node, &info, role, &mut self.nodes[node].rng);
            match start {
                Start::Sleep => {}
                Start::Listen { from, until } => {
                    self.nodes[node].deadline = until;
                    self.queue.schedule(from, EventKind::SamplingWindow, node)?;
                }
                Start::Transmit(tx) => {
                    let rt = &mut self.nodes[node];
                    rt.woken = true;
                    rt.state = RadioState::Transmitting;
                    rt.since = tx.start;
                    self.queue.schedule(tx.end, EventKind::TxStop, node)?;
                    self.register(node, tx)?;
                }
            }
        }
        Ok(())
    }

    fn run(&mut self) -> Result<usize> {
        let mut count = 0;
        while let Some(ev) = self.queue.pop() {
            count += 1;
            if count > MAX_EVENTS {
                return Err(Error::Internal("event budget exhausted"));
            }
            let now = ev.time;
            let node = ev.node;
            match ev.kind {
                EventKind::SamplingWindow => {
                    if self.nodes[node].woken {
                        continue;
                    }
                    self.nodes[node].woken = true;
                    let until = self.nodes[node].deadline;
                    self.listen(node, now, now, until)?;
                }
                EventKind::PackletBoundary => self.try_lock(node, now)?,
                EventKind::ReceptionEnd => self.end_reception(node, now)?,
                EventKind::TxStop => {
                    if self.nodes[node].state != RadioState::Transmitting {
                        return Err(Error::Internal("transmission ended at a node that is not transmitting"));
                    }
                    let info = self.params.info;
                    let cmd = self.engines[node].on_tx_end(node, &info, now, &mut self.nodes[node].rng);
                    self.apply(node, now, cmd)?;
                }
                EventKind::ListenDeadline => {
                    let rt = &self.nodes[node];
                    if rt.state != RadioState::Listening || now < rt.deadline {
                        continue;
                    }
                    let info = self.params.info;
                    let cmd = self.engines[node].on_deadline(node, &info, now, &mut self.nodes[node].rng);
                    self.apply(node, now, cmd)?;
                }
            }
        }
        if self.nodes.iter().any(|rt| rt.state != RadioState::Off) {
            return Err(Error::Internal("event queue starved before every radio was off"));
        }
        Ok(count)
    }

    fn finish(mut self, events: usize) -> SlotTrace {
        let n = self.nodes.len();
        let mut c = Conservation::default();
        for (tx, marks) in self.txs.iter().zip(&self.marks) {
            for &dst in self.links.outbound(tx.node) {
                for unit in 0..tx.units.len() {
                    c.in_range += 1;
                    self.traces[dst].frames_in_range += 1;
                    match marks[unit * n + dst] {
                        DELIVERED => c.delivered += 1,
                        DROPPED => {
                            c.dropped += 1;
                            self.traces[dst].frames_dropped += 1;
                        }
                        _ => c.unheard += 1,
                    }
                }
            }
        }
        for tx in &self.txs {
            self.traces[tx.node].transmitted = true;
        }
        SlotTrace {
            nodes: self.traces,
            transmissions: self.txs,
            conservation: c,
            events,
        }
    }

    fn set_state(&mut self, node: usize, state: RadioState, at: Nanos) -> Result<()> {
        let rt = &mut self.nodes[node];
        if rt.state != RadioState::Off && at > rt.since {
            self.traces[node].timeline.push(rt.state, rt.since, at)?;
        }
        rt.state = state;
        rt.since = at;
        Ok(())
    }

    fn listen(&mut self, node: usize, now: Nanos, from: Nanos, until: Nanos) -> Result<()> {
        if until <= from {
            return self.set_state(node, RadioState::Off, from);
        }
        self.set_state(node, RadioState::Listening, from)?;
        let rt = &mut self.nodes[node];
        rt.listen_since = from;
        rt.deadline = until;
        rt.anchor = None;
        self.queue.schedule(until, EventKind::ListenDeadline, node)?;
        self.queue.schedule(from.max(now), EventKind::PackletBoundary, node)
    }

    fn apply(&mut self, node: usize, now: Nanos, cmd: Command) -> Result<()> {
        let t_turn = self.params.radio.t_turn;
        match cmd {
            Command::Listen { until } => self.listen(node, now, now, until),
            Command::ListenAfterTx { until } => {
                self.set_state(node, RadioState::TurnaroundTxRx, now)?;
                let from = now + t_turn;
                self.listen(node, now, from, until.max(from))
            }
            Command::Off => self.set_state(node, RadioState::Off, now),
            Command::Transmit(tx) => {
                if tx.node != node {
                    return Err(Error::Internal("engine transmitted on behalf of another node"));
                }
                if tx.start < now + t_turn {
                    return Err(Error::Internal("transmission leaves no room for the turnaround"));
                }
                self.set_state(node, RadioState::TurnaroundRxTx, now)?;
                if tx.start > now + t_turn {
                    self.set_state(node, RadioState::TxReady, now + t_turn)?;
                }
                self.set_state(node, RadioState::Transmitting, tx.start)?;
                self.queue.schedule(tx.end, EventKind::TxStop, node)?;
                self.register(node, tx)
            }
        }
    }

    /// Adds a transmission to the air log and wakes up listening
    /// neighbours that might lock onto it.
    fn register(&mut self, node: usize, tx: Transmission) -> Result<()> {
        let idx = self.txs.len();
        self.marks.push(vec![UNHEARD; tx.units.len() * self.nodes.len()]);
        self.txs.push(tx);
        self.tx_by_node[node].push(idx);
        let now = self.queue.now();
        for &dst in self.links.outbound(node) {
            if self.nodes[dst].state == RadioState::Listening {
                if let Some(anchor) = self.lockable(dst) {
                    let at = anchor.start.max(self.nodes[dst].listen_since).max(now);
                    self.queue.schedule(at, EventKind::PackletBoundary, dst)?;
                }
            }
        }
        Ok(())
    }

    /// Earliest unit a listening node can still lock onto.
    fn lockable(&self, node: usize) -> Option<Anchor> {
        let rt = &self.nodes[node];
        let earliest = rt.listen_since - self.params.packlet.lock_slack();
        let mut best: Option<Anchor> = None;
        for link in self.links.inbound(node) {
            if link.prr <= 0.0 {
                continue;
            }
            for &ti in &self.tx_by_node[link.src] {
                let tx = &self.txs[ti];
                for (ui, u) in tx.units.iter().enumerate() {
                    let start = u.start + link.propagation;
                    if start < earliest {
                        continue;
                    }
                    if start >= rt.deadline {
                        break;
                    }
                    let cand = Anchor {
                        tx: ti,
                        unit: ui,
                        start,
                        end: u.end + link.propagation,
                    };
                    if best.is_none_or(|b| (cand.start, cand.tx) < (b.start, b.tx)) {
                        best = Some(cand);
                    }
                    break;
                }
            }
        }
        best
    }

    fn try_lock(&mut self, node: usize, now: Nanos) -> Result<()> {
        if self.nodes[node].state != RadioState::Listening || self.nodes[node].anchor.is_some() {
            return Ok(());
        }
        let Some(anchor) = self.lockable(node) else {
            return Ok(());
        };
        let at = anchor.start.max(self.nodes[node].listen_since);
        if at > now {
            return self.queue.schedule(at, EventKind::PackletBoundary, node);
        }
        self.set_state(node, RadioState::Receiving, now)?;
        self.nodes[node].anchor = Some(anchor);
        self.queue
            .schedule(anchor.end + self.params.radio.t_d, EventKind::ReceptionEnd, node)
    }

    fn end_reception(&mut self, node: usize, now: Nanos) -> Result<()> {
        let anchor = self.nodes[node]
            .anchor
            .take()
            .ok_or(Error::Internal("reception ended without an anchor"))?;
        let params = self.params;
        let n = self.nodes.len();
        let expected = self.txs[anchor.tx].unit_bytes(&self.txs[anchor.tx].units[anchor.unit]);
        let heard: Vec<Heard<'_>> = self
            .links
            .inbound(node)
            .iter()
            .filter(|l| l.prr > 0.0)
            .flat_map(|l| self.tx_by_node[l.src].iter().map(move |&ti| (ti, l)))
            .map(|(ti, l)| Heard {
                tx: &self.txs[ti],
                prr: l.prr,
                propagation: l.propagation,
            })
            .collect();
        let verdict = deliverable_transmissions(&params.radio, params.rule, anchor.start, anchor.end, expected, &heard);
        let decoded = match verdict {
            Verdict::Receivable { success_prob, .. } => {
                let draw = unit_f64(&mut self.nodes[node].rng);
                if draw < success_prob {
                    decode_packlet(&params.packlet, expected)
                } else {
                    None
                }
            }
            _ => None,
        };

        // Outcome of every unit that took part in this reception.
        let window = params.radio.ci_window;
        let mark = if decoded.is_some() { DELIVERED } else { DROPPED };
        let mut touched = Vec::new();
        for l in self.links.inbound(node).iter().filter(|l| l.prr > 0.0) {
            for &ti in &self.tx_by_node[l.src] {
                for (ui, u) in self.txs[ti].units.iter().enumerate() {
                    let s = u.start + l.propagation;
                    let e = u.end + l.propagation;
                    if e.min(anchor.end) - s.max(anchor.start) > window {
                        touched.push((ti, ui));
                    }
                }
            }
        }
        for (ti, ui) in touched {
            let m = &mut self.marks[ti][ui * n + node];
            if *m == UNHEARD {
                *m = mark;
            }
        }

        self.set_state(node, RadioState::Listening, now)?;
        let info = params.info;
        let cmd = match decoded {
            Some(p) => {
                let trace = &mut self.traces[node];
                trace.rx_ok += 1;
                if trace.first_counter.is_none() {
                    trace.first_counter = Some(p.counter);
                    trace.first_rx_end = Some(now);
                }
                let rx = Received {
                    counter: p.counter,
                    frame_start: anchor.start,
                    sfd_time: anchor.start
                        + params.packlet.bytes_duration(params.packlet.preamble_len as usize + 1)
                        + params.radio.t_d,
                    now,
                };
                self.engines[node].on_receive(node, &info, &rx, &mut self.nodes[node].rng)
            }
            None => {
                self.traces[node].rx_failed += 1;
                self.engines[node].on_rx_failed(node, &info, now, &mut self.nodes[node].rng)
            }
        };
        self.apply(node, now, cmd)
    }
}
