//! Multi-slot experiments: sender schedules, idle slots, repetitions.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::codec::PackletConfig;
use crate::error::{Error, Result};
use crate::glossy::{GlossyConfig, GlossyNode};
use crate::radio::{CombiningRule, LinkModel, RadioTimingParams};
use crate::sim::engine::{FloodEngine, SlotInfo};
use crate::sim::metrics::{Accumulator, MetricsReport, RepetitionMetrics};
use crate::sim::rng::{repetition_seed, slot_seed};
use crate::sim::slot::{run_slot, SlotParams, SlotTrace};
use crate::sim::topology::{compute_diameter, hop_distances, DEFAULT_HOP_THRESHOLD};
use crate::time::Nanos;
use crate::whisper::{Sampling, SamplingState, Variant, WhisperConfig, WhisperNode};

/// Nominal sender start within every simulated slot.
pub const T_STAR: Nanos = Nanos::from_ms(1);

/// Slots the sink spends announcing itself before collection starts.
pub const REVERSE_INIT_SLOTS: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Whisper,
    WhisperLazy,
    WhisperCompliant,
    Glossy,
    Glossy2b,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Whisper,
        Protocol::WhisperLazy,
        Protocol::WhisperCompliant,
        Protocol::Glossy,
        Protocol::Glossy2b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Whisper => "whisper",
            Protocol::WhisperLazy => "whisper-lazy",
            Protocol::WhisperCompliant => "whisper-compliant",
            Protocol::Glossy => "glossy",
            Protocol::Glossy2b => "glossy-2b",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Protocol::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn config(self) -> ProtocolConfig {
        match self {
            Protocol::Whisper => ProtocolConfig::Whisper(WhisperConfig::default()),
            Protocol::WhisperLazy => ProtocolConfig::Whisper(WhisperConfig::lazy()),
            Protocol::WhisperCompliant => ProtocolConfig::Whisper(WhisperConfig::compliant()),
            Protocol::Glossy => ProtocolConfig::Glossy(GlossyConfig::default()),
            Protocol::Glossy2b => ProtocolConfig::Glossy(GlossyConfig::two_byte_preamble()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolConfig {
    Whisper(WhisperConfig),
    Glossy(GlossyConfig),
}

impl ProtocolConfig {
    pub fn packlet(&self) -> PackletConfig {
        match self {
            ProtocolConfig::Whisper(c) => c.packlet,
            ProtocolConfig::Glossy(c) => c.packlet,
        }
    }

    pub fn radio(&self) -> RadioTimingParams {
        match self {
            ProtocolConfig::Whisper(c) => c.radio,
            ProtocolConfig::Glossy(c) => c.radio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProtocolConfig::Whisper(c) => c.validate(),
            ProtocolConfig::Glossy(c) => c.validate(),
        }
    }

    fn slot_info(&self, signaling: bool) -> SlotInfo {
        let length = match self {
            ProtocolConfig::Whisper(c) => c.t_slot,
            ProtocolConfig::Glossy(c) => c.slot_timeout,
        };
        SlotInfo {
            t_star: T_STAR,
            slot_end: T_STAR + length,
            signaling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SenderPlan {
    /// The same sender set initiates every flood.
    Fixed(Vec<usize>),
    /// Senders take turns, each for `period` consecutive floods.
    Rotate { senders: Vec<usize>, period: u64 },
    /// All senders initiate concurrently; only the sink's reception counts.
    Collection { senders: Vec<usize>, sink: usize },
}

impl SenderPlan {
    fn senders_for(&self, flood: u64) -> Vec<usize> {
        match self {
            SenderPlan::Fixed(s) | SenderPlan::Collection { senders: s, .. } => s.clone(),
            SenderPlan::Rotate { senders, period } => {
                let idx = (flood / (*period).max(1)) as usize % senders.len();
                vec![senders[idx]]
            }
        }
    }

    fn receivers(&self, senders: &[usize], n_nodes: usize) -> Vec<usize> {
        match self {
            SenderPlan::Collection { sink, .. } => vec![*sink],
            _ => (0..n_nodes).filter(|n| !senders.contains(n)).collect(),
        }
    }

    fn all_senders(&self) -> &[usize] {
        match self {
            SenderPlan::Fixed(s) => s,
            SenderPlan::Rotate { senders, .. } | SenderPlan::Collection { senders, .. } => senders,
        }
    }

    fn is_rotation_boundary(&self, flood: u64) -> bool {
        matches!(self, SenderPlan::Rotate { period, .. } if flood > 0 && flood.is_multiple_of((*period).max(1)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub protocol: ProtocolConfig,
    pub plan: SenderPlan,
    pub n_floods: u64,
    /// Slots without any sender, spread evenly between the floods.
    pub idle_slots: u64,
    pub n_repetitions: u64,
    pub seed: u64,
    pub rule: CombiningRule,
    /// Residual start offset bound of concurrent initiators.
    pub sender_skew: Nanos,
}

/// Concurrent initiators are not synchronized to within the alignment
/// window: two of them start up to a microsecond apart.
pub const DEFAULT_SENDER_SKEW: Nanos = Nanos(500);

impl Scenario {
    pub fn new(protocol: ProtocolConfig, plan: SenderPlan) -> Self {
        Scenario {
            protocol,
            plan,
            n_floods: 1,
            idle_slots: 0,
            n_repetitions: 1,
            seed: 0,
            rule: CombiningRule::default(),
            sender_skew: DEFAULT_SENDER_SKEW,
        }
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        self.protocol.validate()?;
        if self.n_floods == 0 {
            return Err(Error::InvalidConfig("at least one flood required"));
        }
        let senders = self.plan.all_senders();
        if senders.is_empty() {
            return Err(Error::InvalidConfig("sender set is empty"));
        }
        if let Some(&bad) = senders.iter().find(|&&s| s >= n_nodes) {
            return Err(Error::UnknownNode(bad));
        }
        if let SenderPlan::Collection { sink, .. } = self.plan {
            if sink >= n_nodes {
                return Err(Error::UnknownNode(sink));
            }
        }
        Ok(())
    }
}

/// Whether slot `slot` out of `total` is one of the `idle` idle slots,
/// spread evenly.
pub fn is_idle_slot(slot: u64, total: u64, idle: u64) -> bool {
    if total == 0 {
        return false;
    }
    let before = (slot as u128 * idle as u128) / total as u128;
    let after = ((slot as u128 + 1) * idle as u128) / total as u128;
    after > before
}

/// Hop distance of every node from the nearest of `senders`.
pub fn hops_from(links: &LinkModel, senders: &[usize]) -> Result<Vec<Option<u32>>> {
    let mut best = vec![None; links.n_nodes()];
    for &s in senders {
        for (b, h) in best.iter_mut().zip(hop_distances(links, s, DEFAULT_HOP_THRESHOLD)?) {
            *b = match (*b, h) {
                (Some(x), Some(y)) => Some(core::cmp::min(x, y)),
                (x, y) => x.or(y),
            };
        }
    }
    Ok(best)
}

/// Engine hooks the experiment runner needs beyond slot execution.
pub trait ExperimentEngine: FloodEngine {
    /// Forget learned state when the flood source changes.
    fn reset_epoch(&mut self) {}
}

impl ExperimentEngine for WhisperNode {
    fn reset_epoch(&mut self) {
        self.sampling.reset_epoch();
    }
}

impl ExperimentEngine for GlossyNode {}

/// Hop distance implied by the first counter a node receives.
pub fn hops_from_counter(variant: Variant, counter: u8) -> u32 {
    match variant {
        Variant::Standard => counter as u32 / 2 + 1,
        Variant::Compliant => (counter as u32).saturating_sub(1) / 3 + 1,
    }
}

fn counter_at_hop(variant: Variant, hop: u32) -> u8 {
    let h = hop.max(1) - 1;
    let c = match variant {
        Variant::Standard => 2 * h,
        Variant::Compliant => 3 * h + 1,
    };
    c.min(u8::MAX as u32) as u8
}

/// Learns every node's hop distance to `sink` from five sink-initiated
/// slots and installs the reversed wake-up schedule for collection.
///
/// Returns the hop estimates; nodes that heard nothing get `None` and fall
/// back to lazy sampling.
pub fn reverse_initialization(
    links: &LinkModel,
    sink: usize,
    nodes: &mut [WhisperNode],
    rule: CombiningRule,
    rep_seed: u64,
) -> Result<Vec<Option<u32>>> {
    let cfg = nodes
        .first()
        .map(|n| n.config)
        .ok_or(Error::InvalidConfig("no nodes"))?;
    let d_net = compute_diameter(links, sink, DEFAULT_HOP_THRESHOLD)?.d_net;
    let mut probes: Vec<WhisperNode> = nodes.iter().map(|n| WhisperNode::new(n.config)).collect();
    let mut c_min: Vec<Option<u8>> = vec![None; nodes.len()];
    c_min[sink] = Some(0);
    let params = SlotParams {
        info: ProtocolConfig::Whisper(cfg).slot_info(true),
        radio: cfg.radio,
        packlet: cfg.packlet,
        rule,
        sender_skew: Nanos::ZERO,
    };
    for k in 0..REVERSE_INIT_SLOTS {
        let trace = run_slot(links, &mut probes, &[sink], &params, slot_seed(rep_seed, u64::MAX - k))?;
        for (seen, node) in c_min.iter_mut().zip(&trace.nodes) {
            if let Some(c) = node.first_counter {
                *seen = Some(seen.map_or(c, |s| s.min(c)));
            }
        }
    }
    let estimates: Vec<Option<u32>> = c_min
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i == sink {
                Some(0)
            } else {
                c.map(|c| hops_from_counter(cfg.variant, c))
            }
        })
        .collect();
    for (node, est) in nodes.iter_mut().zip(&estimates) {
        match est {
            Some(h) => {
                let from_senders = d_net.saturating_sub(*h);
                node.sampling = SamplingState::seeded(counter_at_hop(cfg.variant, from_senders));
                node.learn = false;
                node.force_lazy = false;
            }
            None => node.force_lazy = true,
        }
    }
    Ok(estimates)
}

/// One repetition of a scenario on `links`.
pub fn run_repetition(scenario: &Scenario, links: &LinkModel, repetition: u64) -> Result<RepetitionMetrics> {
    scenario.validate(links.n_nodes())?;
    let rep_seed = repetition_seed(scenario.seed, repetition);
    match scenario.protocol {
        ProtocolConfig::Whisper(cfg) => {
            let mut nodes: Vec<WhisperNode> = (0..links.n_nodes()).map(|_| WhisperNode::new(cfg)).collect();
            if let SenderPlan::Collection { sink, .. } = scenario.plan {
                if cfg.sampling == Sampling::DirectionAware {
                    reverse_initialization(links, sink, &mut nodes, scenario.rule, rep_seed)?;
                }
            }
            run_slots(scenario, links, &mut nodes, rep_seed)
        }
        ProtocolConfig::Glossy(cfg) => {
            let mut nodes: Vec<GlossyNode> = (0..links.n_nodes()).map(|_| GlossyNode::new(cfg)).collect();
            run_slots(scenario, links, &mut nodes, rep_seed)
        }
    }
}

fn run_slots<E: ExperimentEngine>(
    scenario: &Scenario,
    links: &LinkModel,
    engines: &mut [E],
    rep_seed: u64,
) -> Result<RepetitionMetrics> {
    let n = links.n_nodes();
    let mut acc = Accumulator::new(n);
    let mut hop_cache: BTreeMap<Vec<usize>, Vec<Option<u32>>> = BTreeMap::new();
    let base = SlotParams {
        info: scenario.protocol.slot_info(true),
        radio: scenario.protocol.radio(),
        packlet: scenario.protocol.packlet(),
        rule: scenario.rule,
        sender_skew: scenario.sender_skew,
    };
    let idle_params = SlotParams {
        info: scenario.protocol.slot_info(false),
        ..base
    };
    let total = scenario.n_floods + scenario.idle_slots;
    let mut flood = 0u64;
    for slot in 0..total {
        let seed = slot_seed(rep_seed, slot);
        if is_idle_slot(slot, total, scenario.idle_slots) {
            let trace = run_slot(links, engines, &[], &idle_params, seed)?;
            acc.add_idle_slot(&trace);
            continue;
        }
        if scenario.plan.is_rotation_boundary(flood) {
            engines.iter_mut().for_each(E::reset_epoch);
        }
        let senders = scenario.plan.senders_for(flood);
        let trace: SlotTrace = run_slot(links, engines, &senders, &base, seed)?;
        if !hop_cache.contains_key(&senders) {
            let hops = hops_from(links, &senders)?;
            hop_cache.insert(senders.clone(), hops);
        }
        let receivers = scenario.plan.receivers(&senders, n);
        acc.add_signal_slot(&trace, &receivers, &hop_cache[&senders]);
        flood += 1;
    }
    let first = scenario.plan.senders_for(0);
    Ok(acc.finish(&hops_from(links, &first)?))
}

/// All repetitions, sequentially, in repetition order.
pub fn run_experiment(scenario: &Scenario, links: &LinkModel) -> Result<MetricsReport> {
    let reps = (0..scenario.n_repetitions.max(1))
        .map(|r| run_repetition(scenario, links, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport::from_repetitions(reps))
}
