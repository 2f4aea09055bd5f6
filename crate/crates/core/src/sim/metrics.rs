//! Per-node and network metrics aggregated over slots and repetitions.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::sim::slot::SlotTrace;

/// Running sums for one node over one repetition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeAccumulator {
    /// Signaling slots in which the node was a receiver.
    pub expected: u64,
    pub received: u64,
    pub signal_slots: u64,
    pub radio_on_signal: i128,
    pub idle_slots: u64,
    pub radio_on_idle: i128,
    pub rx_ok: u64,
    pub rx_failed: u64,
    pub frames_in_range: u64,
    pub frames_dropped: u64,
    pub first_counter_sum: u64,
    pub first_counter_n: u64,
}

/// Collects slot traces into per-node sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Accumulator {
    pub nodes: Vec<NodeAccumulator>,
    /// `(hop, first counter) -> count`.
    pub hop_counters: BTreeMap<(u32, u8), u64>,
}

impl Accumulator {
    pub fn new(n_nodes: usize) -> Self {
        Accumulator {
            nodes: alloc::vec![NodeAccumulator::default(); n_nodes],
            hop_counters: BTreeMap::new(),
        }
    }

    /// Adds a signaling slot. `receivers` are the nodes whose reliability
    /// counts in this slot; `hops` their distance from the senders.
    pub fn add_signal_slot(&mut self, trace: &SlotTrace, receivers: &[usize], hops: &[Option<u32>]) {
        for (acc, node) in self.nodes.iter_mut().zip(&trace.nodes) {
            acc.signal_slots += 1;
            acc.radio_on_signal += node.radio_on().as_ns() as i128;
            acc.rx_ok += node.rx_ok as u64;
            acc.rx_failed += node.rx_failed as u64;
            acc.frames_in_range += node.frames_in_range as u64;
            acc.frames_dropped += node.frames_dropped as u64;
        }
        for &r in receivers {
            let node = &trace.nodes[r];
            let acc = &mut self.nodes[r];
            acc.expected += 1;
            if let Some(c) = node.first_counter {
                acc.received += 1;
                acc.first_counter_sum += c as u64;
                acc.first_counter_n += 1;
                if let Some(h) = hops[r] {
                    *self.hop_counters.entry((h, c)).or_insert(0) += 1;
                }
            }
        }
    }

    pub fn add_idle_slot(&mut self, trace: &SlotTrace) {
        for (acc, node) in self.nodes.iter_mut().zip(&trace.nodes) {
            acc.idle_slots += 1;
            acc.radio_on_idle += node.radio_on().as_ns() as i128;
        }
    }

    pub fn finish(&self, hops: &[Option<u32>]) -> RepetitionMetrics {
        let nodes: Vec<NodeMetrics> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, a)| NodeMetrics {
                node: i,
                hop: hops.get(i).copied().flatten(),
                reliability: ratio(a.received, a.expected),
                radio_on_signal_ms: mean_ms(a.radio_on_signal, a.signal_slots),
                radio_on_idle_ms: mean_ms(a.radio_on_idle, a.idle_slots),
                dropped_fraction: ratio(a.frames_dropped, a.frames_in_range),
                mean_first_counter: ratio(a.first_counter_sum, a.first_counter_n),
            })
            .collect();
        let reliabilities: Vec<f64> = nodes.iter().filter_map(|n| n.reliability).collect();
        let signal: Vec<f64> = nodes.iter().filter_map(|n| n.radio_on_signal_ms).collect();
        let idle: Vec<f64> = nodes.iter().filter_map(|n| n.radio_on_idle_ms).collect();
        let (in_range, dropped) = self
            .nodes
            .iter()
            .fold((0, 0), |(r, d), a| (r + a.frames_in_range, d + a.frames_dropped));
        let mut per_hop: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
        for (&(h, c), &n) in &self.hop_counters {
            let e = per_hop.entry(h).or_insert((0, 0));
            e.0 += c as u64 * n;
            e.1 += n;
        }
        RepetitionMetrics {
            network_reliability: mean(&reliabilities),
            radio_on_signal_ms: mean(&signal),
            radio_on_idle_ms: mean(&idle),
            dropped_fraction: ratio(dropped, in_range),
            hop_mean_counter: per_hop
                .into_iter()
                .map(|(h, (s, n))| (h, s as f64 / n as f64))
                .collect(),
            hop_counters: self.hop_counters.clone(),
            nodes,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn mean_ms(sum_ns: i128, n: u64) -> Option<f64> {
    (n > 0).then(|| sum_ns as f64 / n as f64 / 1e6)
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeMetrics {
    pub node: usize,
    pub hop: Option<u32>,
    /// `None` if the node never was a receiver.
    pub reliability: Option<f64>,
    pub radio_on_signal_ms: Option<f64>,
    pub radio_on_idle_ms: Option<f64>,
    pub dropped_fraction: Option<f64>,
    pub mean_first_counter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionMetrics {
    pub nodes: Vec<NodeMetrics>,
    /// Mean of the per-node reliabilities.
    pub network_reliability: Option<f64>,
    pub radio_on_signal_ms: Option<f64>,
    pub radio_on_idle_ms: Option<f64>,
    /// Neighbour frames lost in failed receptions over neighbour frames sent.
    pub dropped_fraction: Option<f64>,
    pub hop_counters: BTreeMap<(u32, u8), u64>,
    pub hop_mean_counter: BTreeMap<u32, f64>,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Stat> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            libm::sqrt(v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64)
        } else {
            0.0
        };
        Some(Stat { mean, std, n })
    }
}

/// Aggregate over repetitions, in repetition order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub repetitions: Vec<RepetitionMetrics>,
    pub network_reliability: Option<Stat>,
    pub radio_on_signal_ms: Option<Stat>,
    pub radio_on_idle_ms: Option<Stat>,
    pub dropped_fraction: Option<Stat>,
    /// Per-node values averaged over repetitions.
    pub nodes: Vec<NodeMetrics>,
}

impl MetricsReport {
    pub fn from_repetitions(repetitions: Vec<RepetitionMetrics>) -> Self {
        let stat = |f: fn(&RepetitionMetrics) -> Option<f64>| Stat::of(repetitions.iter().filter_map(f));
        let n_nodes = repetitions.first().map_or(0, |r| r.nodes.len());
        let nodes = (0..n_nodes)
            .map(|i| {
                let avg = |f: fn(&NodeMetrics) -> Option<f64>| {
                    Stat::of(repetitions.iter().filter_map(|r| f(&r.nodes[i]))).map(|s| s.mean)
                };
                NodeMetrics {
                    node: i,
                    hop: repetitions[0].nodes[i].hop,
                    reliability: avg(|n| n.reliability),
                    radio_on_signal_ms: avg(|n| n.radio_on_signal_ms),
                    radio_on_idle_ms: avg(|n| n.radio_on_idle_ms),
                    dropped_fraction: avg(|n| n.dropped_fraction),
                    mean_first_counter: avg(|n| n.mean_first_counter),
                }
            })
            .collect();
        MetricsReport {
            network_reliability: stat(|r| r.network_reliability),
            radio_on_signal_ms: stat(|r| r.radio_on_signal_ms),
            radio_on_idle_ms: stat(|r| r.radio_on_idle_ms),
            dropped_fraction: stat(|r| r.dropped_fraction),
            nodes,
            repetitions,
        }
    }

    /// Mean first counter per hop, pooled over repetitions.
    pub fn hop_mean_counter(&self) -> BTreeMap<u32, f64> {
        let mut pooled: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
        for r in &self.repetitions {
            for (&(h, c), &n) in &r.hop_counters {
                let e = pooled.entry(h).or_insert((0, 0));
                e.0 += c as u64 * n;
                e.1 += n;
            }
        }
        pooled.into_iter().map(|(h, (s, n))| (h, s as f64 / n as f64)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats() {
        let s = Stat::of([1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.std - 1.0).abs() < 1e-12);
        assert_eq!(Stat::of([5.0]).unwrap().std, 0.0);
        assert!(Stat::of([]).is_none());
    }
}
