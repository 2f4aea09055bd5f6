//! Glossy baseline: receive a packet, turn the radio around, retransmit
//! it with an incremented relay counter, and repeat until the node has
//! transmitted `n_tx` times.
//!
//! Relays free-run from their own reception timestamp, so timing errors
//! accumulate along the flood.

use rand_chacha::ChaCha8Rng;

use crate::codec::{packlet_duration, PackletConfig, SignalingPacket, TxMode};
use crate::error::{Error, Result};
use crate::radio::{
    apply_clock_model, uniform_symmetric, ClockProfile, RadioTimeline, RadioTimingParams, Transmission,
};
use crate::sim::engine::{Command, FloodEngine, Received, SlotInfo, SlotRole, Start};
use crate::time::Nanos;
use crate::whisper::signaling_transmission;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlossyConfig {
    /// Packet format; the payload is the 1-byte relay counter.
    pub packlet: PackletConfig,
    pub radio: RadioTimingParams,
    pub n_tx: u32,
    pub software_delay: Nanos,
    pub t_guard: Nanos,
    /// Radio-off timeout measured from wake-up when nothing is received.
    pub slot_timeout: Nanos,
    pub clock: ClockProfile,
}

impl Default for GlossyConfig {
    fn default() -> Self {
        GlossyConfig {
            packlet: PackletConfig::compliant(),
            radio: RadioTimingParams::default(),
            n_tx: 3,
            software_delay: Nanos::from_us(23),
            t_guard: Nanos::from_us(130),
            slot_timeout: Nanos::from_ms(5),
            clock: ClockProfile::COMPENSATED,
        }
    }
}

impl GlossyConfig {
    /// Glossy with the shorter 2-byte preamble.
    pub fn two_byte_preamble() -> Self {
        GlossyConfig {
            packlet: PackletConfig::default(),
            ..Self::default()
        }
    }

    pub fn t_packet(&self) -> Nanos {
        packlet_duration(&self.packlet)
    }

    /// Nominal time between the starts of two consecutive relay steps.
    pub fn step(&self) -> Nanos {
        self.t_packet() + self.radio.t_d + self.radio.t_turn + self.software_delay
    }

    pub fn validate(&self) -> Result<()> {
        self.packlet.validate()?;
        self.radio.validate()?;
        if self.packlet.payload_len != 1 {
            return Err(Error::InvalidConfig("Glossy payload is the 1-byte relay counter"));
        }
        if self.n_tx == 0 || self.n_tx > 127 {
            return Err(Error::InvalidConfig("n_tx must be in 1..=127"));
        }
        if self.software_delay < Nanos::ZERO || self.slot_timeout <= Nanos::ZERO {
            return Err(Error::InvalidConfig(
                "software delay must be non-negative and timeout positive",
            ));
        }
        Ok(())
    }
}

/// A Glossy packet carrying `relay_counter`, starting at `start`.
pub fn glossy_packet(config: &GlossyConfig, node: usize, relay_counter: u8, start: Nanos) -> Result<Transmission> {
    let packet = SignalingPacket::new(config.packlet, 1, relay_counter as u32, TxMode::Looping)?;
    Ok(signaling_transmission(node, start, &packet))
}

/// Retransmission scheduled after a reception that ended at `rx_end`.
pub fn glossy_on_receive(
    config: &GlossyConfig,
    clock: &ClockProfile,
    node: usize,
    relay_counter: u8,
    rx_end: Nanos,
    rng: &mut ChaCha8Rng,
) -> Result<Transmission> {
    let next = relay_counter.checked_add(1).ok_or(Error::CounterOverflow {
        start: relay_counter as u32,
        count: 1,
    })?;
    let delay = apply_clock_model(clock, config.software_delay, rng).max(Nanos::ZERO);
    glossy_packet(config, node, next, rx_end + config.radio.t_turn + delay)
}

/// Radio-on time of a completed slot: every non-Off interval.
pub fn glossy_radio_on(timeline: &RadioTimeline) -> Nanos {
    timeline.radio_on_time()
}

/// Per-node Glossy state machine.
#[derive(Debug, Clone, PartialEq)]
pub struct GlossyNode {
    pub config: GlossyConfig,
    /// This node's MCU clock; relays free-run on it.
    pub clock: ClockProfile,
    tx_count: u32,
    received: bool,
    deadline: Nanos,
}

impl GlossyNode {
    pub fn new(config: GlossyConfig) -> Self {
        GlossyNode::with_clock(config, config.clock)
    }

    pub fn with_clock(config: GlossyConfig, clock: ClockProfile) -> Self {
        GlossyNode {
            config,
            clock,
            tx_count: 0,
            received: false,
            deadline: Nanos::ZERO,
        }
    }

    /// Listening horizon after activity at `now`: long enough to hear the
    /// next step even if one step is missed.
    fn horizon(&self, now: Nanos) -> Nanos {
        now + self.config.step() * 3
    }

    fn listen(&self, now: Nanos) -> Command {
        if now >= self.deadline {
            Command::Off
        } else {
            Command::Listen { until: self.deadline }
        }
    }
}

impl FloodEngine for GlossyNode {
    fn begin_slot(&mut self, node: usize, slot: &SlotInfo, role: SlotRole, rng: &mut ChaCha8Rng) -> Start {
        self.tx_count = 0;
        self.received = false;
        match role {
            SlotRole::Sender { skew } => {
                let start = slot.t_star + skew + uniform_symmetric(rng, self.clock.jitter);
                self.received = true;
                match glossy_packet(&self.config, node, 0, start) {
                    Ok(tx) => Start::Transmit(tx),
                    Err(_) => Start::Sleep,
                }
            }
            SlotRole::Forwarder => {
                let from = slot.t_star - self.config.t_guard;
                self.deadline = from + self.config.slot_timeout;
                Start::Listen {
                    from,
                    until: self.deadline,
                }
            }
        }
    }

    fn on_receive(&mut self, node: usize, _slot: &SlotInfo, rx: &Received, rng: &mut ChaCha8Rng) -> Command {
        self.received = true;
        match glossy_on_receive(&self.config, &self.clock, node, rx.counter, rx.now, rng) {
            Ok(tx) => Command::Transmit(tx),
            Err(_) => Command::Off,
        }
    }

    fn on_rx_failed(&mut self, _node: usize, _slot: &SlotInfo, now: Nanos, _rng: &mut ChaCha8Rng) -> Command {
        self.listen(now)
    }

    fn on_deadline(&mut self, _node: usize, _slot: &SlotInfo, now: Nanos, _rng: &mut ChaCha8Rng) -> Command {
        self.listen(now)
    }

    fn on_tx_end(&mut self, _node: usize, _slot: &SlotInfo, now: Nanos, _rng: &mut ChaCha8Rng) -> Command {
        self.tx_count += 1;
        if self.tx_count >= self.config.n_tx {
            return Command::Off;
        }
        self.deadline = self.horizon(now);
        Command::ListenAfterTx { until: self.deadline }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_core::SeedableRng;

    #[test]
    fn retransmits_after_turnaround_and_software_delay() {
        let cfg = GlossyConfig {
            clock: ClockProfile::IDEAL,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = Nanos::from_ms(2);
        let tx = glossy_on_receive(&cfg, &ClockProfile::IDEAL, 3, 4, t, &mut rng).unwrap();
        assert_eq!(tx.start, t + Nanos::from_us(192 + 23));
        assert_eq!(tx.stream[cfg.packlet.preamble_len as usize + 2], 5);
        assert_eq!(tx.end - tx.start, Nanos::from_us(288));
    }

    #[test]
    fn step_length() {
        assert_eq!(GlossyConfig::default().step(), Nanos::from_us(288 + 3 + 192 + 23));
        assert_eq!(
            GlossyConfig::two_byte_preamble().step(),
            Nanos::from_us(224 + 3 + 192 + 23)
        );
    }

    #[test]
    fn validation() {
        assert!(GlossyConfig::default().validate().is_ok());
        let bad = GlossyConfig {
            n_tx: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let mut wide = GlossyConfig::default();
        wide.packlet.payload_len = 2;
        assert!(wide.validate().is_err());
    }
}
