//! Gap-free flooding with packlet trains.
//!
//! A sender transmits one signaling packet made of `n_tx` packlets. A node
//! that decodes packlet `c` turns its radio around while packlet `c + 1`
//! is on air and joins the train at packlet `c + 2`, aligned to the
//! sender's packlet grid, so every packlet on air at a given instant is
//! byte-identical. Nodes decide when to listen either lazily (whole slot)
//! or from the counters they have learned in earlier floods.

use rand_chacha::ChaCha8Rng;

use crate::codec::{packlet_duration, PackletConfig, SignalingPacket, TxMode};
use crate::error::{Error, Result};
use crate::radio::{apply_clock_model, uniform_symmetric, ClockProfile, RadioTimingParams, Transmission, Unit};
use crate::sim::engine::{Command, FloodEngine, Received, SlotInfo, SlotRole, Start};
use crate::time::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sampling {
    /// Listen from the start of the slot until something arrives.
    Lazy,
    /// Listen only around the learned counter range.
    DirectionAware,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// TXFIFO looping: every length field is a packlet length.
    Standard,
    /// Buffered mode: each node's first length field collides with the
    /// packlets already on air.
    Compliant,
}

impl Variant {
    pub fn tx_mode(self) -> TxMode {
        match self {
            Variant::Standard => TxMode::Looping,
            Variant::Compliant => TxMode::Buffered,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopPolicy {
    /// Every node sends exactly `n_tx` packlets.
    AfterNtx,
    /// Every node stops when the sender's `n_tx` packlets are over, so
    /// all trailing footers line up.
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhisperConfig {
    pub packlet: PackletConfig,
    pub radio: RadioTimingParams,
    pub n_tx: u32,
    pub t_guard: Nanos,
    pub t_slot: Nanos,
    pub sampling: Sampling,
    /// Counter margin for the c_max outlier rule.
    pub delta_c: u32,
    pub variant: Variant,
    pub stop: StopPolicy,
    /// Radio-off timeout measured from wake-up when nothing is received.
    pub timeout: Option<Nanos>,
    pub clock: ClockProfile,
}

impl Default for WhisperConfig {
    fn default() -> Self {
        WhisperConfig {
            packlet: PackletConfig::default(),
            radio: RadioTimingParams::default(),
            n_tx: 3,
            t_guard: Nanos::from_us(130),
            t_slot: Nanos::from_ms(5),
            sampling: Sampling::DirectionAware,
            delta_c: 2,
            variant: Variant::Standard,
            stop: StopPolicy::AfterNtx,
            timeout: Some(Nanos::from_ms(5)),
            clock: ClockProfile::COMPENSATED,
        }
    }
}

impl WhisperConfig {
    pub fn lazy() -> Self {
        WhisperConfig {
            sampling: Sampling::Lazy,
            ..Self::default()
        }
    }

    /// 4-byte preamble, buffered mode, lazy sampling, 14 packlets and a
    /// simultaneous stop.
    pub fn compliant() -> Self {
        WhisperConfig {
            packlet: PackletConfig::compliant(),
            n_tx: 14,
            sampling: Sampling::Lazy,
            variant: Variant::Compliant,
            stop: StopPolicy::Simultaneous,
            ..Self::default()
        }
    }

    pub fn t_packlet(&self) -> Nanos {
        packlet_duration(&self.packlet)
    }

    pub fn validate(&self) -> Result<()> {
        self.packlet.validate()?;
        self.radio.validate()?;
        if self.n_tx == 0 || self.n_tx > 256 {
            return Err(Error::InvalidConfig("n_tx must be in 1..=256"));
        }
        if self.t_slot <= Nanos::ZERO || self.t_guard < Nanos::ZERO {
            return Err(Error::InvalidConfig("t_slot must be positive and t_guard non-negative"));
        }
        compute_wait(self.t_packlet(), self.radio.t_turn, self.radio.t_d)?;
        Ok(())
    }

    /// Whether `t_slot` is too short for a network of diameter `d_net`.
    pub fn slot_too_short(&self, d_net: u32) -> bool {
        self.t_slot < compute_t_slot(d_net, self.n_tx, self.t_packlet())
    }

    /// Start of packlet `counter` on the sender's grid.
    pub fn grid(&self, t_star: Nanos, counter: u32) -> Nanos {
        t_star + self.t_packlet() * counter as i64
    }
}

/// Slot length needed to flood a network of diameter `d_net`:
/// `(2 * d_net + n_tx) * t_packlet`.
pub fn compute_t_slot(d_net: u32, n_tx: u32, t_packlet: Nanos) -> Nanos {
    t_packlet * (2 * d_net as i64 + n_tx as i64)
}

/// Time a relay waits after its turnaround so its first SFD lands on the
/// sender's grid: `t_packlet - t_turn - t_d`.
pub fn compute_wait(t_packlet: Nanos, t_turn: Nanos, t_d: Nanos) -> Result<Nanos> {
    let wait = t_packlet - t_turn - t_d;
    if wait <= Nanos::ZERO {
        return Err(Error::PackletTooShort {
            packlet: t_packlet,
            turn: t_turn,
            data_delay: t_d,
        });
    }
    Ok(wait)
}

/// A wait shorter than the data delay leaves almost no slack for the MCU
/// to schedule the transmission.
pub fn wait_is_fragile(wait: Nanos, t_d: Nanos) -> bool {
    wait < t_d
}

/// Learned counter range for direction-aware sampling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SamplingState {
    pub c_min: u8,
    pub c_max: u8,
    sum: u64,
    n_obs: u64,
}

impl SamplingState {
    /// State after observing `counter` once.
    pub fn seeded(counter: u8) -> Self {
        SamplingState {
            c_min: counter,
            c_max: counter,
            sum: counter as u64,
            n_obs: 1,
        }
    }

    /// State with an explicit history, mostly for tests.
    pub fn from_history(c_min: u8, c_max: u8, sum: u64, n_obs: u64) -> Self {
        SamplingState {
            c_min,
            c_max,
            sum,
            n_obs,
        }
    }

    pub fn initialized(&self) -> bool {
        self.n_obs > 0
    }

    pub fn n_obs(&self) -> u64 {
        self.n_obs
    }

    pub fn c_avg(&self) -> f64 {
        if self.n_obs == 0 {
            0.0
        } else {
            self.sum as f64 / self.n_obs as f64
        }
    }

    fn ceil_avg(&self) -> u8 {
        self.sum.div_ceil(self.n_obs) as u8
    }

    /// Forget everything learned, e.g. after a topology change.
    pub fn reset_epoch(&mut self) {
        *self = SamplingState::default();
    }
}

/// Integrates a newly received counter.
///
/// `c_min` tracks the minimum ever seen. `c_max` follows the running mean
/// (rounded up) unless the new counter is an outlier at least `delta_c`
/// above it, in which case `c_max` jumps to the new counter.
pub fn update_sampling(state: SamplingState, c_new: u8, delta_c: u32) -> SamplingState {
    if !state.initialized() {
        return SamplingState::seeded(c_new);
    }
    let sum = state.sum + c_new as u64;
    let n_obs = state.n_obs + 1;
    let mut next = SamplingState {
        c_min: state.c_min.min(c_new),
        c_max: 0,
        sum,
        n_obs,
    };
    // c_new >= sum / n + delta  <=>  c_new * n >= sum + delta * n
    next.c_max = if c_new as u64 * n_obs >= sum + delta_c as u64 * n_obs {
        c_new
    } else {
        next.ceil_avg()
    };
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingWindow {
    pub start: Nanos,
    pub duration: Nanos,
}

impl SamplingWindow {
    pub fn end(&self) -> Nanos {
        self.start + self.duration
    }
}

/// When to switch the radio on and for how long, given the expected
/// sender start `t_star`. Windows never extend past the slot end.
pub fn sampling_window(state: &SamplingState, config: &WhisperConfig, t_star: Nanos) -> SamplingWindow {
    let tp = config.t_packlet();
    let (start, duration) = match config.sampling {
        Sampling::DirectionAware if state.initialized() => {
            let lead = (state.c_min as i64 - 1).max(0);
            let span = (config.n_tx as i64).max(state.c_max as i64);
            (t_star - config.t_guard + tp * lead, config.t_guard + tp * span)
        }
        _ => (t_star - config.t_guard, config.t_guard + config.t_slot),
    };
    let slot_end = t_star + config.t_slot;
    let duration = duration.min((slot_end - start).max(Nanos::ZERO));
    SamplingWindow { start, duration }
}

/// Expected end of reception of packlet `c_max + n_tx + 1`: the latest a
/// direction-aware node keeps listening once it has heard activity.
pub fn listen_cutoff(state: &SamplingState, config: &WhisperConfig, t_star: Nanos) -> Nanos {
    let last = state.c_max as u32 + config.n_tx + 1;
    config.grid(t_star, last + 1) + config.radio.t_d
}

/// Builds the on-air image of a signaling packet starting at `start`.
pub fn signaling_transmission(node: usize, start: Nanos, packet: &SignalingPacket) -> Transmission {
    let stream = packet.encode();
    let size = packet.config.packlet_size_bytes();
    let tp = packlet_duration(&packet.config);
    let units = (0..packet.n_tx as usize)
        .map(|k| Unit {
            start: start + tp * k as i64,
            end: start + tp * (k as i64 + 1),
            bytes: k * size..(k + 1) * size,
        })
        .collect();
    Transmission {
        node,
        start,
        end: start + packet.duration(),
        stream,
        units,
    }
}

/// The sender's signaling packet, starting at `start`.
pub fn initiate_flood(config: &WhisperConfig, node: usize, start: Nanos) -> Result<Transmission> {
    let packet = SignalingPacket::new(config.packlet, config.n_tx, 0, config.variant.tx_mode())?;
    Ok(signaling_transmission(node, start, &packet))
}

/// The packet a node relays after decoding `c_received`, or `None` if the
/// train is already over by the time it could join.
pub fn relay_packet(config: &WhisperConfig, c_received: u8) -> Result<Option<SignalingPacket>> {
    let start = c_received as u32 + 2;
    let count = match config.stop {
        StopPolicy::AfterNtx => config.n_tx,
        StopPolicy::Simultaneous => config.n_tx.saturating_sub(start),
    };
    if count == 0 {
        return Ok(None);
    }
    SignalingPacket::new(config.packlet, count, start, config.variant.tx_mode()).map(Some)
}

/// First SFD of a relay that decoded `c_received`, whose reception ended
/// at `rx_end`: nominally the grid slot of `c_received + 2`, reached via
/// turnaround plus a clock-perturbed wait from the nominal reception end.
pub fn relay_start(
    config: &WhisperConfig,
    t_star: Nanos,
    c_received: u8,
    rx_end: Nanos,
    rng: &mut ChaCha8Rng,
) -> Result<Nanos> {
    let tp = config.t_packlet();
    let wait = compute_wait(tp, config.radio.t_turn, config.radio.t_d)?;
    let nominal_rx_end = config.grid(t_star, c_received as u32) + tp + config.radio.t_d;
    let start = nominal_rx_end + config.radio.t_turn + apply_clock_model(&config.clock, wait, rng);
    Ok(start.max(rx_end + config.radio.t_turn))
}

/// Per-node Whisper state machine.
#[derive(Debug, Clone, PartialEq)]
pub struct WhisperNode {
    pub config: WhisperConfig,
    pub sampling: SamplingState,
    /// Set when a node could not learn its position and must fall back to
    /// lazy sampling.
    pub force_lazy: bool,
    /// Whether received counters keep refining the sampling state.
    pub learn: bool,
    deadline: Nanos,
    extended: bool,
}

impl WhisperNode {
    pub fn new(config: WhisperConfig) -> Self {
        WhisperNode {
            config,
            sampling: SamplingState::default(),
            force_lazy: false,
            learn: true,
            deadline: Nanos::ZERO,
            extended: false,
        }
    }

    fn effective_config(&self) -> WhisperConfig {
        if self.force_lazy {
            WhisperConfig {
                sampling: Sampling::Lazy,
                ..self.config
            }
        } else {
            self.config
        }
    }
}

impl FloodEngine for WhisperNode {
    fn begin_slot(&mut self, node: usize, slot: &SlotInfo, role: SlotRole, rng: &mut ChaCha8Rng) -> Start {
        self.extended = false;
        match role {
            SlotRole::Sender { skew } => {
                let start = slot.t_star + skew + uniform_symmetric(rng, self.config.clock.jitter);
                match initiate_flood(&self.config, node, start) {
                    Ok(tx) => Start::Transmit(tx),
                    Err(_) => Start::Sleep,
                }
            }
            SlotRole::Forwarder => {
                let cfg = self.effective_config();
                let window = sampling_window(&self.sampling, &cfg, slot.t_star);
                let mut until = window.end().min(slot.slot_end);
                if let Some(timeout) = cfg.timeout {
                    until = until.min(window.start + timeout);
                }
                self.deadline = until;
                if until <= window.start {
                    return Start::Sleep;
                }
                Start::Listen {
                    from: window.start,
                    until,
                }
            }
        }
    }

    fn on_receive(&mut self, node: usize, slot: &SlotInfo, rx: &Received, rng: &mut ChaCha8Rng) -> Command {
        if self.learn {
            self.sampling = update_sampling(self.sampling, rx.counter, self.config.delta_c);
        }
        let packet = match relay_packet(&self.config, rx.counter) {
            Ok(Some(p)) => p,
            _ => return Command::Off,
        };
        match relay_start(&self.config, slot.t_star, rx.counter, rx.now, rng) {
            Ok(start) => Command::Transmit(signaling_transmission(node, start, &packet)),
            Err(_) => Command::Off,
        }
    }

    fn on_rx_failed(&mut self, _node: usize, slot: &SlotInfo, now: Nanos, _rng: &mut ChaCha8Rng) -> Command {
        let cfg = self.effective_config();
        if cfg.sampling == Sampling::DirectionAware && self.sampling.initialized() && !self.extended {
            self.extended = true;
            let cutoff = listen_cutoff(&self.sampling, &cfg, slot.t_star).min(slot.slot_end);
            self.deadline = self.deadline.max(cutoff);
        }
        if now >= self.deadline {
            Command::Off
        } else {
            Command::Listen { until: self.deadline }
        }
    }

    fn on_deadline(&mut self, _node: usize, _slot: &SlotInfo, now: Nanos, _rng: &mut ChaCha8Rng) -> Command {
        if now >= self.deadline {
            Command::Off
        } else {
            Command::Listen { until: self.deadline }
        }
    }

    fn on_tx_end(&mut self, _node: usize, _slot: &SlotInfo, _now: Nanos, _rng: &mut ChaCha8Rng) -> Command {
        Command::Off
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_core::SeedableRng;

    const TP: Nanos = Nanos::from_us(224);

    #[test]
    fn slot_length() {
        assert_eq!(compute_t_slot(6, 3, TP), Nanos::from_us(3_360));
        assert_eq!(compute_t_slot(1, 1, TP), TP * 3);
        assert_eq!(compute_t_slot(4, 3, TP), Nanos::from_us(2_464));
    }

    #[test]
    fn wait_time() {
        let (turn, td) = (Nanos::from_us(192), Nanos::from_us(3));
        assert_eq!(compute_wait(TP, turn, td), Ok(Nanos::from_us(29)));
        assert_eq!(compute_wait(Nanos::from_us(288), turn, td), Ok(Nanos::from_us(93)));
        let tight = compute_wait(Nanos::from_us(196), turn, td).unwrap();
        assert_eq!(tight, Nanos::from_us(1));
        assert!(wait_is_fragile(tight, td));
        assert!(!wait_is_fragile(Nanos::from_us(29), td));
        assert!(compute_wait(Nanos::from_us(195), turn, td).is_err());
    }

    #[test]
    fn sampling_updates() {
        let s = update_sampling(SamplingState::default(), 4, 2);
        assert_eq!((s.c_min, s.c_max, s.c_avg()), (4, 4, 4.0));

        let steady = SamplingState::from_history(4, 4, 12, 3);
        let s = update_sampling(steady, 4, 2);
        assert_eq!((s.c_min, s.c_max), (4, 4));

        let s = update_sampling(steady, 7, 2);
        assert_eq!(s.c_max, 7);
        assert_eq!(s.c_min, 4);

        // 5 is not an outlier: mean 17/4 = 4.25 rounds up to 5.
        let s = update_sampling(steady, 5, 2);
        assert_eq!(s.c_max, 5);
        let s = update_sampling(s, 4, 2);
        assert_eq!(s.c_max, 5);
        assert_eq!(s.c_min, 4);
    }

    #[test]
    fn lazy_window() {
        let cfg = WhisperConfig::lazy();
        let w = sampling_window(&SamplingState::default(), &cfg, Nanos::from_ms(10));
        assert_eq!(w.duration, Nanos::from_us(5_130));
        assert_eq!(w.start, Nanos::from_ms(10) - Nanos::from_us(130));
    }

    #[test]
    fn direction_aware_windows() {
        let cfg = WhisperConfig::default();
        let t = Nanos::from_ms(10);
        let w = sampling_window(&SamplingState::from_history(4, 4, 4, 1), &cfg, t);
        assert_eq!(w.start, t - Nanos::from_us(130) + Nanos::from_us(672));
        assert_eq!(w.duration, Nanos::from_us(1_026));

        let w = sampling_window(&SamplingState::seeded(0), &cfg, t);
        assert_eq!(w.start, t - cfg.t_guard);

        let uninit = sampling_window(&SamplingState::default(), &cfg, t);
        assert_eq!(uninit.start, t - cfg.t_guard);
        assert_eq!(uninit.duration, cfg.t_guard + cfg.t_slot);

        // Clamped to the slot end.
        let late = sampling_window(&SamplingState::seeded(20), &cfg, t);
        assert_eq!(late.end(), t + cfg.t_slot);
        let beyond = sampling_window(&SamplingState::seeded(30), &cfg, t);
        assert_eq!(beyond.duration, Nanos::ZERO);
    }

    #[test]
    fn relay_joins_two_packlets_later() {
        let cfg = WhisperConfig::default();
        let p = relay_packet(&cfg, 4).unwrap().unwrap();
        assert_eq!((p.start_counter, p.n_tx), (6, 3));
        assert_eq!(relay_packet(&cfg, 0).unwrap().unwrap().start_counter, 2);

        let sim = WhisperConfig::compliant();
        let p = relay_packet(&sim, 1).unwrap().unwrap();
        assert_eq!((p.start_counter, p.n_tx, p.mode), (3, 11, TxMode::Buffered));
        assert!(relay_packet(&sim, 12).unwrap().is_none());
    }

    #[test]
    fn relay_lands_on_grid_without_jitter() {
        let cfg = WhisperConfig {
            clock: ClockProfile::IDEAL,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = Nanos::from_ms(1);
        let rx_end = cfg.grid(t, 4) + TP + cfg.radio.t_d;
        let start = relay_start(&cfg, t, 4, rx_end, &mut rng).unwrap();
        assert_eq!(start, cfg.grid(t, 6));
    }

    #[test]
    fn sender_transmission_is_gap_free() {
        let cfg = WhisperConfig::default();
        let tx = initiate_flood(&cfg, 0, Nanos::ZERO).unwrap();
        assert_eq!(tx.end - tx.start, Nanos::from_us(672));
        for w in tx.units.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        let one = WhisperConfig { n_tx: 1, ..cfg };
        let tx = initiate_flood(&one, 0, Nanos::ZERO).unwrap();
        assert_eq!(tx.end - tx.start, TP);
        let big = WhisperConfig {
            n_tx: 14,
            packlet: PackletConfig::compliant(),
            ..cfg
        };
        let tx = initiate_flood(&big, 0, Nanos::ZERO).unwrap();
        assert_eq!(tx.end - tx.start, Nanos::from_us(4_032));
    }
}
