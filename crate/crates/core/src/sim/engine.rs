//! The interface between the slot simulator and per-node protocol logic.

use rand_chacha::ChaCha8Rng;

use crate::radio::Transmission;
use crate::time::Nanos;

/// Per-slot facts every engine may rely on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotInfo {
    /// Scheduled start of the sender's transmission.
    pub t_star: Nanos,
    /// Listening never extends past this instant.
    pub slot_end: Nanos,
    /// Whether any node initiates a flood in this slot.
    pub signaling: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRole {
    /// Initiator whose start is offset from `t_star` by `skew`.
    Sender {
        skew: Nanos,
    },
    Forwarder,
}

/// What a node does when the slot opens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Start {
    Sleep,
    Listen { from: Nanos, until: Nanos },
    Transmit(Transmission),
}

/// What a node does after a radio event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Keep (or go back to) listening until the given deadline.
    Listen {
        until: Nanos,
    },
    /// Turn the radio around and send; `Transmission::start` must leave
    /// room for the RX/TX turnaround.
    Transmit(Transmission),
    /// TX/RX turnaround, then listen until the deadline.
    ListenAfterTx {
        until: Nanos,
    },
    Off,
}

/// A successfully decoded frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Received {
    pub counter: u8,
    /// On-air start of the anchoring frame at this receiver.
    pub frame_start: Nanos,
    /// Receiver-side SFD timestamp.
    pub sfd_time: Nanos,
    /// End of reception (frame end plus data delay).
    pub now: Nanos,
}

/// Per-node protocol state machine driven by the slot simulator.
pub trait FloodEngine {
    fn begin_slot(&mut self, node: usize, slot: &SlotInfo, role: SlotRole, rng: &mut ChaCha8Rng) -> Start;

    fn on_receive(&mut self, node: usize, slot: &SlotInfo, rx: &Received, rng: &mut ChaCha8Rng) -> Command;

    /// A frame was heard but could not be decoded.
    fn on_rx_failed(&mut self, node: usize, slot: &SlotInfo, now: Nanos, rng: &mut ChaCha8Rng) -> Command;

    /// The listening deadline passed while nothing was being received.
    fn on_deadline(&mut self, node: usize, slot: &SlotInfo, now: Nanos, rng: &mut ChaCha8Rng) -> Command;

    fn on_tx_end(&mut self, node: usize, slot: &SlotInfo, now: Nanos, rng: &mut ChaCha8Rng) -> Command;
}
