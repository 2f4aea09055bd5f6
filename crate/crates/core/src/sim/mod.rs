//! Deterministic discrete-event simulation of flooding slots.

pub mod engine;
pub mod event;
pub mod experiment;
pub mod metrics;
pub mod rng;
pub mod slot;
pub mod topology;

pub use engine::{Command, FloodEngine, Received, SlotInfo, SlotRole, Start};
pub use event::{Event, EventKind, EventQueue};
pub use experiment::{run_experiment, run_repetition, Protocol, Scenario, SenderPlan};
pub use metrics::{MetricsReport, NodeMetrics, RepetitionMetrics};
pub use slot::{run_slot, NodeTrace, SlotTrace};
pub use topology::Topology;
