//! Protocol library and deterministic discrete-event simulator for
//! gap-free synchronous-transmission flooding in low-power wireless
//! networks, with a Glossy-style baseline for comparison.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the filesystem live in the `whisper-sim` companion
//! crate.
//!
//! Module map:
//! - [`codec`]: packlets and signaling packets, bit-exact, plus the FCS.
//! - [`radio`]: half-duplex radio timeline, reception verdicts, clock model.
//! - [`whisper`]: slot arithmetic, sampling strategies, relay rule.
//! - [`glossy`]: the baseline flooding rule and its radio-on accounting.
//! - [`sim`]: event queue, topology, per-slot engine and experiment runner.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod codec;
pub mod error;
pub mod glossy;
pub mod radio;
pub mod sim;
pub mod time;
pub mod whisper;

pub use error::{Error, Result};
pub use time::Nanos;
