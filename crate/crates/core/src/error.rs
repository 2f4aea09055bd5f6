use core::fmt;

use crate::time::Nanos;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A packlet counter would exceed the one-byte range.
    CounterOverflow { start: u32, count: u32 },
    /// A configuration value is outside its valid range.
    InvalidConfig(&'static str),
    /// `T_packlet` leaves no room for turnaround plus data delay.
    PackletTooShort {
        packlet: Nanos,
        turn: Nanos,
        data_delay: Nanos,
    },
    /// Referenced node does not exist in the topology.
    UnknownNode(usize),
    /// A link violates the link-model invariants.
    InvalidLink { src: usize, dst: usize },
    /// The event loop tried to go back in time or ran dry too early.
    Internal(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::CounterOverflow { start, count } => {
                write!(f, "counter overflow: start {start} with {count} packlets exceeds 255")
            }
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
            Error::PackletTooShort {
                packlet,
                turn,
                data_delay,
            } => write!(
                f,
                "packlet too short for turnaround: {packlet} <= {turn} + {data_delay}"
            ),
            Error::UnknownNode(id) => write!(f, "unknown node {id}"),
            Error::InvalidLink { src, dst } => write!(f, "invalid link {src} -> {dst}"),
            Error::Internal(what) => write!(f, "internal simulator error: {what}"),
        }
    }
}

impl core::error::Error for Error {}
