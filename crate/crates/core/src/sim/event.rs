//! Time-ordered event queue with a sequence tiebreaker.

use alloc::collections::BinaryHeap;
use core::cmp::{Ordering, Reverse};

use crate::error::{Error, Result};
use crate::time::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// A node's sampling window opens.
    SamplingWindow,
    /// A packlet may start at a listening node.
    PackletBoundary,
    /// A reception ends and its verdict is due.
    ReceptionEnd,
    /// A transmission ends.
    TxStop,
    /// A listening deadline passes.
    ListenDeadline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: Nanos,
    pub sequence: u64,
    pub kind: EventKind,
    pub node: usize,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.sequence).cmp(&(other.time, other.sequence))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue of events. Scheduling before the current time is an error.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
    now: Nanos,
}

impl EventQueue {
    pub fn new(now: Nanos) -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now,
        }
    }

    pub fn now(&self) -> Nanos {
        self.now
    }

    pub fn schedule(&mut self, time: Nanos, kind: EventKind, node: usize) -> Result<()> {
        if time < self.now {
            return Err(Error::Internal("event scheduled in the past"));
        }
        let sequence = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event {
            time,
            sequence,
            kind,
            node,
        }));
        Ok(())
    }

    pub fn pop(&mut self) -> Option<Event> {
        let Reverse(ev) = self.heap.pop()?;
        self.now = ev.time;
        Some(ev)
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_by_time_then_sequence() {
        let mut q = EventQueue::new(Nanos::ZERO);
        q.schedule(Nanos(5), EventKind::TxStop, 1).unwrap();
        q.schedule(Nanos(3), EventKind::TxStop, 2).unwrap();
        q.schedule(Nanos(5), EventKind::TxStop, 3).unwrap();
        let order: alloc::vec::Vec<_> = core::iter::from_fn(|| q.pop()).map(|e| e.node).collect();
        assert_eq!(order, [2, 1, 3]);
        assert_eq!(q.now(), Nanos(5));
        assert!(q.schedule(Nanos(4), EventKind::TxStop, 0).is_err());
    }
}
