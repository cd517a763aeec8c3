//! Time-ordered event queue with deterministic tie-breaking.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::message::Message;
use crate::router::TimerTag;
use crate::types::NodeId;

#[derive(Debug, Clone)]
pub enum EventKind {
    /// Engine-cadence callback for every router.
    Tick {
        k: u64,
    },
    TxComplete {
        node: NodeId,
    },
    Receive {
        node: NodeId,
        from: NodeId,
        msg: Message,
    },
    /// Feedback to `node`: its unicast of `msg` toward `neighbor` failed.
    LinkBreak {
        node: NodeId,
        neighbor: NodeId,
        msg: Message,
    },
    TimerFire {
        node: NodeId,
        tag: TimerTag,
    },
    MobilityWaypoint {
        node: NodeId,
    },
    TrafficEmit {
        flow: usize,
    },
    SimEnd,
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: f64,
    /// Insertion counter; breaks every time tie the same way in every run.
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the max-heap pops the earliest (time, seq).
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> EventQueue {
        EventQueue::default()
    }

    pub fn push(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time.is_finite());
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }
}
