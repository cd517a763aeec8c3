//! The state-machine interface every protocol implements.
//!
//! Routers are pure single-threaded state machines: the engine feeds them
//! one input at a time (data to send, a received frame, a failed link, a
//! timer) and they answer with a list of actions. The engine executes the
//! actions without looking inside them, so all four protocols are driven by
//! the same loop.

use std::collections::VecDeque;
use std::fmt;

use crate::message::Message;
use crate::table::RouteEntry;
use crate::types::NodeId;

/// What a router asks the network to do, in order.
#[derive(Debug, Clone, PartialEq)]
pub enum RouterAction {
    Broadcast(Message),
    Unicast(Message, NodeId),
    /// Hand a data packet up at this node.
    Deliver(Message),
    Drop(Message, DropReason),
    SetTimer(f64, TimerTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// Transmit queue full; the arriving frame was discarded.
    DropTail,
    /// Discovery buffer full; the oldest buffered packet was discarded.
    BufferFull,
    /// Discovery gave up or no route exists and none will be sought.
    NoRoute,
    /// Hop limit reached.
    TtlExpired,
    /// Unicast transmission failed and the packet is not recoverable here.
    LinkBreak,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::DropTail => "drop_tail",
            DropReason::BufferFull => "buffer_full",
            DropReason::NoRoute => "no_route",
            DropReason::TtlExpired => "ttl_expired",
            DropReason::LinkBreak => "link_break",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Opaque to the engine; handed back on expiry so routers can tell their
/// wakeups apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerTag {
    /// Generic maintenance sweep (expiry purge, discovery retries).
    Sweep,
}

pub trait Router {
    /// A data packet this node must send or forward. `packet.target` is
    /// never this node.
    fn on_data(&mut self, packet: Message, now: f64) -> Vec<RouterAction>;

    /// A frame received from neighbor `from`.
    fn on_message(&mut self, msg: Message, from: NodeId, now: f64) -> Vec<RouterAction>;

    /// Unicast to `neighbor` failed; `failed` is the frame that was lost.
    fn on_link_break(
        &mut self,
        neighbor: NodeId,
        failed: Option<Message>,
        now: f64,
    ) -> Vec<RouterAction>;

    /// A timer set via [`RouterAction::SetTimer`] fired.
    fn on_timer(&mut self, tag: TimerTag, now: f64) -> Vec<RouterAction>;

    /// Periodic low-rate callback from the engine (fixed cadence for every
    /// protocol); drives beacons, periodic updates and expiry sweeps.
    fn on_tick(&mut self, now: f64) -> Vec<RouterAction>;

    /// Builds an originated data packet with a fresh message id.
    fn new_data(&mut self, target: NodeId, payload_size: u16) -> Message;

    /// Snapshot of the current forwarding state, for inspection in tests
    /// and in run results.
    fn routes(&self) -> Vec<RouteEntry>;
}

/// Discovery bookkeeping shared by the reactive protocols: packets buffered
/// per destination while a route is being sought, with a retry budget.
#[derive(Debug, Clone)]
pub struct PendingDiscovery {
    pub buffered: VecDeque<Message>,
    pub retries: u32,
    pub next_retry: f64,
}

impl PendingDiscovery {
    pub fn new(next_retry: f64) -> PendingDiscovery {
        PendingDiscovery {
            buffered: VecDeque::new(),
            retries: 0,
            next_retry,
        }
    }

    /// Buffers a packet, evicting the oldest when at capacity. The evicted
    /// packet (if any) must be reported as a BufferFull drop.
    pub fn buffer(&mut self, packet: Message, capacity: usize) -> Option<Message> {
        let evicted = if self.buffered.len() >= capacity {
            self.buffered.pop_front()
        } else {
            None
        };
        self.buffered.push_back(packet);
        evicted
    }
}
