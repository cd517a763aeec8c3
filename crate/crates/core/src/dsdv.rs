//! DSDV model: proactive distance-vector routing with destination-owned
//! sequence numbers.
//!
//! Every node advertises its full table periodically and the changed rows as
//! soon as a short coalescing gap allows. Destinations stamp their own rows
//! with even numbers; a node that sees a link die bumps the victim's number
//! to odd with an infinite metric, which outranks every older even number
//! until the destination's next advertisement supersedes it. Packets with no
//! usable route wait in a bounded buffer for the table to converge.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::message::{AddressBlock, Message, MsgIdGen, MsgKind};
use crate::router::{DropReason, Router, RouterAction, TimerTag};
use crate::table::{RouteEntry, RouteState};
use crate::types::{seqnum_compare, NodeId, SeqCmp, SeqNum};

/// Advertised metric meaning "unreachable".
pub const METRIC_INF: u8 = u8::MAX;

#[derive(Debug, Clone)]
pub struct DsdvConfig {
    /// Full-table broadcast period.
    pub periodic_update: f64,
    /// Minimum spacing between triggered (changed-rows) updates.
    pub triggered_gap: f64,
    pub buffer_capacity: usize,
}

impl Default for DsdvConfig {
    fn default() -> DsdvConfig {
        // The gap only coalesces changes within an engine tick; there is no
        // settling-time damping, so updates ripple as fast as they arrive.
        // With no discovery to wait for, a node holds just one packet per
        // destination until the table converges; newer arrivals displace it.
        DsdvConfig {
            periodic_update: 15.0,
            triggered_gap: 0.1,
            buffer_capacity: 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct DsdvEntry {
    next_hop: NodeId,
    metric: u8,
    seqnum: SeqNum,
}

impl DsdvEntry {
    fn usable(&self) -> bool {
        self.metric < METRIC_INF && self.seqnum.0.is_multiple_of(2)
    }
}

#[derive(Debug)]
pub struct DsdvRouter {
    id: NodeId,
    own_seq: SeqNum,
    entries: BTreeMap<NodeId, DsdvEntry>,
    buffered: BTreeMap<NodeId, VecDeque<Message>>,
    dirty: BTreeSet<NodeId>,
    next_periodic: f64,
    next_triggered: f64,
    cfg: DsdvConfig,
    ids: MsgIdGen,
}

impl DsdvRouter {
    /// `phase` staggers the first full dump inside one period.
    pub fn new(id: NodeId, cfg: DsdvConfig, phase: f64) -> DsdvRouter {
        let mut entries = BTreeMap::new();
        entries.insert(
            id,
            DsdvEntry {
                next_hop: id,
                metric: 0,
                seqnum: SeqNum(0),
            },
        );
        DsdvRouter {
            id,
            own_seq: SeqNum(0),
            entries,
            buffered: BTreeMap::new(),
            dirty: BTreeSet::new(),
            next_periodic: phase,
            next_triggered: 0.0,
            cfg,
            ids: MsgIdGen::new(id),
        }
    }

    fn advertisement(&mut self, dests: &[NodeId]) -> Message {
        let mut msg = Message::new(MsgKind::TableUpdate, self.id, self.own_seq, self.id);
        msg.ttl = 1;
        msg.msg_id = self.ids.next_id();
        msg.accumulated = dests
            .iter()
            .filter_map(|d| self.entries.get(d).map(|e| (d, e)))
            .map(|(d, e)| AddressBlock {
                addr: *d,
                seqnum: e.seqnum,
                hop_distance: e.metric,
            })
            .collect();
        msg
    }

    fn flush_buffered(&mut self, dest: NodeId, actions: &mut Vec<RouterAction>) {
        let Some(entry) = self.entries.get(&dest).copied().filter(DsdvEntry::usable) else {
            return;
        };
        let Some(queue) = self.buffered.remove(&dest) else {
            return;
        };
        for mut pkt in queue {
            if pkt.orig != self.id {
                if pkt.ttl <= 1 {
                    actions.push(RouterAction::Drop(pkt, DropReason::TtlExpired));
                    continue;
                }
                pkt.ttl -= 1;
            }
            actions.push(RouterAction::Unicast(pkt, entry.next_hop));
        }
    }

    fn process_update(&mut self, update: Message, from: NodeId, _now: f64) -> Vec<RouterAction> {
        let mut actions = Vec::new();
        for row in &update.accumulated {
            if row.addr == self.id {
                // Someone claims newer knowledge of us (usually a break with
                // an odd number); answer with a fresher even one of our own.
                if seqnum_compare(row.seqnum, self.own_seq) == SeqCmp::Superior {
                    let bumped = if row.seqnum.0 % 2 == 1 {
                        row.seqnum.0 + 1
                    } else {
                        row.seqnum.0 + 2
                    };
                    self.own_seq = SeqNum(bumped);
                    self.entries.insert(
                        self.id,
                        DsdvEntry {
                            next_hop: self.id,
                            metric: 0,
                            seqnum: self.own_seq,
                        },
                    );
                    self.dirty.insert(self.id);
                }
                continue;
            }
            let cand = DsdvEntry {
                next_hop: from,
                metric: row.hop_distance.saturating_add(1),
                seqnum: row.seqnum,
            };
            let install = match self.entries.get(&row.addr) {
                None => true,
                Some(e) => match seqnum_compare(cand.seqnum, e.seqnum) {
                    SeqCmp::Superior => true,
                    SeqCmp::Same => cand.metric < e.metric,
                    SeqCmp::Inferior => false,
                },
            };
            if install {
                self.entries.insert(row.addr, cand);
                self.dirty.insert(row.addr);
                if cand.usable() {
                    self.flush_buffered(row.addr, &mut actions);
                }
            }
        }
        actions
    }
}

impl Router for DsdvRouter {
    fn on_data(&mut self, packet: Message, now: f64) -> Vec<RouterAction> {
        debug_assert_ne!(packet.target, self.id);
        let dest = packet.target;
        if let Some(e) = self.entries.get(&dest).copied().filter(DsdvEntry::usable) {
            let mut pkt = packet;
            if pkt.orig != self.id {
                if pkt.ttl <= 1 {
                    return vec![RouterAction::Drop(pkt, DropReason::TtlExpired)];
                }
                pkt.ttl -= 1;
            }
            return vec![RouterAction::Unicast(pkt, e.next_hop)];
        }
        // No usable route yet: wait for the table to converge.
        let queue = self.buffered.entry(dest).or_default();
        let mut actions = Vec::new();
        if queue.len() >= self.cfg.buffer_capacity {
            let oldest = queue.pop_front().unwrap();
            actions.push(RouterAction::Drop(oldest, DropReason::BufferFull));
        }
        queue.push_back(packet);
        let _ = now;
        actions
    }

    fn on_message(&mut self, msg: Message, from: NodeId, now: f64) -> Vec<RouterAction> {
        match msg.kind {
            MsgKind::Data => {
                if msg.target == self.id {
                    vec![RouterAction::Deliver(msg)]
                } else {
                    self.on_data(msg, now)
                }
            }
            MsgKind::TableUpdate => self.process_update(msg, from, now),
            _ => Vec::new(),
        }
    }

    fn on_link_break(
        &mut self,
        neighbor: NodeId,
        failed: Option<Message>,
        now: f64,
    ) -> Vec<RouterAction> {
        let lost: Vec<NodeId> = self
            .entries
            .iter()
            .filter(|(d, e)| **d != self.id && e.next_hop == neighbor && e.metric < METRIC_INF)
            .map(|(d, _)| *d)
            .collect();
        for dest in lost {
            let e = self.entries.get_mut(&dest).unwrap();
            // Odd number marks the break; the destination's own next
            // advertisement will outrank it.
            e.seqnum = e.seqnum.incremented();
            e.metric = METRIC_INF;
            self.dirty.insert(dest);
        }
        let mut actions = Vec::new();
        match failed {
            Some(msg) if msg.kind == MsgKind::Data => {
                actions.extend(self.on_data(msg, now));
            }
            Some(msg) => actions.push(RouterAction::Drop(msg, DropReason::LinkBreak)),
            None => {}
        }
        actions
    }

    fn on_timer(&mut self, _tag: TimerTag, _now: f64) -> Vec<RouterAction> {
        Vec::new()
    }

    fn on_tick(&mut self, now: f64) -> Vec<RouterAction> {
        if now >= self.next_periodic {
            self.own_seq = SeqNum(self.own_seq.0 + 2);
            self.entries.insert(
                self.id,
                DsdvEntry {
                    next_hop: self.id,
                    metric: 0,
                    seqnum: self.own_seq,
                },
            );
            let dests: Vec<NodeId> = self.entries.keys().copied().collect();
            let msg = self.advertisement(&dests);
            self.next_periodic += self.cfg.periodic_update;
            self.next_triggered = now + self.cfg.triggered_gap;
            self.dirty.clear();
            return vec![RouterAction::Broadcast(msg)];
        }
        if !self.dirty.is_empty() && now >= self.next_triggered {
            let dests: Vec<NodeId> = self.dirty.iter().copied().collect();
            let msg = self.advertisement(&dests);
            self.next_triggered = now + self.cfg.triggered_gap;
            self.dirty.clear();
            return vec![RouterAction::Broadcast(msg)];
        }
        Vec::new()
    }

    fn new_data(&mut self, target: NodeId, payload_size: u16) -> Message {
        let mut msg = Message::new(MsgKind::Data, self.id, self.own_seq, target);
        msg.ttl = crate::dymo::DATA_TTL;
        msg.payload_size = payload_size;
        msg.msg_id = self.ids.next_id();
        msg
    }

    fn routes(&self) -> Vec<RouteEntry> {
        self.entries
            .iter()
            .filter(|(d, _)| **d != self.id)
            .map(|(d, e)| RouteEntry {
                dest: *d,
                next_hop: e.next_hop,
                seqnum: e.seqnum,
                hop_count: e.metric,
                state: if e.usable() {
                    RouteState::Valid
                } else {
                    RouteState::Broken
                },
                expiry_time: f64::INFINITY,
            })
            .collect()
    }
}
