//! DYMO: on-demand route discovery with path accumulation.
//!
//! Discovery floods an RREQ toward the target; every forwarder appends its
//! own address, so each listener learns routes to the whole traversed chain,
//! not just the originator. The reply accumulates the same way on the
//! backward path. Maintenance deletes routes through a failed link and
//! floods an RERR that only affected nodes re-forward.

use std::collections::BTreeMap;

use crate::message::{append_address, Message, MsgIdGen, MsgKind};
use crate::router::{DropReason, PendingDiscovery, Router, RouterAction, TimerTag};
use crate::table::{route_update_decision, Candidate, RouteEntry, RoutingTable};
use crate::types::{NodeId, SeqNum};

/// Hop limit given to originated data packets.
pub const DATA_TTL: u8 = 32;

#[derive(Debug, Clone)]
pub struct DymoConfig {
    pub route_timeout: f64,
    pub rreq_wait: f64,
    pub rreq_max_retries: u32,
    pub rreq_ttl: u8,
    pub buffer_capacity: usize,
    pub energy_threshold: f64,
    pub rreq_seen_lifetime: f64,
    /// Let nodes holding a valid cached route answer a discovery on the
    /// destination's behalf. Off by default: cached answers compose longer,
    /// staler paths, and without them every discovery reaches the target
    /// and returns a fresh shortest path.
    pub intermediate_rrep: bool,
}

impl Default for DymoConfig {
    fn default() -> DymoConfig {
        DymoConfig {
            route_timeout: 5.0,
            rreq_wait: 1.0,
            rreq_max_retries: 3,
            rreq_ttl: 32,
            buffer_capacity: 16,
            energy_threshold: 0.0,
            rreq_seen_lifetime: 5.0,
            intermediate_rrep: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyGate {
    Forward,
    Suppress,
}

#[derive(Debug)]
pub struct DymoRouter {
    id: NodeId,
    seqnum: SeqNum,
    table: RoutingTable,
    pending: BTreeMap<NodeId, PendingDiscovery>,
    seen_rreqs: BTreeMap<(NodeId, SeqNum), f64>,
    /// Abstract units; a node below the threshold sits out RREQ forwarding.
    pub energy: f64,
    cfg: DymoConfig,
    ids: MsgIdGen,
}

impl DymoRouter {
    pub fn new(id: NodeId, cfg: DymoConfig) -> DymoRouter {
        DymoRouter {
            id,
            seqnum: SeqNum(0),
            table: RoutingTable::new(),
            pending: BTreeMap::new(),
            seen_rreqs: BTreeMap::new(),
            energy: 0.0,
            cfg,
            ids: MsgIdGen::new(id),
        }
    }

    pub fn own_seqnum(&self) -> SeqNum {
        self.seqnum
    }

    pub fn table(&self) -> &RoutingTable {
        &self.table
    }

    pub fn energy_gate(&self) -> EnergyGate {
        if self.energy < self.cfg.energy_threshold {
            EnergyGate::Suppress
        } else {
            EnergyGate::Forward
        }
    }

    /// Increments the node's own sequence number and floods a fresh RREQ.
    pub fn originate_rreq(&mut self, dest: NodeId, now: f64) -> Vec<RouterAction> {
        self.seqnum = self.seqnum.incremented();
        let mut rreq = Message::new(MsgKind::Rreq, self.id, self.seqnum, dest);
        rreq.ttl = self.cfg.rreq_ttl;
        rreq.msg_id = self.ids.next_id();
        self.seen_rreqs.insert((self.id, self.seqnum), now);
        vec![
            RouterAction::Broadcast(rreq),
            RouterAction::SetTimer(now + self.cfg.rreq_wait, TimerTag::Sweep),
        ]
    }

    /// Installs routes to the message originator and every accumulated
    /// address, all through `from`. Newly routable pending destinations are
    /// flushed into `actions`.
    fn install_from(
        &mut self,
        msg: &Message,
        from: NodeId,
        now: f64,
        actions: &mut Vec<RouterAction>,
    ) {
        let expiry = now + self.cfg.route_timeout;
        let mut cands = Vec::with_capacity(1 + msg.accumulated.len());
        cands.push(Candidate {
            dest: msg.orig,
            next_hop: from,
            seqnum: msg.orig_seqnum,
            hop_count: msg.hop_count.saturating_add(1),
        });
        for block in &msg.accumulated {
            if block.addr != self.id {
                cands.push(Candidate {
                    dest: block.addr,
                    next_hop: from,
                    seqnum: block.seqnum,
                    hop_count: block.hop_distance.saturating_add(1),
                });
            }
        }
        for cand in cands {
            if self.table.consider(cand, expiry, route_update_decision) {
                self.flush_pending(cand.dest, now, actions);
            }
        }
    }

    /// Sends every packet buffered for `dest` along the now-valid route.
    fn flush_pending(&mut self, dest: NodeId, now: f64, actions: &mut Vec<RouterAction>) {
        let Some(pending) = self.pending.remove(&dest) else {
            return;
        };
        let Some(next_hop) = self.table.valid(dest, now).map(|e| e.next_hop) else {
            // Route vanished between install and flush; keep waiting.
            self.pending.insert(dest, pending);
            return;
        };
        for mut pkt in pending.buffered {
            if pkt.orig != self.id {
                if pkt.ttl <= 1 {
                    actions.push(RouterAction::Drop(pkt, DropReason::TtlExpired));
                    continue;
                }
                pkt.ttl -= 1;
            }
            actions.push(RouterAction::Unicast(pkt, next_hop));
        }
    }

    fn process_rreq(&mut self, rreq: Message, from: NodeId, now: f64) -> Vec<RouterAction> {
        if self.seen_rreqs.contains_key(&(rreq.orig, rreq.orig_seqnum)) {
            return Vec::new();
        }
        self.seen_rreqs.insert((rreq.orig, rreq.orig_seqnum), now);

        let mut actions = Vec::new();
        self.install_from(&rreq, from, now, &mut actions);

        if rreq.target == self.id {
            // Destination replies with a fresh sequence number.
            self.seqnum = self.seqnum.incremented();
            let mut rrep = Message::new(MsgKind::Rrep, self.id, self.seqnum, rreq.orig);
            rrep.ttl = self.cfg.rreq_ttl;
            rrep.msg_id = self.ids.next_id();
            if let Some(e) = self.table.valid(rreq.orig, now) {
                actions.push(RouterAction::Unicast(rrep, e.next_hop));
            }
            return actions;
        }

        if self.cfg.intermediate_rrep {
            if let Some(e) = self.table.valid(rreq.target, now) {
                // Answer from our own table on the destination's behalf. The
                // reply starts with the cached distance already in hop_count.
                let mut rrep = Message::new(MsgKind::Rrep, rreq.target, e.seqnum, rreq.orig);
                rrep.hop_count = e.hop_count;
                rrep.ttl = self.cfg.rreq_ttl;
                rrep.msg_id = self.ids.next_id();
                if let Some(back) = self.table.valid(rreq.orig, now) {
                    actions.push(RouterAction::Unicast(rrep, back.next_hop));
                }
                return actions;
            }
        }

        if rreq.ttl > 1 && self.energy_gate() == EnergyGate::Forward {
            // Sending a request updates the sender's sequence number, and a
            // rebroadcast is a send: the appended block carries a number
            // fresh enough to supersede stale routes to this node.
            match append_address(&rreq, self.id, self.seqnum.incremented()) {
                Ok(mut fwd) => {
                    self.seqnum = self.seqnum.incremented();
                    fwd.ttl -= 1;
                    actions.push(RouterAction::Broadcast(fwd));
                }
                Err(_) => {
                    // Own address already in the list: a looping copy, drop.
                }
            }
        }
        actions
    }

    fn process_rrep(&mut self, rrep: Message, from: NodeId, now: f64) -> Vec<RouterAction> {
        let mut actions = Vec::new();
        self.install_from(&rrep, from, now, &mut actions);

        if rrep.target == self.id {
            // We originated the discovery; install_from flushed the buffer
            // and removed the pending entry, which also cancels retries.
            return actions;
        }

        let Some(back) = self.table.valid(rrep.target, now).map(|e| e.next_hop) else {
            actions.push(RouterAction::Drop(rrep, DropReason::NoRoute));
            return actions;
        };
        if rrep.ttl <= 1 {
            actions.push(RouterAction::Drop(rrep, DropReason::TtlExpired));
            return actions;
        }
        if let Ok(mut fwd) = append_address(&rrep, self.id, self.seqnum.incremented()) {
            self.seqnum = self.seqnum.incremented();
            fwd.ttl -= 1;
            actions.push(RouterAction::Unicast(fwd, back));
        }
        actions
    }

    fn process_rerr(&mut self, rerr: Message, from: NodeId, _now: f64) -> Vec<RouterAction> {
        let mut forwarded = Vec::new();
        for &(dest, seq) in &rerr.unreachable {
            let matches = self.table.get(dest).is_some_and(|e| {
                e.next_hop == from
                    && crate::types::seqnum_compare(e.seqnum, seq) != crate::types::SeqCmp::Superior
            });
            if matches {
                self.table.remove(dest);
                forwarded.push((dest, seq));
            }
        }
        if forwarded.is_empty() || rerr.ttl <= 1 {
            return Vec::new();
        }
        let mut fwd = rerr;
        fwd.unreachable = forwarded;
        fwd.ttl -= 1;
        fwd.hop_count = fwd.hop_count.saturating_add(1);
        vec![RouterAction::Broadcast(fwd)]
    }

    /// Expiry purge, duplicate-cache aging and RREQ retry/give-up.
    fn sweep(&mut self, now: f64) -> Vec<RouterAction> {
        self.table.purge_expired(now);
        let lifetime = self.cfg.rreq_seen_lifetime;
        self.seen_rreqs.retain(|_, t| now - *t < lifetime);

        let due: Vec<NodeId> = self
            .pending
            .iter()
            .filter(|(_, p)| p.next_retry <= now)
            .map(|(d, _)| *d)
            .collect();
        let mut actions = Vec::new();
        for dest in due {
            let give_up = {
                let p = self.pending.get_mut(&dest).unwrap();
                if p.retries < self.cfg.rreq_max_retries {
                    p.retries += 1;
                    p.next_retry = now + self.cfg.rreq_wait;
                    false
                } else {
                    true
                }
            };
            if give_up {
                let p = self.pending.remove(&dest).unwrap();
                for pkt in p.buffered {
                    actions.push(RouterAction::Drop(pkt, DropReason::NoRoute));
                }
            } else {
                actions.extend(self.originate_rreq(dest, now));
            }
        }
        actions
    }
}

impl Router for DymoRouter {
    fn on_data(&mut self, packet: Message, now: f64) -> Vec<RouterAction> {
        debug_assert_ne!(packet.target, self.id);
        let dest = packet.target;
        if let Some(e) = self.table.valid(dest, now) {
            let next_hop = e.next_hop;
            let mut pkt = packet;
            if pkt.orig != self.id {
                // Forwarding: spend one hop of lifetime.
                if pkt.ttl <= 1 {
                    return vec![RouterAction::Drop(pkt, DropReason::TtlExpired)];
                }
                pkt.ttl -= 1;
            }
            // Using a route keeps it (and the hop that carries it) alive.
            let expiry = now + self.cfg.route_timeout;
            self.table.refresh(dest, expiry);
            self.table.refresh(next_hop, expiry);
            return vec![RouterAction::Unicast(pkt, next_hop)];
        }

        let mut actions = Vec::new();
        if let Some(p) = self.pending.get_mut(&dest) {
            if let Some(evicted) = p.buffer(packet, self.cfg.buffer_capacity) {
                actions.push(RouterAction::Drop(evicted, DropReason::BufferFull));
            }
        } else {
            let mut p = PendingDiscovery::new(now + self.cfg.rreq_wait);
            p.buffer(packet, self.cfg.buffer_capacity);
            self.pending.insert(dest, p);
            actions.extend(self.originate_rreq(dest, now));
        }
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
            MsgKind::Rreq => self.process_rreq(msg, from, now),
            MsgKind::Rrep => self.process_rrep(msg, from, now),
            MsgKind::Rerr => self.process_rerr(msg, from, now),
            // DYMO neither sends nor understands beacons or table dumps.
            MsgKind::Hello | MsgKind::TableUpdate => Vec::new(),
        }
    }

    fn on_link_break(
        &mut self,
        neighbor: NodeId,
        failed: Option<Message>,
        now: f64,
    ) -> Vec<RouterAction> {
        let lost = self.table.routed_via(neighbor);
        for &(dest, _) in &lost {
            self.table.remove(dest);
        }
        let mut actions = Vec::new();
        if !lost.is_empty() {
            let mut rerr = Message::new(MsgKind::Rerr, self.id, self.seqnum, self.id);
            rerr.ttl = self.cfg.rreq_ttl;
            rerr.unreachable = lost;
            rerr.msg_id = self.ids.next_id();
            actions.push(RouterAction::Broadcast(rerr));
        }
        match failed {
            Some(msg) if msg.kind == MsgKind::Data => {
                // The packet that hit the dead link is not lost: it goes back
                // through the data path, which now buffers and re-discovers.
                actions.extend(self.on_data(msg, now));
            }
            Some(msg) => actions.push(RouterAction::Drop(msg, DropReason::LinkBreak)),
            None => {}
        }
        actions
    }

    fn on_timer(&mut self, _tag: TimerTag, now: f64) -> Vec<RouterAction> {
        self.sweep(now)
    }

    fn on_tick(&mut self, now: f64) -> Vec<RouterAction> {
        self.sweep(now)
    }

    fn new_data(&mut self, target: NodeId, payload_size: u16) -> Message {
        let mut msg = Message::new(MsgKind::Data, self.id, self.seqnum, target);
        msg.ttl = DATA_TTL;
        msg.payload_size = payload_size;
        msg.msg_id = self.ids.next_id();
        msg
    }

    fn routes(&self) -> Vec<RouteEntry> {
        self.table.iter().copied().collect()
    }
}
