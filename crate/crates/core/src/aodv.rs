//! AODV model: DYMO's discovery shape without path accumulation, plus
//! periodic HELLO beacons for neighbor liveness and the RFC tie-break that
//! lets an equal sequence number win on a strictly shorter path.
//!
//! Relays learn only the backward route to the originator, so endpoints that
//! merely sit on someone else's path still need their own discovery. A
//! transit packet that meets a dead link is dropped (the source finds out
//! through the RERR); only the source buffers and re-discovers.

use std::collections::BTreeMap;

use crate::message::{Message, MsgIdGen, MsgKind};
use crate::router::{DropReason, PendingDiscovery, Router, RouterAction, TimerTag};
use crate::table::{aodv_update_decision, Candidate, RouteEntry, RoutingTable};
use crate::types::{NodeId, SeqNum};

#[derive(Debug, Clone)]
pub struct AodvConfig {
    pub route_timeout: f64,
    pub rreq_wait: f64,
    pub rreq_max_retries: u32,
    pub rreq_ttl: u8,
    pub buffer_capacity: usize,
    pub rreq_seen_lifetime: f64,
    pub hello_interval: f64,
    pub allowed_hello_loss: u32,
    /// Same meaning (and default) as for DYMO.
    pub intermediate_rrep: bool,
}

impl Default for AodvConfig {
    fn default() -> AodvConfig {
        AodvConfig {
            route_timeout: 5.0,
            rreq_wait: 1.0,
            rreq_max_retries: 3,
            rreq_ttl: 32,
            buffer_capacity: 16,
            rreq_seen_lifetime: 5.0,
            hello_interval: 1.0,
            allowed_hello_loss: 2,
            intermediate_rrep: false,
        }
    }
}

#[derive(Debug)]
pub struct AodvRouter {
    id: NodeId,
    seqnum: SeqNum,
    table: RoutingTable,
    pending: BTreeMap<NodeId, PendingDiscovery>,
    seen_rreqs: BTreeMap<(NodeId, SeqNum), f64>,
    /// Last time each neighbor was heard (any frame counts).
    neighbors: BTreeMap<NodeId, f64>,
    next_hello: f64,
    cfg: AodvConfig,
    ids: MsgIdGen,
}

impl AodvRouter {
    /// `hello_phase` staggers the first beacon inside one interval.
    pub fn new(id: NodeId, cfg: AodvConfig, hello_phase: f64) -> AodvRouter {
        AodvRouter {
            id,
            seqnum: SeqNum(0),
            table: RoutingTable::new(),
            pending: BTreeMap::new(),
            seen_rreqs: BTreeMap::new(),
            neighbors: BTreeMap::new(),
            next_hello: hello_phase,
            cfg,
            ids: MsgIdGen::new(id),
        }
    }

    pub fn table(&self) -> &RoutingTable {
        &self.table
    }

    fn originate_rreq(&mut self, dest: NodeId, now: f64) -> Vec<RouterAction> {
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

    fn install(&mut self, cand: Candidate, now: f64, actions: &mut Vec<RouterAction>) {
        if self
            .table
            .consider(cand, now + self.cfg.route_timeout, aodv_update_decision)
        {
            self.flush_pending(cand.dest, now, actions);
        }
    }

    fn flush_pending(&mut self, dest: NodeId, now: f64, actions: &mut Vec<RouterAction>) {
        let Some(pending) = self.pending.remove(&dest) else {
            return;
        };
        let Some(next_hop) = self.table.valid(dest, now).map(|e| e.next_hop) else {
            self.pending.insert(dest, pending);
            return;
        };
        for pkt in pending.buffered {
            actions.push(RouterAction::Unicast(pkt, next_hop));
        }
    }

    fn process_rreq(&mut self, rreq: Message, from: NodeId, now: f64) -> Vec<RouterAction> {
        if self.seen_rreqs.contains_key(&(rreq.orig, rreq.orig_seqnum)) {
            return Vec::new();
        }
        self.seen_rreqs.insert((rreq.orig, rreq.orig_seqnum), now);

        let mut actions = Vec::new();
        // Backward route to the originator only; relays stay unknown.
        self.install(
            Candidate {
                dest: rreq.orig,
                next_hop: from,
                seqnum: rreq.orig_seqnum,
                hop_count: rreq.hop_count.saturating_add(1),
            },
            now,
            &mut actions,
        );

        if rreq.target == self.id {
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
        if rreq.ttl > 1 {
            let mut fwd = rreq;
            fwd.ttl -= 1;
            fwd.hop_count = fwd.hop_count.saturating_add(1);
            actions.push(RouterAction::Broadcast(fwd));
        }
        actions
    }

    fn process_rrep(&mut self, rrep: Message, from: NodeId, now: f64) -> Vec<RouterAction> {
        let mut actions = Vec::new();
        self.install(
            Candidate {
                dest: rrep.orig,
                next_hop: from,
                seqnum: rrep.orig_seqnum,
                hop_count: rrep.hop_count.saturating_add(1),
            },
            now,
            &mut actions,
        );
        if rrep.target == self.id {
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
        let mut fwd = rrep;
        fwd.ttl -= 1;
        fwd.hop_count = fwd.hop_count.saturating_add(1);
        actions.push(RouterAction::Unicast(fwd, back));
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

    /// Deletes routes through a vanished neighbor and advertises the loss.
    fn break_routes_via(&mut self, neighbor: NodeId) -> Vec<RouterAction> {
        let lost = self.table.routed_via(neighbor);
        for &(dest, _) in &lost {
            self.table.remove(dest);
        }
        if lost.is_empty() {
            return Vec::new();
        }
        let mut rerr = Message::new(MsgKind::Rerr, self.id, self.seqnum, self.id);
        rerr.ttl = self.cfg.rreq_ttl;
        rerr.unreachable = lost;
        rerr.msg_id = self.ids.next_id();
        vec![RouterAction::Broadcast(rerr)]
    }

    fn sweep(&mut self, now: f64) -> Vec<RouterAction> {
        self.table.purge_expired(now);
        let lifetime = self.cfg.rreq_seen_lifetime;
        self.seen_rreqs.retain(|_, t| now - *t < lifetime);

        let mut actions = Vec::new();

        // Beacon, then look for silent neighbors.
        if now >= self.next_hello {
            let mut hello = Message::new(MsgKind::Hello, self.id, self.seqnum, self.id);
            hello.ttl = 1;
            hello.msg_id = self.ids.next_id();
            actions.push(RouterAction::Broadcast(hello));
            self.next_hello += self.cfg.hello_interval;
        }
        let silence = f64::from(self.cfg.allowed_hello_loss) * self.cfg.hello_interval;
        let gone: Vec<NodeId> = self
            .neighbors
            .iter()
            .filter(|(_, last)| now - **last > silence)
            .map(|(n, _)| *n)
            .collect();
        for nbr in gone {
            self.neighbors.remove(&nbr);
            actions.extend(self.break_routes_via(nbr));
        }

        let due: Vec<NodeId> = self
            .pending
            .iter()
            .filter(|(_, p)| p.next_retry <= now)
            .map(|(d, _)| *d)
            .collect();
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

impl Router for AodvRouter {
    fn on_data(&mut self, packet: Message, now: f64) -> Vec<RouterAction> {
        debug_assert_ne!(packet.target, self.id);
        let dest = packet.target;
        if let Some(e) = self.table.valid(dest, now) {
            let next_hop = e.next_hop;
            let mut pkt = packet;
            if pkt.orig != self.id {
                if pkt.ttl <= 1 {
                    return vec![RouterAction::Drop(pkt, DropReason::TtlExpired)];
                }
                pkt.ttl -= 1;
            }
            let expiry = now + self.cfg.route_timeout;
            self.table.refresh(dest, expiry);
            self.table.refresh(next_hop, expiry);
            return vec![RouterAction::Unicast(pkt, next_hop)];
        }
        if packet.orig != self.id {
            // No local repair: a transit packet with no route is lost and
            // the break is already being advertised toward the source.
            return vec![RouterAction::Drop(packet, DropReason::NoRoute)];
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
        self.neighbors.insert(from, now);
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
            // Beacons only feed the liveness map updated above.
            MsgKind::Hello | MsgKind::TableUpdate => Vec::new(),
        }
    }

    fn on_link_break(
        &mut self,
        neighbor: NodeId,
        failed: Option<Message>,
        now: f64,
    ) -> Vec<RouterAction> {
        self.neighbors.remove(&neighbor);
        let mut actions = self.break_routes_via(neighbor);
        match failed {
            Some(msg) if msg.kind == MsgKind::Data && msg.orig == self.id => {
                // Sources buffer and re-discover; relays have no local
                // repair, so their packet is covered by the drop arm below.
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
        msg.ttl = crate::dymo::DATA_TTL;
        msg.payload_size = payload_size;
        msg.msg_id = self.ids.next_id();
        msg
    }

    fn routes(&self) -> Vec<RouteEntry> {
        self.table.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dymo::{DymoConfig, DymoRouter};
    use crate::message::AddressBlock;

    #[test]
    fn relay_learns_only_the_originator() {
        let mut r = AodvRouter::new(NodeId(6), AodvConfig::default(), 0.5);
        let mut rreq = Message::new(MsgKind::Rreq, NodeId(1), SeqNum(3), NodeId(10));
        rreq.ttl = 31;
        rreq.hop_count = 1;
        // Even if a stray block is present, AODV ignores it.
        rreq.accumulated = vec![AddressBlock {
            addr: NodeId(2),
            seqnum: SeqNum(8),
            hop_distance: 0,
        }];
        let actions = r.on_message(rreq, NodeId(2), 0.0);
        assert!(r.table().get(NodeId(1)).is_some());
        assert!(r.table().get(NodeId(2)).is_none());
        match &actions[0] {
            RouterAction::Broadcast(m) => {
                assert_eq!(m.hop_count, 2);
                assert_eq!(m.ttl, 30);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_missed_hellos_fire_a_link_break() {
        let mut r = AodvRouter::new(NodeId(1), AodvConfig::default(), 0.0);
        // Route to 9 via neighbor 2, learned from a reply.
        let mut rrep = Message::new(MsgKind::Rrep, NodeId(9), SeqNum(4), NodeId(1));
        rrep.hop_count = 1;
        rrep.ttl = 30;
        r.on_message(rrep, NodeId(2), 0.0);
        // Beacon keeps the neighbor alive a while.
        let mut hello = Message::new(MsgKind::Hello, NodeId(2), SeqNum(7), NodeId(2));
        hello.ttl = 1;
        r.on_message(hello, NodeId(2), 1.0);

        // Still within two intervals of the last beacon: nothing happens.
        let quiet = r.on_tick(2.9);
        assert!(!quiet
            .iter()
            .any(|a| matches!(a, RouterAction::Broadcast(m) if m.kind == MsgKind::Rerr)));
        assert!(r.table().get(NodeId(9)).is_some());

        let actions = r.on_tick(3.1);
        let rerr = actions
            .iter()
            .find_map(|a| match a {
                RouterAction::Broadcast(m) if m.kind == MsgKind::Rerr => Some(m),
                _ => None,
            })
            .expect("link break advertised");
        assert_eq!(rerr.unreachable, vec![(NodeId(9), SeqNum(4))]);
        assert!(r.table().get(NodeId(9)).is_none());
    }

    #[test]
    fn same_seqnum_better_hops_installs_where_dymo_keeps_first() {
        // Two replies for the same destination and sequence number arrive
        // over a 3-hop path first, then a 1-hop path.
        let long = {
            let mut m = Message::new(MsgKind::Rrep, NodeId(10), SeqNum(9), NodeId(1));
            m.hop_count = 2;
            m.ttl = 30;
            m
        };
        let short = {
            let mut m = Message::new(MsgKind::Rrep, NodeId(10), SeqNum(9), NodeId(1));
            m.hop_count = 0;
            m.ttl = 30;
            m
        };

        let mut aodv = AodvRouter::new(NodeId(1), AodvConfig::default(), 0.0);
        aodv.on_message(long.clone(), NodeId(2), 0.0);
        aodv.on_message(short.clone(), NodeId(10), 0.1);
        let e = aodv.table().get(NodeId(10)).unwrap();
        assert_eq!((e.next_hop, e.hop_count), (NodeId(10), 1));

        let mut dymo = DymoRouter::new(NodeId(1), DymoConfig::default());
        dymo.on_message(long, NodeId(2), 0.0);
        dymo.on_message(short, NodeId(10), 0.1);
        let e = dymo.table().get(NodeId(10)).unwrap();
        assert_eq!((e.next_hop, e.hop_count), (NodeId(2), 3));
    }

    #[test]
    fn transit_data_without_route_is_dropped_not_repaired() {
        let mut r = AodvRouter::new(NodeId(5), AodvConfig::default(), 0.0);
        let mut pkt = Message::new(MsgKind::Data, NodeId(1), SeqNum(0), NodeId(10));
        pkt.ttl = 20;
        let actions = r.on_message(pkt, NodeId(1), 0.0);
        assert!(
            matches!(&actions[0], RouterAction::Drop(_, DropReason::NoRoute)),
            "{actions:?}"
        );
    }

    #[test]
    fn hello_cadence_follows_the_interval() {
        let mut r = AodvRouter::new(NodeId(0), AodvConfig::default(), 0.3);
        let mut hellos = Vec::new();
        let mut t = 0.0;
        while t < 3.05 {
            for a in r.on_tick(t) {
                if let RouterAction::Broadcast(m) = a {
                    if m.kind == MsgKind::Hello {
                        hellos.push(t);
                    }
                }
            }
            t += 0.1;
        }
        assert_eq!(hellos.len(), 3);
    }
}
