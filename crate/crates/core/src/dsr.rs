//! DSR model: source routing over a route cache that never ages out.
//!
//! Discovery floods an RREQ that accumulates the full path; the target
//! copies the reversed path into its reply. Data packets carry the complete
//! hop list, so forwarders need no tables, only the list. Every node on a
//! path caches what it saw, and since nothing expires, caches go stale as
//! the topology moves; a failed hop costs an RERR back to the source, which
//! strikes that one link from its cache and tries the next stored route
//! before re-discovering.

use std::collections::BTreeMap;

use crate::message::{append_address, AddressBlock, Message, MsgIdGen, MsgKind};
use crate::router::{DropReason, PendingDiscovery, Router, RouterAction, TimerTag};
use crate::table::{RouteEntry, RouteState};
use crate::types::{NodeId, SeqNum};

#[derive(Debug, Clone)]
pub struct DsrConfig {
    pub rreq_wait: f64,
    pub rreq_max_retries: u32,
    pub rreq_ttl: u8,
    pub buffer_capacity: usize,
    pub rreq_seen_lifetime: f64,
}

impl Default for DsrConfig {
    fn default() -> DsrConfig {
        DsrConfig {
            rreq_wait: 1.0,
            rreq_max_retries: 3,
            rreq_ttl: 32,
            buffer_capacity: 16,
            rreq_seen_lifetime: 5.0,
        }
    }
}

/// Full source routes per destination, oldest first, no expiry.
type RouteCache = BTreeMap<NodeId, Vec<Vec<NodeId>>>;

#[derive(Debug)]
pub struct DsrRouter {
    id: NodeId,
    seqnum: SeqNum,
    cache: RouteCache,
    pending: BTreeMap<NodeId, PendingDiscovery>,
    seen_rreqs: BTreeMap<(NodeId, SeqNum), f64>,
    cfg: DsrConfig,
    ids: MsgIdGen,
}

impl DsrRouter {
    pub fn new(id: NodeId, cfg: DsrConfig) -> DsrRouter {
        DsrRouter {
            id,
            seqnum: SeqNum(0),
            cache: RouteCache::new(),
            pending: BTreeMap::new(),
            seen_rreqs: BTreeMap::new(),
            cfg,
            ids: MsgIdGen::new(id),
        }
    }

    /// Total number of cached routes across all destinations.
    pub fn cache_len(&self) -> usize {
        self.cache.values().map(Vec::len).sum()
    }

    /// Stores a hop list ending at `dest`; exact duplicates are ignored.
    fn cache_insert(&mut self, dest: NodeId, route: Vec<NodeId>) {
        if dest == self.id || route.is_empty() {
            return;
        }
        debug_assert_eq!(route.last(), Some(&dest));
        let routes = self.cache.entry(dest).or_default();
        if !routes.contains(&route) {
            routes.push(route);
        }
    }

    /// Strikes every cached route using the directed link `u -> v`.
    fn purge_link(&mut self, u: NodeId, v: NodeId) {
        let own = self.id;
        for routes in self.cache.values_mut() {
            routes.retain(|r| {
                if u == own && r.first() == Some(&v) {
                    return false;
                }
                !r.windows(2).any(|w| w[0] == u && w[1] == v)
            });
        }
        self.cache.retain(|_, routes| !routes.is_empty());
    }

    /// Node chain of a source-routed message: originator, hops, target.
    fn chain(msg: &Message) -> Vec<NodeId> {
        let mut chain = Vec::with_capacity(1 + msg.accumulated.len());
        chain.push(msg.orig);
        chain.extend(msg.accumulated.iter().map(|b| b.addr));
        chain
    }

    fn blocks(route: &[NodeId]) -> Vec<AddressBlock> {
        route
            .iter()
            .enumerate()
            .map(|(i, n)| AddressBlock {
                addr: *n,
                seqnum: SeqNum(0),
                hop_distance: i as u8,
            })
            .collect()
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

    /// Attaches the first cached route and emits the packet.
    fn send_with_route(&mut self, mut pkt: Message, actions: &mut Vec<RouterAction>) -> bool {
        let Some(route) = self.cache.get(&pkt.target).and_then(|r| r.first()).cloned() else {
            return false;
        };
        pkt.accumulated = Self::blocks(&route);
        pkt.hop_count = 0;
        actions.push(RouterAction::Unicast(pkt, route[0]));
        true
    }

    fn flush_pending(&mut self, dest: NodeId, actions: &mut Vec<RouterAction>) {
        let Some(pending) = self.pending.remove(&dest) else {
            return;
        };
        let mut kept = PendingDiscovery::new(pending.next_retry);
        kept.retries = pending.retries;
        for pkt in pending.buffered {
            let mut one = Vec::new();
            if self.send_with_route(pkt.clone(), &mut one) {
                actions.extend(one);
            } else {
                kept.buffered.push_back(pkt);
            }
        }
        if !kept.buffered.is_empty() {
            self.pending.insert(dest, kept);
        }
    }

    /// Source-routed forwarding shared by Data, RREP and RERR.
    fn forward_on_chain(&mut self, msg: Message, actions: &mut Vec<RouterAction>) {
        let chain = Self::chain(&msg);
        let Some(pos) = chain.iter().position(|n| *n == self.id) else {
            actions.push(RouterAction::Drop(msg, DropReason::NoRoute));
            return;
        };
        if pos + 1 >= chain.len() {
            actions.push(RouterAction::Drop(msg, DropReason::NoRoute));
            return;
        }
        if msg.ttl <= 1 {
            actions.push(RouterAction::Drop(msg, DropReason::TtlExpired));
            return;
        }
        let mut fwd = msg;
        fwd.ttl -= 1;
        fwd.hop_count = pos as u8;
        let next = chain[pos + 1];
        actions.push(RouterAction::Unicast(fwd, next));
    }

    fn process_rreq(&mut self, rreq: Message, _from: NodeId, now: f64) -> Vec<RouterAction> {
        if rreq.orig == self.id || self.seen_rreqs.contains_key(&(rreq.orig, rreq.orig_seqnum)) {
            return Vec::new();
        }
        self.seen_rreqs.insert((rreq.orig, rreq.orig_seqnum), now);

        // Reverse of the accumulated prefix is this node's route back to
        // the originator.
        let mut back: Vec<NodeId> = rreq.accumulated.iter().rev().map(|b| b.addr).collect();
        back.push(rreq.orig);
        self.cache_insert(rreq.orig, back.clone());

        let mut actions = Vec::new();
        if rreq.target == self.id {
            self.seqnum = self.seqnum.incremented();
            let mut rrep = Message::new(MsgKind::Rrep, self.id, self.seqnum, rreq.orig);
            rrep.ttl = self.cfg.rreq_ttl;
            rrep.accumulated = Self::blocks(&back);
            rrep.msg_id = self.ids.next_id();
            actions.push(RouterAction::Unicast(rrep, back[0]));
            return actions;
        }
        if rreq.ttl > 1 {
            if let Ok(mut fwd) = append_address(&rreq, self.id, self.seqnum) {
                fwd.ttl -= 1;
                actions.push(RouterAction::Broadcast(fwd));
            }
        }
        actions
    }

    fn process_rrep(&mut self, rrep: Message, _from: NodeId, _now: f64) -> Vec<RouterAction> {
        let chain = Self::chain(&rrep);
        let mut actions = Vec::new();
        let Some(pos) = chain.iter().position(|n| *n == self.id) else {
            actions.push(RouterAction::Drop(rrep, DropReason::NoRoute));
            return actions;
        };
        // Everything behind us in the chain is a route to the replier.
        if pos > 0 {
            let to_orig: Vec<NodeId> = chain[..pos].iter().rev().copied().collect();
            self.cache_insert(rrep.orig, to_orig);
        }
        if rrep.target == self.id {
            self.flush_pending(rrep.orig, &mut actions);
            return actions;
        }
        if pos + 1 < chain.len() {
            let to_target: Vec<NodeId> = chain[pos + 1..].to_vec();
            self.cache_insert(rrep.target, to_target);
        }
        self.forward_on_chain(rrep, &mut actions);
        actions
    }

    fn process_rerr(&mut self, rerr: Message, _from: NodeId, _now: f64) -> Vec<RouterAction> {
        if let Some(&(broken_to, _)) = rerr.unreachable.first() {
            self.purge_link(rerr.orig, broken_to);
        }
        if rerr.target == self.id {
            return Vec::new();
        }
        let mut actions = Vec::new();
        self.forward_on_chain(rerr, &mut actions);
        actions
    }

    fn sweep(&mut self, now: f64) -> Vec<RouterAction> {
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

impl Router for DsrRouter {
    fn on_data(&mut self, packet: Message, now: f64) -> Vec<RouterAction> {
        debug_assert_ne!(packet.target, self.id);
        let mut actions = Vec::new();
        if packet.orig == self.id {
            if self.send_with_route(packet.clone(), &mut actions) {
                return actions;
            }
            let dest = packet.target;
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
            return actions;
        }
        self.forward_on_chain(packet, &mut actions);
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
            MsgKind::Hello | MsgKind::TableUpdate => Vec::new(),
        }
    }

    fn on_link_break(
        &mut self,
        neighbor: NodeId,
        failed: Option<Message>,
        now: f64,
    ) -> Vec<RouterAction> {
        self.purge_link(self.id, neighbor);
        let mut actions = Vec::new();
        match failed {
            Some(msg) if msg.kind == MsgKind::Data && msg.orig == self.id => {
                // Next cached route, or discovery if none is left.
                let mut retry = msg;
                retry.accumulated.clear();
                retry.hop_count = 0;
                actions.extend(self.on_data(retry, now));
            }
            Some(msg) if msg.kind == MsgKind::Data => {
                // Transit failure: tell the source which link died, then
                // give the packet up.
                let chain = Self::chain(&msg);
                if let Some(pos) = chain.iter().position(|n| *n == self.id) {
                    if pos > 0 {
                        let back: Vec<NodeId> = chain[..pos].iter().rev().copied().collect();
                        let mut rerr = Message::new(MsgKind::Rerr, self.id, self.seqnum, chain[0]);
                        rerr.ttl = self.cfg.rreq_ttl;
                        rerr.unreachable = vec![(neighbor, SeqNum(0))];
                        rerr.accumulated = Self::blocks(&back);
                        rerr.msg_id = self.ids.next_id();
                        actions.push(RouterAction::Unicast(rerr, back[0]));
                    }
                }
                actions.push(RouterAction::Drop(msg, DropReason::LinkBreak));
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
        self.cache
            .iter()
            .filter_map(|(dest, routes)| routes.first().map(|r| (dest, r)))
            .map(|(dest, route)| RouteEntry {
                dest: *dest,
                next_hop: route[0],
                seqnum: SeqNum(0),
                hop_count: route.len() as u8,
                state: RouteState::Valid,
                expiry_time: f64::INFINITY,
            })
            .collect()
    }
}
