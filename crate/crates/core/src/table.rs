//! Per-destination routing state and the freshness-based update policy.

use std::collections::BTreeMap;

use crate::types::{seqnum_compare, NodeId, SeqCmp, SeqNum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteState {
    Valid,
    Broken,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteEntry {
    pub dest: NodeId,
    pub next_hop: NodeId,
    pub seqnum: SeqNum,
    pub hop_count: u8,
    pub state: RouteState,
    pub expiry_time: f64,
}

/// Candidate route extracted from a received message.
#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub dest: NodeId,
    pub next_hop: NodeId,
    pub seqnum: SeqNum,
    pub hop_count: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateDecision {
    Install,
    Discard,
}

/// Freshness rule: install when the table has no entry or the candidate's
/// sequence number is strictly superior. Same or inferior numbers are always
/// discarded, even with a better hop count, since an equal number may belong
/// to a looping copy of the same information.
pub fn route_update_decision(existing: Option<&RouteEntry>, cand: &Candidate) -> UpdateDecision {
    match existing {
        None => UpdateDecision::Install,
        Some(e) => match seqnum_compare(cand.seqnum, e.seqnum) {
            SeqCmp::Superior => UpdateDecision::Install,
            SeqCmp::Same | SeqCmp::Inferior => UpdateDecision::Discard,
        },
    }
}

/// Variant used by the AODV model: a same-number candidate with strictly
/// fewer hops also wins.
pub fn aodv_update_decision(existing: Option<&RouteEntry>, cand: &Candidate) -> UpdateDecision {
    match existing {
        None => UpdateDecision::Install,
        Some(e) => match seqnum_compare(cand.seqnum, e.seqnum) {
            SeqCmp::Superior => UpdateDecision::Install,
            SeqCmp::Same if cand.hop_count < e.hop_count => UpdateDecision::Install,
            _ => UpdateDecision::Discard,
        },
    }
}

/// At most one entry per destination, iterated in NodeId order so that
/// everything derived from a table walk is deterministic.
#[derive(Debug, Clone, Default)]
pub struct RoutingTable {
    entries: BTreeMap<NodeId, RouteEntry>,
}

impl RoutingTable {
    pub fn new() -> RoutingTable {
        RoutingTable::default()
    }

    pub fn get(&self, dest: NodeId) -> Option<&RouteEntry> {
        self.entries.get(&dest)
    }

    /// Entry usable for forwarding right now.
    pub fn valid(&self, dest: NodeId, now: f64) -> Option<&RouteEntry> {
        self.entries
            .get(&dest)
            .filter(|e| e.state == RouteState::Valid && e.expiry_time > now)
    }

    /// Applies `policy` to the candidate; on install the entry becomes Valid
    /// with the given expiry. Returns true when the table changed.
    pub fn consider(
        &mut self,
        cand: Candidate,
        expiry_time: f64,
        policy: fn(Option<&RouteEntry>, &Candidate) -> UpdateDecision,
    ) -> bool {
        match policy(self.entries.get(&cand.dest), &cand) {
            UpdateDecision::Install => {
                self.entries.insert(
                    cand.dest,
                    RouteEntry {
                        dest: cand.dest,
                        next_hop: cand.next_hop,
                        seqnum: cand.seqnum,
                        hop_count: cand.hop_count,
                        state: RouteState::Valid,
                        expiry_time,
                    },
                );
                true
            }
            UpdateDecision::Discard => false,
        }
    }

    /// Pushes the expiry of an existing entry out to `expiry_time`.
    pub fn refresh(&mut self, dest: NodeId, expiry_time: f64) {
        if let Some(e) = self.entries.get_mut(&dest) {
            if expiry_time > e.expiry_time {
                e.expiry_time = expiry_time;
            }
        }
    }

    pub fn remove(&mut self, dest: NodeId) -> Option<RouteEntry> {
        self.entries.remove(&dest)
    }

    /// Deletes every valid entry whose expiry has passed.
    pub fn purge_expired(&mut self, now: f64) {
        self.entries.retain(|_, e| e.expiry_time > now);
    }

    /// Destinations currently reached through `neighbor`, in id order.
    pub fn routed_via(&self, neighbor: NodeId) -> Vec<(NodeId, SeqNum)> {
        self.entries
            .values()
            .filter(|e| e.next_hop == neighbor && e.state == RouteState::Valid)
            .map(|e| (e.dest, e.seqnum))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RouteEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
