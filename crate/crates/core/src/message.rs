//! Routing and data messages shared by all protocols.

use thiserror::Error;

use crate::types::{NodeId, SeqNum};

/// Message discriminant; the numeric values double as the wire kind byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum MsgKind {
    Rreq = 0x01,
    Rrep = 0x02,
    Rerr = 0x03,
    Hello = 0x04,
    Data = 0x05,
    TableUpdate = 0x06,
}

impl MsgKind {
    pub fn from_byte(b: u8) -> Option<MsgKind> {
        match b {
            0x01 => Some(MsgKind::Rreq),
            0x02 => Some(MsgKind::Rrep),
            0x03 => Some(MsgKind::Rerr),
            0x04 => Some(MsgKind::Hello),
            0x05 => Some(MsgKind::Data),
            0x06 => Some(MsgKind::TableUpdate),
            _ => None,
        }
    }

    /// True for the control kinds counted as routing overhead.
    pub fn is_routing(self) -> bool {
        !matches!(self, MsgKind::Data)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MsgKind::Rreq => "RREQ",
            MsgKind::Rrep => "RREP",
            MsgKind::Rerr => "RERR",
            MsgKind::Hello => "HELLO",
            MsgKind::Data => "DATA",
            MsgKind::TableUpdate => "TUPD",
        }
    }
}

/// One accumulated address element. In RREQ/RREP it records a traversed
/// node (`hop_distance` = hops from that node back to the message's current
/// position), in source-routed DSR messages it is a hop-list entry, and in
/// DSDV table dumps it is a table row with `hop_distance` as the metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AddressBlock {
    pub addr: NodeId,
    pub seqnum: SeqNum,
    pub hop_distance: u8,
}

/// A protocol or data message. One struct covers all six kinds; fields not
/// meaningful for a kind stay at their empty defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: MsgKind,
    pub orig: NodeId,
    pub orig_seqnum: SeqNum,
    pub target: NodeId,
    /// `None` is encoded on the wire as the reserved all-ones pattern.
    pub target_seqnum: Option<SeqNum>,
    pub hop_count: u8,
    pub ttl: u8,
    pub accumulated: Vec<AddressBlock>,
    /// Data only: payload bytes carried (the payload itself is virtual).
    pub payload_size: u16,
    /// RERR only: destinations lost, with the seqnum of the deleted entry.
    pub unreachable: Vec<(NodeId, SeqNum)>,
    /// Simulator-local identity; never serialized.
    pub msg_id: u64,
}

impl Message {
    pub fn new(kind: MsgKind, orig: NodeId, orig_seqnum: SeqNum, target: NodeId) -> Message {
        Message {
            kind,
            orig,
            orig_seqnum,
            target,
            target_seqnum: None,
            hop_count: 0,
            ttl: 1,
            accumulated: Vec::new(),
            payload_size: 0,
            unreachable: Vec::new(),
            msg_id: 0,
        }
    }
}

/// Allocates message ids as `(originator << 32) | counter`, which is unique
/// across nodes without coordination.
#[derive(Debug, Clone)]
pub struct MsgIdGen {
    node: NodeId,
    next: u32,
}

impl MsgIdGen {
    pub fn new(node: NodeId) -> MsgIdGen {
        MsgIdGen { node, next: 0 }
    }

    pub fn next_id(&mut self) -> u64 {
        let id = (u64::from(self.node.0) << 32) | u64::from(self.next);
        self.next = self.next.wrapping_add(1);
        id
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("address {0} already present in accumulated list")]
pub struct DuplicateAddress(pub NodeId);

/// Path accumulation: appends `node` as the newest block, pushes every prior
/// block one hop further away, and bumps the hop count. Fails if `node` is
/// already listed, which signals a forwarding loop; callers drop the message.
pub fn append_address(
    msg: &Message,
    node: NodeId,
    node_seqnum: SeqNum,
) -> Result<Message, DuplicateAddress> {
    debug_assert!(matches!(msg.kind, MsgKind::Rreq | MsgKind::Rrep));
    if msg.accumulated.iter().any(|b| b.addr == node) {
        return Err(DuplicateAddress(node));
    }
    let mut out = msg.clone();
    for block in &mut out.accumulated {
        block.hop_distance = block.hop_distance.saturating_add(1);
    }
    out.accumulated.push(AddressBlock {
        addr: node,
        seqnum: node_seqnum,
        hop_distance: 0,
    });
    out.hop_count = out.hop_count.saturating_add(1);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rreq() -> Message {
        let mut m = Message::new(MsgKind::Rreq, NodeId(1), SeqNum(9), NodeId(10));
        m.ttl = 32;
        m
    }

    #[test]
    fn first_append_attaches_fresh_block() {
        let out = append_address(&rreq(), NodeId(2), SeqNum(4)).unwrap();
        assert_eq!(
            out.accumulated,
            vec![AddressBlock {
                addr: NodeId(2),
                seqnum: SeqNum(4),
                hop_distance: 0
            }]
        );
        assert_eq!(out.hop_count, 1);
    }

    #[test]
    fn second_append_pushes_prior_blocks_one_hop_back() {
        let hop1 = append_address(&rreq(), NodeId(2), SeqNum(4)).unwrap();
        let hop2 = append_address(&hop1, NodeId(6), SeqNum(7)).unwrap();
        assert_eq!(
            hop2.accumulated,
            vec![
                AddressBlock {
                    addr: NodeId(2),
                    seqnum: SeqNum(4),
                    hop_distance: 1
                },
                AddressBlock {
                    addr: NodeId(6),
                    seqnum: SeqNum(7),
                    hop_distance: 0
                },
            ]
        );
        assert_eq!(hop2.hop_count, 2);
    }

    #[test]
    fn appending_own_address_twice_is_a_loop() {
        let hop1 = append_address(&rreq(), NodeId(2), SeqNum(4)).unwrap();
        assert_eq!(
            append_address(&hop1, NodeId(2), SeqNum(5)),
            Err(DuplicateAddress(NodeId(2)))
        );
    }

    #[test]
    fn msg_ids_are_globally_unique() {
        let mut a = MsgIdGen::new(NodeId(1));
        let mut b = MsgIdGen::new(NodeId(2));
        assert_eq!(a.next_id(), 1 << 32);
        assert_eq!(a.next_id(), (1 << 32) | 1);
        assert_eq!(b.next_id(), 2 << 32);
    }

    proptest::proptest! {
        /// Accumulated addresses stay distinct and grow by exactly one per
        /// append; a repeated address always errors instead.
        #[test]
        fn append_preserves_distinctness(ids in proptest::collection::vec(0u32..40, 1..12)) {
            let mut msg = rreq();
            for &id in &ids {
                let before = msg.accumulated.len();
                match append_address(&msg, NodeId(id), SeqNum(id)) {
                    Ok(next) => {
                        proptest::prop_assert_eq!(next.accumulated.len(), before + 1);
                        let mut addrs: Vec<u32> =
                            next.accumulated.iter().map(|b| b.addr.0).collect();
                        addrs.sort_unstable();
                        addrs.dedup();
                        proptest::prop_assert_eq!(addrs.len(), next.accumulated.len());
                        msg = next;
                    }
                    Err(DuplicateAddress(dup)) => {
                        proptest::prop_assert_eq!(dup, NodeId(id));
                        proptest::prop_assert!(msg.accumulated.iter().any(|b| b.addr == dup));
                    }
                }
            }
        }
    }
}
