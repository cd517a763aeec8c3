//! Bit-exact wire codec.
//!
//! Fixed big-endian layout, 23-byte header followed by 9-byte elements:
//!
//! ```text
//! offset  field
//!  0      kind (0x01 RREQ, 0x02 RREP, 0x03 RERR, 0x04 HELLO, 0x05 Data,
//!         0x06 TableUpdate)
//!  1..5   orig
//!  5..9   orig_seqnum
//!  9..13  target
//! 13..17  target_seqnum (0xFFFFFFFF = unknown)
//! 17      hop_count
//! 18      ttl
//! 19..21  element count n
//! 21..23  payload_size
//! 23..    n elements of 9 bytes: addr (4) || seqnum (4) || hop_distance (1)
//! ```
//!
//! Elements are the accumulated address blocks, except for RERR where they
//! carry the unreachable (addr, seqnum) pairs with a zero trailer byte.
//! `msg_id` is simulator-local metadata and is not serialized.

use thiserror::Error;

use crate::message::{AddressBlock, Message, MsgKind};
use crate::types::{NodeId, SeqNum};

pub const HEADER_LEN: usize = 23;
pub const ELEMENT_LEN: usize = 9;
const UNKNOWN_SEQNUM: u32 = 0xFFFF_FFFF;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("truncated message: needed a byte at offset {offset}")]
    Truncated { offset: usize },
    #[error("bad kind byte {value:#04x} at offset {offset}")]
    BadKind { offset: usize, value: u8 },
    #[error("length mismatch: first unexpected byte at offset {offset}")]
    BadLength { offset: usize },
}

/// Number of bytes `encode` will produce.
pub fn encoded_len(msg: &Message) -> usize {
    HEADER_LEN + ELEMENT_LEN * element_count(msg)
}

fn element_count(msg: &Message) -> usize {
    match msg.kind {
        MsgKind::Rerr => msg.unreachable.len(),
        _ => msg.accumulated.len(),
    }
}

pub fn encode(msg: &Message) -> Vec<u8> {
    let n = element_count(msg);
    let mut out = Vec::with_capacity(HEADER_LEN + ELEMENT_LEN * n);
    out.push(msg.kind as u8);
    out.extend_from_slice(&msg.orig.0.to_be_bytes());
    out.extend_from_slice(&msg.orig_seqnum.0.to_be_bytes());
    out.extend_from_slice(&msg.target.0.to_be_bytes());
    let tseq = msg.target_seqnum.map_or(UNKNOWN_SEQNUM, |s| s.0);
    out.extend_from_slice(&tseq.to_be_bytes());
    out.push(msg.hop_count);
    out.push(msg.ttl);
    out.extend_from_slice(&(n as u16).to_be_bytes());
    out.extend_from_slice(&msg.payload_size.to_be_bytes());
    match msg.kind {
        MsgKind::Rerr => {
            for &(addr, seq) in &msg.unreachable {
                out.extend_from_slice(&addr.0.to_be_bytes());
                out.extend_from_slice(&seq.0.to_be_bytes());
                out.push(0);
            }
        }
        _ => {
            for block in &msg.accumulated {
                out.extend_from_slice(&block.addr.0.to_be_bytes());
                out.extend_from_slice(&block.seqnum.0.to_be_bytes());
                out.push(block.hop_distance);
            }
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Message, DecodeError> {
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::Truncated {
            offset: bytes.len(),
        });
    }

    let kind = MsgKind::from_byte(bytes[0]).ok_or(DecodeError::BadKind {
        offset: 0,
        value: bytes[0],
    })?;
    let u32_at = |off: usize| u32::from_be_bytes(bytes[off..off + 4].try_into().unwrap());
    let orig = NodeId(u32_at(1));
    let orig_seqnum = SeqNum(u32_at(5));
    let target = NodeId(u32_at(9));
    let tseq_raw = u32_at(13);
    let target_seqnum = (tseq_raw != UNKNOWN_SEQNUM).then_some(SeqNum(tseq_raw));
    let hop_count = bytes[17];
    let ttl = bytes[18];
    let n = u16::from_be_bytes([bytes[19], bytes[20]]) as usize;
    let payload_size = u16::from_be_bytes([bytes[21], bytes[22]]);

    let body_len = HEADER_LEN + ELEMENT_LEN * n;
    if bytes.len() < body_len {
        return Err(DecodeError::Truncated {
            offset: bytes.len(),
        });
    }
    if bytes.len() > body_len {
        return Err(DecodeError::BadLength { offset: body_len });
    }

    let mut msg = Message::new(kind, orig, orig_seqnum, target);
    msg.target_seqnum = target_seqnum;
    msg.hop_count = hop_count;
    msg.ttl = ttl;
    msg.payload_size = payload_size;
    for i in 0..n {
        let off = HEADER_LEN + ELEMENT_LEN * i;
        let addr = NodeId(u32_at(off));
        let seq = SeqNum(u32_at(off + 4));
        let trailer = bytes[off + 8];
        match kind {
            MsgKind::Rerr => msg.unreachable.push((addr, seq)),
            _ => msg.accumulated.push(AddressBlock {
                addr,
                seqnum: seq,
                hop_distance: trailer,
            }),
        }
    }
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn data_header_hand_layout() {
        let mut m = Message::new(MsgKind::Data, NodeId(1), SeqNum(0), NodeId(10));
        m.ttl = 32;
        m.payload_size = 512;
        let bytes = encode(&m);
        #[rustfmt::skip]
        let expected: [u8; 23] = [
            0x05,
            0x00, 0x00, 0x00, 0x01,
            0x00, 0x00, 0x00, 0x00,
            0x00, 0x00, 0x00, 0x0A,
            0xFF, 0xFF, 0xFF, 0xFF,
            0x00,
            0x20,
            0x00, 0x00,
            0x02, 0x00,
        ];
        assert_eq!(bytes, expected);
        assert_eq!(decode(&bytes).unwrap(), m);
    }

    #[test]
    fn rreq_with_blocks_hand_layout() {
        let mut m = Message::new(MsgKind::Rreq, NodeId(1), SeqNum(42), NodeId(10));
        m.hop_count = 2;
        m.ttl = 30;
        m.accumulated = vec![
            AddressBlock {
                addr: NodeId(2),
                seqnum: SeqNum(7),
                hop_distance: 1,
            },
            AddressBlock {
                addr: NodeId(6),
                seqnum: SeqNum(9),
                hop_distance: 0,
            },
        ];
        let bytes = encode(&m);
        assert_eq!(bytes.len(), 41);
        assert_eq!(bytes[0], 0x01);
        assert_eq!(&bytes[19..21], &[0x00, 0x02]);
        assert_eq!(&bytes[23..32], &[0, 0, 0, 2, 0, 0, 0, 7, 1]);
        assert_eq!(&bytes[32..41], &[0, 0, 0, 6, 0, 0, 0, 9, 0]);
        assert_eq!(decode(&bytes).unwrap(), m);
    }

    #[test]
    fn every_kind_round_trips_with_empty_lists() {
        for kind in [
            MsgKind::Rreq,
            MsgKind::Rrep,
            MsgKind::Rerr,
            MsgKind::Hello,
            MsgKind::Data,
            MsgKind::TableUpdate,
        ] {
            let mut m = Message::new(kind, NodeId(3), SeqNum(11), NodeId(4));
            m.ttl = 5;
            assert_eq!(decode(&encode(&m)).unwrap(), m, "{kind:?}");
        }
    }

    #[test]
    fn empty_input_is_truncated_at_zero() {
        assert_eq!(decode(&[]), Err(DecodeError::Truncated { offset: 0 }));
    }

    #[test]
    fn short_header_is_truncated_at_input_len() {
        let bytes = encode(&Message::new(
            MsgKind::Hello,
            NodeId(0),
            SeqNum(0),
            NodeId(0),
        ));
        assert_eq!(
            decode(&bytes[..10]),
            Err(DecodeError::Truncated { offset: 10 })
        );
    }

    #[test]
    fn bad_kind_names_offset_zero() {
        let mut bytes = encode(&Message::new(
            MsgKind::Hello,
            NodeId(0),
            SeqNum(0),
            NodeId(0),
        ));
        bytes[0] = 0x7F;
        assert_eq!(
            decode(&bytes),
            Err(DecodeError::BadKind {
                offset: 0,
                value: 0x7F
            })
        );
    }

    #[test]
    fn trailing_garbage_is_bad_length_at_first_extra_byte() {
        let mut bytes = encode(&Message::new(
            MsgKind::Hello,
            NodeId(0),
            SeqNum(0),
            NodeId(0),
        ));
        bytes.push(0xAB);
        assert_eq!(decode(&bytes), Err(DecodeError::BadLength { offset: 23 }));
    }

    #[test]
    fn missing_elements_are_truncated() {
        let mut m = Message::new(MsgKind::Rreq, NodeId(1), SeqNum(1), NodeId(2));
        m.accumulated.push(AddressBlock {
            addr: NodeId(3),
            seqnum: SeqNum(2),
            hop_distance: 0,
        });
        let bytes = encode(&m);
        assert_eq!(
            decode(&bytes[..bytes.len() - 1]),
            Err(DecodeError::Truncated { offset: 31 })
        );
    }

    pub(crate) fn arb_message() -> impl Strategy<Value = Message> {
        let kind = prop_oneof![
            Just(MsgKind::Rreq),
            Just(MsgKind::Rrep),
            Just(MsgKind::Rerr),
            Just(MsgKind::Hello),
            Just(MsgKind::Data),
            Just(MsgKind::TableUpdate),
        ];
        let block = (any::<u32>(), any::<u32>(), any::<u8>()).prop_map(|(a, s, h)| AddressBlock {
            addr: NodeId(a),
            seqnum: SeqNum(s),
            hop_distance: h,
        });
        (
            kind,
            any::<u32>(),
            any::<u32>(),
            any::<u32>(),
            proptest::option::of(0u32..u32::MAX),
            any::<u8>(),
            any::<u8>(),
            any::<u16>(),
            proptest::collection::vec(block, 0..12),
        )
            .prop_map(
                |(kind, orig, oseq, target, tseq, hops, ttl, payload, blocks)| {
                    let mut m = Message::new(kind, NodeId(orig), SeqNum(oseq), NodeId(target));
                    m.target_seqnum = tseq.map(SeqNum);
                    m.hop_count = hops;
                    m.ttl = ttl;
                    m.payload_size = payload;
                    match kind {
                        MsgKind::Rerr => {
                            // Distinct addrs are a message invariant; dedup keeps it.
                            let mut seen = std::collections::BTreeSet::new();
                            for b in blocks {
                                if seen.insert(b.addr) {
                                    m.unreachable.push((b.addr, b.seqnum));
                                }
                            }
                        }
                        _ => {
                            let mut seen = std::collections::BTreeSet::new();
                            for b in blocks {
                                if seen.insert(b.addr) {
                                    m.accumulated.push(b);
                                }
                            }
                        }
                    }
                    m
                },
            )
    }

    proptest! {
        #[test]
        fn round_trip_and_declared_length(m in arb_message()) {
            let bytes = encode(&m);
            prop_assert_eq!(bytes.len(), encoded_len(&m));
            let n = u16::from_be_bytes([bytes[19], bytes[20]]) as usize;
            prop_assert_eq!(bytes.len(), HEADER_LEN + ELEMENT_LEN * n);
            let back = decode(&bytes).unwrap();
            let mut expect = m.clone();
            expect.msg_id = 0;
            prop_assert_eq!(back, expect);
        }
    }
}
