//! Node identity and sequence numbers.

use std::fmt;

/// Identity of a node within one scenario; ids are dense in `0..node_count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Route-freshness counter. Wraps at 2^32 and is compared circularly, so the
/// derived `Ord` is for container keys only; protocol freshness must go
/// through [`seqnum_compare`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SeqNum(pub u32);

impl SeqNum {
    #[inline]
    pub fn incremented(self) -> SeqNum {
        SeqNum(self.0.wrapping_add(1))
    }
}

impl fmt::Display for SeqNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Outcome of comparing an incoming sequence number against a stored one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqCmp {
    Superior,
    Same,
    Inferior,
}

/// Circular comparison: equal values are `Same`, otherwise `incoming` is
/// `Superior` exactly when the signed 32-bit interpretation of
/// `incoming - existing` is positive. At a separation of exactly 2^31 both
/// directions read `Inferior`; runs stay far below 2^31 originations.
#[inline]
pub fn seqnum_compare(incoming: SeqNum, existing: SeqNum) -> SeqCmp {
    if incoming == existing {
        SeqCmp::Same
    } else if (incoming.0.wrapping_sub(existing.0) as i32) > 0 {
        SeqCmp::Superior
    } else {
        SeqCmp::Inferior
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: circular distance in i64 arithmetic, positive in
    /// (0, 2^31) means superior.
    fn oracle(incoming: u32, existing: u32) -> SeqCmp {
        let d = (i64::from(incoming) - i64::from(existing)).rem_euclid(1 << 32);
        if d == 0 {
            SeqCmp::Same
        } else if d < (1 << 31) {
            SeqCmp::Superior
        } else {
            SeqCmp::Inferior
        }
    }

    #[test]
    fn monotone_case() {
        assert_eq!(seqnum_compare(SeqNum(5), SeqNum(3)), SeqCmp::Superior);
    }

    #[test]
    fn identity_case() {
        assert_eq!(seqnum_compare(SeqNum(7), SeqNum(7)), SeqCmp::Same);
    }

    #[test]
    fn wraparound_grid_matches_signed_difference_oracle() {
        // Grid of value pairs near 0 and near 2^32 - 1.
        let edge: Vec<u32> = (0..8).chain((0..8).map(|k| u32::MAX - k)).collect();
        for &a in &edge {
            for &b in &edge {
                assert_eq!(
                    seqnum_compare(SeqNum(a), SeqNum(b)),
                    oracle(a, b),
                    "a={a} b={b}"
                );
            }
        }
        // The motivating pair: 1 is fresher than a value just below wrap.
        assert_eq!(
            seqnum_compare(SeqNum(1), SeqNum(4_294_967_290)),
            SeqCmp::Superior
        );
    }

    proptest! {
        #[test]
        fn trichotomy_and_antisymmetry(a: u32, b: u32) {
            let ab = seqnum_compare(SeqNum(a), SeqNum(b));
            let ba = seqnum_compare(SeqNum(b), SeqNum(a));
            if a == b {
                prop_assert_eq!(ab, SeqCmp::Same);
                prop_assert_eq!(ba, SeqCmp::Same);
            } else if a.wrapping_sub(b) != 1 << 31 {
                // Off the ambiguous half-ring point the relation is antisymmetric.
                prop_assert_ne!(ab, SeqCmp::Same);
                prop_assert_ne!(ba, SeqCmp::Same);
                prop_assert_ne!(ab, ba);
            }
            prop_assert_eq!(ab, oracle(a, b));
        }
    }

    #[test]
    fn half_ring_separation_reads_inferior_both_ways() {
        let a = SeqNum(0);
        let b = SeqNum(1 << 31);
        assert_eq!(seqnum_compare(a, b), SeqCmp::Inferior);
        assert_eq!(seqnum_compare(b, a), SeqCmp::Inferior);
    }
}
