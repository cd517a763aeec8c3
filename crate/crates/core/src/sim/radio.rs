//! Unit-disk radio with serialized per-sender transmission timing.

use crate::message::{Message, MsgKind};
use crate::scenario::ConfigError;
use crate::types::NodeId;
use crate::wire;

/// Routers must never address a frame to themselves.
pub fn check_unicast_target(node: NodeId, next_hop: NodeId) -> Result<(), ConfigError> {
    if node == next_hop {
        return Err(ConfigError::Invalid {
            field: "unicast".into(),
            reason: format!("node {node} transmitting to itself"),
        });
    }
    Ok(())
}

/// Bytes a frame occupies on the air: the encoded wire size, plus the
/// payload bytes for data packets (carried but not serialized).
pub fn frame_bytes(msg: &Message) -> usize {
    let mut bytes = wire::encoded_len(msg);
    if msg.kind == MsgKind::Data {
        bytes += usize::from(msg.payload_size);
    }
    bytes
}

/// Seconds a frame of `bytes` occupies the sender at `bitrate` bits/s.
pub fn tx_duration(bytes: usize, bitrate: f64) -> f64 {
    bytes as f64 * 8.0 / bitrate
}

/// Reception requires euclidean distance at most `range` (inclusive).
pub fn in_range(a: (f64, f64), b: (f64, f64), range: f64) -> bool {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy <= range * range
}
