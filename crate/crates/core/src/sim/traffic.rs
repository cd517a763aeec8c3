//! Constant-bit-rate traffic sources.

use crate::rng::Rng;
use crate::scenario::{Flow, Scenario};

/// Emission k of a flow happens at exactly `start + k * interval`.
pub fn emission_time(flow: &Flow, k: u64) -> f64 {
    flow.start + k as f64 * flow.interval
}

/// Number of packets a flow emits before `stop` (exclusive).
pub fn emission_count(flow: &Flow) -> u64 {
    let mut k = 0;
    while emission_time(flow, k) < flow.stop {
        k += 1;
    }
    k
}

/// Explicit flows plus any randomly generated ones, in a fixed order. The
/// generated flows draw endpoints and staggered starts from the dedicated
/// traffic substream.
pub fn resolve_flows(sc: &Scenario, rng: &mut Rng) -> Vec<Flow> {
    let mut flows = sc.flows.clone();
    for _ in 0..sc.random_flows {
        let src = rng.below(u64::from(sc.node_count)) as u32;
        let mut dst = rng.below(u64::from(sc.node_count) - 1) as u32;
        if dst >= src {
            dst += 1;
        }
        let start = rng.range_f64(0.0, sc.duration.min(10.0));
        flows.push(Flow {
            src: crate::types::NodeId(src),
            dst: crate::types::NodeId(dst),
            packet_size: sc.packet_size,
            interval: sc.cbr_interval,
            start,
            stop: sc.duration,
        });
    }
    flows
}
