//! Shared scenario builders and trace queries for integration tests.
#![allow(dead_code)] // each test target uses a different subset

use manetsim::metrics::MetricsReport;
use manetsim::rng::Rng;
use manetsim::scenario::{Flow, MobilityConfig, Protocol, Scenario, ScriptedMove};
use manetsim::sim::{self, SimResult};
use manetsim::trace::{self, TraceEvent, TraceRecord};
use manetsim::{MsgKind, NodeId};

/// Ten-node topology with the short chain 1-2-6-10, a recovery relay 5 in
/// range of both 2 and 6, and bystanders that hear the flood without
/// offering a shorter path. Node 0 is parked far away so node labels 1..10
/// can be used directly.
pub fn figure_topology(protocol: Protocol) -> Scenario {
    Scenario {
        node_count: 11,
        field_x: 2000.0,
        field_y: 2000.0,
        radio_range: 100.0,
        duration: 20.0,
        protocol,
        positions: Some(vec![
            (1800.0, 1800.0), // 0: parked, out of everyone's range
            (0.0, 0.0),       // 1: source
            (90.0, 0.0),      // 2
            (-80.0, 50.0),    // 3: hangs off the source
            (135.0, 140.0),   // 4: hangs off node 5
            (135.0, 60.0),    // 5: bridges 2 and 6
            (180.0, 0.0),     // 6
            (360.0, 0.0),     // 7: behind the destination
            (450.0, 0.0),     // 8
            (540.0, 0.0),     // 9
            (270.0, 0.0),     // 10: destination
        ]),
        flows: vec![Flow {
            src: NodeId(1),
            dst: NodeId(10),
            packet_size: 512,
            interval: 0.1,
            start: 0.5,
            stop: 15.0,
        }],
        ..Scenario::default()
    }
}

/// Figure topology plus a scripted walk of node 6 that severs only the
/// 2-6 link (5-6 and 6-10 stay up), starting at t=2.
pub fn figure_break_scenario(protocol: Protocol) -> Scenario {
    let mut sc = figure_topology(protocol);
    sc.moves.push(ScriptedMove {
        node: NodeId(6),
        time: 2.0,
        x: 225.0,
        y: 20.0,
        speed: 10.0,
    });
    sc
}

pub fn run(sc: &Scenario) -> SimResult {
    sim::run(sc).expect("scenario must run")
}

pub fn report(sc: &Scenario) -> MetricsReport {
    let result = run(sc);
    trace::validate_lifecycles(&result.trace).expect("trace lifecycles");
    MetricsReport::from_trace(&result.trace, sc)
}

/// Nodes that transmitted (s or f) a message of `kind`, in record order.
pub fn transmitters(records: &[TraceRecord], kind: MsgKind) -> Vec<NodeId> {
    records
        .iter()
        .filter(|r| r.kind == kind && matches!(r.event, TraceEvent::Send | TraceEvent::Forward))
        .map(|r| r.node)
        .collect()
}

pub fn count_kind(records: &[TraceRecord], kind: MsgKind, event: TraceEvent) -> usize {
    records
        .iter()
        .filter(|r| r.kind == kind && r.event == event)
        .count()
}

/// Random connected unit-disk graph: node positions plus adjacency.
pub struct DiskGraph {
    pub positions: Vec<(f64, f64)>,
    pub adj: Vec<Vec<usize>>,
}

pub fn random_connected_disk_graph(
    rng: &mut Rng,
    nodes: usize,
    field: f64,
    range: f64,
) -> DiskGraph {
    loop {
        let positions: Vec<(f64, f64)> = (0..nodes)
            .map(|_| (rng.range_f64(0.0, field), rng.range_f64(0.0, field)))
            .collect();
        let mut adj = vec![Vec::new(); nodes];
        for i in 0..nodes {
            for j in i + 1..nodes {
                let dx = positions[i].0 - positions[j].0;
                let dy = positions[i].1 - positions[j].1;
                if dx * dx + dy * dy <= range * range {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        let graph = DiskGraph { positions, adj };
        if graph.bfs_hops(0).iter().all(|d| d.is_some()) {
            return graph;
        }
    }
}

impl DiskGraph {
    /// Independent shortest-path oracle.
    pub fn bfs_hops(&self, from: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.adj.len()];
        let mut queue = std::collections::VecDeque::new();
        dist[from] = Some(0);
        queue.push_back(from);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(dist[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn scenario(&self, field: f64, range: f64, protocol: Protocol) -> Scenario {
        Scenario {
            node_count: self.positions.len() as u32,
            field_x: field,
            field_y: field,
            radio_range: range,
            duration: 10.0,
            protocol,
            positions: Some(self.positions.clone()),
            mobility: MobilityConfig {
                speed_min: 1.0,
                speed_max: 1.0,
                pause_time: 0.0,
            },
            ..Scenario::default()
        }
    }
}
