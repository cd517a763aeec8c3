//! The discrete-event engine.
//!
//! One run is a pure function of the scenario: events are processed in
//! strictly non-decreasing (time, insertion) order, every container walk is
//! over ordered structures, and all randomness comes from seeded substreams,
//! so two runs of the same scenario produce byte-identical traces.
//!
//! The engine knows nothing about any particular protocol. It feeds each
//! node's router with received frames, link-failure feedback, timers and a
//! fixed-cadence tick, and executes the returned actions: frames go through
//! the per-sender drop-tail transmit queue onto a unit-disk radio, timers
//! into the event queue, drops and deliveries into the trace.

mod event;
pub mod mobility;
pub mod queue;
pub mod radio;
pub mod traffic;

use event::{EventKind, EventQueue};
pub use mobility::MobilityModel;
use queue::{Frame, FrameDest, Submit, TxQueue};

use std::collections::BTreeSet;

use crate::aodv::AodvRouter;
use crate::dsdv::DsdvRouter;
use crate::dsr::DsrRouter;
use crate::dymo::DymoRouter;
use crate::message::{Message, MsgKind};
use crate::rng::{Rng, StreamDomain};
use crate::router::{DropReason, Router, RouterAction};
use crate::scenario::{ConfigError, Flow, Protocol, Scenario};
use crate::table::RouteEntry;
use crate::trace::{TraceEvent, TraceRecord};
use crate::types::NodeId;

/// Cadence of the per-router `on_tick` callback.
pub const TICK_INTERVAL: f64 = 0.1;

#[derive(Debug)]
pub struct SimResult {
    pub trace: Vec<TraceRecord>,
    /// Final routing state per node.
    pub tables: Vec<Vec<RouteEntry>>,
    pub duration: f64,
    /// Flows actually driven (explicit plus generated).
    pub flows: Vec<Flow>,
}

pub fn run(sc: &Scenario) -> Result<SimResult, ConfigError> {
    sc.validate()?;
    Engine::new(sc).run()
}

fn build_router(sc: &Scenario, node: NodeId) -> Box<dyn Router> {
    let mut phase_rng = Rng::substream(sc.seed, StreamDomain::Protocol, u64::from(node.0));
    match sc.protocol {
        Protocol::Dymo => {
            let mut r = DymoRouter::new(node, sc.params.dymo());
            if let Some(&(_, units)) = sc.node_energy.iter().find(|(id, _)| *id == node) {
                r.energy = units;
            }
            Box::new(r)
        }
        Protocol::Aodv => {
            let cfg = sc.params.aodv();
            let phase = phase_rng.range_f64(0.0, cfg.hello_interval);
            Box::new(AodvRouter::new(node, cfg, phase))
        }
        Protocol::Dsdv => {
            let cfg = sc.params.dsdv();
            let phase = phase_rng.range_f64(0.0, cfg.periodic_update);
            Box::new(DsdvRouter::new(node, cfg, phase))
        }
        Protocol::Dsr => Box::new(DsrRouter::new(node, sc.params.dsr())),
    }
}

struct Engine<'a> {
    sc: &'a Scenario,
    mobility: MobilityModel,
    routers: Vec<Box<dyn Router>>,
    queues: Vec<TxQueue>,
    events: EventQueue,
    trace: Vec<TraceRecord>,
    /// Message ids that have been sent at least once; first transmission
    /// logs `s`, later ones `f`.
    sent_ids: BTreeSet<u64>,
    flows: Vec<Flow>,
    emitted: Vec<u64>,
    now: f64,
}

impl<'a> Engine<'a> {
    fn new(sc: &'a Scenario) -> Engine<'a> {
        let mut traffic_rng = Rng::substream(sc.seed, StreamDomain::Traffic, 0);
        let flows = traffic::resolve_flows(sc, &mut traffic_rng);
        Engine {
            sc,
            mobility: MobilityModel::new(sc),
            routers: (0..sc.node_count)
                .map(|n| build_router(sc, NodeId(n)))
                .collect(),
            queues: (0..sc.node_count)
                .map(|_| TxQueue::new(sc.queue_capacity))
                .collect(),
            events: EventQueue::new(),
            trace: Vec::new(),
            sent_ids: BTreeSet::new(),
            emitted: vec![0; flows.len()],
            flows,
            now: 0.0,
        }
    }

    fn run(mut self) -> Result<SimResult, ConfigError> {
        let duration = self.sc.duration;
        self.events.push(duration, EventKind::SimEnd);
        self.events.push(0.0, EventKind::Tick { k: 0 });
        for (i, flow) in self.flows.iter().enumerate() {
            if flow.start < flow.stop && flow.start < duration {
                self.events
                    .push(flow.start, EventKind::TrafficEmit { flow: i });
            }
        }
        for node in 0..self.sc.node_count {
            let node = NodeId(node);
            for t in self.mobility.waypoint_times(node, duration) {
                self.events.push(t, EventKind::MobilityWaypoint { node });
            }
        }

        while let Some(ev) = self.events.pop() {
            debug_assert!(ev.time >= self.now, "event causality violated");
            self.now = ev.time;
            match ev.kind {
                EventKind::SimEnd => break,
                EventKind::Tick { k } => self.handle_tick(k)?,
                EventKind::TxComplete { node } => {
                    if let Some(frame) = self.queues[node.0 as usize].complete() {
                        self.start_tx(node, frame)?;
                    }
                }
                EventKind::Receive { node, from, msg } => {
                    let actions = self.routers[node.0 as usize].on_message(msg, from, self.now);
                    self.process_actions(node, actions)?;
                }
                EventKind::LinkBreak {
                    node,
                    neighbor,
                    msg,
                } => {
                    let actions =
                        self.routers[node.0 as usize].on_link_break(neighbor, Some(msg), self.now);
                    self.process_actions(node, actions)?;
                }
                EventKind::TimerFire { node, tag } => {
                    let actions = self.routers[node.0 as usize].on_timer(tag, self.now);
                    self.process_actions(node, actions)?;
                }
                EventKind::MobilityWaypoint { node } => {
                    // Positions are closed-form; arrival needs no work.
                    debug_assert!(node.0 < self.sc.node_count);
                }
                EventKind::TrafficEmit { flow } => self.handle_emit(flow)?,
            }
        }

        Ok(SimResult {
            trace: self.trace,
            tables: self.routers.iter().map(|r| r.routes()).collect(),
            duration,
            flows: self.flows,
        })
    }

    fn handle_tick(&mut self, k: u64) -> Result<(), ConfigError> {
        for node in 0..self.sc.node_count {
            let node = NodeId(node);
            let actions = self.routers[node.0 as usize].on_tick(self.now);
            self.process_actions(node, actions)?;
        }
        let next = (k + 1) as f64 * TICK_INTERVAL;
        if next < self.sc.duration {
            self.events.push(next, EventKind::Tick { k: k + 1 });
        }
        Ok(())
    }

    fn handle_emit(&mut self, flow_idx: usize) -> Result<(), ConfigError> {
        let flow = self.flows[flow_idx];
        self.emitted[flow_idx] += 1;
        let next = traffic::emission_time(&flow, self.emitted[flow_idx]);
        if next < flow.stop && next < self.sc.duration {
            self.events
                .push(next, EventKind::TrafficEmit { flow: flow_idx });
        }

        let src = flow.src;
        let msg = self.routers[src.0 as usize].new_data(flow.dst, flow.packet_size);
        self.sent_ids.insert(msg.msg_id);
        self.record(TraceEvent::Send, src, &msg);
        if flow.dst == src {
            self.record(TraceEvent::Recv, src, &msg);
            return Ok(());
        }
        let actions = self.routers[src.0 as usize].on_data(msg, self.now);
        self.process_actions(src, actions)
    }

    fn process_actions(
        &mut self,
        node: NodeId,
        actions: Vec<RouterAction>,
    ) -> Result<(), ConfigError> {
        for action in actions {
            match action {
                RouterAction::Broadcast(msg) => {
                    self.submit_frame(
                        node,
                        Frame {
                            msg,
                            dest: FrameDest::Broadcast,
                        },
                    )?;
                }
                RouterAction::Unicast(msg, next_hop) => {
                    radio::check_unicast_target(node, next_hop)?;
                    self.submit_frame(
                        node,
                        Frame {
                            msg,
                            dest: FrameDest::Unicast(next_hop),
                        },
                    )?;
                }
                RouterAction::Deliver(msg) => self.record(TraceEvent::Recv, node, &msg),
                RouterAction::Drop(msg, reason) => self.record_drop(node, &msg, reason),
                RouterAction::SetTimer(time, tag) => {
                    if time < self.sc.duration {
                        self.events
                            .push(time.max(self.now), EventKind::TimerFire { node, tag });
                    }
                }
            }
        }
        Ok(())
    }

    fn submit_frame(&mut self, node: NodeId, frame: Frame) -> Result<(), ConfigError> {
        match self.queues[node.0 as usize].submit(frame) {
            Submit::TransmitNow(frame) => self.start_tx(node, frame),
            Submit::Queued => Ok(()),
            Submit::Rejected(frame) => {
                self.record_drop(node, &frame.msg, DropReason::DropTail);
                Ok(())
            }
        }
    }

    fn start_tx(&mut self, node: NodeId, frame: Frame) -> Result<(), ConfigError> {
        let bytes = radio::frame_bytes(&frame.msg);
        let t_done = self.now + radio::tx_duration(bytes, self.sc.bitrate);
        let msg = frame.msg;

        // Data transmissions by the source are not re-logged; its send was
        // recorded at emission time.
        if !(msg.kind == MsgKind::Data && msg.orig == node) {
            let ev = if self.sent_ids.insert(msg.msg_id) {
                TraceEvent::Send
            } else {
                TraceEvent::Forward
            };
            self.record(ev, node, &msg);
        }

        self.events.push(t_done, EventKind::TxComplete { node });
        // Geometry is fixed at transmit start.
        let tx_pos = self.mobility.position(node, self.now);
        match frame.dest {
            FrameDest::Broadcast => {
                for other in 0..self.sc.node_count {
                    let other = NodeId(other);
                    if other == node {
                        continue;
                    }
                    let rx_pos = self.mobility.position(other, self.now);
                    if radio::in_range(tx_pos, rx_pos, self.sc.radio_range) {
                        self.events.push(
                            t_done,
                            EventKind::Receive {
                                node: other,
                                from: node,
                                msg: msg.clone(),
                            },
                        );
                    }
                }
            }
            FrameDest::Unicast(next_hop) => {
                let rx_pos = self.mobility.position(next_hop, self.now);
                if radio::in_range(tx_pos, rx_pos, self.sc.radio_range) {
                    self.events.push(
                        t_done,
                        EventKind::Receive {
                            node: next_hop,
                            from: node,
                            msg,
                        },
                    );
                } else {
                    self.events.push(
                        t_done,
                        EventKind::LinkBreak {
                            node,
                            neighbor: next_hop,
                            msg,
                        },
                    );
                }
            }
        }
        Ok(())
    }

    fn record(&mut self, event: TraceEvent, node: NodeId, msg: &Message) {
        self.trace.push(TraceRecord {
            time: self.now,
            event,
            node,
            msg_id: msg.msg_id,
            kind: msg.kind,
            size: record_size(msg),
            src: msg.orig,
            dst: msg.target,
            drop_reason: None,
        });
    }

    fn record_drop(&mut self, node: NodeId, msg: &Message, reason: DropReason) {
        self.trace.push(TraceRecord {
            time: self.now,
            event: TraceEvent::Drop,
            node,
            msg_id: msg.msg_id,
            kind: msg.kind,
            size: record_size(msg),
            src: msg.orig,
            dst: msg.target,
            drop_reason: Some(reason),
        });
    }
}

/// Data records report the payload size; control records the wire size.
fn record_size(msg: &Message) -> u32 {
    if msg.kind == MsgKind::Data {
        u32::from(msg.payload_size)
    } else {
        crate::wire::encoded_len(msg) as u32
    }
}
