//! Node positions over time.
//!
//! Random-waypoint by default: each node pauses, picks a uniform point in
//! the field and a uniform speed, walks there, and repeats. Positions are
//! piecewise-linear closed forms, so sampling needs no movement events.
//! Scenarios with explicit positions are static except for scripted moves.

use crate::rng::{Rng, StreamDomain};
use crate::scenario::Scenario;
use crate::types::NodeId;

#[derive(Debug, Clone, Copy)]
struct Leg {
    t0: f64,
    t1: f64,
    from: (f64, f64),
    to: (f64, f64),
}

impl Leg {
    fn at(&self, t: f64) -> (f64, f64) {
        if t >= self.t1 || self.t1 <= self.t0 {
            return self.to;
        }
        let frac = ((t - self.t0) / (self.t1 - self.t0)).clamp(0.0, 1.0);
        (
            self.from.0 + (self.to.0 - self.from.0) * frac,
            self.from.1 + (self.to.1 - self.from.1) * frac,
        )
    }
}

#[derive(Debug)]
pub struct MobilityModel {
    legs: Vec<Vec<Leg>>,
}

impl MobilityModel {
    pub fn new(sc: &Scenario) -> MobilityModel {
        let legs = match &sc.positions {
            Some(initial) => scripted_legs(sc, initial),
            None => (0..sc.node_count)
                .map(|node| {
                    let rng = Rng::substream(sc.seed, StreamDomain::Mobility, u64::from(node));
                    waypoint_legs(sc, rng)
                })
                .collect(),
        };
        MobilityModel { legs }
    }

    pub fn position(&self, node: NodeId, t: f64) -> (f64, f64) {
        let legs = &self.legs[node.0 as usize];
        // Last leg starting at or before t.
        let idx = legs.partition_point(|l| l.t0 <= t).saturating_sub(1);
        legs[idx].at(t)
    }

    /// Times at which a node arrives at a waypoint, for event bookkeeping.
    pub fn waypoint_times(&self, node: NodeId, horizon: f64) -> Vec<f64> {
        self.legs[node.0 as usize]
            .iter()
            .filter(|l| l.from != l.to && l.t1 < horizon)
            .map(|l| l.t1)
            .collect()
    }
}

fn waypoint_legs(sc: &Scenario, mut rng: Rng) -> Vec<Leg> {
    let mut legs = Vec::new();
    let mut t = 0.0;
    let mut pos = (
        rng.range_f64(0.0, sc.field_x),
        rng.range_f64(0.0, sc.field_y),
    );
    let pause = sc.mobility.pause_time;

    while t <= sc.duration {
        if pause > 0.0 {
            legs.push(Leg {
                t0: t,
                t1: t + pause,
                from: pos,
                to: pos,
            });
            t += pause;
            if t >= sc.duration {
                break;
            }
        }
        let wp = (
            rng.range_f64(0.0, sc.field_x),
            rng.range_f64(0.0, sc.field_y),
        );
        let speed = rng.range_f64(sc.mobility.speed_min, sc.mobility.speed_max);
        let dist = ((wp.0 - pos.0).powi(2) + (wp.1 - pos.1).powi(2)).sqrt();
        if dist < 1e-9 {
            continue;
        }
        let t1 = t + dist / speed;
        legs.push(Leg {
            t0: t,
            t1,
            from: pos,
            to: wp,
        });
        pos = wp;
        t = t1;
    }
    legs.push(Leg {
        t0: t,
        t1: f64::INFINITY,
        from: pos,
        to: pos,
    });
    legs
}

fn scripted_legs(sc: &Scenario, initial: &[(f64, f64)]) -> Vec<Vec<Leg>> {
    let mut per_node: Vec<Vec<Leg>> = vec![Vec::new(); initial.len()];
    for (node, &start) in initial.iter().enumerate() {
        let mut moves: Vec<_> = sc
            .moves
            .iter()
            .filter(|m| m.node.0 as usize == node)
            .collect();
        moves.sort_by(|a, b| a.time.total_cmp(&b.time));
        let legs = &mut per_node[node];
        let mut t = 0.0;
        let mut pos = start;
        for mv in moves {
            let begin = mv.time.max(t);
            if begin > t {
                legs.push(Leg {
                    t0: t,
                    t1: begin,
                    from: pos,
                    to: pos,
                });
            }
            let to = (mv.x, mv.y);
            let dist = ((to.0 - pos.0).powi(2) + (to.1 - pos.1).powi(2)).sqrt();
            let t1 = begin + dist / mv.speed;
            legs.push(Leg {
                t0: begin,
                t1,
                from: pos,
                to,
            });
            pos = to;
            t = t1;
        }
        legs.push(Leg {
            t0: t,
            t1: f64::INFINITY,
            from: pos,
            to: pos,
        });
    }
    per_node
}
