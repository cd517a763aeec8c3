//! The four performance metrics, computed from a trace.
//!
//! - PDF: data packets delivered at their destination over data packets
//!   handed to sources (undefined when nothing was sent).
//! - AEED: mean source-send to destination-receive delay of delivered data
//!   packets, queuing included; undelivered packets are excluded.
//! - RO: routing-packet transmissions (`s` and `f` records of RREQ, RREP,
//!   RERR, HELLO and table updates); every hop-wise transmission counts.
//! - TP: delivered payload bits per second of scenario time.
//!
//! CSV output is one row per run with the header
//! `protocol,nodes,pause_time,seed,pdf,aeed_s,ro,tp_bps,sent,delivered,dropped`;
//! aggregate rows carry `agg` in the seed column plus stddev columns.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::message::MsgKind;
use crate::scenario::Scenario;
use crate::trace::{TraceEvent, TraceRecord};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no delivered packets")]
    NoDeliveredPackets,
    #[error("no reports to aggregate")]
    EmptyInput,
}

/// Delivered / sent, or `None` when no data was sent (undefined, which is
/// not the same as zero).
pub fn compute_pdf(trace: &[TraceRecord]) -> Option<f64> {
    let mut sent = 0u64;
    let mut delivered = 0u64;
    for r in trace {
        if r.kind != MsgKind::Data {
            continue;
        }
        match r.event {
            TraceEvent::Send => sent += 1,
            TraceEvent::Recv => delivered += 1,
            _ => {}
        }
    }
    (sent > 0).then(|| delivered as f64 / sent as f64)
}

/// Mean end-to-end delay of delivered data packets, in seconds.
pub fn compute_aeed(trace: &[TraceRecord]) -> Result<f64, MetricsError> {
    let mut send_times: BTreeMap<u64, f64> = BTreeMap::new();
    for r in trace {
        if r.kind == MsgKind::Data && r.event == TraceEvent::Send {
            send_times.entry(r.msg_id).or_insert(r.time);
        }
    }
    let mut total = 0.0;
    let mut count = 0u64;
    for r in trace {
        if r.kind == MsgKind::Data && r.event == TraceEvent::Recv {
            if let Some(&t0) = send_times.get(&r.msg_id) {
                total += r.time - t0;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(MetricsError::NoDeliveredPackets);
    }
    Ok(total / count as f64)
}

/// Total routing-packet transmissions.
pub fn compute_ro(trace: &[TraceRecord]) -> u64 {
    trace
        .iter()
        .filter(|r| {
            r.kind.is_routing() && matches!(r.event, TraceEvent::Send | TraceEvent::Forward)
        })
        .count() as u64
}

/// Delivered payload bits per second over the scenario duration.
pub fn compute_tp(trace: &[TraceRecord], duration: f64) -> f64 {
    debug_assert!(duration > 0.0);
    let bits: u64 = trace
        .iter()
        .filter(|r| r.kind == MsgKind::Data && r.event == TraceEvent::Recv)
        .map(|r| u64::from(r.size) * 8)
        .sum();
    bits as f64 / duration
}

/// Everything a single run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub protocol: String,
    pub nodes: u32,
    pub pause_time: f64,
    pub seed: u64,
    pub duration: f64,
    pub pdf: Option<f64>,
    pub aeed: Option<f64>,
    pub ro: u64,
    pub tp: f64,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub data_dropped: u64,
}

impl MetricsReport {
    pub fn from_trace(trace: &[TraceRecord], sc: &Scenario) -> MetricsReport {
        let mut sent = 0u64;
        let mut delivered = 0u64;
        let mut dropped = 0u64;
        for r in trace {
            if r.kind != MsgKind::Data {
                continue;
            }
            match r.event {
                TraceEvent::Send => sent += 1,
                TraceEvent::Recv => delivered += 1,
                TraceEvent::Drop => dropped += 1,
                TraceEvent::Forward => {}
            }
        }
        MetricsReport {
            protocol: sc.protocol.to_string(),
            nodes: sc.node_count,
            pause_time: sc.mobility.pause_time,
            seed: sc.seed,
            duration: sc.duration,
            pdf: compute_pdf(trace),
            aeed: compute_aeed(trace).ok(),
            ro: compute_ro(trace),
            tp: compute_tp(trace, sc.duration),
            data_sent: sent,
            data_delivered: delivered,
            data_dropped: dropped,
        }
    }
}

/// Sample statistics for one metric across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

fn stat(values: &[f64]) -> Option<Stat> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() < 2 {
        0.0
    } else {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(Stat {
        mean,
        stddev: var.sqrt(),
        min,
        max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub pdf: Option<Stat>,
    /// Runs whose pdf was undefined and therefore excluded.
    pub pdf_excluded: usize,
    pub aeed: Option<Stat>,
    pub aeed_excluded: usize,
    pub ro: Stat,
    pub tp: Stat,
}

/// Exact sample statistics over homogeneous runs (same scenario, varying
/// seed). Undefined values are excluded and counted.
pub fn aggregate(reports: &[MetricsReport]) -> Result<Aggregate, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let pdfs: Vec<f64> = reports.iter().filter_map(|r| r.pdf).collect();
    let aeeds: Vec<f64> = reports.iter().filter_map(|r| r.aeed).collect();
    let ros: Vec<f64> = reports.iter().map(|r| r.ro as f64).collect();
    let tps: Vec<f64> = reports.iter().map(|r| r.tp).collect();
    Ok(Aggregate {
        pdf: stat(&pdfs),
        pdf_excluded: reports.len() - pdfs.len(),
        aeed: stat(&aeeds),
        aeed_excluded: reports.len() - aeeds.len(),
        ro: stat(&ros).expect("nonempty"),
        tp: stat(&tps).expect("nonempty"),
    })
}

pub const CSV_HEADER: &str =
    "protocol,nodes,pause_time,seed,pdf,aeed_s,ro,tp_bps,sent,delivered,dropped";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn csv_row(r: &MetricsReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{:.3},{},{},{}",
        r.protocol,
        r.nodes,
        r.pause_time,
        r.seed,
        fmt_opt(r.pdf),
        fmt_opt(r.aeed),
        r.ro,
        r.tp,
        r.data_sent,
        r.data_delivered,
        r.data_dropped
    )
}

/// Aggregate row for one (protocol, pause) group: seed column says `agg`,
/// metric columns hold means, and four stddev columns are appended.
pub fn csv_aggregate_row(protocol: &str, nodes: u32, pause_time: f64, agg: &Aggregate) -> String {
    format!(
        "{},{},{},agg,{},{},{:.3},{:.3},,,,{},{},{:.3},{:.3}",
        protocol,
        nodes,
        pause_time,
        fmt_opt(agg.pdf.map(|s| s.mean)),
        fmt_opt(agg.aeed.map(|s| s.mean)),
        agg.ro.mean,
        agg.tp.mean,
        fmt_opt(agg.pdf.map(|s| s.stddev)),
        fmt_opt(agg.aeed.map(|s| s.stddev)),
        agg.ro.stddev,
        agg.tp.stddev
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::router::DropReason;
    use crate::types::NodeId;

    fn data_rec(event: TraceEvent, time: f64, node: u32, msg_id: u64, size: u32) -> TraceRecord {
        TraceRecord {
            time,
            event,
            node: NodeId(node),
            msg_id,
            kind: MsgKind::Data,
            size,
            src: NodeId(0),
            dst: NodeId(node),
            drop_reason: if event == TraceEvent::Drop {
                Some(DropReason::NoRoute)
            } else {
                None
            },
        }
    }

    fn routing_rec(event: TraceEvent, kind: MsgKind, node: u32, msg_id: u64) -> TraceRecord {
        TraceRecord {
            time: 0.5,
            event,
            node: NodeId(node),
            msg_id,
            kind,
            size: 23,
            src: NodeId(0),
            dst: NodeId(9),
            drop_reason: None,
        }
    }

    /// 100 sent, `delivered` received, each packet delayed by `delay`.
    fn synthetic(delivered: u64, delay: f64) -> Vec<TraceRecord> {
        let mut t = Vec::new();
        for i in 0..100 {
            t.push(data_rec(TraceEvent::Send, i as f64, 5, i, 512));
        }
        for i in 0..delivered {
            t.push(data_rec(TraceEvent::Recv, i as f64 + delay, 5, i, 512));
        }
        t
    }

    #[test]
    fn pdf_is_delivered_over_sent() {
        assert_eq!(compute_pdf(&synthetic(95, 0.01)), Some(0.95));
    }

    #[test]
    fn pdf_without_data_is_undefined() {
        assert_eq!(compute_pdf(&[]), None);
        let only_routing = vec![routing_rec(TraceEvent::Send, MsgKind::Rreq, 0, 1)];
        assert_eq!(compute_pdf(&only_routing), None);
    }

    #[test]
    fn aeed_single_packet() {
        let t = vec![
            data_rec(TraceEvent::Send, 1.0, 3, 1, 512),
            data_rec(TraceEvent::Recv, 1.25, 3, 1, 512),
        ];
        assert!((compute_aeed(&t).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn aeed_is_the_mean_over_delivered() {
        let t = vec![
            data_rec(TraceEvent::Send, 0.0, 3, 1, 512),
            data_rec(TraceEvent::Recv, 0.1, 3, 1, 512),
            data_rec(TraceEvent::Send, 0.0, 3, 2, 512),
            data_rec(TraceEvent::Recv, 0.2, 3, 2, 512),
            data_rec(TraceEvent::Send, 0.0, 3, 3, 512),
            data_rec(TraceEvent::Recv, 0.3, 3, 3, 512),
            data_rec(TraceEvent::Send, 0.0, 3, 4, 512), // never delivered
        ];
        assert!((compute_aeed(&t).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn aeed_with_no_deliveries_is_an_error() {
        let t = vec![data_rec(TraceEvent::Send, 0.0, 3, 1, 512)];
        assert_eq!(compute_aeed(&t), Err(MetricsError::NoDeliveredPackets));
    }

    #[test]
    fn ro_counts_per_transmission_including_forwards() {
        let mut t = vec![routing_rec(TraceEvent::Send, MsgKind::Rreq, 0, 1)];
        for node in 1..=5 {
            t.push(routing_rec(TraceEvent::Forward, MsgKind::Rreq, node, 1));
        }
        assert_eq!(compute_ro(&t), 6);
    }

    #[test]
    fn ro_of_pure_data_trace_is_zero() {
        assert_eq!(compute_ro(&synthetic(50, 0.1)), 0);
    }

    #[test]
    fn ro_is_additive_across_disjoint_segments() {
        let a = vec![routing_rec(TraceEvent::Send, MsgKind::Hello, 0, 1)];
        let b = vec![
            routing_rec(TraceEvent::Send, MsgKind::TableUpdate, 1, 2),
            routing_rec(TraceEvent::Forward, MsgKind::Rerr, 2, 3),
        ];
        let mut joined = a.clone();
        joined.extend(b.clone());
        assert_eq!(compute_ro(&joined), compute_ro(&a) + compute_ro(&b));
    }

    #[test]
    fn tp_is_delivered_bits_over_duration() {
        // 100 x 512 B over 10 s = 40960 bits/s.
        let t = synthetic(100, 0.01);
        assert!((compute_tp(&t, 10.0) - 40_960.0).abs() < 1e-9);
    }

    #[test]
    fn tp_of_zero_deliveries_is_zero() {
        assert_eq!(compute_tp(&synthetic(0, 0.0), 10.0), 0.0);
    }

    #[test]
    fn pdf_invariant_under_reorder_within_equal_timestamps() {
        let mut t = synthetic(95, 0.0);
        let before = compute_pdf(&t);
        // All recv records share their send's timestamp; reversing the
        // whole equal-time tail must change nothing.
        t.reverse();
        assert_eq!(compute_pdf(&t), before);
    }

    #[test]
    fn aggregate_mean_and_sample_stddev() {
        let mk = |pdf: f64| MetricsReport {
            protocol: "dymo".into(),
            nodes: 40,
            pause_time: 0.0,
            seed: 1,
            duration: 10.0,
            pdf: Some(pdf),
            aeed: Some(0.2),
            ro: 10,
            tp: 100.0,
            data_sent: 10,
            data_delivered: 9,
            data_dropped: 1,
        };
        let agg = aggregate(&[mk(0.9), mk(0.9), mk(0.9)]).unwrap();
        let pdf = agg.pdf.unwrap();
        assert!((pdf.mean - 0.9).abs() < 1e-12);
        assert_eq!(pdf.stddev, 0.0);

        let agg = aggregate(&[mk(0.8), mk(1.0)]).unwrap();
        let pdf = agg.pdf.unwrap();
        assert!((pdf.mean - 0.9).abs() < 1e-12);
        assert!((pdf.stddev - 0.1414).abs() < 1e-3, "{}", pdf.stddev);
        assert_eq!((pdf.min, pdf.max), (0.8, 1.0));
    }

    #[test]
    fn aggregate_excludes_undefined_pdfs_with_a_count() {
        let mut a = MetricsReport {
            protocol: "dymo".into(),
            nodes: 40,
            pause_time: 0.0,
            seed: 1,
            duration: 10.0,
            pdf: None,
            aeed: None,
            ro: 10,
            tp: 0.0,
            data_sent: 0,
            data_delivered: 0,
            data_dropped: 0,
        };
        let b = MetricsReport {
            pdf: Some(0.5),
            ..a.clone()
        };
        a.seed = 2;
        let agg = aggregate(&[a, b]).unwrap();
        assert_eq!(agg.pdf_excluded, 1);
        assert!((agg.pdf.unwrap().mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn aggregate_of_nothing_is_an_error() {
        assert_eq!(aggregate(&[]).unwrap_err(), MetricsError::EmptyInput);
    }

    #[test]
    fn concatenated_flows_combine_with_correct_weights() {
        // Flow A: 10 sent, 8 delivered at delay 0.1; flow B: 30 sent, 15
        // delivered at delay 0.3 (distinct msg_ids).
        let mut a = Vec::new();
        for i in 0..10u64 {
            a.push(data_rec(TraceEvent::Send, i as f64, 1, i, 512));
        }
        for i in 0..8u64 {
            a.push(data_rec(TraceEvent::Recv, i as f64 + 0.1, 1, i, 512));
        }
        let mut b = Vec::new();
        for i in 0..30u64 {
            b.push(data_rec(TraceEvent::Send, i as f64, 2, 1000 + i, 512));
        }
        for i in 0..15u64 {
            b.push(data_rec(TraceEvent::Recv, i as f64 + 0.3, 2, 1000 + i, 512));
        }
        let mut joined = a.clone();
        joined.extend(b.clone());

        let pdf_a = compute_pdf(&a).unwrap();
        let pdf_b = compute_pdf(&b).unwrap();
        let expected_pdf = (pdf_a * 10.0 + pdf_b * 30.0) / 40.0;
        assert!((compute_pdf(&joined).unwrap() - expected_pdf).abs() < 1e-12);

        let aeed_a = compute_aeed(&a).unwrap();
        let aeed_b = compute_aeed(&b).unwrap();
        let expected_aeed = (aeed_a * 8.0 + aeed_b * 15.0) / 23.0;
        assert!((compute_aeed(&joined).unwrap() - expected_aeed).abs() < 1e-12);
    }
}
