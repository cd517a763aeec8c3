//! Ground-truth event trace.
//!
//! One record per line, tab separated:
//!
//! ```text
//! event_char  time  node  msg_id  kind  size  src  dst  [drop_reason]
//! ```
//!
//! with `event_char` one of `s` (send), `r` (recv at final destination),
//! `f` (forward) and `d` (drop), and `time` printed with six decimal
//! places. Data records carry the payload size; control records carry the
//! encoded wire size. `s` for a data packet is logged when the source
//! accepts it from the traffic generator, so end-to-end delay includes any
//! time spent buffered while a route is found.

use std::fmt::Write as _;

use thiserror::Error;

use crate::message::MsgKind;
use crate::router::DropReason;
use crate::types::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Send,
    Recv,
    Forward,
    Drop,
}

impl TraceEvent {
    pub fn as_char(self) -> char {
        match self {
            TraceEvent::Send => 's',
            TraceEvent::Recv => 'r',
            TraceEvent::Forward => 'f',
            TraceEvent::Drop => 'd',
        }
    }

    pub fn from_char(c: char) -> Option<TraceEvent> {
        match c {
            's' => Some(TraceEvent::Send),
            'r' => Some(TraceEvent::Recv),
            'f' => Some(TraceEvent::Forward),
            'd' => Some(TraceEvent::Drop),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub event: TraceEvent,
    pub node: NodeId,
    pub msg_id: u64,
    pub kind: MsgKind,
    pub size: u32,
    pub src: NodeId,
    pub dst: NodeId,
    pub drop_reason: Option<DropReason>,
}

fn kind_from_str(s: &str) -> Option<MsgKind> {
    match s {
        "RREQ" => Some(MsgKind::Rreq),
        "RREP" => Some(MsgKind::Rrep),
        "RERR" => Some(MsgKind::Rerr),
        "HELLO" => Some(MsgKind::Hello),
        "DATA" => Some(MsgKind::Data),
        "TUPD" => Some(MsgKind::TableUpdate),
        _ => None,
    }
}

fn reason_from_str(s: &str) -> Option<DropReason> {
    match s {
        "drop_tail" => Some(DropReason::DropTail),
        "buffer_full" => Some(DropReason::BufferFull),
        "no_route" => Some(DropReason::NoRoute),
        "ttl_expired" => Some(DropReason::TtlExpired),
        "link_break" => Some(DropReason::LinkBreak),
        _ => None,
    }
}

pub fn format_record(r: &TraceRecord) -> String {
    let mut line = String::new();
    write!(
        line,
        "{}\t{:.6}\t{}\t{}\t{}\t{}\t{}\t{}",
        r.event.as_char(),
        r.time,
        r.node,
        r.msg_id,
        r.kind.as_str(),
        r.size,
        r.src,
        r.dst
    )
    .unwrap();
    if let Some(reason) = r.drop_reason {
        write!(line, "\t{reason}").unwrap();
    }
    line
}

pub fn format_trace(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format_record(r));
        out.push('\n');
    }
    out
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("trace line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

fn malformed(line: usize, reason: impl Into<String>) -> TraceError {
    TraceError::Malformed {
        line,
        reason: reason.into(),
    }
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if !(8..=9).contains(&fields.len()) {
            return Err(malformed(
                line,
                format!("expected 8 or 9 fields, got {}", fields.len()),
            ));
        }
        let event = fields[0]
            .chars()
            .next()
            .and_then(TraceEvent::from_char)
            .filter(|_| fields[0].len() == 1)
            .ok_or_else(|| malformed(line, format!("bad event '{}'", fields[0])))?;
        let time: f64 = fields[1]
            .parse()
            .map_err(|_| malformed(line, format!("bad time '{}'", fields[1])))?;
        let node = fields[2]
            .parse()
            .map(NodeId)
            .map_err(|_| malformed(line, format!("bad node '{}'", fields[2])))?;
        let msg_id: u64 = fields[3]
            .parse()
            .map_err(|_| malformed(line, format!("bad msg_id '{}'", fields[3])))?;
        let kind = kind_from_str(fields[4])
            .ok_or_else(|| malformed(line, format!("bad kind '{}'", fields[4])))?;
        let size: u32 = fields[5]
            .parse()
            .map_err(|_| malformed(line, format!("bad size '{}'", fields[5])))?;
        let src = fields[6]
            .parse()
            .map(NodeId)
            .map_err(|_| malformed(line, format!("bad src '{}'", fields[6])))?;
        let dst = fields[7]
            .parse()
            .map(NodeId)
            .map_err(|_| malformed(line, format!("bad dst '{}'", fields[7])))?;
        let drop_reason = if fields.len() == 9 {
            Some(
                reason_from_str(fields[8])
                    .ok_or_else(|| malformed(line, format!("bad drop reason '{}'", fields[8])))?,
            )
        } else {
            None
        };
        if (event == TraceEvent::Drop) != drop_reason.is_some() {
            return Err(malformed(line, "drop reason present iff event is d"));
        }
        out.push(TraceRecord {
            time,
            event,
            node,
            msg_id,
            kind,
            size,
            src,
            dst,
            drop_reason,
        });
    }
    Ok(out)
}

/// Per-packet lifecycle check. Data packets must show exactly one send and
/// at most one terminal outcome (recv at the destination or a drop);
/// control messages must not be sent more than once per msg_id.
pub fn validate_lifecycles(records: &[TraceRecord]) -> Result<(), TraceError> {
    use std::collections::BTreeMap;
    #[derive(Default)]
    struct Life {
        sends: u32,
        recvs: u32,
        drops: u32,
        is_data: bool,
        first_line: usize,
    }
    let mut lives: BTreeMap<u64, Life> = BTreeMap::new();
    for (idx, r) in records.iter().enumerate() {
        let life = lives.entry(r.msg_id).or_default();
        if life.first_line == 0 {
            life.first_line = idx + 1;
        }
        life.is_data = r.kind == MsgKind::Data;
        match r.event {
            TraceEvent::Send => life.sends += 1,
            TraceEvent::Recv => {
                if r.node != r.dst {
                    return Err(malformed(idx + 1, "recv away from destination"));
                }
                life.recvs += 1;
            }
            TraceEvent::Forward => {}
            TraceEvent::Drop => life.drops += 1,
        }
    }
    for (id, life) in lives {
        if life.is_data {
            if life.sends != 1 {
                return Err(malformed(
                    life.first_line,
                    format!("data msg {id} has {} sends", life.sends),
                ));
            }
            if life.recvs + life.drops > 1 {
                return Err(malformed(
                    life.first_line,
                    format!("data msg {id} has multiple terminal outcomes"),
                ));
            }
        } else if life.sends > 1 {
            return Err(malformed(
                life.first_line,
                format!("control msg {id} sent {} times", life.sends),
            ));
        }
    }
    Ok(())
}

/// Traversal chains of delivered data packets: `[src, forwarders.., dst]`
/// in time order, keyed by msg_id. Consecutive repeats collapse to one
/// entry (a node retrying after a failed transmission is not a loop; a
/// genuine loop revisits a node with other hops in between and survives).
pub fn delivered_paths(records: &[TraceRecord]) -> Vec<(u64, Vec<NodeId>)> {
    use std::collections::BTreeMap;
    let mut forwards: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
    let mut delivered: Vec<(u64, NodeId, NodeId)> = Vec::new();
    for r in records {
        if r.kind != MsgKind::Data {
            continue;
        }
        match r.event {
            TraceEvent::Forward => forwards.entry(r.msg_id).or_default().push(r.node),
            TraceEvent::Recv => delivered.push((r.msg_id, r.src, r.dst)),
            _ => {}
        }
    }
    delivered
        .into_iter()
        .map(|(id, src, dst)| {
            let mut path = vec![src];
            path.extend(forwards.remove(&id).unwrap_or_default());
            path.push(dst);
            path.dedup();
            (id, path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(event: TraceEvent, time: f64, node: u32, msg_id: u64) -> TraceRecord {
        TraceRecord {
            time,
            event,
            node: NodeId(node),
            msg_id,
            kind: MsgKind::Data,
            size: 512,
            src: NodeId(1),
            dst: NodeId(10),
            drop_reason: if event == TraceEvent::Drop {
                Some(DropReason::NoRoute)
            } else {
                None
            },
        }
    }

    #[test]
    fn format_parse_round_trip() {
        let records = vec![
            rec(TraceEvent::Send, 1.0, 1, 7),
            rec(TraceEvent::Forward, 1.00213, 2, 7),
            rec(TraceEvent::Recv, 1.004261, 10, 7),
            rec(TraceEvent::Drop, 2.5, 1, 8),
        ];
        let text = format_trace(&records);
        assert_eq!(parse_trace(&text).unwrap(), records);
        assert!(text
            .lines()
            .next()
            .unwrap()
            .starts_with("s\t1.000000\t1\t7\tDATA\t512\t1\t10"));
    }

    #[test]
    fn malformed_lines_name_their_line_number() {
        let err = parse_trace("s\t1.0\t1\t7\tDATA\t512\t1\t10\nq\t1.0\t1\t7\tDATA\t512\t1\t10\n")
            .unwrap_err();
        assert_eq!(
            err,
            TraceError::Malformed {
                line: 2,
                reason: "bad event 'q'".into()
            }
        );
    }

    #[test]
    fn lifecycle_rejects_double_send() {
        let records = vec![
            rec(TraceEvent::Send, 1.0, 1, 7),
            rec(TraceEvent::Send, 1.1, 1, 7),
        ];
        assert!(validate_lifecycles(&records).is_err());
    }

    #[test]
    fn lifecycle_rejects_recv_after_drop() {
        let records = vec![
            rec(TraceEvent::Send, 1.0, 1, 7),
            rec(TraceEvent::Drop, 1.1, 2, 7),
            rec(TraceEvent::Recv, 1.2, 10, 7),
        ];
        assert!(validate_lifecycles(&records).is_err());
    }

    #[test]
    fn paths_are_src_forwarders_dst() {
        let records = vec![
            rec(TraceEvent::Send, 1.0, 1, 7),
            rec(TraceEvent::Forward, 1.1, 2, 7),
            rec(TraceEvent::Forward, 1.2, 6, 7),
            rec(TraceEvent::Recv, 1.3, 10, 7),
        ];
        let paths = delivered_paths(&records);
        assert_eq!(
            paths,
            vec![(7, vec![NodeId(1), NodeId(2), NodeId(6), NodeId(10)])]
        );
    }

    #[test]
    fn retransmissions_collapse_but_loops_survive() {
        let retry = vec![
            rec(TraceEvent::Send, 1.0, 1, 7),
            rec(TraceEvent::Forward, 1.1, 2, 7),
            rec(TraceEvent::Forward, 1.2, 2, 7), // failed, then retried
            rec(TraceEvent::Forward, 1.3, 5, 7),
            rec(TraceEvent::Recv, 1.4, 10, 7),
        ];
        assert_eq!(
            delivered_paths(&retry)[0].1,
            vec![NodeId(1), NodeId(2), NodeId(5), NodeId(10)]
        );

        let looped = vec![
            rec(TraceEvent::Send, 1.0, 1, 7),
            rec(TraceEvent::Forward, 1.1, 2, 7),
            rec(TraceEvent::Forward, 1.2, 5, 7),
            rec(TraceEvent::Forward, 1.3, 2, 7), // genuine revisit
            rec(TraceEvent::Recv, 1.4, 10, 7),
        ];
        let path = &delivered_paths(&looped)[0].1;
        let mut sorted = path.clone();
        sorted.sort();
        sorted.dedup();
        assert!(sorted.len() < path.len(), "loop remains visible: {path:?}");
    }
}
