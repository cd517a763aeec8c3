//! Run configuration: nodes, field, radio, mobility, traffic, protocol.
//!
//! Scenario files are plain `key = value` lines with `#` comments. Unknown
//! keys are errors so typos cannot silently fall back to defaults. An empty
//! file yields the reference configuration: 40 nodes on an 800 x 800 m
//! field, 250 m radio range, 512-byte CBR packets every 100 ms at 2 Mbps
//! behind a 15-frame drop-tail queue.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::aodv::AodvConfig;
use crate::dsdv::DsdvConfig;
use crate::dsr::DsrConfig;
use crate::dymo::DymoConfig;
use crate::types::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Dymo,
    Aodv,
    Dsdv,
    Dsr,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::Dymo,
        Protocol::Aodv,
        Protocol::Dsdv,
        Protocol::Dsr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Dymo => "dymo",
            Protocol::Aodv => "aodv",
            Protocol::Dsdv => "dsdv",
            Protocol::Dsr => "dsr",
        }
    }

    pub fn parse(s: &str) -> Option<Protocol> {
        match s.to_ascii_lowercase().as_str() {
            "dymo" => Some(Protocol::Dymo),
            "aodv" => Some(Protocol::Aodv),
            "dsdv" => Some(Protocol::Dsdv),
            "dsr" => Some(Protocol::Dsr),
            _ => None,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One CBR flow: fixed-size packets on a fixed interval inside a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub src: NodeId,
    pub dst: NodeId,
    pub packet_size: u16,
    pub interval: f64,
    pub start: f64,
    pub stop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityConfig {
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause_time: f64,
}

/// A scripted relocation: at `time`, the node heads for `(x, y)` at `speed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedMove {
    pub node: NodeId,
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
}

/// Protocol parameter overrides, applied on top of each protocol's defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProtocolParams {
    pub route_timeout: Option<f64>,
    pub rreq_wait: Option<f64>,
    pub rreq_max_retries: Option<u32>,
    pub rreq_ttl: Option<u8>,
    pub buffer_capacity: Option<usize>,
    pub energy_threshold: Option<f64>,
    pub rreq_seen_lifetime: Option<f64>,
    pub hello_interval: Option<f64>,
    pub allowed_hello_loss: Option<u32>,
    pub periodic_update: Option<f64>,
    pub triggered_gap: Option<f64>,
    pub intermediate_rrep: Option<bool>,
}

impl ProtocolParams {
    pub fn dymo(&self) -> DymoConfig {
        let mut c = DymoConfig::default();
        if let Some(v) = self.route_timeout {
            c.route_timeout = v;
        }
        if let Some(v) = self.rreq_wait {
            c.rreq_wait = v;
        }
        if let Some(v) = self.rreq_max_retries {
            c.rreq_max_retries = v;
        }
        if let Some(v) = self.rreq_ttl {
            c.rreq_ttl = v;
        }
        if let Some(v) = self.buffer_capacity {
            c.buffer_capacity = v;
        }
        if let Some(v) = self.energy_threshold {
            c.energy_threshold = v;
        }
        if let Some(v) = self.rreq_seen_lifetime {
            c.rreq_seen_lifetime = v;
        }
        if let Some(v) = self.intermediate_rrep {
            c.intermediate_rrep = v;
        }
        c
    }

    pub fn aodv(&self) -> AodvConfig {
        let mut c = AodvConfig::default();
        if let Some(v) = self.route_timeout {
            c.route_timeout = v;
        }
        if let Some(v) = self.rreq_wait {
            c.rreq_wait = v;
        }
        if let Some(v) = self.rreq_max_retries {
            c.rreq_max_retries = v;
        }
        if let Some(v) = self.rreq_ttl {
            c.rreq_ttl = v;
        }
        if let Some(v) = self.buffer_capacity {
            c.buffer_capacity = v;
        }
        if let Some(v) = self.rreq_seen_lifetime {
            c.rreq_seen_lifetime = v;
        }
        if let Some(v) = self.hello_interval {
            c.hello_interval = v;
        }
        if let Some(v) = self.allowed_hello_loss {
            c.allowed_hello_loss = v;
        }
        if let Some(v) = self.intermediate_rrep {
            c.intermediate_rrep = v;
        }
        c
    }

    pub fn dsdv(&self) -> DsdvConfig {
        let mut c = DsdvConfig::default();
        if let Some(v) = self.periodic_update {
            c.periodic_update = v;
        }
        if let Some(v) = self.triggered_gap {
            c.triggered_gap = v;
        }
        if let Some(v) = self.buffer_capacity {
            c.buffer_capacity = v;
        }
        c
    }

    pub fn dsr(&self) -> DsrConfig {
        let mut c = DsrConfig::default();
        if let Some(v) = self.rreq_wait {
            c.rreq_wait = v;
        }
        if let Some(v) = self.rreq_max_retries {
            c.rreq_max_retries = v;
        }
        if let Some(v) = self.rreq_ttl {
            c.rreq_ttl = v;
        }
        if let Some(v) = self.buffer_capacity {
            c.buffer_capacity = v;
        }
        if let Some(v) = self.rreq_seen_lifetime {
            c.rreq_seen_lifetime = v;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub node_count: u32,
    pub field_x: f64,
    pub field_y: f64,
    pub radio_range: f64,
    /// Bits per second.
    pub bitrate: f64,
    /// Transmit queue depth in frames.
    pub queue_capacity: usize,
    pub mobility: MobilityConfig,
    pub flows: Vec<Flow>,
    /// Additional randomly generated flows (uniform endpoints, staggered
    /// starts) using `packet_size`/`cbr_interval`.
    pub random_flows: u32,
    pub packet_size: u16,
    pub cbr_interval: f64,
    pub duration: f64,
    pub protocol: Protocol,
    pub seed: u64,
    pub params: ProtocolParams,
    /// Fixed initial positions; when set, random-waypoint placement and
    /// movement are disabled and only `moves` relocate nodes.
    pub positions: Option<Vec<(f64, f64)>>,
    pub moves: Vec<ScriptedMove>,
    /// Static per-node energy assignments (node, units).
    pub node_energy: Vec<(NodeId, f64)>,
}

impl Default for Scenario {
    fn default() -> Scenario {
        Scenario {
            node_count: 40,
            field_x: 800.0,
            field_y: 800.0,
            radio_range: 250.0,
            bitrate: 2_000_000.0,
            queue_capacity: 15,
            mobility: MobilityConfig {
                speed_min: 1.0,
                speed_max: 20.0,
                pause_time: 0.0,
            },
            flows: Vec::new(),
            random_flows: 0,
            packet_size: 512,
            cbr_interval: 0.1,
            duration: 200.0,
            protocol: Protocol::Dymo,
            seed: 1,
            params: ProtocolParams::default(),
            positions: None,
            moves: Vec::new(),
            node_energy: Vec::new(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {key}: invalid value '{value}'")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("line {line}: expected 'key = value'")]
    BadSyntax { line: usize },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

/// Finite and strictly positive; rejects NaN as well.
fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl Scenario {
    /// Checks every structural invariant; `run` refuses scenarios that fail.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.node_count == 0 {
            return Err(ConfigError::invalid("nodes", "must be at least 1"));
        }
        if !positive(self.field_x) || !positive(self.field_y) {
            return Err(ConfigError::invalid("field", "dimensions must be positive"));
        }
        if !positive(self.radio_range) {
            return Err(ConfigError::invalid("range", "must be positive"));
        }
        if !positive(self.bitrate) {
            return Err(ConfigError::invalid("bitrate", "must be positive"));
        }
        if self.queue_capacity == 0 {
            return Err(ConfigError::invalid("queue", "must hold at least 1 frame"));
        }
        if !positive(self.duration) {
            return Err(ConfigError::invalid("duration", "must be positive"));
        }
        if !positive(self.mobility.speed_min) || self.mobility.speed_max < self.mobility.speed_min {
            return Err(ConfigError::invalid(
                "speed",
                "need 0 < speed_min <= speed_max",
            ));
        }
        if self.mobility.pause_time < 0.0 {
            return Err(ConfigError::invalid("pause_time", "must be non-negative"));
        }
        if !positive(self.cbr_interval) {
            return Err(ConfigError::invalid("interval", "must be positive"));
        }
        if self.random_flows > 0 && self.node_count < 2 {
            return Err(ConfigError::invalid(
                "random_flows",
                "need at least 2 nodes",
            ));
        }
        let check_node = |field: &str, id: NodeId| {
            if id.0 >= self.node_count {
                Err(ConfigError::invalid(
                    field,
                    format!("node {id} out of range"),
                ))
            } else {
                Ok(())
            }
        };
        for f in &self.flows {
            check_node("flow", f.src)?;
            check_node("flow", f.dst)?;
            if !positive(f.interval) {
                return Err(ConfigError::invalid("flow", "interval must be positive"));
            }
            if f.start < 0.0 || f.stop < f.start {
                return Err(ConfigError::invalid("flow", "need 0 <= start <= stop"));
            }
        }
        if let Some(pos) = &self.positions {
            if pos.len() != self.node_count as usize {
                return Err(ConfigError::invalid(
                    "position",
                    format!(
                        "{} positions given for {} nodes",
                        pos.len(),
                        self.node_count
                    ),
                ));
            }
        }
        for m in &self.moves {
            check_node("move", m.node)?;
            if !positive(m.speed) {
                return Err(ConfigError::invalid("move", "speed must be positive"));
            }
            if self.positions.is_none() {
                return Err(ConfigError::invalid("move", "requires explicit positions"));
            }
        }
        for &(id, energy) in &self.node_energy {
            check_node("node_energy", id)?;
            if energy < 0.0 {
                return Err(ConfigError::invalid("node_energy", "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn parse_file(path: &Path) -> Result<Scenario, ScenarioFileError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioFileError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(Scenario::parse_str(&text)?)
    }

    /// Parses `key = value` lines on top of the defaults.
    pub fn parse_str(text: &str) -> Result<Scenario, ConfigError> {
        let mut sc = Scenario::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::BadSyntax { line });
            };
            let key = key.trim();
            let value = value.trim();
            apply_key(&mut sc, key, value, line)?;
        }
        sc.validate()?;
        Ok(sc)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

fn apply_key(sc: &mut Scenario, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
    let bad = || ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
    };
    macro_rules! parse {
        ($ty:ty) => {
            value.parse::<$ty>().map_err(|_| bad())?
        };
    }
    match key {
        "nodes" => sc.node_count = parse!(u32),
        "field" => {
            let (x, y) = value.split_once(['x', 'X']).ok_or_else(bad)?;
            sc.field_x = x.trim().parse().map_err(|_| bad())?;
            sc.field_y = y.trim().parse().map_err(|_| bad())?;
        }
        "range" => sc.radio_range = parse!(f64),
        "bitrate" => sc.bitrate = parse!(f64),
        "queue" => sc.queue_capacity = parse!(usize),
        "duration" => sc.duration = parse!(f64),
        "protocol" => sc.protocol = Protocol::parse(value).ok_or_else(bad)?,
        "seed" => sc.seed = parse!(u64),
        "pause_time" => sc.mobility.pause_time = parse!(f64),
        "speed_min" => sc.mobility.speed_min = parse!(f64),
        "speed_max" => sc.mobility.speed_max = parse!(f64),
        "packet_size" => sc.packet_size = parse!(u16),
        "interval" => sc.cbr_interval = parse!(f64),
        "random_flows" => sc.random_flows = parse!(u32),
        "flow" => sc
            .flows
            .push(parse_flow(value, sc.duration).ok_or_else(bad)?),
        "position" => {
            let parts: Vec<&str> = value.split(':').collect();
            let [id, x, y] = parts.as_slice() else {
                return Err(bad());
            };
            let id: usize = id.trim().parse().map_err(|_| bad())?;
            let pos = sc.positions.get_or_insert_with(Vec::new);
            if pos.len() != id {
                // Positions must be listed densely, node 0 first.
                return Err(bad());
            }
            pos.push((
                x.trim().parse().map_err(|_| bad())?,
                y.trim().parse().map_err(|_| bad())?,
            ));
        }
        "move" => {
            let parts: Vec<&str> = value.split(':').collect();
            let [id, t, x, y, speed] = parts.as_slice() else {
                return Err(bad());
            };
            sc.moves.push(ScriptedMove {
                node: NodeId(id.trim().parse().map_err(|_| bad())?),
                time: t.trim().parse().map_err(|_| bad())?,
                x: x.trim().parse().map_err(|_| bad())?,
                y: y.trim().parse().map_err(|_| bad())?,
                speed: speed.trim().parse().map_err(|_| bad())?,
            });
        }
        "node_energy" => {
            let (id, units) = value.split_once(':').ok_or_else(bad)?;
            sc.node_energy.push((
                NodeId(id.trim().parse().map_err(|_| bad())?),
                units.trim().parse().map_err(|_| bad())?,
            ));
        }
        "route_timeout" => sc.params.route_timeout = Some(parse!(f64)),
        "rreq_wait" => sc.params.rreq_wait = Some(parse!(f64)),
        "rreq_max_retries" => sc.params.rreq_max_retries = Some(parse!(u32)),
        "rreq_ttl" => sc.params.rreq_ttl = Some(parse!(u8)),
        "buffer_capacity" => sc.params.buffer_capacity = Some(parse!(usize)),
        "energy_threshold" => sc.params.energy_threshold = Some(parse!(f64)),
        "rreq_seen_lifetime" => sc.params.rreq_seen_lifetime = Some(parse!(f64)),
        "hello_interval" => sc.params.hello_interval = Some(parse!(f64)),
        "allowed_hello_loss" => sc.params.allowed_hello_loss = Some(parse!(u32)),
        "periodic_update" => sc.params.periodic_update = Some(parse!(f64)),
        "triggered_gap" => sc.params.triggered_gap = Some(parse!(f64)),
        "intermediate_rrep" => sc.params.intermediate_rrep = Some(parse!(bool)),
        _ => {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            })
        }
    }
    Ok(())
}

/// `src:dst:bytes:interval[:start[:stop]]`
pub fn parse_flow(value: &str, default_stop: f64) -> Option<Flow> {
    let parts: Vec<&str> = value.split(':').collect();
    if !(4..=6).contains(&parts.len()) {
        return None;
    }
    let src = NodeId(parts[0].trim().parse().ok()?);
    let dst = NodeId(parts[1].trim().parse().ok()?);
    let packet_size = parts[2].trim().parse().ok()?;
    let interval = parts[3].trim().parse().ok()?;
    let start = if parts.len() > 4 {
        parts[4].trim().parse().ok()?
    } else {
        0.0
    };
    let stop = if parts.len() > 5 {
        parts[5].trim().parse().ok()?
    } else {
        default_stop
    };
    Some(Flow {
        src,
        dst,
        packet_size,
        interval,
        start,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_defaults() {
        let sc = Scenario::parse_str("").unwrap();
        assert_eq!(sc, Scenario::default());
        assert_eq!(sc.node_count, 40);
        assert_eq!((sc.field_x, sc.field_y), (800.0, 800.0));
        assert_eq!(sc.packet_size, 512);
        assert_eq!(sc.cbr_interval, 0.1);
        assert_eq!(sc.bitrate, 2_000_000.0);
        assert_eq!(sc.queue_capacity, 15);
    }

    #[test]
    fn negative_node_count_is_a_config_error() {
        let err = Scenario::parse_str("nodes = -1").unwrap_err();
        assert!(
            matches!(err, ConfigError::BadValue { line: 1, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let err = Scenario::parse_str("nodes = 4\nnodez = 5").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 2,
                key: "nodez".into()
            }
        );
    }

    #[test]
    fn comments_and_flows_parse() {
        let sc = Scenario::parse_str(
            "# reference run\nnodes = 12\nfield = 400x300\nflow = 0:1:512:0.1:1.0:9.0\nprotocol = aodv\n",
        )
        .unwrap();
        assert_eq!(sc.node_count, 12);
        assert_eq!((sc.field_x, sc.field_y), (400.0, 300.0));
        assert_eq!(sc.protocol, Protocol::Aodv);
        assert_eq!(
            sc.flows,
            vec![Flow {
                src: NodeId(0),
                dst: NodeId(1),
                packet_size: 512,
                interval: 0.1,
                start: 1.0,
                stop: 9.0
            }]
        );
    }

    #[test]
    fn flow_referencing_missing_node_fails_validation() {
        let err = Scenario::parse_str("nodes = 2\nflow = 0:5:512:0.1").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }), "{err:?}");
    }

    #[test]
    fn moves_require_positions() {
        let err = Scenario::parse_str("nodes = 2\nmove = 0:1.0:10:10:5").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }), "{err:?}");
    }
}
