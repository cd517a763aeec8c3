//! Deterministic discrete-event simulator for mobile ad hoc network routing.
//!
//! A unit-disk radio model, random-waypoint mobility and CBR traffic drive
//! four interchangeable routing protocols (DYMO, AODV, DSDV and DSR)
//! through one protocol-agnostic engine. Runs are pure functions of the
//! scenario (seed included): the same input always yields a byte-identical
//! trace, from which the four standard performance metrics are computed.

pub mod aodv;
pub mod dsdv;
pub mod dsr;
pub mod dymo;
pub mod message;
pub mod metrics;
pub mod rng;
pub mod router;
pub mod scenario;
pub mod sim;
pub mod table;
pub mod trace;
pub mod types;
pub mod wire;

pub use message::{AddressBlock, Message, MsgKind};
pub use router::{DropReason, Router, RouterAction};
pub use scenario::{ConfigError, Flow, Protocol, Scenario};
pub use sim::{run, SimResult};
pub use table::{RouteEntry, RouteState, RoutingTable};
pub use trace::{TraceEvent, TraceRecord};
pub use types::{seqnum_compare, NodeId, SeqCmp, SeqNum};
