//! Abstract path-vector BGP on a [`Graph`](crate::topology::Graph).
//!
//! Every router originates one prefix (its own id). Routes are selected by
//! shortest AS path with deterministic tie-breaks, every best-route change
//! is advertised to every established peer (receivers drop paths that
//! already contain them), and nothing is ever withdrawn. Runs start from
//! empty routing tables.

mod path;
mod router;
mod scenario;
mod trace;

use thiserror::Error;

use crate::sim::SimError;
use crate::topology::NodeId;

pub use path::AsPath;
pub use router::{decision, Outputs, RouteEntry, RoutingTable, UpdateMessage};
pub use scenario::{run_scenario, EventCounts, Scenario, ScenarioConfig, ScenarioRun, SessionOrder};
pub use trace::{DirectedEdgeStats, TraceStats};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BgpError {
    #[error("no link between {0} and {1}")]
    NoSuchLink(NodeId, NodeId),
    #[error("session {0}-{1} already established")]
    DuplicateSession(NodeId, NodeId),
    #[error("malformed update {0}->{1}: {2}")]
    MalformedUpdate(NodeId, NodeId, String),
    #[error("topology must be connected")]
    Disconnected,
    #[error("invalid scenario {0}; expected 1, 2 or 3")]
    InvalidScenario(u8),
    #[error(transparent)]
    Sim(#[from] SimError),
}
