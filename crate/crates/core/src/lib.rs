//! Contact-graph routing with proactive capacity and buffer management,
//! an SR-CGR benchmark, and a deterministic discrete-event DTN simulator.
//!
//! The routing core books link capacity by splitting consumed slices out of
//! a shared contact plan and keeps per-node forecast buffer tables, so every
//! route it emits respects both constraint families by construction. The
//! benchmark implements classic source-routed CGR with linear volumes and
//! reactive forwarding-phase checks, for side-by-side evaluation.

pub mod benchmark;
pub mod buffer;
pub mod capacity;
pub mod cli;
pub mod contact_plan;
pub mod route_search;
pub mod router;
pub mod scenario;
pub mod sim;

pub use contact_plan::{
    contact_volume, parse_contact_plan, serialize_contact_plan, Bundle, Contact, ContactId,
    ContactPlan, Hop, NodeId, NodeKind, Route, TimeMs,
};
pub use route_search::{dijkstra_route, hop_times, yen_k_routes, PruneSchedule};
pub use router::RouterState;
pub use sim::{run_simulation, Algorithm, SimConfig, SimResult};
