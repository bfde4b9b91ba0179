//! The proposed source-routing pipeline, run once per bundle: overflow
//! detection, temporary CP restriction, pruned Dijkstra, then the permanent
//! capacity commit and the forecast-table commit. Every route it returns is
//! valid by construction; a failed attempt leaves all state untouched.

use std::borrow::Cow;

use crate::buffer::{
    commit_route_buffer, detect_overflows, prune_schedule, restrict_cp_for_overflows,
    BufferTables,
};
use crate::capacity::CapacityManager;
use crate::contact_plan::{Bundle, ContactPlan, NodeId, Route, TimeMs};
use crate::route_search::{dijkstra_route, route_nodes, PruneSchedule};

/// Shared routing state: the post-split contact plan, the forecast tables,
/// and the mutation journal (inside the capacity manager). The plan revision
/// and the journal move in lockstep.
#[derive(Debug, Clone)]
pub struct RouterState {
    pub cp: ContactPlan,
    pub tables: BufferTables,
    pub capacity: CapacityManager,
    /// Retry interval when no route exists yet.
    pub time_step_ms: TimeMs,
}

/// Bookkeeping of one successful routing, for complexity metrics.
#[derive(Debug, Clone, Copy, Default)]
pub struct RoutingStats {
    /// Net temporary contacts the restriction overlay added.
    pub temp_added: i64,
    /// Upper bound on the temporary additions (intersecting pairs).
    pub temp_added_bound: u64,
    /// Nodes with at least one potential overflow for this bundle.
    pub overflow_nodes: usize,
}

/// Per-hop endpoints of a committed route, captured before the capacity
/// commit split the contacts away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopMeta {
    pub origin: crate::contact_plan::ContactId,
    pub sender: NodeId,
    pub receiver: NodeId,
}

/// A route that has been committed to the shared state, with enough
/// metadata to execute and audit it after the plan mutated.
#[derive(Debug, Clone)]
pub struct CommittedRoute {
    pub route: Route,
    pub meta: Vec<HopMeta>,
    pub stats: RoutingStats,
}

impl RouterState {
    pub fn new(cp: ContactPlan, tables: BufferTables, min_piece_volume_bits: u64) -> Self {
        Self {
            cp,
            tables,
            capacity: CapacityManager::new(min_piece_volume_bits),
            time_step_ms: 1_000,
        }
    }

    /// Routes one bundle at `t_now`. On success the returned route is
    /// already committed (capacity splits applied to the shared plan,
    /// residence booked in the forecast tables) and references permanent
    /// contact ids. On failure nothing changes and the caller retries after
    /// [`retry_policy`].
    pub fn route_bundle(&mut self, bundle: &Bundle, t_now: TimeMs) -> Option<CommittedRoute> {
        debug_assert!(bundle.t_created <= t_now);
        let overflows = detect_overflows(&self.tables, bundle);
        let mut stats = RoutingStats {
            overflow_nodes: overflows.nodes().count(),
            ..RoutingStats::default()
        };
        let prune = prune_schedule(&overflows);
        let (search_cp, restricted) = if overflows.is_empty() {
            (Cow::Borrowed(&self.cp), None)
        } else {
            let r = restrict_cp_for_overflows(&self.cp, &overflows, bundle);
            stats.temp_added = r.temp_added;
            stats.temp_added_bound = r.pair_bound;
            (Cow::Owned(r.overlay.clone()), Some(r))
        };
        let found = dijkstra_route(&search_cp, bundle, t_now, &prune)?;
        let route = match &restricted {
            Some(r) => r.translate_route(&found),
            None => found,
        };
        // Endpoints must be read before the splits remove the contacts.
        let nodes = route_nodes(&self.cp, &route);
        let meta: Vec<HopMeta> = route
            .hops
            .iter()
            .map(|h| {
                let c = self.cp.get(h.contact).expect("routed contact exists");
                HopMeta {
                    origin: c.origin,
                    sender: c.sender,
                    receiver: c.receiver,
                }
            })
            .collect();
        self.capacity
            .commit_route_capacity(&mut self.cp, &route, t_now)
            .expect("freshly searched route cannot be stale");
        commit_route_buffer(&mut self.tables, &route, bundle, &nodes)
            .expect("pruned search cannot breach a buffer");
        Some(CommittedRoute { route, meta, stats })
    }

    /// Prunes expired contacts, journaling the removal.
    pub fn remove_expired(&mut self, now: TimeMs) -> usize {
        self.capacity.remove_expired(&mut self.cp, now)
    }

    /// Next attempt time after a failed routing.
    pub fn retry_policy(&self, t_now: TimeMs) -> TimeMs {
        t_now + self.time_step_ms
    }

    /// Prune schedule a bundle would currently face; exposed for checks.
    pub fn current_prune_schedule(&self, bundle: &Bundle) -> PruneSchedule {
        prune_schedule(&detect_overflows(&self.tables, bundle))
    }

    /// Nodes of a committed route (valid while its contacts may be gone).
    pub fn route_nodes_of(route: &Route, cp: &ContactPlan) -> Vec<NodeId> {
        route_nodes(cp, route)
    }
}
