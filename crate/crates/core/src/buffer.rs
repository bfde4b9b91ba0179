//! Forecast buffer tables and the four-step buffer management: overflow
//! detection, temporary contact-plan restriction, prune-schedule
//! construction, and post-validation occupancy commitment.
//!
//! A bundle occupies an intermediate node's buffer at full size from its
//! arrival (incoming tx_end) until its outgoing transmission starts, as a
//! piecewise-constant contribution. The benchmark's linear-drain model is a
//! different animal and lives in `benchmark`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::contact_plan::{Bundle, ContactId, ContactPlan, NodeId, Route, TimeMs, TIME_INF};
use crate::route_search::PruneSchedule;

/// Piecewise-constant forecast of one node's buffer occupancy over time,
/// stored as breakpoint deltas. The occupancy is zero beyond the last
/// breakpoint.
#[derive(Debug, Clone)]
pub struct ForecastBufferTable {
    pub node: NodeId,
    /// Capacity in bits; `None` means unbounded storage.
    pub capacity: Option<u64>,
    deltas: BTreeMap<TimeMs, i64>,
}

impl ForecastBufferTable {
    pub fn new(node: NodeId, capacity: Option<u64>) -> Self {
        Self {
            node,
            capacity,
            deltas: BTreeMap::new(),
        }
    }

    /// Step-function evaluation: occupancy at time `t` (left-closed,
    /// right-open segments).
    pub fn occupancy_at(&self, t: TimeMs) -> u64 {
        let mut acc = 0i64;
        for (&bp, &d) in &self.deltas {
            if bp > t {
                break;
            }
            acc += d;
        }
        debug_assert!(acc >= 0);
        acc as u64
    }

    /// Adds `size` bits of occupancy over `[from, to)`.
    pub fn add_interval(&mut self, from: TimeMs, to: TimeMs, size: u64) {
        if from >= to || size == 0 {
            return;
        }
        *self.deltas.entry(from).or_insert(0) += size as i64;
        *self.deltas.entry(to).or_insert(0) -= size as i64;
        self.deltas.retain(|_, d| *d != 0);
    }

    /// `(time, occupancy)` at every breakpoint, suitable for dumping or
    /// plotting the table.
    pub fn steps(&self) -> Vec<(TimeMs, u64)> {
        let mut acc = 0i64;
        let mut out = Vec::with_capacity(self.deltas.len());
        for (&bp, &d) in &self.deltas {
            acc += d;
            out.push((bp, acc as u64));
        }
        out
    }

    /// Maximal intervals where `occupancy + extra` exceeds the capacity.
    /// Unbounded tables never overflow.
    pub fn overflow_intervals(&self, extra: u64) -> Vec<(TimeMs, TimeMs)> {
        let Some(cap) = self.capacity else {
            return Vec::new();
        };
        let mut out: Vec<(TimeMs, TimeMs)> = Vec::new();
        let mut acc = 0i64;
        let mut over_since: Option<TimeMs> = if extra > cap { Some(-TIME_INF) } else { None };
        for (&bp, &d) in &self.deltas {
            acc += d;
            let over = acc as u64 + extra > cap;
            match (over_since, over) {
                (None, true) => over_since = Some(bp),
                (Some(start), false) => {
                    out.push((start, bp));
                    over_since = None;
                }
                _ => {}
            }
        }
        if let Some(start) = over_since {
            out.push((start, TIME_INF));
        }
        out
    }

    /// True when the forecast respects the capacity at every breakpoint.
    pub fn within_capacity(&self) -> bool {
        match self.capacity {
            None => true,
            Some(cap) => self.steps().iter().all(|&(_, occ)| occ <= cap),
        }
    }
}

/// Step-function evaluation of a table at time `t`.
pub fn occupancy_at(table: &ForecastBufferTable, t: TimeMs) -> u64 {
    table.occupancy_at(t)
}

/// Forecast tables for every node of a scenario.
#[derive(Debug, Clone, Default)]
pub struct BufferTables {
    tables: BTreeMap<NodeId, ForecastBufferTable>,
}

impl BufferTables {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_capacity(&mut self, node: NodeId, capacity: Option<u64>) {
        self.tables
            .entry(node)
            .or_insert_with(|| ForecastBufferTable::new(node, capacity))
            .capacity = capacity;
    }

    pub fn get(&self, node: NodeId) -> Option<&ForecastBufferTable> {
        self.tables.get(&node)
    }

    pub fn tables(&self) -> impl Iterator<Item = &ForecastBufferTable> {
        self.tables.values()
    }

    /// Adds occupancy directly; used to seed tables with prior load.
    pub fn occupy(&mut self, node: NodeId, from: TimeMs, to: TimeMs, size: u64) {
        self.table_mut(node).add_interval(from, to, size);
    }

    fn table_mut(&mut self, node: NodeId) -> &mut ForecastBufferTable {
        self.tables
            .entry(node)
            .or_insert_with(|| ForecastBufferTable::new(node, None))
    }
}

/// Sorted, disjoint potential-overflow intervals per node for one bundle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OverflowSet {
    per_node: BTreeMap<NodeId, Vec<(TimeMs, TimeMs)>>,
}

impl OverflowSet {
    pub fn is_empty(&self) -> bool {
        self.per_node.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.per_node.keys().copied()
    }

    pub fn intervals(&self, node: NodeId) -> &[(TimeMs, TimeMs)] {
        self.per_node.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &[(TimeMs, TimeMs)])> {
        self.per_node.iter().map(|(n, v)| (*n, v.as_slice()))
    }
}

/// Step 1: virtually adds the bundle's size to every table at all times and
/// reports where the sum would exceed capacity. The destination is excluded
/// (delivered bundles leave the network), as are unbounded nodes. Nothing is
/// mutated.
pub fn detect_overflows(tables: &BufferTables, bundle: &Bundle) -> OverflowSet {
    let mut set = OverflowSet::default();
    for table in tables.tables() {
        if table.node == bundle.destination {
            continue;
        }
        let intervals = table.overflow_intervals(bundle.size_bits);
        if !intervals.is_empty() {
            set.per_node.insert(table.node, intervals);
        }
    }
    set
}

/// Result of a temporary CP restriction: the overlay plan to search on, a
/// mapping from each fresh piece back to the permanent contact it came from,
/// and growth accounting for the complexity bound.
#[derive(Debug, Clone)]
pub struct RestrictedPlan {
    pub overlay: ContactPlan,
    piece_origin: BTreeMap<ContactId, ContactId>,
    /// Net number of contacts the overlay gained over the source plan.
    pub temp_added: i64,
    /// Number of (contact, overflow) intersecting pairs: the upper bound on
    /// the temporary additions.
    pub pair_bound: u64,
}

impl RestrictedPlan {
    /// Permanent contact id behind an overlay id (identity when untouched).
    pub fn permanent_id(&self, overlay_id: ContactId) -> ContactId {
        self.piece_origin.get(&overlay_id).copied().unwrap_or(overlay_id)
    }

    /// Rewrites a route searched on the overlay so its hops reference
    /// permanent contacts.
    pub fn translate_route(&self, route: &Route) -> Route {
        Route {
            bundle_id: route.bundle_id,
            hops: route
                .hops
                .iter()
                .map(|h| crate::contact_plan::Hop {
                    contact: self.permanent_id(h.contact),
                    ..*h
                })
                .collect(),
            bdt: route.bdt,
        }
    }
}

fn subtract_intervals(
    window: (TimeMs, TimeMs),
    cuts: &[(TimeMs, TimeMs)],
) -> Vec<(TimeMs, TimeMs)> {
    let mut kept = vec![window];
    for &(a, b) in cuts {
        let mut next = Vec::with_capacity(kept.len() + 1);
        for (s, e) in kept {
            if b <= s || a >= e {
                next.push((s, e));
            } else {
                if s < a {
                    next.push((s, a));
                }
                if b < e {
                    next.push((b, e));
                }
            }
        }
        kept = next;
    }
    kept
}

/// Step 2: builds the bundle-local overlay plan in which every slice of a
/// contact that could deliver the bundle into an overflowing node during an
/// overflow period has been erased. Contacts that start before an overflow's
/// end and end after its start are the affected ones. The permanent plan is
/// untouched; the overlay is discarded after routing.
pub fn restrict_cp_for_overflows(
    cp: &ContactPlan,
    overflows: &OverflowSet,
    _bundle: &Bundle,
) -> RestrictedPlan {
    let mut overlay = cp.clone();
    let mut piece_origin = BTreeMap::new();
    let mut temp_added = 0i64;
    let mut pair_bound = 0u64;
    let affected: Vec<ContactId> = cp
        .contacts()
        .filter(|c| {
            overflows
                .intervals(c.receiver)
                .iter()
                .any(|&(t1, t2)| c.t_start < t2 && c.t_end > t1)
        })
        .map(|c| c.id)
        .collect();
    for id in affected {
        let c = *overlay.get(id).expect("affected contact exists in overlay");
        let cuts = overflows.intervals(c.receiver);
        pair_bound += cuts
            .iter()
            .filter(|&&(t1, t2)| c.t_start < t2 && c.t_end > t1)
            .count() as u64;
        let kept = subtract_intervals((c.t_start, c.t_end), cuts);
        let pieces = overlay
            .replace_contact_intervals(id, &kept)
            .expect("contact exists in overlay");
        temp_added += pieces.len() as i64 - 1;
        for piece in pieces {
            piece_origin.insert(piece, id);
        }
    }
    RestrictedPlan {
        overlay,
        piece_origin,
        temp_added,
        pair_bound,
    }
}

/// Steps 3-4: hands the per-node overflow intervals to the route search,
/// which forbids departures that would leave the bundle sitting in a buffer
/// when an overflow period begins.
pub fn prune_schedule(overflows: &OverflowSet) -> PruneSchedule {
    let mut schedule = PruneSchedule::empty();
    for (node, intervals) in overflows.iter() {
        schedule.insert(node, intervals.to_vec());
    }
    schedule
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BufferError {
    /// The committed route would breach a node's capacity. The proposed
    /// pipeline makes this impossible; seeing it means a routing-logic bug.
    #[error("buffer commit breaches capacity at node {0}")]
    CapacityBreach(NodeId),
}

/// Books the validated route into the forecast tables: every intermediate
/// node holds the bundle from its arrival until the departing transmission
/// starts. Source and destination are exempt.
pub fn commit_route_buffer(
    tables: &mut BufferTables,
    route: &Route,
    bundle: &Bundle,
    nodes: &[NodeId],
) -> Result<(), BufferError> {
    assert_eq!(nodes.len(), route.hops.len() + 1, "node sequence matches hops");
    for k in 1..route.hops.len() {
        let node = nodes[k];
        let arrival = route.hops[k - 1].tx_end;
        let departure = route.hops[k].tx_start;
        let table = tables.table_mut(node);
        table.add_interval(arrival, departure, bundle.size_bits);
        if !table.within_capacity() {
            return Err(BufferError::CapacityBreach(node));
        }
    }
    Ok(())
}

/// Per-node dump of a forecast table: `t_ms,occupancy_bits` at breakpoints.
pub fn dump_table_csv(table: &ForecastBufferTable) -> String {
    let mut out = String::from("t_ms,occupancy_bits\n");
    for (t, occ) in table.steps() {
        out.push_str(&format!("{t},{occ}\n"));
    }
    out
}
