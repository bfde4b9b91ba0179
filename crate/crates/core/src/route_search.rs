//! Contact-graph route search: the Dijkstra adaptation (contact review and
//! contact selection procedures) with the buffer-overflow edge-pruning
//! condition, and Yen's k-shortest-routes on top of it.
//!
//! A search owns its [`SearchState`] exclusively and treats the contact plan
//! as a read-only snapshot, so independent searches can run concurrently.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::capacity::transmission_time;
use crate::contact_plan::{
    Bundle, Contact, ContactId, ContactPlan, Hop, NodeId, Route, TimeMs, TIME_INF,
};

/// Scheduled transmission of `size_bits` through `c` for a bundle that
/// reaches the contact's sender at `t_arr_sender`: transmission starts at the
/// later of arrival and contact start, and must finish by the contact's end.
/// Returns `None` when the contact cannot carry the bundle.
pub fn hop_times(t_arr_sender: TimeMs, c: &Contact, size_bits: u64) -> Option<(TimeMs, TimeMs)> {
    let tx_start = t_arr_sender.max(c.t_start);
    let tx_end = tx_start + transmission_time(size_bits, c.rate_bps);
    (tx_end <= c.t_end).then_some((tx_start, tx_end))
}

/// Per-node overflow intervals for the bundle being routed. During the
/// search, a departure edge out of a node is forbidden when the bundle would
/// still sit in that node's buffer when the next overflow period begins.
#[derive(Debug, Clone, Default)]
pub struct PruneSchedule {
    intervals: BTreeMap<NodeId, Vec<(TimeMs, TimeMs)>>,
}

impl PruneSchedule {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Registers the sorted, pairwise-disjoint overflow intervals of a node.
    pub fn insert(&mut self, node: NodeId, intervals: Vec<(TimeMs, TimeMs)>) {
        debug_assert!(intervals.windows(2).all(|w| w[0].1 <= w[1].0));
        debug_assert!(intervals.iter().all(|(a, b)| a < b));
        if !intervals.is_empty() {
            self.intervals.insert(node, intervals);
        }
    }

    pub fn intervals(&self, node: NodeId) -> &[(TimeMs, TimeMs)] {
        self.intervals.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.intervals.keys().copied()
    }

    /// Start of the first overflow at `node` that has not ended by `arrival`,
    /// i.e. the time by which a bundle arriving then must have departed.
    pub fn next_overflow_start(&self, node: NodeId, arrival: TimeMs) -> Option<TimeMs> {
        self.intervals
            .get(&node)?
            .iter()
            .find(|&&(_, t2)| t2 > arrival)
            .map(|&(t1, _)| t1)
    }
}

#[derive(Debug, Clone, Copy)]
struct Label {
    arrival: TimeMs,
    predecessor: Option<ContactId>,
    visited: bool,
    visited_nodes: u128,
}

/// Exploration state of one Dijkstra search over the contact graph.
///
/// The virtual root contact (sender and receiver both equal to the start
/// node) is represented implicitly by `root_*`; real contacts get labels on
/// first exploration.
#[derive(Debug)]
pub struct SearchState {
    labels: BTreeMap<ContactId, Label>,
    frontier: BinaryHeap<Reverse<(TimeMs, TimeMs, ContactId)>>,
    pub best_bdt: TimeMs,
    pub c_end: Option<ContactId>,
    root_node: NodeId,
    root_time: TimeMs,
    root_mask: u128,
    node_bits: BTreeMap<NodeId, u32>,
}

/// Where a contact-review pass explores from: the virtual root or a
/// previously selected contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cursor {
    Root,
    Contact(ContactId),
}

/// Start point and per-search restrictions of a route search. The plain
/// source search uses the bundle's source node and creation-or-later time;
/// Yen spur searches and benchmark reroutes override them.
#[derive(Debug, Clone, Default)]
pub struct SearchOptions {
    /// Nodes treated as already visited (Yen root paths, reroute history).
    pub blocked_nodes: Vec<NodeId>,
    /// Contacts suppressed for this search only.
    pub suppressed: BTreeSet<ContactId>,
}

impl SearchState {
    pub fn new(cp: &ContactPlan, start_node: NodeId, start_time: TimeMs, opts: &SearchOptions) -> Self {
        let mut ids: BTreeSet<NodeId> = cp.node_ids().collect();
        ids.insert(start_node);
        ids.extend(opts.blocked_nodes.iter().copied());
        for c in cp.contacts() {
            ids.insert(c.sender);
            ids.insert(c.receiver);
        }
        assert!(
            ids.len() <= 128,
            "route search supports at most 128 nodes per scenario, got {}",
            ids.len()
        );
        let node_bits: BTreeMap<NodeId, u32> =
            ids.into_iter().enumerate().map(|(i, n)| (n, i as u32)).collect();
        let mut root_mask = 1u128 << node_bits[&start_node];
        for n in &opts.blocked_nodes {
            root_mask |= 1u128 << node_bits[n];
        }
        SearchState {
            labels: BTreeMap::new(),
            frontier: BinaryHeap::new(),
            best_bdt: TIME_INF,
            c_end: None,
            root_node: start_node,
            root_time: start_time,
            root_mask,
            node_bits,
        }
    }

    fn bit(&self, node: NodeId) -> u128 {
        1u128 << self.node_bits[&node]
    }

    pub fn arrival(&self, id: ContactId) -> Option<TimeMs> {
        self.labels.get(&id).map(|l| l.arrival)
    }

    pub fn is_visited(&self, id: ContactId) -> bool {
        self.labels.get(&id).map(|l| l.visited).unwrap_or(false)
    }

    fn cursor_view(&self, cursor: Cursor, cp: &ContactPlan) -> Option<(NodeId, TimeMs, u128)> {
        match cursor {
            Cursor::Root => Some((self.root_node, self.root_time, self.root_mask)),
            Cursor::Contact(id) => {
                let label = self.labels.get(&id)?;
                let contact = cp.get(id)?;
                Some((contact.receiver, label.arrival, label.visited_nodes))
            }
        }
    }
}

/// One contact-review pass: explores every contact that can follow `cursor`,
/// relaxing arrival labels and tracking the best delivery time, then marks
/// the cursor contact visited.
///
/// A contact is ignored when any of the following holds: its sender is not
/// the cursor's receiver, it ends at or before the arrival at the cursor's
/// receiver, it was already visited, its receiver lies on the path that led
/// here (loop avoidance), it is suppressed, the bundle cannot complete
/// transmission within it, or the buffer-pruning condition below rejects it.
///
/// Buffer pruning: with `t_next` the start of the first overflow at the
/// cursor's receiver that has not ended by the arrival time, a departure is
/// rejected iff its transmission would start after `t_next` — the bundle
/// would still occupy the buffer when the overflow begins. A departure
/// starting exactly at `t_next` leaves the buffer the instant the overflow
/// starts and is therefore accepted.
pub fn contact_review(
    cp: &ContactPlan,
    state: &mut SearchState,
    cursor: Cursor,
    bundle: &Bundle,
    prune: &PruneSchedule,
    opts: &SearchOptions,
) {
    let Some((from_node, t_arr_s, mask_s)) = state.cursor_view(cursor, cp) else {
        return;
    };
    let predecessor = match cursor {
        Cursor::Root => None,
        Cursor::Contact(id) => Some(id),
    };
    let t_next = prune.next_overflow_start(from_node, t_arr_s);
    for c in cp.contacts_from(from_node) {
        if c.t_end <= t_arr_s {
            continue;
        }
        if state.labels.get(&c.id).map(|l| l.visited).unwrap_or(false) {
            continue;
        }
        if mask_s & state.bit(c.receiver) != 0 {
            continue;
        }
        if c.suppressed || opts.suppressed.contains(&c.id) {
            continue;
        }
        let Some((tx_start, tx_end)) = hop_times(t_arr_s, c, bundle.size_bits) else {
            continue;
        };
        if let Some(t_next) = t_next {
            if tx_start > t_next {
                continue;
            }
        }
        let t_arr = tx_end;
        let current = state
            .labels
            .get(&c.id)
            .map(|l| l.arrival)
            .unwrap_or(TIME_INF);
        if t_arr < current {
            let visited_nodes = mask_s | state.bit(c.receiver);
            state.labels.insert(
                c.id,
                Label {
                    arrival: t_arr,
                    predecessor,
                    visited: false,
                    visited_nodes,
                },
            );
            state.frontier.push(Reverse((t_arr, c.t_start, c.id)));
            if c.receiver == bundle.destination && t_arr < state.best_bdt {
                state.best_bdt = t_arr;
                state.c_end = Some(c.id);
            }
        }
    }
    if let Cursor::Contact(id) = cursor {
        if let Some(label) = state.labels.get_mut(&id) {
            label.visited = true;
        }
    }
}

/// Contact selection: pops the unvisited explored contact with the smallest
/// arrival, ties broken by `(t_start, contact_id)` ascending. Returns `None`
/// when no contact remains to select.
pub fn contact_selection(state: &mut SearchState) -> Option<ContactId> {
    while let Some(Reverse((arrival, _t_start, id))) = state.frontier.pop() {
        match state.labels.get(&id) {
            Some(l) if !l.visited && l.arrival == arrival => return Some(id),
            _ => continue, // stale heap entry or already visited
        }
    }
    None
}

/// Earliest-delivery route for `bundle` searched from its source at `t0`.
pub fn dijkstra_route(
    cp: &ContactPlan,
    bundle: &Bundle,
    t0: TimeMs,
    prune: &PruneSchedule,
) -> Option<Route> {
    dijkstra_route_from(cp, bundle, bundle.source, t0, prune, &SearchOptions::default())
}

/// Dijkstra search from an arbitrary start node (Yen spurs, reroutes).
pub fn dijkstra_route_from(
    cp: &ContactPlan,
    bundle: &Bundle,
    start_node: NodeId,
    start_time: TimeMs,
    prune: &PruneSchedule,
    opts: &SearchOptions,
) -> Option<Route> {
    let mut state = SearchState::new(cp, start_node, start_time, opts);
    contact_review(cp, &mut state, Cursor::Root, bundle, prune, opts);
    while let Some(selected) = contact_selection(&mut state) {
        // No relaxation from here on can beat an already-found delivery.
        if state.arrival(selected).expect("selected contact has a label") >= state.best_bdt {
            break;
        }
        contact_review(cp, &mut state, Cursor::Contact(selected), bundle, prune, opts);
    }
    let end = state.c_end?;
    // Walk predecessors back to the root, then recompute hop times forward.
    let mut chain = Vec::new();
    let mut cur = Some(end);
    while let Some(id) = cur {
        chain.push(id);
        cur = state.labels[&id].predecessor;
    }
    chain.reverse();
    let mut hops = Vec::with_capacity(chain.len());
    let mut arr = start_time;
    for id in chain {
        let contact = cp.get(id).expect("route contact exists in the snapshot");
        let (tx_start, tx_end) =
            hop_times(arr, contact, bundle.size_bits).expect("labelled hop stays feasible");
        hops.push(Hop { contact: id, tx_start, tx_end });
        arr = tx_end;
    }
    debug_assert_eq!(arr, state.best_bdt);
    Some(Route { bundle_id: bundle.id, hops, bdt: arr })
}

/// Node sequence a route passes through: the first hop's sender followed by
/// every hop's receiver. Requires the route's contacts to still be present.
pub fn route_nodes(cp: &ContactPlan, route: &Route) -> Vec<NodeId> {
    let mut nodes = Vec::with_capacity(route.hops.len() + 1);
    for (i, hop) in route.hops.iter().enumerate() {
        let c = cp.get(hop.contact).expect("route contact exists");
        if i == 0 {
            nodes.push(c.sender);
        }
        nodes.push(c.receiver);
    }
    nodes
}

/// Up to `k` distinct loop-free routes in nondecreasing delivery time. The
/// first element equals [`dijkstra_route`]'s result; candidate ties are
/// broken by the lexicographic contact-id sequence.
pub fn yen_k_routes(cp: &ContactPlan, bundle: &Bundle, t0: TimeMs, k: usize) -> Vec<Route> {
    yen_k_routes_from(cp, bundle, bundle.source, t0, k, &SearchOptions::default())
}

/// Yen's algorithm from an arbitrary start node with per-search exclusions.
pub fn yen_k_routes_from(
    cp: &ContactPlan,
    bundle: &Bundle,
    start_node: NodeId,
    start_time: TimeMs,
    k: usize,
    opts: &SearchOptions,
) -> Vec<Route> {
    assert!(k >= 1, "yen_k_routes requires k >= 1");
    let prune = PruneSchedule::empty();
    let Some(first) = dijkstra_route_from(cp, bundle, start_node, start_time, &prune, opts) else {
        return Vec::new();
    };
    let mut accepted = vec![first];
    let mut accepted_ids: BTreeSet<Vec<ContactId>> =
        accepted.iter().map(|r| r.contact_ids()).collect();
    let mut candidates: BTreeMap<(TimeMs, Vec<ContactId>), Route> = BTreeMap::new();

    while accepted.len() < k {
        let previous = accepted.last().expect("accepted is nonempty").clone();
        for spur_idx in 0..previous.hops.len() {
            let root = &previous.hops[..spur_idx];
            let (spur_node, spur_time) = if spur_idx == 0 {
                (start_node, start_time)
            } else {
                let before = &previous.hops[spur_idx - 1];
                let c = cp.get(before.contact).expect("route contact exists");
                (c.receiver, before.tx_end)
            };
            // Suppress the deviation contact of every accepted route that
            // shares this root path, so the spur search must branch off.
            let mut suppressed = opts.suppressed.clone();
            for r in &accepted {
                if r.hops.len() > spur_idx
                    && r.hops[..spur_idx]
                        .iter()
                        .map(|h| h.contact)
                        .eq(root.iter().map(|h| h.contact))
                {
                    suppressed.insert(r.hops[spur_idx].contact);
                }
            }
            // Nodes already traversed by the root path stay off limits.
            let mut blocked = opts.blocked_nodes.clone();
            blocked.push(start_node);
            for hop in root.iter().take(spur_idx.saturating_sub(1)) {
                blocked.push(cp.get(hop.contact).expect("route contact exists").receiver);
            }
            let spur_opts = SearchOptions { blocked_nodes: blocked, suppressed };
            let Some(spur) =
                dijkstra_route_from(cp, bundle, spur_node, spur_time, &prune, &spur_opts)
            else {
                continue;
            };
            let mut hops = root.to_vec();
            hops.extend(spur.hops);
            let bdt = spur.bdt;
            let ids: Vec<ContactId> = hops.iter().map(|h| h.contact).collect();
            if accepted_ids.contains(&ids) {
                continue;
            }
            candidates
                .entry((bdt, ids))
                .or_insert(Route { bundle_id: bundle.id, hops, bdt });
        }
        let Some(key) = candidates.keys().next().cloned() else {
            break;
        };
        let route = candidates.remove(&key).expect("key just observed");
        accepted_ids.insert(key.1);
        accepted.push(route);
    }
    accepted
}
