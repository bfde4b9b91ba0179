//! Shared test oracles, all independent of the production search path:
//! a brute-force route enumerator over raw interval data, a lattice-scan
//! occupancy oracle, seeded random-plan generators, and the event-trace
//! replay checker.
#![allow(dead_code)]

use std::collections::BTreeMap;

use cgrsim::capacity::transmission_time;
use cgrsim::contact_plan::{Bundle, Contact, ContactId, ContactPlan, NodeId, TimeMs};
use cgrsim::router::HopMeta;
use cgrsim::sim::TxRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every time in the oracle world lives on this lattice, which makes the
/// pointwise occupancy scan exact: step functions cannot change between
/// lattice points.
pub const LATTICE_MS: TimeMs = 100;

/// One usable sub-window of a link, tracked independently of the production
/// contact plan. `lineage` is the original contact id the window descends
/// from.
#[derive(Debug, Clone, Copy)]
pub struct OracleWindow {
    pub lineage: ContactId,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub rate_bps: u64,
    pub w1: TimeMs,
    pub w2: TimeMs,
}

/// Mirror of the router's whole constraint state, kept in flat interval
/// lists and replayed commit by commit.
#[derive(Debug, Clone, Default)]
pub struct OracleState {
    pub windows: Vec<OracleWindow>,
    /// Raw occupancy contributions per node: (from, to, size_bits).
    pub contributions: BTreeMap<NodeId, Vec<(TimeMs, TimeMs, u64)>>,
    /// Buffer capacity per node; `None` is unbounded.
    pub caps: BTreeMap<NodeId, Option<u64>>,
}

impl OracleState {
    pub fn from_plan(cp: &ContactPlan, caps: BTreeMap<NodeId, Option<u64>>) -> Self {
        let windows = cp
            .contacts()
            .map(|c| OracleWindow {
                lineage: c.id,
                sender: c.sender,
                receiver: c.receiver,
                rate_bps: c.rate_bps,
                w1: c.t_start,
                w2: c.t_end,
            })
            .collect();
        Self {
            windows,
            contributions: BTreeMap::new(),
            caps,
        }
    }

    pub fn add_contribution(&mut self, node: NodeId, from: TimeMs, to: TimeMs, size: u64) {
        if from < to && size > 0 {
            self.contributions.entry(node).or_default().push((from, to, size));
        }
    }

    fn occupancy_at(&self, node: NodeId, t: TimeMs) -> u64 {
        self.contributions
            .get(&node)
            .map(|v| {
                v.iter()
                    .filter(|&&(a, b, _)| a <= t && t < b)
                    .map(|&(_, _, s)| s)
                    .sum()
            })
            .unwrap_or(0)
    }

    fn horizon(&self) -> TimeMs {
        let w = self.windows.iter().map(|w| w.w2).max().unwrap_or(0);
        let c = self
            .contributions
            .values()
            .flatten()
            .map(|&(_, b, _)| b)
            .max()
            .unwrap_or(0);
        w.max(c) + LATTICE_MS
    }

    /// Maximal intervals where occupancy + `extra` would exceed the node's
    /// capacity, found by scanning every lattice point.
    pub fn overflow_intervals(&self, node: NodeId, extra: u64) -> Vec<(TimeMs, TimeMs)> {
        let Some(Some(cap)) = self.caps.get(&node).copied() else {
            return Vec::new();
        };
        let horizon = self.horizon();
        let mut out: Vec<(TimeMs, TimeMs)> = Vec::new();
        let mut over_since: Option<TimeMs> = None;
        let mut t = 0;
        while t <= horizon {
            let over = self.occupancy_at(node, t) + extra > cap;
            match (over_since, over) {
                (None, true) => over_since = Some(t),
                (Some(s), false) => {
                    out.push((s, t));
                    over_since = None;
                }
                _ => {}
            }
            t += LATTICE_MS;
        }
        if let Some(s) = over_since {
            out.push((s, horizon));
        }
        out
    }

    /// Brute-force minimal delivery time over all loop-free schedules that
    /// respect the remaining link windows and the buffer constraints: a
    /// transmission into a node must avoid that node's overflow periods, and
    /// the residence between consecutive hops must not overlap one.
    pub fn best_bdt(&self, bundle: &Bundle, t0: TimeMs) -> Option<TimeMs> {
        let mut overflow_cache: BTreeMap<NodeId, Vec<(TimeMs, TimeMs)>> = BTreeMap::new();
        for node in self.caps.keys() {
            if *node == bundle.destination {
                continue; // delivered bundles leave the network
            }
            let iv = self.overflow_intervals(*node, bundle.size_bits);
            if !iv.is_empty() {
                overflow_cache.insert(*node, iv);
            }
        }
        let mut best: Option<TimeMs> = None;
        let mut visited = vec![bundle.source];
        self.dfs(bundle, t0, bundle.source, &overflow_cache, &mut visited, &mut best);
        best
    }

    fn dfs(
        &self,
        bundle: &Bundle,
        arr: TimeMs,
        at: NodeId,
        overflows: &BTreeMap<NodeId, Vec<(TimeMs, TimeMs)>>,
        visited: &mut Vec<NodeId>,
        best: &mut Option<TimeMs>,
    ) {
        if let Some(b) = *best {
            if arr >= b {
                return;
            }
        }
        let empty = Vec::new();
        let here = overflows.get(&at).unwrap_or(&empty);
        for idx in 0..self.windows.len() {
            let w = self.windows[idx];
            if w.sender != at || visited.contains(&w.receiver) {
                continue;
            }
            let tt = transmission_time(bundle.size_bits, w.rate_bps);
            let cuts = overflows.get(&w.receiver).unwrap_or(&empty);
            for (p1, p2) in subtract_intervals((w.w1, w.w2), cuts) {
                let s = arr.max(p1);
                let e = s + tt;
                if e > p2 {
                    continue;
                }
                // Waiting at the current node until `s` must not overlap an
                // overflow period here (empty residence is fine).
                if s > arr && here.iter().any(|&(o1, o2)| arr < o2 && s > o1) {
                    continue;
                }
                if w.receiver == bundle.destination {
                    if best.map_or(true, |b| e < b) {
                        *best = Some(e);
                    }
                } else {
                    visited.push(w.receiver);
                    self.dfs(bundle, e, w.receiver, overflows, visited, best);
                    visited.pop();
                }
            }
        }
    }

    /// Mirrors a committed route: erase each hop's slice from the window it
    /// used and add the residence contributions at intermediate nodes.
    pub fn mirror_commit(&mut self, hops: &[(HopMeta, TimeMs, TimeMs)], size: u64) {
        for (meta, s, e) in hops {
            let pos = self
                .windows
                .iter()
                .position(|w| w.lineage == meta.origin && w.w1 <= *s && *e <= w.w2)
                .expect("hop slice lies inside exactly one oracle window");
            let w = self.windows.remove(pos);
            if w.w1 < *s {
                self.windows.push(OracleWindow { w2: *s, ..w });
            }
            if *e < w.w2 {
                self.windows.push(OracleWindow { w1: *e, ..w });
            }
        }
        for k in 1..hops.len() {
            let node = hops[k].0.sender;
            let arr = hops[k - 1].2;
            let dep = hops[k].1;
            self.add_contribution(node, arr, dep, size);
        }
    }
}

pub fn subtract_intervals(
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

/// Plain loop-free route enumeration with earliest transmission per hop and
/// no buffer constraints: `(bdt, contact sequence)` for every deliverable
/// route, sorted by `(bdt, lexicographic ids)`.
pub fn enumerate_all_routes(
    cp: &ContactPlan,
    bundle: &Bundle,
    t0: TimeMs,
) -> Vec<(TimeMs, Vec<ContactId>)> {
    fn go(
        cp: &ContactPlan,
        bundle: &Bundle,
        arr: TimeMs,
        at: NodeId,
        visited: &mut Vec<NodeId>,
        seq: &mut Vec<ContactId>,
        out: &mut Vec<(TimeMs, Vec<ContactId>)>,
    ) {
        for c in cp.contacts_from(at) {
            if visited.contains(&c.receiver) || c.suppressed {
                continue;
            }
            let s = arr.max(c.t_start);
            let e = s + transmission_time(bundle.size_bits, c.rate_bps);
            if e > c.t_end {
                continue;
            }
            seq.push(c.id);
            if c.receiver == bundle.destination {
                out.push((e, seq.clone()));
            } else {
                visited.push(c.receiver);
                go(cp, bundle, e, c.receiver, visited, seq, out);
                visited.pop();
            }
            seq.pop();
        }
    }
    let mut out = Vec::new();
    let mut visited = vec![bundle.source];
    go(cp, bundle, t0, bundle.source, &mut visited, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Seeded random plan on the 100 ms lattice: up to `max_contacts` contacts
/// among `n_nodes` nodes, rates from the standard set.
pub fn random_plan(rng: &mut ChaCha8Rng, n_nodes: u32, max_contacts: usize) -> ContactPlan {
    let rates = [200u64, 400, 800];
    let mut cp = ContactPlan::new();
    let n_contacts = rng.gen_range(3..=max_contacts);
    for id in 0..n_contacts {
        let sender = rng.gen_range(0..n_nodes);
        let mut receiver = rng.gen_range(0..n_nodes);
        if receiver == sender {
            receiver = (receiver + 1) % n_nodes;
        }
        let t1 = rng.gen_range(0..400) * LATTICE_MS;
        let dur = rng.gen_range(20..400) * LATTICE_MS;
        cp.insert_contact(Contact {
            id: ContactId(id as u32 + 1),
            origin: ContactId(id as u32 + 1),
            sender: NodeId(sender),
            receiver: NodeId(receiver),
            t_start: t1,
            t_end: t1 + dur,
            rate_bps: rates[rng.gen_range(0..rates.len())],
            suppressed: false,
        })
        .unwrap();
    }
    cp
}

/// Random buffer capacities per node: unbounded for source and destination,
/// a small multiple of the bundle size (or unbounded) elsewhere, lifted to
/// hold any pre-existing contributions.
pub fn random_caps(
    rng: &mut ChaCha8Rng,
    cp: &ContactPlan,
    bundle: &Bundle,
) -> BTreeMap<NodeId, Option<u64>> {
    let mut caps = BTreeMap::new();
    for node in cp.node_ids() {
        let cap = if node == bundle.source || node == bundle.destination {
            None
        } else {
            match rng.gen_range(0..4) {
                0 => None,
                m => Some(m as u64 * bundle.size_bits),
            }
        };
        caps.insert(node, cap);
    }
    caps
}

/// Runs `plans` seeded random scenarios of `bundles_each` sequential
/// routings through the full proposed pipeline, comparing every routing
/// against the stateful brute-force oracle (bdt equality, absence
/// agreement, overlay-growth bound, no-overflow invariant). Returns
/// (routed, unreachable) counts.
pub fn run_stateful_oracle_harness(seed: u64, plans: usize, bundles_each: u64) -> (usize, usize) {
    use cgrsim::buffer::BufferTables;
    use cgrsim::router::RouterState;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut routed = 0;
    let mut unreachable = 0;
    for plan_idx in 0..plans {
        let cp = random_plan(&mut rng, 6, 12);
        let source = NodeId(rng.gen_range(0..6));
        let mut destination = NodeId(rng.gen_range(0..6));
        if destination == source {
            destination = NodeId((destination.0 + 1) % 6);
        }
        let proto = Bundle {
            id: 0,
            size_bits: 800,
            source,
            destination,
            t_created: 0,
        };
        let caps = random_caps(&mut rng, &cp, &proto);
        let mut tables = BufferTables::new();
        let mut oracle = OracleState::from_plan(&cp, caps.clone());
        for (node, cap) in &caps {
            tables.set_capacity(*node, *cap);
            // Seed prior occupancy below the capacity so the initial state
            // is one the router could legitimately be in.
            if let Some(cap) = cap {
                if rng.gen_bool(0.6) {
                    let from = rng.gen_range(0..500) * LATTICE_MS;
                    let dur = rng.gen_range(10..300) * LATTICE_MS;
                    let size = rng.gen_range(1..=*cap);
                    tables.occupy(*node, from, from + dur, size);
                    oracle.add_contribution(*node, from, from + dur, size);
                }
            }
        }
        let mut router = RouterState::new(cp, tables, 0);
        for b in 0..bundles_each {
            let t_now = b as TimeMs * 7 * LATTICE_MS;
            let bundle = Bundle {
                id: b,
                size_bits: 800,
                source,
                destination,
                t_created: t_now,
            };
            let expected = oracle.best_bdt(&bundle, t_now);
            let got = router.route_bundle(&bundle, t_now);
            match (&expected, &got) {
                (None, None) => unreachable += 1,
                (Some(e), Some(c)) => {
                    assert_eq!(
                        c.route.bdt, *e,
                        "plan {plan_idx} bundle {b}: router bdt {} vs oracle {e}",
                        c.route.bdt
                    );
                    assert!(
                        c.stats.temp_added <= c.stats.temp_added_bound as i64,
                        "plan {plan_idx}: overlay growth {} exceeds its bound {}",
                        c.stats.temp_added,
                        c.stats.temp_added_bound
                    );
                    routed += 1;
                }
                (e, g) => panic!(
                    "plan {plan_idx} bundle {b}: oracle {e:?} but router returned {:?}",
                    g.as_ref().map(|c| c.route.bdt)
                ),
            }
            if let Some(c) = got {
                let hops: Vec<_> = c
                    .meta
                    .iter()
                    .zip(c.route.hops.iter())
                    .map(|(m, h)| (*m, h.tx_start, h.tx_end))
                    .collect();
                oracle.mirror_commit(&hops, bundle.size_bits);
            }
        }
        // The no-overflow invariant holds at every point of the run.
        assert!(
            router.tables.tables().all(|t| t.within_capacity()),
            "plan {plan_idx}: forecast table exceeded capacity"
        );
    }
    (routed, unreachable)
}

/// Trace replay checker: (a) at most one bundle per origin link at any
/// instant, (b) realized per-node occupancy never exceeds the node's
/// capacity. Occupancy is accumulated from each bundle's consecutive hops:
/// it sits at hop k's receiver from that hop's end until hop k+1 starts.
pub fn replay_check(
    trace: &[TxRecord],
    caps: &BTreeMap<NodeId, Option<u64>>,
    bundle_sizes: &BTreeMap<u64, u64>,
) -> Result<(), String> {
    let mut per_origin: BTreeMap<ContactId, Vec<(TimeMs, TimeMs, u64)>> = BTreeMap::new();
    for r in trace {
        per_origin
            .entry(r.origin)
            .or_default()
            .push((r.tx_start, r.tx_end, r.bundle_id));
    }
    for (origin, mut slots) in per_origin {
        slots.sort_unstable();
        for w in slots.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(format!(
                    "link {origin}: bundles {} and {} overlap ({:?} vs {:?})",
                    w[0].2, w[1].2, w[0], w[1]
                ));
            }
        }
    }

    let mut per_bundle: BTreeMap<u64, Vec<&TxRecord>> = BTreeMap::new();
    for r in trace {
        per_bundle.entry(r.bundle_id).or_default().push(r);
    }
    let mut deltas: BTreeMap<NodeId, BTreeMap<TimeMs, i128>> = BTreeMap::new();
    for (bundle_id, mut hops) in per_bundle {
        hops.sort_by_key(|r| r.tx_start);
        let size = *bundle_sizes
            .get(&bundle_id)
            .ok_or_else(|| format!("bundle {bundle_id} missing a size"))?;
        for w in hops.windows(2) {
            let node = w[0].receiver;
            if node != w[1].sender {
                return Err(format!("bundle {bundle_id}: disconnected hop chain at {node}"));
            }
            let (arr, dep) = (w[0].tx_end, w[1].tx_start);
            if dep < arr {
                return Err(format!("bundle {bundle_id}: departs {node} before arriving"));
            }
            if arr < dep {
                let d = deltas.entry(node).or_default();
                *d.entry(arr).or_default() += size as i128;
                *d.entry(dep).or_default() -= size as i128;
            }
        }
    }
    for (node, d) in deltas {
        let Some(Some(cap)) = caps.get(&node).copied() else {
            continue;
        };
        let mut acc: i128 = 0;
        for (t, delta) in d {
            acc += delta;
            if acc > cap as i128 {
                return Err(format!(
                    "node {node}: realized occupancy {acc} exceeds capacity {cap} at t={t}"
                ));
            }
        }
    }
    Ok(())
}
