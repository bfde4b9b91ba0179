//! Deterministic discrete-event simulator: workload generation, routing with
//! either algorithm, TDM forwarding, and metric collection.
//!
//! Determinism comes from a total event order `(time, kind rank, payload)`
//! and from keeping every container iteration order-stable, so identical
//! inputs reproduce byte-identical outputs.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::benchmark::{BenchmarkState, Booking, BufferCheck, CapacityCheck, NeighborBufferView};
use crate::buffer::BufferTables;
use crate::contact_plan::{Bundle, ContactId, ContactPlan, NodeId, Route, TimeMs};
use crate::router::RouterState;

/// Stand-in for an infinite contact rate: fast enough to be negligible at
/// desk scale while keeping transmission times positive, so event ordering
/// stays well defined.
pub const RATE_INFINITE_BPS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Proposed,
    Benchmark,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::Benchmark => "benchmark",
        }
    }
}

/// Event kinds in tie-break rank order at equal times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    ContactClose,
    TxEnd,
    TxStart,
    BundleGenerated,
    RetryRoute,
    ContactOpen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub time: TimeMs,
    pub kind: EventKind,
    pub payload: u64,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub algorithm: Algorithm,
    pub n_bundles: u64,
    pub bundle_size_bits: u64,
    /// Workload generation period (bundles spread evenly across it).
    pub generation_period_ms: TimeMs,
    /// Overrides every contact's rate when set.
    pub rate_override_bps: Option<u64>,
    /// Per intermediate node buffer capacity in bits; `None` is unbounded.
    pub buffer_capacity_bits: Option<u64>,
    /// Yen's constant for the benchmark.
    pub k: usize,
    pub horizon_ms: TimeMs,
    pub time_step_ms: TimeMs,
    pub source: NodeId,
    pub destination: NodeId,
    pub seed: u64,
    /// Optional uniform jitter applied to generation times; 0 disables it.
    pub jitter_ms: TimeMs,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Proposed,
            n_bundles: 1,
            bundle_size_bits: 800,
            generation_period_ms: 2_000_000,
            rate_override_bps: None,
            buffer_capacity_bits: None,
            k: 10,
            horizon_ms: 86_400_000,
            time_step_ms: 1_000,
            source: NodeId(0),
            destination: NodeId(1),
            seed: 0,
            jitter_ms: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// Evenly spaced workload: bundle `i` is created at `i * period / n` from
/// scenario start. With jitter enabled, each time is shifted by a seeded
/// uniform offset and ids are re-assigned in time order, keeping ids
/// monotone in generation time.
pub fn generate_workload(
    n_bundles: u64,
    size_bits: u64,
    period_ms: TimeMs,
    source: NodeId,
    destination: NodeId,
    seed: u64,
    jitter_ms: TimeMs,
) -> Vec<Bundle> {
    let mut times: Vec<TimeMs> = (0..n_bundles)
        .map(|i| ((i as i128 * period_ms as i128) / n_bundles as i128) as TimeMs)
        .collect();
    if jitter_ms > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in &mut times {
            let shift = rng.gen_range(-jitter_ms..=jitter_ms);
            *t = (*t + shift).clamp(0, period_ms);
        }
        times.sort_unstable();
    }
    times
        .into_iter()
        .enumerate()
        .map(|(i, t)| Bundle {
            id: i as u64,
            size_bits,
            source,
            destination,
            t_created: t,
        })
        .collect()
}

/// Per-bundle outcome record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundleStats {
    pub bundle_id: u64,
    pub t_gen: TimeMs,
    pub t_delivered: Option<TimeMs>,
    pub hops: u32,
    pub reroutes: u32,
}

/// One realized transmission, as recorded in the event trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxRecord {
    pub bundle_id: u64,
    pub contact: ContactId,
    pub origin: ContactId,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub tx_start: TimeMs,
    pub tx_end: TimeMs,
}

#[derive(Debug, Clone)]
pub struct Metrics {
    pub per_bundle: Vec<BundleStats>,
    pub delivered: u64,
    pub undelivered: u64,
    /// Mean time in network over delivered bundles only.
    pub avg_time_in_network_ms: f64,
    /// Rerouting events: intermediate check failures, source searches that
    /// found no route, and bounce-backs to the source. Structurally zero for
    /// the proposed algorithm in a disruption-free run.
    pub reroutes_total: u64,
    /// No-route retry attempts of the proposed router (not reroutes).
    pub retry_attempts: u64,
    /// Plan size sampled each second, replayed from the mutation journal.
    pub cp_size_timeline: Vec<(TimeMs, i64)>,
    pub initial_cp_size: usize,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub metrics: Metrics,
    pub trace: Vec<TxRecord>,
    /// Forecast tables at end of run (proposed algorithm only).
    pub tables: Option<BufferTables>,
    /// Realized neighbor-buffer bookings (benchmark only).
    pub bench_view: Option<NeighborBufferView>,
}

#[derive(Debug, Clone)]
struct PlannedHop {
    contact: ContactId,
    origin: ContactId,
    sender: NodeId,
    receiver: NodeId,
    tx_start: TimeMs,
    tx_end: TimeMs,
}

#[derive(Debug, Clone)]
enum Flight {
    AtSource,
    Enroute {
        hops: Vec<PlannedHop>,
        hop_idx: usize,
        /// Nodes the bundle has physically visited, source first.
        visited: Vec<NodeId>,
    },
    Delivered,
}

struct Sim<'a> {
    config: &'a SimConfig,
    queue: BinaryHeap<Reverse<Event>>,
    now: TimeMs,
    bundles: Vec<Bundle>,
    flights: Vec<Flight>,
    stats: Vec<BundleStats>,
    trace: Vec<TxRecord>,
    reroutes_total: u64,
    retry_attempts: u64,
}

impl<'a> Sim<'a> {
    fn schedule(&mut self, time: TimeMs, kind: EventKind, payload: u64) {
        if time <= self.config.horizon_ms {
            self.queue.push(Reverse(Event { time, kind, payload }));
        }
    }

    fn schedule_retry(&mut self, bundle: u64) {
        self.schedule(self.now + self.config.time_step_ms, EventKind::RetryRoute, bundle);
    }

    fn deliver(&mut self, bundle: u64) {
        self.flights[bundle as usize] = Flight::Delivered;
        self.stats[bundle as usize].t_delivered = Some(self.now);
    }
}

fn resolve_hops(cp: &ContactPlan, route: &Route) -> Vec<PlannedHop> {
    route
        .hops
        .iter()
        .map(|h| {
            let c = cp.get(h.contact).expect("routed contact exists at resolve time");
            PlannedHop {
                contact: h.contact,
                origin: c.origin,
                sender: c.sender,
                receiver: c.receiver,
                tx_start: h.tx_start,
                tx_end: h.tx_end,
            }
        })
        .collect()
}

fn configured_plan(plan: &ContactPlan, config: &SimConfig) -> Result<ContactPlan, SimError> {
    if config.n_bundles == 0 {
        return Err(SimError::BadConfig("n_bundles must be at least 1".into()));
    }
    if config.bundle_size_bits == 0 {
        return Err(SimError::BadConfig("bundle size must be positive".into()));
    }
    if config.k == 0 {
        return Err(SimError::BadConfig("k must be at least 1".into()));
    }
    if config.source == config.destination {
        return Err(SimError::BadConfig("source equals destination".into()));
    }
    if config.rate_override_bps == Some(0) {
        return Err(SimError::BadConfig("rate override must be positive".into()));
    }
    if config.time_step_ms <= 0 {
        return Err(SimError::BadConfig("time step must be positive".into()));
    }
    let mut cp = plan.clone();
    if let Some(rate) = config.rate_override_bps {
        cp.set_all_rates(rate);
    }
    Ok(cp)
}

fn node_capacity(config: &SimConfig, node: NodeId) -> Option<u64> {
    if node == config.source || node == config.destination {
        None
    } else {
        config.buffer_capacity_bits
    }
}

/// Runs one simulation to quiescence (or the horizon) and collects metrics,
/// the transmission trace and, for the proposed algorithm, the final
/// forecast tables.
pub fn run_simulation(plan: &ContactPlan, config: &SimConfig) -> Result<SimResult, SimError> {
    let cp = configured_plan(plan, config)?;
    let initial_cp_size = cp.len();
    let bundles = generate_workload(
        config.n_bundles,
        config.bundle_size_bits,
        config.generation_period_ms,
        config.source,
        config.destination,
        config.seed,
        config.jitter_ms,
    );
    let mut sim = Sim {
        config,
        queue: BinaryHeap::new(),
        now: 0,
        stats: bundles
            .iter()
            .map(|b| BundleStats {
                bundle_id: b.id,
                t_gen: b.t_created,
                t_delivered: None,
                hops: 0,
                reroutes: 0,
            })
            .collect(),
        flights: vec![Flight::AtSource; bundles.len()],
        bundles,
        trace: Vec::new(),
        reroutes_total: 0,
        retry_attempts: 0,
    };
    for b in &sim.bundles {
        sim.queue.push(Reverse(Event {
            time: b.t_created,
            kind: EventKind::BundleGenerated,
            payload: b.id,
        }));
    }
    let close_times: BTreeSet<(TimeMs, u32)> =
        cp.contacts().map(|c| (c.t_end, c.id.0)).collect();
    for (t, id) in close_times {
        sim.schedule(t, EventKind::ContactClose, id as u64);
    }

    let timeline = match config.algorithm {
        Algorithm::Proposed => run_proposed(&mut sim, cp)?,
        Algorithm::Benchmark => run_benchmark(&mut sim, cp)?,
    };

    let delivered = sim.stats.iter().filter(|s| s.t_delivered.is_some()).count() as u64;
    let undelivered = sim.stats.len() as u64 - delivered;
    let avg = if delivered > 0 {
        sim.stats
            .iter()
            .filter_map(|s| s.t_delivered.map(|d| (d - s.t_gen) as f64))
            .sum::<f64>()
            / delivered as f64
    } else {
        0.0
    };
    let (timeline, tables, bench_view) = timeline;
    Ok(SimResult {
        metrics: Metrics {
            per_bundle: sim.stats,
            delivered,
            undelivered,
            avg_time_in_network_ms: avg,
            reroutes_total: sim.reroutes_total,
            retry_attempts: sim.retry_attempts,
            cp_size_timeline: timeline,
            initial_cp_size,
        },
        trace: sim.trace,
        tables,
        bench_view,
    })
}

type BackendOutput = (Vec<(TimeMs, i64)>, Option<BufferTables>, Option<NeighborBufferView>);

fn run_proposed(sim: &mut Sim, cp: ContactPlan) -> Result<BackendOutput, SimError> {
    let initial_size = cp.len();
    let mut tables = BufferTables::new();
    for node in cp.node_ids() {
        tables.set_capacity(node, node_capacity(sim.config, node));
    }
    let mut state = RouterState::new(cp, tables, sim.config.bundle_size_bits);
    state.time_step_ms = sim.config.time_step_ms;

    while let Some(Reverse(ev)) = sim.queue.pop() {
        sim.now = ev.time;
        state.remove_expired(sim.now);
        match ev.kind {
            EventKind::BundleGenerated | EventKind::RetryRoute => {
                let bundle = sim.bundles[ev.payload as usize];
                match state.route_bundle(&bundle, sim.now) {
                    Some(committed) => {
                        let hops: Vec<PlannedHop> = committed
                            .route
                            .hops
                            .iter()
                            .zip(committed.meta.iter())
                            .map(|(h, m)| PlannedHop {
                                contact: h.contact,
                                origin: m.origin,
                                sender: m.sender,
                                receiver: m.receiver,
                                tx_start: h.tx_start,
                                tx_end: h.tx_end,
                            })
                            .collect();
                        for h in &hops {
                            sim.schedule(h.tx_start, EventKind::TxStart, bundle.id);
                            sim.schedule(h.tx_end, EventKind::TxEnd, bundle.id);
                        }
                        sim.flights[bundle.id as usize] = Flight::Enroute {
                            hops,
                            hop_idx: 0,
                            visited: vec![bundle.source],
                        };
                    }
                    None => {
                        sim.retry_attempts += 1;
                        sim.schedule_retry(bundle.id);
                    }
                }
            }
            EventKind::TxStart => {
                let id = ev.payload as usize;
                if let Flight::Enroute { hops, hop_idx, .. } = &sim.flights[id] {
                    let h = &hops[*hop_idx];
                    sim.trace.push(TxRecord {
                        bundle_id: ev.payload,
                        contact: h.contact,
                        origin: h.origin,
                        sender: h.sender,
                        receiver: h.receiver,
                        tx_start: h.tx_start,
                        tx_end: h.tx_end,
                    });
                }
            }
            EventKind::TxEnd => {
                let id = ev.payload as usize;
                if let Flight::Enroute { hops, hop_idx, visited } = &mut sim.flights[id] {
                    let receiver = hops[*hop_idx].receiver;
                    sim.stats[id].hops += 1;
                    if receiver == sim.bundles[id].destination {
                        sim.deliver(ev.payload);
                    } else {
                        visited.push(receiver);
                        *hop_idx += 1;
                    }
                }
            }
            EventKind::ContactClose | EventKind::ContactOpen => {}
        }
    }
    let timeline = state
        .capacity
        .log
        .size_timeline(initial_size, sim.config.horizon_ms);
    Ok((timeline, Some(state.tables), None))
}

fn run_benchmark(sim: &mut Sim, cp: ContactPlan) -> Result<BackendOutput, SimError> {
    let initial_size = cp.len();
    let mut view = NeighborBufferView::default();
    for node in cp.node_ids() {
        view.set_capacity(node, node_capacity(sim.config, node));
    }
    let mut state = BenchmarkState::new(cp, view, sim.config.k);
    state.time_step_ms = sim.config.time_step_ms;
    // Expiry-only timeline for the benchmark: sample analytically.
    let expiry_counts: Vec<TimeMs> = state.cp.contacts().map(|c| c.t_end).collect();

    while let Some(Reverse(ev)) = sim.queue.pop() {
        sim.now = ev.time;
        state.remove_expired(sim.now);
        match ev.kind {
            EventKind::BundleGenerated | EventKind::RetryRoute => {
                let bundle = sim.bundles[ev.payload as usize];
                benchmark_route_at_source(sim, &mut state, &bundle);
            }
            EventKind::TxStart => benchmark_tx_start(sim, &mut state, ev.payload),
            EventKind::TxEnd => {
                let id = ev.payload as usize;
                if let Flight::Enroute { hops, hop_idx, visited } = &mut sim.flights[id] {
                    let receiver = hops[*hop_idx].receiver;
                    sim.stats[id].hops += 1;
                    if receiver == sim.bundles[id].destination {
                        sim.deliver(ev.payload);
                    } else {
                        visited.push(receiver);
                        *hop_idx += 1;
                        let next_start = hops[*hop_idx].tx_start.max(sim.now);
                        sim.schedule(next_start, EventKind::TxStart, ev.payload);
                    }
                }
            }
            EventKind::ContactClose | EventKind::ContactOpen => {}
        }
    }
    let mut timeline = Vec::new();
    let mut t = 0;
    while t <= sim.config.horizon_ms {
        let size = expiry_counts.iter().filter(|&&e| e > t).count() as i64;
        timeline.push((t, size.min(initial_size as i64)));
        t += 1000;
    }
    Ok((timeline, None, Some(state.buffers)))
}

fn benchmark_route_at_source(sim: &mut Sim, state: &mut BenchmarkState, bundle: &Bundle) {
    match state.source_route(bundle, sim.now) {
        Some(route) => {
            let hops = resolve_hops(&state.cp, &route);
            let first = hops[0].tx_start;
            sim.flights[bundle.id as usize] = Flight::Enroute {
                hops,
                hop_idx: 0,
                visited: vec![bundle.source],
            };
            sim.schedule(first, EventKind::TxStart, bundle.id);
        }
        None => {
            // No route among the k shortest: delay and search again.
            sim.reroutes_total += 1;
            sim.stats[bundle.id as usize].reroutes += 1;
            sim.schedule_retry(bundle.id);
        }
    }
}

fn benchmark_tx_start(sim: &mut Sim, state: &mut BenchmarkState, bundle_id: u64) {
    let bundle = sim.bundles[bundle_id as usize];
    let Flight::Enroute { hops, hop_idx, visited } = sim.flights[bundle_id as usize].clone()
    else {
        return;
    };
    let at_node = if hop_idx == 0 {
        hops[0].sender
    } else {
        hops[hop_idx - 1].receiver
    };
    let route = Route {
        bundle_id,
        hops: hops
            .iter()
            .map(|h| crate::contact_plan::Hop {
                contact: h.contact,
                tx_start: h.tx_start,
                tx_end: h.tx_end,
            })
            .collect(),
        bdt: hops.last().expect("route has hops").tx_end,
    };

    // Capacity check: collisions with lower-id traffic delay us; an overrun
    // of the contact end forces a reroute from here.
    let updated = match state.forward_check_capacity(&route, hop_idx, &bundle, sim.now) {
        CapacityCheck::Proceed { updated } => updated,
        CapacityCheck::Reroute { problematic } => {
            benchmark_reroute(sim, state, &bundle, at_node, &hops, hop_idx, problematic, &visited, false);
            return;
        }
    };
    let h = updated.hops[hop_idx];
    if h.tx_start > sim.now {
        // Delayed behind booked traffic or a not-yet-open contact; keep the
        // shifted schedule and try again at the new start.
        let mut new_hops = hops.clone();
        for (ph, uh) in new_hops.iter_mut().zip(updated.hops.iter()) {
            ph.tx_start = uh.tx_start;
            ph.tx_end = uh.tx_end;
        }
        let start = h.tx_start;
        sim.flights[bundle_id as usize] = Flight::Enroute { hops: new_hops, hop_idx, visited };
        sim.schedule(start, EventKind::TxStart, bundle_id);
        return;
    }

    // Buffer check at the receiving node.
    let receiver = hops[hop_idx].receiver;
    if receiver != bundle.destination {
        if state.forward_check_buffer(receiver, &bundle, sim.now) == BufferCheck::Reroute {
            let problematic = hops[hop_idx].contact;
            benchmark_reroute(sim, state, &bundle, at_node, &hops, hop_idx, problematic, &visited, true);
            return;
        }
        // Book the receiving buffer: full size until the planned departure,
        // then a linear drain over the planned outgoing transmission.
        let (drain_from, drain_until) = if hop_idx + 1 < updated.hops.len() {
            let next = updated.hops[hop_idx + 1];
            (next.tx_start, next.tx_end)
        } else {
            unreachable!("non-destination receiver implies another hop");
        };
        state.buffers.book(
            receiver,
            Booking {
                bundle_id,
                size_bits: bundle.size_bits,
                booked_from: sim.now,
                drain_from,
                drain_until,
            },
        );
    }

    // Transmit: book the link slot unless the source pre-booked it.
    let already = state
        .contact_bookings
        .slots(h.contact)
        .iter()
        .any(|&(s, e, bid)| bid == bundle_id && s == h.tx_start && e == h.tx_end);
    if !already {
        state
            .contact_bookings
            .book(h.contact, h.tx_start, h.tx_end, bundle_id);
    }
    let mut new_hops = hops.clone();
    for (ph, uh) in new_hops.iter_mut().zip(updated.hops.iter()) {
        ph.tx_start = uh.tx_start;
        ph.tx_end = uh.tx_end;
    }
    let rec = &new_hops[hop_idx];
    sim.trace.push(TxRecord {
        bundle_id,
        contact: rec.contact,
        origin: rec.origin,
        sender: rec.sender,
        receiver: rec.receiver,
        tx_start: rec.tx_start,
        tx_end: rec.tx_end,
    });
    let end = rec.tx_end;
    sim.flights[bundle_id as usize] = Flight::Enroute { hops: new_hops, hop_idx, visited };
    sim.schedule(end, EventKind::TxEnd, bundle_id);
}

#[allow(clippy::too_many_arguments)]
fn benchmark_reroute(
    sim: &mut Sim,
    state: &mut BenchmarkState,
    bundle: &Bundle,
    at_node: NodeId,
    hops: &[PlannedHop],
    hop_idx: usize,
    problematic: ContactId,
    visited: &[NodeId],
    buffer_flavored: bool,
) {
    sim.reroutes_total += 1;
    sim.stats[bundle.id as usize].reroutes += 1;
    let mut exclude = BTreeSet::new();
    exclude.insert(problematic);
    // Buffer reroutes also avoid every node the bundle already visited; the
    // capacity flavor only bans the problematic contact.
    let blocked: Vec<NodeId> = if buffer_flavored {
        visited.iter().copied().filter(|n| *n != at_node).collect()
    } else {
        Vec::new()
    };
    let unused: Vec<ContactId> = hops[hop_idx..].iter().map(|h| h.contact).collect();
    match state.reroute_from_node(at_node, bundle, sim.now, &exclude, &blocked, &unused) {
        Some(route) => {
            let new_hops = resolve_hops(&state.cp, &route);
            let start = new_hops[0].tx_start;
            sim.flights[bundle.id as usize] = Flight::Enroute {
                hops: new_hops,
                hop_idx: 0,
                visited: visited.to_vec(),
            };
            sim.schedule(start, EventKind::TxStart, bundle.id);
        }
        None => {
            // Instantly sent back to the source; rerouted after one step.
            sim.reroutes_total += 1;
            sim.stats[bundle.id as usize].reroutes += 1;
            sim.flights[bundle.id as usize] = Flight::AtSource;
            sim.schedule_retry(bundle.id);
        }
    }
}

/// Summary row of one simulation for the sweep CSVs.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub n_bundles: u64,
    pub rate_bps: Option<u64>,
    pub buffer_bundles: Option<u64>,
    pub avg_time_ms: f64,
    pub reroutes_total: u64,
    pub undelivered: u64,
}

/// Capacity-management experiment: both algorithms across contact rates and
/// workload sizes, buffers unbounded.
pub fn capacity_experiment(
    plan: &ContactPlan,
    base: &SimConfig,
    rates: &[u64],
    n_bundles: &[u64],
) -> Result<Vec<SummaryRow>, SimError> {
    let mut rows = Vec::new();
    for &algorithm in &[Algorithm::Proposed, Algorithm::Benchmark] {
        for &nb in n_bundles {
            for &rate in rates {
                let config = SimConfig {
                    algorithm,
                    n_bundles: nb,
                    rate_override_bps: Some(rate),
                    buffer_capacity_bits: None,
                    ..base.clone()
                };
                let result = run_simulation(plan, &config)?;
                rows.push(SummaryRow {
                    algorithm,
                    n_bundles: nb,
                    rate_bps: Some(rate),
                    buffer_bundles: None,
                    avg_time_ms: result.metrics.avg_time_in_network_ms,
                    reroutes_total: result.metrics.reroutes_total,
                    undelivered: result.metrics.undelivered,
                });
            }
        }
    }
    Ok(rows)
}

/// Buffer-management experiment: rates effectively infinite, buffer sizes
/// expressed in bundles (`None` meaning unbounded).
pub fn buffer_experiment(
    plan: &ContactPlan,
    base: &SimConfig,
    buffer_bundles: &[Option<u64>],
    n_bundles: &[u64],
) -> Result<Vec<SummaryRow>, SimError> {
    let mut rows = Vec::new();
    for &algorithm in &[Algorithm::Proposed, Algorithm::Benchmark] {
        for &nb in n_bundles {
            for &buf in buffer_bundles {
                let config = SimConfig {
                    algorithm,
                    n_bundles: nb,
                    rate_override_bps: Some(RATE_INFINITE_BPS),
                    buffer_capacity_bits: buf.map(|n| n * base.bundle_size_bits),
                    ..base.clone()
                };
                let result = run_simulation(plan, &config)?;
                rows.push(SummaryRow {
                    algorithm,
                    n_bundles: nb,
                    rate_bps: None,
                    buffer_bundles: buf,
                    avg_time_ms: result.metrics.avg_time_in_network_ms,
                    reroutes_total: result.metrics.reroutes_total,
                    undelivered: result.metrics.undelivered,
                });
            }
        }
    }
    Ok(rows)
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "inf".into())
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out =
        String::from("algorithm,n_bundles,rate_bps,buffer_bundles,avg_time_ms,reroutes_total,undelivered\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.3},{},{}\n",
            r.algorithm.as_str(),
            r.n_bundles,
            opt_u64(r.rate_bps),
            opt_u64(r.buffer_bundles),
            r.avg_time_ms,
            r.reroutes_total,
            r.undelivered
        ));
    }
    out
}

pub fn per_bundle_csv(stats: &[BundleStats]) -> String {
    let mut out = String::from("bundle_id,t_gen_ms,t_delivered_ms,hops,reroutes,delivered\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.bundle_id,
            s.t_gen,
            s.t_delivered.map(|t| t.to_string()).unwrap_or_default(),
            s.hops,
            s.reroutes,
            s.t_delivered.is_some() as u8
        ));
    }
    out
}

pub fn cp_size_csv(timeline: &[(TimeMs, i64)], initial_size: usize) -> String {
    let mut out = String::from("t_ms,cp_size,cp_size_normalized\n");
    let denom = initial_size.max(1) as f64;
    for (t, size) in timeline {
        out.push_str(&format!("{},{},{:.6}\n", t, size, *size as f64 / denom));
    }
    out
}
