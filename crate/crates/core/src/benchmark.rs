//! The source-routing CGR benchmark: Yen route lists plus linear volume
//! accounting at the source, with reactive capacity and buffer checks during
//! the forwarding phase. Problems are discovered where they happen; the
//! bundle is then rerouted from that node, or bounced back to the source.

use std::collections::{BTreeMap, BTreeSet};

use crate::capacity::transmission_time;
use crate::contact_plan::{Bundle, ContactId, ContactPlan, Hop, NodeId, Route, TimeMs};
use crate::route_search::{yen_k_routes_from, SearchOptions};

/// Per-contact remaining volume under the linear consumption model: booking
/// a bundle simply subtracts its size, with no notion of when the capacity
/// is used.
#[derive(Debug, Clone, Default)]
pub struct LinearVolumeLedger {
    remaining: BTreeMap<ContactId, u64>,
    initial: BTreeMap<ContactId, u64>,
}

impl LinearVolumeLedger {
    pub fn new(cp: &ContactPlan) -> Self {
        let initial: BTreeMap<ContactId, u64> =
            cp.contacts().map(|c| (c.id, c.volume_bits())).collect();
        Self {
            remaining: initial.clone(),
            initial,
        }
    }

    pub fn remaining(&self, id: ContactId) -> u64 {
        self.remaining.get(&id).copied().unwrap_or(0)
    }

    pub fn deduct(&mut self, id: ContactId, size: u64) {
        let r = self.remaining.entry(id).or_insert(0);
        *r = r.saturating_sub(size);
    }

    /// Local credit for an abandoned booking, capped at the initial volume.
    pub fn credit(&mut self, id: ContactId, size: u64) {
        let cap = self.initial.get(&id).copied().unwrap_or(0);
        let r = self.remaining.entry(id).or_insert(0);
        *r = (*r + size).min(cap);
    }

    /// Ids whose remaining volume is zero (ignored by the route search).
    pub fn exhausted(&self) -> impl Iterator<Item = ContactId> + '_ {
        self.remaining
            .iter()
            .filter(|(_, r)| **r == 0)
            .map(|(id, _)| *id)
    }

    pub fn check_bounds(&self) -> bool {
        self.remaining
            .iter()
            .all(|(id, r)| *r <= self.initial.get(id).copied().unwrap_or(0))
    }
}

/// One realized buffer booking at a node: full size from the upstream
/// transmission start through the planned wait, then a linear drain over the
/// planned outgoing transmission.
#[derive(Debug, Clone, Copy)]
pub struct Booking {
    pub bundle_id: u64,
    pub size_bits: u64,
    /// Upstream transmission start (occupancy appears here).
    pub booked_from: TimeMs,
    /// Planned start of the outgoing transmission (drain begins).
    pub drain_from: TimeMs,
    /// Planned end of the outgoing transmission (occupancy reaches zero).
    pub drain_until: TimeMs,
}

impl Booking {
    pub fn occupied_at(&self, t: TimeMs) -> u64 {
        if t < self.booked_from || t >= self.drain_until {
            0
        } else if t < self.drain_from {
            self.size_bits
        } else {
            let span = (self.drain_until - self.drain_from) as u128;
            (self.size_bits as u128 * (self.drain_until - t) as u128 / span) as u64
        }
    }
}

/// Realized neighbor-buffer state: what a forwarding node can see about the
/// buffers of the nodes it is in contact with.
#[derive(Debug, Clone, Default)]
pub struct NeighborBufferView {
    capacity: BTreeMap<NodeId, Option<u64>>,
    bookings: BTreeMap<NodeId, Vec<Booking>>,
}

impl NeighborBufferView {
    pub fn set_capacity(&mut self, node: NodeId, capacity: Option<u64>) {
        self.capacity.insert(node, capacity);
    }

    pub fn capacity(&self, node: NodeId) -> Option<u64> {
        self.capacity.get(&node).copied().flatten()
    }

    pub fn occupancy_at(&self, node: NodeId, t: TimeMs) -> u64 {
        self.bookings
            .get(&node)
            .map(|v| v.iter().map(|b| b.occupied_at(t)).sum())
            .unwrap_or(0)
    }

    pub fn has_room(&self, node: NodeId, t: TimeMs, size: u64) -> bool {
        match self.capacity(node) {
            None => true,
            Some(cap) => self.occupancy_at(node, t) + size <= cap,
        }
    }

    pub fn book(&mut self, node: NodeId, booking: Booking) {
        self.bookings.entry(node).or_default().push(booking);
    }

    pub fn bookings(&self, node: NodeId) -> &[Booking] {
        self.bookings.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Committed transmissions per contact, sorted by start time. Each node only
/// ever queries the contacts it sends on, so this map doubles as every
/// node's local transmission queue.
#[derive(Debug, Clone, Default)]
pub struct ContactBookings {
    per_contact: BTreeMap<ContactId, Vec<(TimeMs, TimeMs, u64)>>,
}

impl ContactBookings {
    pub fn book(&mut self, contact: ContactId, s: TimeMs, e: TimeMs, bundle_id: u64) {
        let v = self.per_contact.entry(contact).or_default();
        let pos = v.partition_point(|&(bs, _, _)| bs < s);
        v.insert(pos, (s, e, bundle_id));
    }

    pub fn slots(&self, contact: ContactId) -> &[(TimeMs, TimeMs, u64)] {
        self.per_contact.get(&contact).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Earliest start `>= not_before` at which `[start, start+tt)` avoids
    /// every booking by other bundles.
    pub fn earliest_free_slot(
        &self,
        contact: ContactId,
        not_before: TimeMs,
        tt: TimeMs,
        me: u64,
    ) -> TimeMs {
        let mut s = not_before;
        for &(bs, be, bid) in self.slots(contact) {
            if bid == me {
                continue;
            }
            if bs < s + tt && be > s {
                s = be;
            }
        }
        s
    }

    /// The booking by another bundle that blocks `[s, s+tt)`, if any.
    pub fn conflict(&self, contact: ContactId, s: TimeMs, tt: TimeMs, me: u64) -> Option<(TimeMs, u64)> {
        self.slots(contact)
            .iter()
            .find(|&&(bs, be, bid)| bid != me && bs < s + tt && be > s)
            .map(|&(_, be, bid)| (be, bid))
    }
}

/// Cached k-shortest route list, valid for exactly one plan revision.
#[derive(Debug, Clone)]
pub struct RouteList {
    pub routes: Vec<Route>,
    pub valid_for_revision: u64,
    pub computed_at: TimeMs,
}

/// Verdict of the pre-transmission capacity check at a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CapacityCheck {
    /// The hop can go ahead; the route carries the (possibly delayed) times.
    Proceed { updated: Route },
    /// Delaying past the colliding traffic would overrun the contact; a new
    /// route must be computed from here, avoiding this contact.
    Reroute { problematic: ContactId },
}

/// Verdict of the pre-transmission buffer check at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferCheck {
    BookAndSend,
    /// The next node's buffer is full; reroute avoiding this contact and the
    /// bundle's previously visited nodes.
    Reroute,
}

/// Whole benchmark-side shared state.
#[derive(Debug, Clone)]
pub struct BenchmarkState {
    pub cp: ContactPlan,
    pub ledger: LinearVolumeLedger,
    pub buffers: NeighborBufferView,
    pub contact_bookings: ContactBookings,
    route_list: Option<RouteList>,
    pub k: usize,
    pub time_step_ms: TimeMs,
}

impl BenchmarkState {
    pub fn new(cp: ContactPlan, buffers: NeighborBufferView, k: usize) -> Self {
        let ledger = LinearVolumeLedger::new(&cp);
        Self {
            cp,
            ledger,
            buffers,
            contact_bookings: ContactBookings::default(),
            route_list: None,
            k,
            time_step_ms: 1_000,
        }
    }

    /// Prunes expired contacts; any removal bumps the revision and thereby
    /// invalidates the cached route list.
    pub fn remove_expired(&mut self, now: TimeMs) -> usize {
        self.cp.remove_expired(now)
    }

    fn route_list_for(&mut self, bundle: &Bundle, t_now: TimeMs) -> &RouteList {
        let stale = self
            .route_list
            .as_ref()
            .map_or(true, |l| l.valid_for_revision != self.cp.revision());
        if stale {
            let suppressed: BTreeSet<ContactId> = self.ledger.exhausted().collect();
            let opts = SearchOptions {
                blocked_nodes: Vec::new(),
                suppressed,
            };
            let routes =
                yen_k_routes_from(&self.cp, bundle, bundle.source, t_now, self.k, &opts);
            self.route_list = Some(RouteList {
                routes,
                valid_for_revision: self.cp.revision(),
                computed_at: t_now,
            });
        }
        self.route_list.as_ref().expect("list just ensured")
    }

    /// Re-times a prototype route for this bundle starting at `t_now` from
    /// its first hop, against a given ledger view. The first hop respects
    /// the local transmission queue (ETO); deeper hops assume earliest
    /// transmission, since their queues are unknown here.
    fn validate_candidate(
        &self,
        proto: &Route,
        bundle: &Bundle,
        t_now: TimeMs,
        ledger: &LinearVolumeLedger,
    ) -> Option<Route> {
        let mut arr = t_now;
        let mut hops = Vec::with_capacity(proto.hops.len());
        for (j, hop) in proto.hops.iter().enumerate() {
            let c = self.cp.get(hop.contact)?;
            if ledger.remaining(c.id) < bundle.size_bits {
                return None;
            }
            let tt = transmission_time(bundle.size_bits, c.rate_bps);
            let earliest = arr.max(c.t_start);
            let s = if j == 0 {
                self.contact_bookings
                    .earliest_free_slot(c.id, earliest, tt, bundle.id)
            } else {
                earliest
            };
            let e = s + tt;
            if e > c.t_end {
                return None;
            }
            hops.push(Hop { contact: c.id, tx_start: s, tx_end: e });
            arr = e;
        }
        Some(Route { bundle_id: bundle.id, hops, bdt: arr })
    }

    /// Source routing of one bundle: build or reuse the route list, filter
    /// it into candidates, pick the best, deduct linear volumes and queue
    /// the first transmission. `None` means the bundle is delayed one time
    /// step and tried again.
    pub fn source_route(&mut self, bundle: &Bundle, t_now: TimeMs) -> Option<Route> {
        let list = self.route_list_for(bundle, t_now).routes.clone();
        let mut best: Option<Route> = None;
        for proto in &list {
            if let Some(candidate) = self.validate_candidate(proto, bundle, t_now, &self.ledger) {
                if best.as_ref().map_or(true, |b| candidate.bdt < b.bdt) {
                    best = Some(candidate);
                }
            }
        }
        let route = best?;
        for hop in &route.hops {
            self.ledger.deduct(hop.contact, bundle.size_bits);
        }
        let first = route.hops[0];
        self.contact_bookings
            .book(first.contact, first.tx_start, first.tx_end, bundle.id);
        Some(route)
    }

    /// Capacity check immediately before transmitting hop `hop_idx` at
    /// `now`. A collision with a lower-id bundle pushes this transmission to
    /// the end of the busy period and shifts the downstream schedule; if the
    /// push overruns the contact, the bundle must be rerouted from here.
    pub fn forward_check_capacity(
        &self,
        route: &Route,
        hop_idx: usize,
        bundle: &Bundle,
        now: TimeMs,
    ) -> CapacityCheck {
        let hop = route.hops[hop_idx];
        let Some(c) = self.cp.get(hop.contact) else {
            return CapacityCheck::Reroute { problematic: hop.contact };
        };
        let tt = transmission_time(bundle.size_bits, c.rate_bps);
        let s = self
            .contact_bookings
            .earliest_free_slot(c.id, now.max(c.t_start), tt, bundle.id);
        if s + tt > c.t_end {
            return CapacityCheck::Reroute { problematic: hop.contact };
        }
        let mut updated = route.clone();
        updated.hops[hop_idx] = Hop { contact: hop.contact, tx_start: s, tx_end: s + tt };
        let mut arr = s + tt;
        for j in hop_idx + 1..updated.hops.len() {
            let h = updated.hops[j];
            match self.cp.get(h.contact) {
                Some(cj) => {
                    let ttj = transmission_time(bundle.size_bits, cj.rate_bps);
                    let sj = arr.max(cj.t_start);
                    updated.hops[j] = Hop { contact: h.contact, tx_start: sj, tx_end: sj + ttj };
                    arr = sj + ttj;
                }
                // Expired already; keep the stale times, the check at that
                // node will fail and trigger the reroute there.
                None => arr = h.tx_end.max(arr),
            }
        }
        updated.bdt = updated.hops.last().expect("route has hops").tx_end;
        CapacityCheck::Proceed { updated }
    }

    /// Buffer check immediately before transmitting to `next_node` at `now`.
    pub fn forward_check_buffer(
        &self,
        next_node: NodeId,
        bundle: &Bundle,
        now: TimeMs,
    ) -> BufferCheck {
        if self.buffers.has_room(next_node, now, bundle.size_bits) {
            BufferCheck::BookAndSend
        } else {
            BufferCheck::Reroute
        }
    }

    /// Reroute from an intermediate node at problem-detection time. The
    /// up-to-date plan is fetched from the source (an advantageous
    /// assumption), the abandoned bookings of the old route are credited
    /// back into a node-local ledger copy, and a fresh Yen search runs with
    /// the exclusions applied. Local volume changes are not reported back.
    pub fn reroute_from_node(
        &mut self,
        node: NodeId,
        bundle: &Bundle,
        t_now: TimeMs,
        exclude_contacts: &BTreeSet<ContactId>,
        exclude_nodes: &[NodeId],
        unused_hops: &[ContactId],
    ) -> Option<Route> {
        let mut local_ledger = self.ledger.clone();
        for id in unused_hops {
            local_ledger.credit(*id, bundle.size_bits);
        }
        let mut suppressed = exclude_contacts.clone();
        suppressed.extend(local_ledger.exhausted());
        let opts = SearchOptions {
            blocked_nodes: exclude_nodes.to_vec(),
            suppressed,
        };
        let protos = yen_k_routes_from(&self.cp, bundle, node, t_now, self.k, &opts);
        let mut best: Option<Route> = None;
        for proto in &protos {
            if let Some(candidate) = self.validate_candidate(proto, bundle, t_now, &local_ledger) {
                if best.as_ref().map_or(true, |b| candidate.bdt < b.bdt) {
                    best = Some(candidate);
                }
            }
        }
        best
    }
}
