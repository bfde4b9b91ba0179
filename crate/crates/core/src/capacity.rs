//! Permanent contact-capacity accounting.
//!
//! After a route is selected, the transmission slice of every hop is erased
//! from the shared contact plan by contact splitting, so later searches can
//! never double-book a link. Every mutation is journaled, which lets the
//! CP-size timeline be reconstructed and replay-verified afterwards.

use thiserror::Error;

use crate::contact_plan::{ContactId, ContactPlan, Route, TimeMs};

/// Transmission time of `size_bits` at `rate_bps`, in milliseconds, rounded
/// up so a booked slice never under-covers the transfer.
pub fn transmission_time(size_bits: u64, rate_bps: u64) -> TimeMs {
    assert!(rate_bps > 0, "transmission_time requires a positive rate");
    ((size_bits as u128 * 1000).div_ceil(rate_bps as u128)) as TimeMs
}

/// One permanent contact-plan mutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mutation {
    /// Capacity commit of one route: `hops` slices erased, changing the plan
    /// size by `net_delta` (+1 per interior split, 0 per shortening, -1 per
    /// fully consumed or below-threshold piece).
    CapacityCommit {
        bundle_id: u64,
        hops: u32,
        net_delta: i64,
    },
    /// Expiry pruning removed `count` contacts.
    Expired { count: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JournalEntry {
    pub t: TimeMs,
    pub mutation: Mutation,
}

impl JournalEntry {
    /// Net change of the plan size caused by this entry.
    pub fn net_delta(&self) -> i64 {
        match &self.mutation {
            Mutation::CapacityCommit { net_delta, .. } => *net_delta,
            Mutation::Expired { count } => -(*count as i64),
        }
    }
}

/// Append-only log of permanent CP mutations with per-window aggregation.
#[derive(Debug, Clone, Default)]
pub struct CommitLog {
    entries: Vec<JournalEntry>,
}

/// Aggregated CP-size movement over a window: split additions (net), expiry
/// removals, and the combined net change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GrowthStats {
    pub added: i64,
    pub removed: u64,
    pub net: i64,
}

impl CommitLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[JournalEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn record(&mut self, t: TimeMs, mutation: Mutation) {
        self.entries.push(JournalEntry { t, mutation });
    }

    /// Replays the journal into a per-second plan-size timeline starting
    /// from `initial_size`, covering `[0, horizon_ms]` inclusive.
    pub fn size_timeline(&self, initial_size: usize, horizon_ms: TimeMs) -> Vec<(TimeMs, i64)> {
        let mut out = Vec::new();
        let mut size = initial_size as i64;
        let mut it = self.entries.iter().peekable();
        let mut t = 0;
        while t <= horizon_ms {
            while let Some(e) = it.peek() {
                if e.t <= t {
                    size += e.net_delta();
                    it.next();
                } else {
                    break;
                }
            }
            out.push((t, size));
            t += 1000;
        }
        out
    }
}

/// Pure aggregation of the journal over `[from, to)`.
pub fn cp_growth_stats(log: &CommitLog, from: TimeMs, to: TimeMs) -> GrowthStats {
    let mut stats = GrowthStats::default();
    for e in log.entries() {
        if e.t < from || e.t >= to {
            continue;
        }
        match &e.mutation {
            Mutation::CapacityCommit { net_delta, .. } => stats.added += net_delta,
            Mutation::Expired { count } => stats.removed += count,
        }
    }
    stats.net = stats.added - stats.removed as i64;
    stats
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CommitError {
    /// A hop references a contact that no longer exists or no longer covers
    /// the scheduled slice: the route is stale and must be re-searched.
    #[error("stale route: hop on contact {0} does not match the current plan")]
    StaleRoute(ContactId),
}

/// Outcome of one capacity commit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitDelta {
    pub hops: u32,
    pub net_delta: i64,
    /// Ids of the remainder pieces created by the commit (already inserted).
    pub new_pieces: Vec<ContactId>,
}

/// Books route capacity permanently by splitting each hop's slice out of the
/// plan. Remainder pieces smaller than `min_piece_volume_bits` are dropped.
#[derive(Debug, Clone)]
pub struct CapacityManager {
    /// Pieces whose volume falls below this are removed from the plan, since
    /// no bundle of the workload could ever use them.
    pub min_piece_volume_bits: u64,
    pub log: CommitLog,
}

impl CapacityManager {
    pub fn new(min_piece_volume_bits: u64) -> Self {
        Self {
            min_piece_volume_bits,
            log: CommitLog::new(),
        }
    }

    /// Applies a selected route to the plan. Validates every hop before
    /// touching anything, so a stale route leaves the plan unchanged.
    pub fn commit_route_capacity(
        &mut self,
        cp: &mut ContactPlan,
        route: &Route,
        now: TimeMs,
    ) -> Result<CommitDelta, CommitError> {
        for hop in &route.hops {
            match cp.get(hop.contact) {
                Some(c) if c.contains_interval(hop.tx_start, hop.tx_end) => {}
                _ => return Err(CommitError::StaleRoute(hop.contact)),
            }
        }
        let mut net = 0i64;
        let mut new_pieces = Vec::new();
        for hop in &route.hops {
            let ids = cp
                .split_contact(hop.contact, hop.tx_start, hop.tx_end)
                .expect("hop validated above");
            let mut kept = 0i64;
            for id in ids {
                let piece = *cp.get(id).expect("piece just inserted");
                if piece.volume_bits() < self.min_piece_volume_bits {
                    cp.remove_contact(id);
                } else {
                    kept += 1;
                    new_pieces.push(id);
                }
            }
            net += kept - 1;
        }
        let delta = CommitDelta {
            hops: route.hops.len() as u32,
            net_delta: net,
            new_pieces,
        };
        self.log.record(
            now,
            Mutation::CapacityCommit {
                bundle_id: route.bundle_id,
                hops: delta.hops,
                net_delta: delta.net_delta,
            },
        );
        Ok(delta)
    }

    /// Prunes expired contacts, journaling the removal count.
    pub fn remove_expired(&mut self, cp: &mut ContactPlan, now: TimeMs) -> usize {
        let n = cp.remove_expired(now);
        if n > 0 {
            self.log.record(now, Mutation::Expired { count: n as u64 });
        }
        n
    }
}
