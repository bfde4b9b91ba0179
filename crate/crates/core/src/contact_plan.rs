//! Contact-plan data model, file I/O and the splitting/shortening transforms.
//!
//! All times are integer milliseconds and every interval is half-open
//! `[t_start, t_end)`, so splitting and equality checks are exact. There is
//! no propagation delay anywhere in the model: a bundle arrives the instant
//! its transmission ends.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Simulation time in integer milliseconds.
pub type TimeMs = i64;

/// "Far future" sentinel, safe to add durations to without overflow.
pub const TIME_INF: TimeMs = i64::MAX / 4;

/// Identifies a node (satellite or ground station) within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeKind {
    Satellite,
    GroundStation,
}

impl NodeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeKind::Satellite => "sat",
            NodeKind::GroundStation => "gs",
        }
    }
}

/// Identifies one contact inside a [`ContactPlan`]. Split pieces get fresh
/// ids; the ancestral id is kept in [`Contact::origin`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContactId(pub u32);

impl fmt::Display for ContactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One transmission opportunity: the atom of the contact graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contact {
    pub id: ContactId,
    /// Id of the ancestral unsplit contact; split pieces inherit it, so the
    /// pieces of one physical link window can always be grouped.
    pub origin: ContactId,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub t_start: TimeMs,
    pub t_end: TimeMs,
    pub rate_bps: u64,
    pub suppressed: bool,
}

impl Contact {
    pub fn duration_ms(&self) -> i64 {
        self.t_end - self.t_start
    }

    /// Volume in bits: rate times duration, floored to whole bits.
    pub fn volume_bits(&self) -> u64 {
        (self.duration_ms() as u128 * self.rate_bps as u128 / 1000) as u64
    }

    /// Volume in bit-milliseconds (rate times duration, exact). Conservation
    /// checks use this quantity because it sums without rounding.
    pub fn volume_bit_ms(&self) -> u128 {
        self.duration_ms() as u128 * self.rate_bps as u128
    }

    pub fn contains_interval(&self, from: TimeMs, to: TimeMs) -> bool {
        self.t_start <= from && from <= to && to <= self.t_end
    }
}

/// Volume in bits of a contact (rate multiplied by duration).
pub fn contact_volume(c: &Contact) -> u64 {
    c.volume_bits()
}

/// Routable data unit. Ids increase with generation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bundle {
    pub id: u64,
    pub size_bits: u64,
    pub source: NodeId,
    pub destination: NodeId,
    pub t_created: TimeMs,
}

/// One scheduled transmission of a route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    pub contact: ContactId,
    pub tx_start: TimeMs,
    pub tx_end: TimeMs,
}

/// Ordered hop list with per-hop transmission times; `bdt` is the delivery
/// time at the destination (the tx_end of the last hop).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub bundle_id: u64,
    pub hops: Vec<Hop>,
    pub bdt: TimeMs,
}

impl Route {
    pub fn contact_ids(&self) -> Vec<ContactId> {
        self.hops.iter().map(|h| h.contact).collect()
    }
}

/// How [`ContactPlan::partition_safety_margin`] picks the reserved slice of
/// each contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginPolicy {
    /// Reserve the final fraction of every contact's duration.
    TailOfEachContact,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate contact id {0} on line {1}")]
    DuplicateContact(u32, usize),
    #[error("unknown contact id {0}")]
    UnknownContact(u32),
    #[error("erase interval [{from}, {to}) outside contact {id} [{start}, {end})")]
    EraseOutOfRange {
        id: u32,
        from: TimeMs,
        to: TimeMs,
        start: TimeMs,
        end: TimeMs,
    },
    #[error("margin fraction {0} outside [0, 1]")]
    BadMarginFraction(f64),
    #[error("contact {0}: {1}")]
    BadContact(u32, String),
}

/// Revisioned collection of contacts. Single-writer: all mutations happen on
/// the owning simulation thread; read-only snapshots may be shared freely.
#[derive(Debug, Clone, Default)]
pub struct ContactPlan {
    contacts: BTreeMap<ContactId, Contact>,
    by_sender: BTreeMap<NodeId, BTreeSet<ContactId>>,
    nodes: BTreeMap<NodeId, NodeKind>,
    names: BTreeMap<String, NodeId>,
    rev_names: BTreeMap<NodeId, String>,
    revision: u64,
    next_id: u32,
}

impl ContactPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    pub fn get(&self, id: ContactId) -> Option<&Contact> {
        self.contacts.get(&id)
    }

    pub fn contacts(&self) -> impl Iterator<Item = &Contact> {
        self.contacts.values()
    }

    pub fn contacts_from(&self, sender: NodeId) -> impl Iterator<Item = &Contact> {
        self.by_sender
            .get(&sender)
            .into_iter()
            .flat_map(|ids| ids.iter())
            .filter_map(|id| self.contacts.get(id))
    }

    /// All node ids known to the plan (declared or referenced by a contact).
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node_kind(&self, id: NodeId) -> Option<NodeKind> {
        self.nodes.get(&id).copied()
    }

    pub fn node_name(&self, id: NodeId) -> Option<&str> {
        self.rev_names.get(&id).map(|s| s.as_str())
    }

    pub fn declare_node(&mut self, id: NodeId, kind: NodeKind) {
        self.nodes.insert(id, kind);
    }

    pub fn declare_named_node(&mut self, name: &str, id: NodeId, kind: NodeKind) {
        self.nodes.insert(id, kind);
        self.names.insert(name.to_string(), id);
        self.rev_names.insert(id, name.to_string());
    }

    fn check_contact(c: &Contact) -> Result<(), PlanError> {
        if c.t_start >= c.t_end {
            return Err(PlanError::BadContact(
                c.id.0,
                format!("zero or negative duration [{}, {})", c.t_start, c.t_end),
            ));
        }
        if c.rate_bps == 0 {
            return Err(PlanError::BadContact(c.id.0, "rate must be positive".into()));
        }
        if c.sender == c.receiver {
            return Err(PlanError::BadContact(c.id.0, "sender equals receiver".into()));
        }
        Ok(())
    }

    /// Inserts a contact with a caller-chosen id, registering its endpoints.
    /// Does not bump the revision on its own; used by the parser and tests.
    pub fn insert_contact(&mut self, c: Contact) -> Result<(), PlanError> {
        Self::check_contact(&c)?;
        if self.contacts.contains_key(&c.id) {
            return Err(PlanError::DuplicateContact(c.id.0, 0));
        }
        self.nodes.entry(c.sender).or_insert(NodeKind::Satellite);
        self.nodes.entry(c.receiver).or_insert(NodeKind::Satellite);
        self.by_sender.entry(c.sender).or_default().insert(c.id);
        self.next_id = self.next_id.max(c.id.0 + 1);
        self.contacts.insert(c.id, c);
        Ok(())
    }

    fn fresh_id(&mut self) -> ContactId {
        let id = ContactId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Removes a contact outright, bumping the revision. Used for pieces
    /// whose remaining volume fell below the minimum useful size.
    pub fn remove_contact(&mut self, id: ContactId) -> Option<Contact> {
        let c = self.contacts.remove(&id)?;
        if let Some(set) = self.by_sender.get_mut(&c.sender) {
            set.remove(&id);
        }
        self.revision += 1;
        Some(c)
    }

    /// Erases `[erase_from, erase_to)` from a contact. The original contact
    /// is removed and the nonempty remainder pieces are inserted with fresh
    /// ids, inheriting everything else. Returns the new ids in time order:
    /// two for an interior erase, one for a shortening, zero when the whole
    /// contact was consumed.
    pub fn split_contact(
        &mut self,
        id: ContactId,
        erase_from: TimeMs,
        erase_to: TimeMs,
    ) -> Result<Vec<ContactId>, PlanError> {
        let c = *self.contacts.get(&id).ok_or(PlanError::UnknownContact(id.0))?;
        if !c.contains_interval(erase_from, erase_to) {
            return Err(PlanError::EraseOutOfRange {
                id: id.0,
                from: erase_from,
                to: erase_to,
                start: c.t_start,
                end: c.t_end,
            });
        }
        self.replace_contact_intervals(id, &[(c.t_start, erase_from), (erase_to, c.t_end)])
    }

    /// Replaces a contact by pieces covering the given intervals (empty ones
    /// are skipped). One revision bump for the whole replacement.
    pub(crate) fn replace_contact_intervals(
        &mut self,
        id: ContactId,
        keep: &[(TimeMs, TimeMs)],
    ) -> Result<Vec<ContactId>, PlanError> {
        let c = *self.contacts.get(&id).ok_or(PlanError::UnknownContact(id.0))?;
        self.contacts.remove(&id);
        if let Some(set) = self.by_sender.get_mut(&c.sender) {
            set.remove(&id);
        }
        let mut new_ids = Vec::new();
        for &(from, to) in keep {
            if from >= to {
                continue;
            }
            let piece_id = self.fresh_id();
            let piece = Contact {
                id: piece_id,
                t_start: from,
                t_end: to,
                ..c
            };
            self.by_sender.entry(piece.sender).or_default().insert(piece_id);
            self.contacts.insert(piece_id, piece);
            new_ids.push(piece_id);
        }
        self.revision += 1;
        Ok(new_ids)
    }

    /// Overrides every contact's rate; a pre-simulation transform.
    pub fn set_all_rates(&mut self, rate_bps: u64) {
        assert!(rate_bps > 0, "rates must stay positive");
        for c in self.contacts.values_mut() {
            c.rate_bps = rate_bps;
        }
        self.revision += 1;
    }

    /// Removes every contact whose end time is at or before `now`.
    pub fn remove_expired(&mut self, now: TimeMs) -> usize {
        let expired: Vec<ContactId> = self
            .contacts
            .values()
            .filter(|c| c.t_end <= now)
            .map(|c| c.id)
            .collect();
        for id in &expired {
            let c = self.contacts.remove(id).expect("listed contact");
            if let Some(set) = self.by_sender.get_mut(&c.sender) {
                set.remove(id);
            }
        }
        if !expired.is_empty() {
            self.revision += 1;
        }
        expired.len()
    }

    /// Splits the plan into the source-routing share and the reserved safety
    /// margin. With the tail policy the final `fraction` of each contact's
    /// duration goes to the margin plan. Contact ids are preserved in both
    /// outputs (the two plans are independent).
    pub fn partition_safety_margin(
        &self,
        fraction: f64,
        policy: MarginPolicy,
    ) -> Result<(ContactPlan, ContactPlan), PlanError> {
        if !(0.0..=1.0).contains(&fraction) || !fraction.is_finite() {
            return Err(PlanError::BadMarginFraction(fraction));
        }
        let MarginPolicy::TailOfEachContact = policy;
        let mut source = ContactPlan {
            nodes: self.nodes.clone(),
            names: self.names.clone(),
            rev_names: self.rev_names.clone(),
            ..ContactPlan::default()
        };
        let mut margin = source.clone();
        for c in self.contacts.values() {
            let margin_ms = ((c.duration_ms() as f64) * fraction).round() as i64;
            let margin_ms = margin_ms.clamp(0, c.duration_ms());
            let cut = c.t_end - margin_ms;
            if cut > c.t_start {
                source
                    .insert_contact(Contact {
                        t_end: cut,
                        ..*c
                    })
                    .expect("source piece is well-formed");
            }
            if cut < c.t_end {
                margin
                    .insert_contact(Contact {
                        t_start: cut,
                        ..*c
                    })
                    .expect("margin piece is well-formed");
            }
        }
        Ok((source, margin))
    }

    /// Deep consistency check used by tests: id uniqueness is structural, so
    /// this verifies the per-origin disjointness invariant and the index.
    pub fn validate(&self) -> Result<(), String> {
        let mut by_origin: BTreeMap<ContactId, Vec<(TimeMs, TimeMs)>> = BTreeMap::new();
        for c in self.contacts.values() {
            Self::check_contact(c).map_err(|e| e.to_string())?;
            by_origin.entry(c.origin).or_default().push((c.t_start, c.t_end));
        }
        for (origin, mut iv) in by_origin {
            iv.sort_unstable();
            for w in iv.windows(2) {
                if w[0].1 > w[1].0 {
                    return Err(format!("origin {origin}: overlapping pieces {w:?}"));
                }
            }
        }
        for (sender, ids) in &self.by_sender {
            for id in ids {
                match self.contacts.get(id) {
                    Some(c) if c.sender == *sender => {}
                    _ => return Err(format!("index entry {id} under sender {sender} is stale")),
                }
            }
        }
        Ok(())
    }
}

fn parse_node_token(
    plan: &mut ContactPlan,
    tok: &str,
    line: usize,
) -> Result<NodeId, PlanError> {
    if let Ok(v) = tok.parse::<u32>() {
        let id = NodeId(v);
        if let Some(name) = plan.rev_names.get(&id) {
            return Err(PlanError::Parse {
                line,
                msg: format!("numeric node id {v} collides with named node '{name}'"),
            });
        }
        return Ok(id);
    }
    if let Some(id) = plan.names.get(tok) {
        return Ok(*id);
    }
    let next = plan
        .nodes
        .keys()
        .last()
        .map(|n| n.0 + 1)
        .unwrap_or(0);
    let id = NodeId(next);
    plan.names.insert(tok.to_string(), id);
    plan.rev_names.insert(id, tok.to_string());
    plan.nodes.insert(id, NodeKind::Satellite);
    Ok(id)
}

/// Parses the contact-plan file format.
///
/// One record per line; `#` starts a comment line.
///
/// ```text
/// node <id|name> <sat|gs>
/// contact <id> <sender> <receiver> <t_start_ms> <t_end_ms> <rate_bps>
/// ```
///
/// Node tokens may be decimal ids or symbolic names; names are interned to
/// sequential ids in order of first appearance.
pub fn parse_contact_plan(text: &str) -> Result<ContactPlan, PlanError> {
    let mut plan = ContactPlan::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "node" => {
                if fields.len() != 3 {
                    return Err(PlanError::Parse {
                        line: line_no,
                        msg: format!("expected `node <id> <sat|gs>`, got {} fields", fields.len()),
                    });
                }
                let id = parse_node_token(&mut plan, fields[1], line_no)?;
                let kind = match fields[2] {
                    "sat" => NodeKind::Satellite,
                    "gs" => NodeKind::GroundStation,
                    other => {
                        return Err(PlanError::Parse {
                            line: line_no,
                            msg: format!("unknown node kind '{other}'"),
                        })
                    }
                };
                plan.nodes.insert(id, kind);
            }
            "contact" => {
                if fields.len() != 7 {
                    return Err(PlanError::Parse {
                        line: line_no,
                        msg: format!(
                            "expected `contact <id> <sender> <receiver> <t1> <t2> <rate>`, got {} fields",
                            fields.len()
                        ),
                    });
                }
                let id: u32 = fields[1].parse().map_err(|_| PlanError::Parse {
                    line: line_no,
                    msg: format!("bad contact id '{}'", fields[1]),
                })?;
                let sender = parse_node_token(&mut plan, fields[2], line_no)?;
                let receiver = parse_node_token(&mut plan, fields[3], line_no)?;
                let num = |s: &str, what: &str| -> Result<i64, PlanError> {
                    s.parse().map_err(|_| PlanError::Parse {
                        line: line_no,
                        msg: format!("bad {what} '{s}'"),
                    })
                };
                let t_start = num(fields[4], "start time")?;
                let t_end = num(fields[5], "end time")?;
                let rate = num(fields[6], "rate")?;
                if rate <= 0 {
                    return Err(PlanError::Parse {
                        line: line_no,
                        msg: format!("rate must be positive, got {rate}"),
                    });
                }
                if t_start >= t_end {
                    return Err(PlanError::Parse {
                        line: line_no,
                        msg: format!("empty interval [{t_start}, {t_end}) (zero-duration contacts are not stored)"),
                    });
                }
                if plan.contacts.contains_key(&ContactId(id)) {
                    return Err(PlanError::DuplicateContact(id, line_no));
                }
                plan.insert_contact(Contact {
                    id: ContactId(id),
                    origin: ContactId(id),
                    sender,
                    receiver,
                    t_start,
                    t_end,
                    rate_bps: rate as u64,
                    suppressed: false,
                })
                .map_err(|e| match e {
                    PlanError::DuplicateContact(i, _) => PlanError::DuplicateContact(i, line_no),
                    PlanError::BadContact(i, msg) => PlanError::Parse {
                        line: line_no,
                        msg: format!("contact {i}: {msg}"),
                    },
                    other => other,
                })?;
            }
            other => {
                return Err(PlanError::Parse {
                    line: line_no,
                    msg: format!("unknown record '{other}'"),
                })
            }
        }
    }
    Ok(plan)
}

/// Serializes a plan in the file format of [`parse_contact_plan`]. Node
/// declarations come first in id order, then contacts sorted by
/// `(t_start, contact_id)` for deterministic diffs.
pub fn serialize_contact_plan(plan: &ContactPlan) -> String {
    let mut out = String::new();
    for (id, kind) in &plan.nodes {
        let tok = plan
            .rev_names
            .get(id)
            .cloned()
            .unwrap_or_else(|| id.to_string());
        out.push_str(&format!("node {} {}\n", tok, kind.as_str()));
    }
    let mut contacts: Vec<&Contact> = plan.contacts.values().collect();
    contacts.sort_by_key(|c| (c.t_start, c.id));
    for c in contacts {
        let name = |n: NodeId| {
            plan.rev_names
                .get(&n)
                .cloned()
                .unwrap_or_else(|| n.to_string())
        };
        out.push_str(&format!(
            "contact {} {} {} {} {} {}\n",
            c.id,
            name(c.sender),
            name(c.receiver),
            c.t_start,
            c.t_end,
            c.rate_bps
        ));
    }
    out
}
