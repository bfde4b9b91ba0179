//! Simplified Walker-delta constellation and ground-station geometry,
//! producing contact plans in the standard file format.
//!
//! Orbits are circular two-body (no J2, spherical Earth); the RF link budget
//! is approximated by line-of-sight plus a configurable maximum range and
//! plane-hop limit. Ground stations rotate with the Earth at the sidereal
//! rate; the epoch's sidereal angle is taken as zero.

use std::f64::consts::TAU;

use crate::contact_plan::{Contact, ContactId, ContactPlan, NodeId, NodeKind, TimeMs};

/// Standard gravitational parameter of the Earth, m^3/s^2.
pub const MU_EARTH: f64 = 3.986_004_418e14;
/// Earth radius, m.
pub const EARTH_RADIUS_M: f64 = 6_371e3;
/// Sidereal rotation rate, rad/s.
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;

/// Walker-delta constellation with zero phasing: planes evenly spread over
/// the full RAAN circle, satellites evenly spaced within each plane.
#[derive(Debug, Clone, Copy)]
pub struct ConstellationSpec {
    pub n_planes: u32,
    pub n_sats: u32,
    pub inclination_deg: f64,
    pub orbit_radius_m: f64,
}

impl ConstellationSpec {
    pub fn sats_per_plane(&self) -> u32 {
        self.n_sats / self.n_planes
    }

    pub fn plane_of(&self, sat: u32) -> u32 {
        sat / self.sats_per_plane()
    }

    /// RAAN and initial argument of latitude of one satellite, radians.
    pub fn orbital_elements(&self, sat: u32) -> (f64, f64) {
        let per_plane = self.sats_per_plane();
        let plane = sat / per_plane;
        let slot = sat % per_plane;
        let raan = plane as f64 * TAU / self.n_planes as f64;
        let anomaly = slot as f64 * TAU / per_plane as f64;
        (raan, anomaly)
    }

    pub fn mean_motion_rad_s(&self) -> f64 {
        (MU_EARTH / self.orbit_radius_m.powi(3)).sqrt()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_planes == 0 || self.n_sats == 0 {
            return Err("need at least one plane and one satellite".into());
        }
        if self.n_sats % self.n_planes != 0 {
            return Err(format!(
                "{} satellites do not divide evenly into {} planes",
                self.n_sats, self.n_planes
            ));
        }
        if self.orbit_radius_m <= EARTH_RADIUS_M {
            return Err("orbit radius must exceed the Earth radius".into());
        }
        Ok(())
    }
}

/// ECI position of a satellite at time `t_ms`, in meters.
pub fn propagate(spec: &ConstellationSpec, sat: u32, t_ms: TimeMs) -> [f64; 3] {
    let (raan, anomaly0) = spec.orbital_elements(sat);
    let inc = spec.inclination_deg.to_radians();
    let u = anomaly0 + spec.mean_motion_rad_s() * (t_ms as f64 / 1000.0);
    let a = spec.orbit_radius_m;
    // Position in the orbital plane, inclined about x, then rotated by RAAN.
    let (sin_u, cos_u) = u.sin_cos();
    let (sin_i, cos_i) = inc.sin_cos();
    let xp = a * cos_u;
    let yp = a * sin_u * cos_i;
    let zp = a * sin_u * sin_i;
    let (sin_o, cos_o) = raan.sin_cos();
    [xp * cos_o - yp * sin_o, xp * sin_o + yp * cos_o, zp]
}

#[derive(Debug, Clone)]
pub struct GroundStation {
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
}

/// ECI position of a ground station at time `t_ms`.
pub fn ground_position(gs: &GroundStation, t_ms: TimeMs) -> [f64; 3] {
    let lat = gs.lat_deg.to_radians();
    let lon = gs.lon_deg.to_radians() + EARTH_ROTATION_RAD_S * (t_ms as f64 / 1000.0);
    [
        EARTH_RADIUS_M * lat.cos() * lon.cos(),
        EARTH_RADIUS_M * lat.cos() * lon.sin(),
        EARTH_RADIUS_M * lat.sin(),
    ]
}

/// Link-closure rule standing in for the out-of-scope RF link budget.
#[derive(Debug, Clone, Copy)]
pub struct VisibilityRule {
    pub max_range_m: f64,
    /// Maximum plane-hop distance for inter-satellite links; `None` lifts
    /// the restriction.
    pub plane_hops: Option<u32>,
    pub gs_min_elevation_deg: f64,
}

impl Default for VisibilityRule {
    fn default() -> Self {
        Self {
            max_range_m: 6_500e3,
            plane_hops: Some(2),
            gs_min_elevation_deg: 0.0,
        }
    }
}

/// What kind of pair a visibility test concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// Satellite pair with the circular plane-hop distance between them.
    SatSat { plane_hop_distance: u32 },
    /// Satellite to ground station (either direction); `gs` names which
    /// position is on the ground.
    SatGround,
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Minimum distance from the Earth's center to the segment `a..b`.
fn segment_min_distance_to_origin(a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return norm(a);
    }
    let t = (-dot(a, ab) / len2).clamp(0.0, 1.0);
    norm([a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]])
}

/// Elevation of `sat` above the horizon of `gs`, degrees.
pub fn elevation_deg(sat: [f64; 3], gs: [f64; 3]) -> f64 {
    let up = gs;
    let to_sat = sub(sat, gs);
    let s = dot(to_sat, up) / (norm(to_sat) * norm(up));
    s.clamp(-1.0, 1.0).asin().to_degrees()
}

/// Whether two nodes have link closure. Satellite pairs need line of sight
/// past the Earth sphere, range within the limit, and an allowed plane-hop
/// distance; ground links need the elevation threshold (met at equality)
/// and the range limit. `pos_b` is the ground side of a `SatGround` link.
pub fn visible(pos_a: [f64; 3], pos_b: [f64; 3], rule: &VisibilityRule, kind: LinkKind) -> bool {
    if norm(sub(pos_a, pos_b)) > rule.max_range_m {
        return false;
    }
    match kind {
        LinkKind::SatSat { plane_hop_distance } => {
            if let Some(limit) = rule.plane_hops {
                if plane_hop_distance > limit {
                    return false;
                }
            }
            segment_min_distance_to_origin(pos_a, pos_b) >= EARTH_RADIUS_M
        }
        LinkKind::SatGround => elevation_deg(pos_a, pos_b) >= rule.gs_min_elevation_deg,
    }
}

/// Maximal true-runs of a sampled visibility series, as half-open intervals:
/// a run of samples `i..=j` becomes `[i*step, (j+1)*step)`.
pub(crate) fn runs_to_intervals(samples: &[bool], step_ms: TimeMs) -> Vec<(TimeMs, TimeMs)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &v) in samples.iter().enumerate() {
        match (start, v) {
            (None, true) => start = Some(i),
            (Some(s), false) => {
                out.push((s as TimeMs * step_ms, i as TimeMs * step_ms));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s as TimeMs * step_ms, samples.len() as TimeMs * step_ms));
    }
    out
}

/// Samples visibility for every node pair at `step_s` resolution and turns
/// maximal closure runs into contacts, one per direction, all at `rate_bps`.
/// Satellites get ids `0..n_sats`; ground stations follow in order.
pub fn build_contact_plan(
    spec: &ConstellationSpec,
    ground_stations: &[GroundStation],
    rule: &VisibilityRule,
    horizon_s: u64,
    step_s: u64,
    rate_bps: u64,
) -> Result<ContactPlan, String> {
    spec.validate()?;
    if step_s == 0 {
        return Err("step must be at least one second".into());
    }
    let step_ms = (step_s * 1000) as TimeMs;
    let samples = (horizon_s / step_s) as usize + 1;
    let n_sats = spec.n_sats as usize;
    let n_nodes = n_sats + ground_stations.len();

    let mut positions: Vec<Vec<[f64; 3]>> = Vec::with_capacity(n_nodes);
    for sat in 0..spec.n_sats {
        positions.push(
            (0..samples)
                .map(|i| propagate(spec, sat, i as TimeMs * step_ms))
                .collect(),
        );
    }
    for gs in ground_stations {
        positions.push(
            (0..samples)
                .map(|i| ground_position(gs, i as TimeMs * step_ms))
                .collect(),
        );
    }

    let mut plan = ContactPlan::new();
    for sat in 0..spec.n_sats {
        plan.declare_named_node(&format!("sat{sat}"), NodeId(sat), NodeKind::Satellite);
    }
    for (j, gs) in ground_stations.iter().enumerate() {
        plan.declare_named_node(
            &gs.name,
            NodeId(spec.n_sats + j as u32),
            NodeKind::GroundStation,
        );
    }

    // (t_start, sender, receiver, t_end), sorted for deterministic ids.
    let mut windows: Vec<(TimeMs, u32, u32, TimeMs)> = Vec::new();
    let mut vis = vec![false; samples];
    for a in 0..n_nodes {
        for b in (a + 1)..n_nodes {
            let both_ground = a >= n_sats && b >= n_sats;
            if both_ground {
                continue;
            }
            let kind = if b < n_sats {
                let pa = spec.plane_of(a as u32);
                let pb = spec.plane_of(b as u32);
                let d = pa.abs_diff(pb);
                LinkKind::SatSat {
                    plane_hop_distance: d.min(spec.n_planes - d),
                }
            } else {
                LinkKind::SatGround
            };
            for i in 0..samples {
                // For ground links the second operand must be the ground
                // position; `b` is the ground node whenever kinds differ.
                vis[i] = visible(positions[a][i], positions[b][i], rule, kind);
            }
            for (t1, t2) in runs_to_intervals(&vis, step_ms) {
                windows.push((t1, a as u32, b as u32, t2));
                windows.push((t1, b as u32, a as u32, t2));
            }
        }
    }
    windows.sort_unstable();
    for (i, (t1, s, r, t2)) in windows.into_iter().enumerate() {
        plan.insert_contact(Contact {
            id: ContactId(i as u32 + 1),
            origin: ContactId(i as u32 + 1),
            sender: NodeId(s),
            receiver: NodeId(r),
            t_start: t1,
            t_end: t2,
            rate_bps,
            suppressed: false,
        })
        .map_err(|e| e.to_string())?;
    }
    Ok(plan)
}
