//! Python bindings: contact plans, route search, and whole-simulation runs.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cgrsim::route_search::{dijkstra_route, yen_k_routes, PruneSchedule};
use cgrsim::scenario::{build_contact_plan, ConstellationSpec, GroundStation, VisibilityRule};
use cgrsim::sim::{run_simulation, Algorithm, SimConfig};
use cgrsim::{parse_contact_plan, serialize_contact_plan, Bundle, ContactId, NodeId, Route};

/// A revisioned contact plan, parsed from or serialized to the text format.
#[pyclass(name = "ContactPlan")]
struct PyContactPlan {
    inner: cgrsim::ContactPlan,
}

#[pymethods]
impl PyContactPlan {
    /// Parses the `contact <id> <sender> <receiver> <t1> <t2> <rate>` format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = parse_contact_plan(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_text(&self) -> String {
        serialize_contact_plan(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn revision(&self) -> u64 {
        self.inner.revision()
    }

    /// Contacts as `(id, sender, receiver, t_start_ms, t_end_ms, rate_bps)`.
    fn contacts(&self) -> Vec<(u32, u32, u32, i64, i64, u64)> {
        self.inner
            .contacts()
            .map(|c| (c.id.0, c.sender.0, c.receiver.0, c.t_start, c.t_end, c.rate_bps))
            .collect()
    }

    /// Erases `[erase_from, erase_to)` from a contact; returns the new ids.
    fn split_contact(&mut self, id: u32, erase_from: i64, erase_to: i64) -> PyResult<Vec<u32>> {
        self.inner
            .split_contact(ContactId(id), erase_from, erase_to)
            .map(|ids| ids.into_iter().map(|i| i.0).collect())
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn remove_expired(&mut self, now_ms: i64) -> usize {
        self.inner.remove_expired(now_ms)
    }

    /// Node name to id mapping for nodes declared with names.
    fn node_names(&self) -> BTreeMap<String, u32> {
        self.inner
            .node_ids()
            .filter_map(|id| self.inner.node_name(id).map(|n| (n.to_string(), id.0)))
            .collect()
    }
}

fn route_tuple(route: &Route) -> (Vec<(u32, i64, i64)>, i64) {
    (
        route
            .hops
            .iter()
            .map(|h| (h.contact.0, h.tx_start, h.tx_end))
            .collect(),
        route.bdt,
    )
}

/// Earliest-delivery route for a bundle, or None when unreachable.
/// Returns `(hops, bdt)` where hops are `(contact_id, tx_start, tx_end)`.
#[pyfunction]
#[pyo3(signature = (plan, source, destination, size_bits, t0_ms=0))]
fn dijkstra(
    plan: &PyContactPlan,
    source: u32,
    destination: u32,
    size_bits: u64,
    t0_ms: i64,
) -> Option<(Vec<(u32, i64, i64)>, i64)> {
    let bundle = Bundle {
        id: 0,
        size_bits,
        source: NodeId(source),
        destination: NodeId(destination),
        t_created: t0_ms,
    };
    dijkstra_route(&plan.inner, &bundle, t0_ms, &PruneSchedule::empty())
        .map(|r| route_tuple(&r))
}

/// Up to k shortest loop-free routes in nondecreasing delivery time.
#[pyfunction]
#[pyo3(signature = (plan, source, destination, size_bits, k, t0_ms=0))]
fn yen(
    plan: &PyContactPlan,
    source: u32,
    destination: u32,
    size_bits: u64,
    k: usize,
    t0_ms: i64,
) -> Vec<(Vec<(u32, i64, i64)>, i64)> {
    let bundle = Bundle {
        id: 0,
        size_bits,
        source: NodeId(source),
        destination: NodeId(destination),
        t_created: t0_ms,
    };
    yen_k_routes(&plan.inner, &bundle, t0_ms, k)
        .iter()
        .map(route_tuple)
        .collect()
}

/// Runs one simulation and returns the headline metrics as a dict.
#[pyfunction]
#[pyo3(signature = (plan, algorithm, source, destination, n_bundles,
                    bundle_size_bits=800, rate_bps=None, buffer_bundles=None,
                    k=10, horizon_s=86_400, period_s=2_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    plan: &PyContactPlan,
    algorithm: &str,
    source: u32,
    destination: u32,
    n_bundles: u64,
    bundle_size_bits: u64,
    rate_bps: Option<u64>,
    buffer_bundles: Option<u64>,
    k: usize,
    horizon_s: u64,
    period_s: u64,
    seed: u64,
) -> PyResult<PyObject> {
    let algorithm = match algorithm {
        "proposed" => Algorithm::Proposed,
        "benchmark" => Algorithm::Benchmark,
        other => {
            return Err(PyValueError::new_err(format!(
                "algorithm must be 'proposed' or 'benchmark', got '{other}'"
            )))
        }
    };
    let config = SimConfig {
        algorithm,
        n_bundles,
        bundle_size_bits,
        generation_period_ms: (period_s * 1000) as i64,
        rate_override_bps: rate_bps,
        buffer_capacity_bits: buffer_bundles.map(|n| n * bundle_size_bits),
        k,
        horizon_ms: (horizon_s * 1000) as i64,
        time_step_ms: 1_000,
        source: NodeId(source),
        destination: NodeId(destination),
        seed,
        jitter_ms: 0,
    };
    let result =
        run_simulation(&plan.inner, &config).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let dict = pyo3::types::PyDict::new_bound(py);
    dict.set_item("delivered", result.metrics.delivered)?;
    dict.set_item("undelivered", result.metrics.undelivered)?;
    dict.set_item("avg_time_in_network_ms", result.metrics.avg_time_in_network_ms)?;
    dict.set_item("reroutes_total", result.metrics.reroutes_total)?;
    dict.set_item("retry_attempts", result.metrics.retry_attempts)?;
    dict.set_item("transmissions", result.trace.len())?;
    Ok(dict.into())
}

/// Generates a Walker-delta contact plan and returns it as plan text.
#[pyfunction]
#[pyo3(signature = (planes=4, sats=16, inclination_deg=52.0, altitude_km=780.0,
                    hours=24.0, step_s=1, rate_bps=400, max_range_km=6_500.0,
                    plane_hops=None, ground_stations=None))]
#[allow(clippy::too_many_arguments)]
fn generate_walker_plan(
    planes: u32,
    sats: u32,
    inclination_deg: f64,
    altitude_km: f64,
    hours: f64,
    step_s: u64,
    rate_bps: u64,
    max_range_km: f64,
    plane_hops: Option<u32>,
    ground_stations: Option<Vec<(String, f64, f64)>>,
) -> PyResult<String> {
    let spec = ConstellationSpec {
        n_planes: planes,
        n_sats: sats,
        inclination_deg,
        orbit_radius_m: cgrsim::scenario::EARTH_RADIUS_M + altitude_km * 1000.0,
    };
    let rule = VisibilityRule {
        max_range_m: max_range_km * 1000.0,
        plane_hops,
        gs_min_elevation_deg: 0.0,
    };
    let gs: Vec<GroundStation> = ground_stations
        .unwrap_or_else(|| {
            vec![
                ("gs1".to_string(), 48.85, 2.35),
                ("gs2".to_string(), -33.87, 151.21),
            ]
        })
        .into_iter()
        .map(|(name, lat_deg, lon_deg)| GroundStation { name, lat_deg, lon_deg })
        .collect();
    let plan = build_contact_plan(&spec, &gs, &rule, (hours * 3600.0) as u64, step_s, rate_bps)
        .map_err(PyValueError::new_err)?;
    Ok(serialize_contact_plan(&plan))
}

#[pymodule]
fn _cgrsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyContactPlan>()?;
    m.add_function(wrap_pyfunction!(dijkstra, m)?)?;
    m.add_function(wrap_pyfunction!(yen, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(generate_walker_plan, m)?)?;
    Ok(())
}
