//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! The sweeps run both algorithms over a small generated Walker-delta
//! constellation (4 planes x 2 satellites, two ground stations, 24 h plan).
//! Exact-value criteria run against the independent oracles in `common`.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::sync::OnceLock;
use std::time::Instant;

use cgrsim::buffer::BufferTables;
use cgrsim::capacity::cp_growth_stats;
use cgrsim::cli::{cmd_gen_scenario, cmd_sweep, GenArgs, RunArgs, SweepArgs};
use cgrsim::contact_plan::{
    parse_contact_plan, Bundle, ContactId, ContactPlan, NodeId, TimeMs,
};
use cgrsim::router::RouterState;
use cgrsim::scenario::{build_contact_plan, ConstellationSpec, GroundStation, VisibilityRule};
use cgrsim::sim::{run_simulation, Algorithm, SimConfig, SimResult};

use common::{replay_check, run_stateful_oracle_harness};

fn report<T>(criterion: u32, desc: &str, result: Result<T, String>) {
    match result {
        Ok(_) => println!("criterion {criterion}: PASS - {desc}"),
        Err(e) => {
            println!("criterion {criterion}: FAIL - {desc}: {e}");
            panic!("criterion {criterion} failed: {e}");
        }
    }
}

const N_BUNDLES_SWEEP: [u64; 3] = [50, 200, 400];
const RATES_SWEEP: [u64; 3] = [200, 400, 800];
/// Buffer sizes in bundles, ascending; `None` is unbounded.
const BUFFERS_SWEEP: [Option<u64>; 3] = [Some(10), Some(50), None];

struct Fixture {
    plan: ContactPlan,
    /// (algorithm, n_bundles, rate) -> result, buffers unbounded.
    capacity: BTreeMap<(Algorithm, u64, u64), SimResult>,
    /// (algorithm, n_bundles, buffer_bundles) -> result, rate effectively
    /// infinite.
    buffer: BTreeMap<(Algorithm, u64, Option<u64>), SimResult>,
}

fn algo_key(a: Algorithm) -> Algorithm {
    a
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let spec = ConstellationSpec {
            n_planes: 4,
            n_sats: 8,
            inclination_deg: 52.0,
            orbit_radius_m: (6371.0 + 780.0) * 1e3,
        };
        let gs = vec![
            GroundStation { name: "gs1".into(), lat_deg: 48.85, lon_deg: 2.35 },
            GroundStation { name: "gs2".into(), lat_deg: -33.87, lon_deg: 151.21 },
        ];
        let plan =
            build_contact_plan(&spec, &gs, &VisibilityRule::default(), 86_400, 1, 400).unwrap();
        let base = SimConfig {
            source: NodeId(8),
            destination: NodeId(9),
            ..SimConfig::default()
        };
        let mut capacity = BTreeMap::new();
        let mut buffer = BTreeMap::new();
        for algorithm in [Algorithm::Proposed, Algorithm::Benchmark] {
            for nb in N_BUNDLES_SWEEP {
                for rate in RATES_SWEEP {
                    let config = SimConfig {
                        algorithm,
                        n_bundles: nb,
                        rate_override_bps: Some(rate),
                        buffer_capacity_bits: None,
                        ..base.clone()
                    };
                    let result = run_simulation(&plan, &config).unwrap();
                    capacity.insert((algo_key(algorithm), nb, rate), result);
                }
                for buf in BUFFERS_SWEEP {
                    let config = SimConfig {
                        algorithm,
                        n_bundles: nb,
                        rate_override_bps: Some(cgrsim::sim::RATE_INFINITE_BPS),
                        buffer_capacity_bits: buf.map(|n| n * base.bundle_size_bits),
                        ..base.clone()
                    };
                    let result = run_simulation(&plan, &config).unwrap();
                    buffer.insert((algo_key(algorithm), nb, buf), result);
                }
            }
        }
        Fixture { plan, capacity, buffer }
    })
}

/// Criterion 1: on >= 1000 random contact plans with <= 12 contacts, the
/// full pipeline returns exactly the brute-force-minimal delivery time and
/// returns absent iff the oracle finds no valid route. Exact; < 60 s.
#[test]
fn criterion_1_optimality_oracle() {
    let start = Instant::now();
    let result = std::panic::catch_unwind(|| run_stateful_oracle_harness(1009, 1000, 3));
    let elapsed = start.elapsed();
    let outcome = match result {
        Ok((routed, unreachable)) => {
            if routed < 500 {
                Err(format!("only {routed} comparable routings"))
            } else if elapsed.as_secs() >= 60 {
                Err(format!("took {elapsed:?}, budget is 60 s"))
            } else {
                Ok(format!(
                    "{routed} routed + {unreachable} unreachable agree with brute force in {elapsed:.2?}"
                ))
            }
        }
        Err(_) => Err("router and brute-force oracle disagreed".into()),
    };
    let desc = "dijkstra under the full pipeline equals brute-force minimum on 1000 random plans";
    report(1, desc, outcome);
}

/// Criterion 2: proposed-algorithm reroute count is exactly zero in every
/// disruption-free sweep run.
#[test]
fn criterion_2_zero_reroutes() {
    let fx = fixture();
    let mut checked = 0;
    let mut result = Ok(());
    for ((algo, nb, rate), r) in &fx.capacity {
        if *algo == Algorithm::Proposed {
            checked += 1;
            if r.metrics.reroutes_total != 0 {
                result = Err(format!(
                    "capacity sweep nb={nb} rate={rate}: {} reroutes",
                    r.metrics.reroutes_total
                ));
            }
        }
    }
    for ((algo, nb, buf), r) in &fx.buffer {
        if *algo == Algorithm::Proposed {
            checked += 1;
            if r.metrics.reroutes_total != 0 {
                result = Err(format!(
                    "buffer sweep nb={nb} buf={buf:?}: {} reroutes",
                    r.metrics.reroutes_total
                ));
            }
        }
    }
    let result = result.and_then(|_| {
        if checked == 18 {
            Ok(())
        } else {
            Err(format!("expected 18 proposed runs, saw {checked}"))
        }
    });
    report(2, "proposed algorithm never reroutes across both sweeps", result);
}

/// Criterion 3: an independent replay of every proposed event trace finds
/// one bundle per link at a time and realized occupancy within capacity.
/// Exact; < 30 s per sweep.
#[test]
fn criterion_3_trace_replay() {
    let fx = fixture();
    let node_caps = |buffer_bits: Option<u64>| -> BTreeMap<NodeId, Option<u64>> {
        fx.plan
            .node_ids()
            .map(|n| {
                let cap = if n == NodeId(8) || n == NodeId(9) { None } else { buffer_bits };
                (n, cap)
            })
            .collect()
    };
    let start = Instant::now();
    let mut result = Ok(());
    for ((algo, nb, rate), r) in &fx.capacity {
        if *algo != Algorithm::Proposed {
            continue;
        }
        let sizes: BTreeMap<u64, u64> =
            r.metrics.per_bundle.iter().map(|s| (s.bundle_id, 800)).collect();
        if let Err(e) = replay_check(&r.trace, &node_caps(None), &sizes) {
            result = Err(format!("capacity nb={nb} rate={rate}: {e}"));
        }
    }
    let capacity_elapsed = start.elapsed();
    let start = Instant::now();
    for ((algo, nb, buf), r) in &fx.buffer {
        if *algo != Algorithm::Proposed {
            continue;
        }
        let sizes: BTreeMap<u64, u64> =
            r.metrics.per_bundle.iter().map(|s| (s.bundle_id, 800)).collect();
        if let Err(e) = replay_check(&r.trace, &node_caps(buf.map(|n| n * 800)), &sizes) {
            result = Err(format!("buffer nb={nb} buf={buf:?}: {e}"));
        }
    }
    let buffer_elapsed = start.elapsed();
    let result = result.and_then(|_| {
        if capacity_elapsed.as_secs() < 30 && buffer_elapsed.as_secs() < 30 {
            Ok(())
        } else {
            Err(format!("replay too slow: {capacity_elapsed:?} / {buffer_elapsed:?}"))
        }
    });
    report(3, "replayed traces show no link overlap and no buffer breach", result);
}

/// Criterion 4: permanent CP additions per window never exceed the sum of
/// route hop counts, with equality on an all-interior-splits workload.
#[test]
fn criterion_4_growth_bound() {
    // Bound on the generated scenario under load.
    let fx = fixture();
    let mut tables = BufferTables::new();
    for n in fx.plan.node_ids() {
        tables.set_capacity(n, None);
    }
    let mut router = RouterState::new(fx.plan.clone(), tables, 800);
    let mut committed = 0u64;
    let mut t = 0;
    for b in 0..200u64 {
        let bundle = Bundle {
            id: b,
            size_bits: 800,
            source: NodeId(8),
            destination: NodeId(9),
            t_created: t,
        };
        if router.route_bundle(&bundle, t).is_some() {
            committed += 1;
        }
        t += 10_000;
    }
    let mut result = if committed == 0 {
        Err("no bundle committed".into())
    } else {
        Ok(())
    };
    // Per-second windows: net additions <= sum of hops of that window.
    let horizon = t;
    let mut w = 0;
    while w < horizon {
        let stats = cp_growth_stats(&router.capacity.log, w, w + 1000);
        let hop_sum: i64 = router
            .capacity
            .log
            .entries()
            .iter()
            .filter(|e| e.t >= w && e.t < w + 1000)
            .map(|e| match &e.mutation {
                cgrsim::capacity::Mutation::CapacityCommit { hops, .. } => *hops as i64,
                _ => 0,
            })
            .sum();
        if stats.added > hop_sum {
            result = Err(format!(
                "window [{w}, {}): added {} exceeds hop bound {hop_sum}",
                w + 1000,
                stats.added
            ));
        }
        w += 1000;
    }

    // Equality on a constructed all-interior-splits workload: a three-hop
    // chain of long contacts, every slice strictly inside its window.
    let chain = parse_contact_plan(concat!(
        "contact 1 A B 0 1000000 400\n",
        "contact 2 B C 0 1000000 400\n",
        "contact 3 C D 0 1000000 400\n",
    ))
    .unwrap();
    let mut tables = BufferTables::new();
    for n in chain.node_ids() {
        tables.set_capacity(n, None);
    }
    let mut router = RouterState::new(chain, tables, 0);
    for b in 0..5u64 {
        let t_now = 1_000 + b as TimeMs * 3_000;
        let bundle = Bundle {
            id: b,
            size_bits: 800,
            source: NodeId(0),
            destination: NodeId(3),
            t_created: t_now,
        };
        let c = router.route_bundle(&bundle, t_now).expect("chain stays routable");
        assert_eq!(c.route.hops.len(), 3);
    }
    let stats = cp_growth_stats(&router.capacity.log, 0, 1_000_000);
    if result.is_ok() && stats.added != 15 {
        result = Err(format!(
            "constructed workload: added {} but 5 bundles x 3 interior hops must give 15",
            stats.added
        ));
    }
    report(4, "net CP additions respect the per-window hop-sum bound", result);
}

/// Criterion 5: proposed average time in network is at or below the
/// benchmark's at every paired sweep point, strictly below at the highest
/// load; benchmark reroutes grow with load and shrink with buffer size.
#[test]
fn criterion_5_qualitative_ordering() {
    let fx = fixture();
    let mut result = Ok(());
    let mut check = |cond: bool, msg: String| {
        if result.is_ok() && !cond {
            result = Err(msg);
        }
    };
    for nb in N_BUNDLES_SWEEP {
        for rate in RATES_SWEEP {
            let p = &fx.capacity[&(Algorithm::Proposed, nb, rate)].metrics;
            let b = &fx.capacity[&(Algorithm::Benchmark, nb, rate)].metrics;
            check(
                p.undelivered == 0 && b.undelivered == 0,
                format!("capacity nb={nb} rate={rate}: undelivered bundles"),
            );
            check(
                p.avg_time_in_network_ms <= b.avg_time_in_network_ms + 1e-9,
                format!(
                    "capacity nb={nb} rate={rate}: proposed {:.1} > benchmark {:.1}",
                    p.avg_time_in_network_ms, b.avg_time_in_network_ms
                ),
            );
        }
        for buf in BUFFERS_SWEEP {
            let p = &fx.buffer[&(Algorithm::Proposed, nb, buf)].metrics;
            let b = &fx.buffer[&(Algorithm::Benchmark, nb, buf)].metrics;
            check(
                p.undelivered == 0 && b.undelivered == 0,
                format!("buffer nb={nb} buf={buf:?}: undelivered bundles"),
            );
            check(
                p.avg_time_in_network_ms <= b.avg_time_in_network_ms + 1e-9,
                format!(
                    "buffer nb={nb} buf={buf:?}: proposed {:.1} > benchmark {:.1}",
                    p.avg_time_in_network_ms, b.avg_time_in_network_ms
                ),
            );
        }
    }
    // Strict at the highest-load capacity point.
    let p = &fx.capacity[&(Algorithm::Proposed, 400, 200)].metrics;
    let b = &fx.capacity[&(Algorithm::Benchmark, 400, 200)].metrics;
    check(
        p.avg_time_in_network_ms < b.avg_time_in_network_ms,
        format!(
            "highest load: proposed {:.1} not strictly below benchmark {:.1}",
            p.avg_time_in_network_ms, b.avg_time_in_network_ms
        ),
    );
    // Benchmark reroutes: nondecreasing in load at fixed rate.
    for rate in RATES_SWEEP {
        let series: Vec<u64> = N_BUNDLES_SWEEP
            .iter()
            .map(|nb| fx.capacity[&(Algorithm::Benchmark, *nb, rate)].metrics.reroutes_total)
            .collect();
        check(
            series.windows(2).all(|w| w[0] <= w[1]),
            format!("benchmark reroutes not nondecreasing in load at rate {rate}: {series:?}"),
        );
    }
    // Benchmark reroutes: nonincreasing in buffer size at fixed load.
    for nb in N_BUNDLES_SWEEP {
        let series: Vec<u64> = BUFFERS_SWEEP
            .iter()
            .map(|buf| fx.buffer[&(Algorithm::Benchmark, nb, *buf)].metrics.reroutes_total)
            .collect();
        check(
            series.windows(2).all(|w| w[0] >= w[1]),
            format!("benchmark reroutes not nonincreasing in buffer size at nb={nb}: {series:?}"),
        );
    }
    report(5, "paired runs order the algorithms as the published curves do", result);
}

/// Criterion 6: with capacity management on, the normalized CP size stays
/// within +15% of the expiry-only baseline at low load, and the temporary
/// overlay growth per bundle respects its pair bound.
#[test]
fn criterion_6_cp_size_timeline() {
    let fx = fixture();
    let expiry_only = |t: TimeMs| fx.plan.contacts().filter(|c| c.t_end > t).count() as f64;
    let mut result = Ok(());
    for nb in [50u64, 200] {
        for rate in RATES_SWEEP {
            let r = &fx.capacity[&(Algorithm::Proposed, nb, rate)];
            for (t, size) in &r.metrics.cp_size_timeline {
                let baseline = expiry_only(*t);
                if *size as f64 > baseline * 1.15 && result.is_ok() {
                    result = Err(format!(
                        "nb={nb} rate={rate}: size {size} exceeds baseline {baseline} by more than 15% at t={t}"
                    ));
                }
            }
        }
    }
    // Overlay growth bound, asserted inside the harness for every routed
    // bundle that faced overflows.
    let (routed, _) = run_stateful_oracle_harness(77, 150, 4);
    if result.is_ok() && routed == 0 {
        result = Err("overlay-bound harness routed nothing".into());
    }
    report(6, "capacity-managed CP size stays near the expiry baseline", result);
}

/// Criterion 7: routing one bundle over the four-contact chain reproduces
/// the published post-allocation split structure exactly.
#[test]
fn criterion_7_split_structure_regression() {
    // C1 [0,10), C2 [6,20), C3 [7,30), C4 [0,40) (seconds); bundle from A
    // at t_a = 3 s, 800 bits at 400 bps (2 s per hop), destination D.
    let plan = parse_contact_plan(concat!(
        "contact 1 A B 0 10000 400\n",
        "contact 2 B C 6000 20000 400\n",
        "contact 3 C D 7000 30000 400\n",
        "contact 4 D E 0 40000 400\n",
    ))
    .unwrap();
    let mut tables = BufferTables::new();
    for n in plan.node_ids() {
        tables.set_capacity(n, None);
    }
    let mut router = RouterState::new(plan, tables, 0);
    let bundle = Bundle {
        id: 0,
        size_bits: 800,
        source: NodeId(0),
        destination: NodeId(3),
        t_created: 3_000,
    };
    let committed = router.route_bundle(&bundle, 3_000).expect("chain routes");
    let mut result = Ok(());
    let mut check = |cond: bool, msg: &str| {
        if result.is_ok() && !cond {
            result = Err(msg.to_string());
        }
    };
    // Hop times: C1 [t_a, t_a+2), C2 [6, 8), C3 [t_i=8, 10).
    let hops = &committed.route.hops;
    check(hops.len() == 3, "route must take the three-hop chain");
    check(
        hops[0].tx_start == 3_000 && hops[0].tx_end == 5_000,
        "first slice must start at t_a",
    );
    check(
        hops[1].tx_start == 6_000 && hops[1].tx_end == 8_000,
        "second slice starts at the contact opening",
    );
    check(
        hops[2].tx_start == 8_000 && hops[2].tx_end == 10_000,
        "third slice starts at the arrival t_i",
    );
    // Post-allocation plan: C1 split into [0, t_a) and [t_a+tTx, 10);
    // C2 shortened to [6+tTx, 20); C3 split into [7, t_i) and [t_i+tTx, 30);
    // C4 untouched.
    let mut intervals: Vec<(u32, TimeMs, TimeMs)> = router
        .cp
        .contacts()
        .map(|c| (c.origin.0, c.t_start, c.t_end))
        .collect();
    intervals.sort_unstable();
    let expected: Vec<(u32, TimeMs, TimeMs)> = vec![
        (1, 0, 3_000),
        (1, 5_000, 10_000),
        (2, 8_000, 20_000),
        (3, 7_000, 8_000),
        (3, 10_000, 30_000),
        (4, 0, 40_000),
    ];
    if result.is_ok() && intervals != expected {
        result = Err(format!("post-allocation plan {intervals:?} != expected {expected:?}"));
    }
    report(7, "one allocation reproduces the published split pattern", result);
}

/// Criterion 8: a sweep rerun from its own manifest reproduces every CSV
/// byte for byte.
#[test]
fn criterion_8_manifest_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.cp");
    cmd_gen_scenario(&GenArgs {
        planes: 4,
        sats: 4,
        inclination_deg: 52.0,
        altitude_km: 780.0,
        hours: 24.0,
        step_s: 1,
        rate: 400,
        max_range_km: 6500.0,
        plane_hops: Some(2),
        gs_min_elevation_deg: 0.0,
        ground_stations: vec![],
        out: plan_path.clone(),
    })
    .unwrap();
    let out1 = dir.path().join("sweep1");
    let sweep = SweepArgs {
        base: RunArgs {
            scenario: Some(plan_path),
            nb: Some(30),
            out_dir: Some(out1.clone()),
            ..RunArgs::default()
        },
        nb_list: Some("10,30".into()),
        rate_list: Some("400,800".into()),
        buffer_list: None,
    };
    cmd_sweep(&sweep).unwrap();
    let out2 = dir.path().join("sweep2");
    let rerun = SweepArgs {
        base: RunArgs {
            config: Some(out1.join("manifest.txt")),
            out_dir: Some(out2.clone()),
            ..RunArgs::default()
        },
        nb_list: None,
        rate_list: None,
        buffer_list: None,
    };
    cmd_sweep(&rerun).unwrap();

    fn collect_csvs(root: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
        let mut out = BTreeMap::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in fs::read_dir(&dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else if path.extension().map(|e| e == "csv").unwrap_or(false) {
                    let rel = path.strip_prefix(root).unwrap().to_string_lossy().to_string();
                    out.insert(rel, fs::read(&path).unwrap());
                }
            }
        }
        out
    }
    let a = collect_csvs(&out1);
    let b = collect_csvs(&out2);
    let result = if a.is_empty() {
        Err("sweep produced no CSVs".to_string())
    } else if a == b {
        Ok(())
    } else {
        let diff: Vec<&String> = a
            .keys()
            .chain(b.keys())
            .filter(|k| a.get(*k) != b.get(*k))
            .collect();
        Err(format!("CSVs differ between runs: {diff:?}"))
    };
    report(8, "sweep reruns from the manifest are byte-identical", result);
}
