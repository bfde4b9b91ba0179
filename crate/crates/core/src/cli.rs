//! Batch experiment runner and plan toolbox.
//!
//! Subcommands: `run` (one simulation), `gen-scenario` (Walker-delta plan
//! file), `cp-stats` (plan report), `sweep` (cartesian product of parameter
//! lists). Every run writes a `manifest.txt` in flat `key = value` form that
//! reproduces it exactly. Exit codes: 0 success, 2 config error, 3 runtime
//! error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::buffer::dump_table_csv;
use crate::contact_plan::{
    parse_contact_plan, serialize_contact_plan, ContactPlan, NodeId, TimeMs,
};
use crate::scenario::{
    build_contact_plan, ConstellationSpec, GroundStation, VisibilityRule,
};
use crate::sim::{
    cp_size_csv, per_bundle_csv, run_simulation, summary_csv, Algorithm, SimConfig, SimResult,
    SummaryRow, RATE_INFINITE_BPS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cgrsim", about = "Contact-graph routing engine and DTN simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its CSVs and manifest.
    Run(RunArgs),
    /// Generate a Walker-delta contact-plan file.
    GenScenario(GenArgs),
    /// Report contact counts and durations of a plan file.
    CpStats(StatsArgs),
    /// Run the cartesian product of the listed parameter values.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Default, Clone)]
pub struct RunArgs {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Contact-plan file to simulate on.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// proposed | benchmark
    #[arg(long)]
    pub algo: Option<String>,
    /// Number of bundles generated over the workload period.
    #[arg(long)]
    pub nb: Option<u64>,
    #[arg(long)]
    pub bundle_size_bits: Option<u64>,
    /// Contact rate override in bps, or `inf`.
    #[arg(long)]
    pub rate: Option<String>,
    /// Buffer capacity per intermediate node in bundles, or `inf`.
    #[arg(long)]
    pub buffer: Option<String>,
    /// Yen's constant for the benchmark.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub horizon_s: Option<u64>,
    #[arg(long)]
    pub time_step_ms: Option<i64>,
    #[arg(long)]
    pub period_s: Option<u64>,
    /// Safety-margin fraction split off the plan before routing.
    #[arg(long)]
    pub margin_fraction: Option<f64>,
    /// Source node (name or id); defaults to the first ground station.
    #[arg(long)]
    pub source: Option<String>,
    /// Destination node (name or id); defaults to the second ground station.
    #[arg(long)]
    pub dest: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jitter_ms: Option<i64>,
    /// Also dump per-node forecast buffer tables (proposed runs).
    #[arg(long, default_value_t = false)]
    pub dump_buffers: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 4)]
    pub planes: u32,
    #[arg(long, default_value_t = 16)]
    pub sats: u32,
    #[arg(long, default_value_t = 52.0)]
    pub inclination_deg: f64,
    #[arg(long, default_value_t = 780.0)]
    pub altitude_km: f64,
    #[arg(long, default_value_t = 24.0)]
    pub hours: f64,
    #[arg(long, default_value_t = 1)]
    pub step_s: u64,
    #[arg(long, default_value_t = 400)]
    pub rate: u64,
    #[arg(long, default_value_t = 6500.0)]
    pub max_range_km: f64,
    /// Plane-hop limit for inter-satellite links; omit for unrestricted.
    #[arg(long)]
    pub plane_hops: Option<u32>,
    #[arg(long, default_value_t = 0.0)]
    pub gs_min_elevation_deg: f64,
    /// Ground stations as `name:lat:lon`, repeatable.
    #[arg(long = "gs")]
    pub ground_stations: Vec<String>,
    /// Output plan file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub plan: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub base: RunArgs,
    /// Comma-separated workload sizes.
    #[arg(long)]
    pub nb_list: Option<String>,
    /// Comma-separated rates in bps (or `inf`).
    #[arg(long)]
    pub rate_list: Option<String>,
    /// Comma-separated buffer sizes in bundles (or `inf`).
    #[arg(long)]
    pub buffer_list: Option<String>,
}

/// Fully resolved configuration of one run; everything a manifest needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub algorithm: Algorithm,
    pub n_bundles: u64,
    pub bundle_size_bits: u64,
    pub rate_bps: Option<u64>,
    pub buffer_bundles: Option<u64>,
    pub k: usize,
    pub horizon_s: u64,
    pub time_step_ms: TimeMs,
    pub period_s: u64,
    pub margin_fraction: f64,
    pub source: String,
    pub dest: String,
    pub seed: u64,
    pub jitter_ms: TimeMs,
    pub dump_buffers: bool,
    pub out_dir: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

/// Parses a flat `key = value` file (`#` comments allowed).
pub fn parse_kv_file(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`", i + 1));
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn parse_opt_u64(s: &str) -> Result<Option<u64>, String> {
    if s == "inf" {
        Ok(None)
    } else {
        s.parse::<u64>().map(Some).map_err(|_| format!("bad number '{s}'"))
    }
}

impl RunConfig {
    /// Merges config-file entries and CLI flags (flags win) into a resolved
    /// config with all defaults applied.
    pub fn resolve(args: &RunArgs) -> Result<RunConfig, CliError> {
        let mut kv = BTreeMap::new();
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            kv = parse_kv_file(&text).map_err(CliError::Config)?;
        }
        let take = |key: &str| kv.get(key).cloned();

        let scenario = args
            .scenario
            .clone()
            .or_else(|| take("scenario").map(PathBuf::from));
        let Some(scenario) = scenario else {
            return config_err("missing scenario: pass --scenario <plan file> (or `scenario =` in the config)");
        };
        let algo_s = args
            .algo
            .clone()
            .or_else(|| take("algorithm"))
            .unwrap_or_else(|| "proposed".into());
        let algorithm = match algo_s.as_str() {
            "proposed" => Algorithm::Proposed,
            "benchmark" => Algorithm::Benchmark,
            other => return config_err(format!("unknown algorithm '{other}' for --algo")),
        };
        let parse_kv = |key: &str| -> Result<Option<u64>, CliError> {
            match take(key) {
                Some(v) => parse_opt_u64(&v).map_err(CliError::Config),
                None => Ok(Some(u64::MAX)), // marker: unset
            }
        };
        let rate_bps = match &args.rate {
            Some(s) => parse_opt_u64(s).map_err(CliError::Config)?,
            None => match parse_kv("rate_bps")? {
                Some(u64::MAX) => Some(400),
                v => v,
            },
        };
        let buffer_bundles = match &args.buffer {
            Some(s) => parse_opt_u64(s).map_err(CliError::Config)?,
            None => match parse_kv("buffer_bundles")? {
                Some(u64::MAX) => None,
                v => v,
            },
        };
        let num = |flag: Option<u64>, key: &str, default: u64| -> Result<u64, CliError> {
            if let Some(v) = flag {
                return Ok(v);
            }
            match take(key) {
                Some(s) => s
                    .parse::<u64>()
                    .map_err(|_| CliError::Config(format!("bad {key} '{s}'"))),
                None => Ok(default),
            }
        };
        let n_bundles = num(args.nb, "n_bundles", 400)?;
        let bundle_size_bits = num(args.bundle_size_bits, "bundle_size_bits", 800)?;
        let k = match args.k {
            Some(v) => v,
            None => num(None, "k", 10)? as usize,
        };
        let horizon_s = num(args.horizon_s, "horizon_s", 86_400)?;
        let period_s = num(args.period_s, "period_s", 2_000)?;
        let time_step_ms = match args.time_step_ms {
            Some(v) => v,
            None => num(None, "time_step_ms", 1_000)? as TimeMs,
        };
        let margin_fraction = match args.margin_fraction {
            Some(v) => v,
            None => match take("margin_fraction") {
                Some(s) => s
                    .parse::<f64>()
                    .map_err(|_| CliError::Config(format!("bad margin_fraction '{s}'")))?,
                None => 0.0,
            },
        };
        let seed = num(args.seed, "seed", 0)?;
        let jitter_ms = match args.jitter_ms {
            Some(v) => v,
            None => num(None, "jitter_ms", 0)? as TimeMs,
        };
        let source = args
            .source
            .clone()
            .or_else(|| take("source"))
            .unwrap_or_else(|| "gs1".into());
        let dest = args
            .dest
            .clone()
            .or_else(|| take("dest"))
            .unwrap_or_else(|| "gs2".into());
        let out_dir = args
            .out_dir
            .clone()
            .or_else(|| take("out_dir").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let dump_buffers = args.dump_buffers
            || take("dump_buffers").map(|v| v == "true").unwrap_or(false);
        if n_bundles == 0 || bundle_size_bits == 0 || k == 0 {
            return config_err("counts must be positive");
        }
        if !(0.0..=1.0).contains(&margin_fraction) {
            return config_err(format!("margin_fraction {margin_fraction} outside [0, 1]"));
        }
        Ok(RunConfig {
            scenario,
            algorithm,
            n_bundles,
            bundle_size_bits,
            rate_bps,
            buffer_bundles,
            k,
            horizon_s,
            time_step_ms,
            period_s,
            margin_fraction,
            source,
            dest,
            seed,
            jitter_ms,
            dump_buffers,
            out_dir,
        })
    }

    pub fn manifest(&self) -> String {
        let mut m = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(m, "{k} = {v}");
        };
        kv("scenario", self.scenario.display().to_string());
        kv("algorithm", self.algorithm.as_str().to_string());
        kv("n_bundles", self.n_bundles.to_string());
        kv("bundle_size_bits", self.bundle_size_bits.to_string());
        kv(
            "rate_bps",
            self.rate_bps.map(|v| v.to_string()).unwrap_or_else(|| "inf".into()),
        );
        kv(
            "buffer_bundles",
            self.buffer_bundles
                .map(|v| v.to_string())
                .unwrap_or_else(|| "inf".into()),
        );
        kv("k", self.k.to_string());
        kv("horizon_s", self.horizon_s.to_string());
        kv("time_step_ms", self.time_step_ms.to_string());
        kv("period_s", self.period_s.to_string());
        kv("margin_fraction", format!("{}", self.margin_fraction));
        kv("source", self.source.clone());
        kv("dest", self.dest.clone());
        kv("seed", self.seed.to_string());
        kv("jitter_ms", self.jitter_ms.to_string());
        kv("dump_buffers", self.dump_buffers.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        m
    }

    fn sim_config(&self, plan: &ContactPlan) -> Result<SimConfig, CliError> {
        let source = resolve_node(plan, &self.source)
            .ok_or_else(|| CliError::Config(format!("unknown source node '{}'", self.source)))?;
        let destination = resolve_node(plan, &self.dest)
            .ok_or_else(|| CliError::Config(format!("unknown dest node '{}'", self.dest)))?;
        Ok(SimConfig {
            algorithm: self.algorithm,
            n_bundles: self.n_bundles,
            bundle_size_bits: self.bundle_size_bits,
            generation_period_ms: (self.period_s * 1000) as TimeMs,
            // `inf` on the command line becomes the fast stand-in rate.
            rate_override_bps: Some(self.rate_bps.unwrap_or(RATE_INFINITE_BPS)),
            buffer_capacity_bits: self.buffer_bundles.map(|n| n * self.bundle_size_bits),
            k: self.k,
            horizon_ms: (self.horizon_s * 1000) as TimeMs,
            time_step_ms: self.time_step_ms,
            source,
            destination,
            seed: self.seed,
            jitter_ms: self.jitter_ms,
        })
    }
}

fn resolve_node(plan: &ContactPlan, token: &str) -> Option<NodeId> {
    if let Ok(v) = token.parse::<u32>() {
        let id = NodeId(v);
        if plan.node_kind(id).is_some() {
            return Some(id);
        }
    }
    plan.node_ids().find(|id| plan.node_name(*id) == Some(token))
}

fn load_plan(path: &Path) -> Result<ContactPlan, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_contact_plan(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Runtime(format!("mkdir {}: {e}", parent.display())))?;
    }
    // Atomic per file: write to a sibling then rename.
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content).map_err(|e| CliError::Runtime(format!("write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Runtime(format!("rename {}: {e}", path.display())))?;
    Ok(())
}

/// Runs one simulation per the resolved config and writes per_bundle.csv,
/// summary.csv, cp_size.csv and manifest.txt into the output directory.
pub fn execute_run(config: &RunConfig) -> Result<SimResult, CliError> {
    let mut plan = load_plan(&config.scenario)?;
    if config.margin_fraction > 0.0 {
        let (source_cp, _margin_cp) = plan
            .partition_safety_margin(
                config.margin_fraction,
                crate::contact_plan::MarginPolicy::TailOfEachContact,
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
        plan = source_cp;
    }
    let sim_config = config.sim_config(&plan)?;
    let result =
        run_simulation(&plan, &sim_config).map_err(|e| CliError::Runtime(e.to_string()))?;
    let row = SummaryRow {
        algorithm: config.algorithm,
        n_bundles: config.n_bundles,
        rate_bps: config.rate_bps,
        buffer_bundles: config.buffer_bundles,
        avg_time_ms: result.metrics.avg_time_in_network_ms,
        reroutes_total: result.metrics.reroutes_total,
        undelivered: result.metrics.undelivered,
    };
    let dir = &config.out_dir;
    write_file(&dir.join("manifest.txt"), &config.manifest())?;
    write_file(&dir.join("per_bundle.csv"), &per_bundle_csv(&result.metrics.per_bundle))?;
    write_file(&dir.join("summary.csv"), &summary_csv(&[row]))?;
    write_file(
        &dir.join("cp_size.csv"),
        &cp_size_csv(&result.metrics.cp_size_timeline, result.metrics.initial_cp_size),
    )?;
    if config.dump_buffers {
        if let Some(tables) = &result.tables {
            for table in tables.tables() {
                let name = plan
                    .node_name(table.node)
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("node{}", table.node));
                write_file(&dir.join(format!("buffer_{name}.csv")), &dump_table_csv(table))?;
            }
        }
    }
    Ok(result)
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let config = RunConfig::resolve(args)?;
    let result = execute_run(&config)?;
    println!(
        "{}: delivered {}/{} avg_time_ms {:.3} reroutes {} -> {}",
        config.algorithm.as_str(),
        result.metrics.delivered,
        config.n_bundles,
        result.metrics.avg_time_in_network_ms,
        result.metrics.reroutes_total,
        config.out_dir.display()
    );
    Ok(())
}

fn parse_gs(specs: &[String]) -> Result<Vec<GroundStation>, CliError> {
    if specs.is_empty() {
        // Defaults are arbitrary, documented in the README: two widely
        // separated stations so multi-hop routes exist.
        return Ok(vec![
            GroundStation { name: "gs1".into(), lat_deg: 48.85, lon_deg: 2.35 },
            GroundStation { name: "gs2".into(), lat_deg: -33.87, lon_deg: 151.21 },
        ]);
    }
    specs
        .iter()
        .map(|s| {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return config_err(format!("ground station '{s}' is not name:lat:lon"));
            }
            let lat: f64 = parts[1]
                .parse()
                .map_err(|_| CliError::Config(format!("bad latitude in '{s}'")))?;
            let lon: f64 = parts[2]
                .parse()
                .map_err(|_| CliError::Config(format!("bad longitude in '{s}'")))?;
            Ok(GroundStation { name: parts[0].to_string(), lat_deg: lat, lon_deg: lon })
        })
        .collect()
}

pub fn cmd_gen_scenario(args: &GenArgs) -> Result<(), CliError> {
    let spec = ConstellationSpec {
        n_planes: args.planes,
        n_sats: args.sats,
        inclination_deg: args.inclination_deg,
        orbit_radius_m: crate::scenario::EARTH_RADIUS_M + args.altitude_km * 1000.0,
    };
    spec.validate().map_err(CliError::Config)?;
    let rule = VisibilityRule {
        max_range_m: args.max_range_km * 1000.0,
        plane_hops: args.plane_hops,
        gs_min_elevation_deg: args.gs_min_elevation_deg,
    };
    let gs = parse_gs(&args.ground_stations)?;
    let horizon_s = (args.hours * 3600.0) as u64;
    let plan = build_contact_plan(&spec, &gs, &rule, horizon_s, args.step_s, args.rate)
        .map_err(CliError::Config)?;
    write_file(&args.out, &serialize_contact_plan(&plan))?;
    println!("{} contacts -> {}", plan.len(), args.out.display());
    Ok(())
}

pub fn cmd_cp_stats(args: &StatsArgs) -> Result<(), CliError> {
    let plan = load_plan(&args.plan)?;
    let count = plan.len();
    let mean_ms = if count > 0 {
        plan.contacts().map(|c| c.duration_ms() as f64).sum::<f64>() / count as f64
    } else {
        0.0
    };
    println!("contacts: {count}");
    println!("mean_duration_s: {:.3}", mean_ms / 1000.0);
    let mut per_pair: BTreeMap<(NodeId, NodeId), usize> = BTreeMap::new();
    for c in plan.contacts() {
        *per_pair.entry((c.sender, c.receiver)).or_default() += 1;
    }
    let show = |n: NodeId| plan.node_name(n).map(str::to_string).unwrap_or_else(|| n.to_string());
    for ((s, r), n) in per_pair {
        println!("pair {} -> {}: {}", show(s), show(r), n);
    }
    Ok(())
}

fn parse_list_u64(s: &str, what: &str) -> Result<Vec<Option<u64>>, CliError> {
    s.split(',')
        .map(|tok| parse_opt_u64(tok.trim()).map_err(|e| CliError::Config(format!("{what}: {e}"))))
        .collect()
}

/// Cartesian sweep: one run per combination, each in its own subdirectory,
/// plus a merged summary.csv and the sweep manifest at the top. The sweep
/// lists are read back from `sweep_*` manifest keys, so a sweep reruns from
/// its own manifest.
pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let base = RunConfig::resolve(&args.base)?;
    let file_kv = match &args.base.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_kv_file(&text).map_err(CliError::Config)?
        }
        None => BTreeMap::new(),
    };
    let list_of = |flag: &Option<String>, key: &str| -> Option<String> {
        flag.clone().or_else(|| file_kv.get(key).cloned())
    };
    let nbs: Vec<u64> = match list_of(&args.nb_list, "sweep_nb") {
        Some(s) => parse_list_u64(&s, "nb-list")?
            .into_iter()
            .map(|v| v.ok_or_else(|| CliError::Config("nb-list cannot contain inf".into())))
            .collect::<Result<_, _>>()?,
        None => vec![base.n_bundles],
    };
    let rates: Vec<Option<u64>> = match list_of(&args.rate_list, "sweep_rate") {
        Some(s) => parse_list_u64(&s, "rate-list")?,
        None => vec![base.rate_bps],
    };
    let buffers: Vec<Option<u64>> = match list_of(&args.buffer_list, "sweep_buffer") {
        Some(s) => parse_list_u64(&s, "buffer-list")?,
        None => vec![base.buffer_bundles],
    };
    let algorithms = vec![Algorithm::Proposed, Algorithm::Benchmark];

    let mut rows: Vec<SummaryRow> = Vec::new();
    let sweep_dir = base.out_dir.clone();
    let mut sweep_manifest = base.manifest();
    let _ = writeln!(
        sweep_manifest,
        "sweep_nb = {}",
        nbs.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(
        sweep_manifest,
        "sweep_rate = {}",
        rates.iter().map(|r| opt_str(*r)).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(
        sweep_manifest,
        "sweep_buffer = {}",
        buffers.iter().map(|b| opt_str(*b)).collect::<Vec<_>>().join(",")
    );
    for algorithm in algorithms {
        for &nb in &nbs {
            for &rate in &rates {
                for &buffer in &buffers {
                    let label = format!(
                        "{}_nb{}_rate{}_buf{}",
                        algorithm.as_str(),
                        nb,
                        opt_str(rate),
                        opt_str(buffer)
                    );
                    let combo = RunConfig {
                        algorithm,
                        n_bundles: nb,
                        rate_bps: rate,
                        buffer_bundles: buffer,
                        out_dir: sweep_dir.join(&label),
                        ..base.clone()
                    };
                    let result = execute_run(&combo)?;
                    rows.push(SummaryRow {
                        algorithm,
                        n_bundles: nb,
                        rate_bps: rate,
                        buffer_bundles: buffer,
                        avg_time_ms: result.metrics.avg_time_in_network_ms,
                        reroutes_total: result.metrics.reroutes_total,
                        undelivered: result.metrics.undelivered,
                    });
                }
            }
        }
    }
    write_file(&sweep_dir.join("summary.csv"), &summary_csv(&rows))?;
    write_file(&sweep_dir.join("manifest.txt"), &sweep_manifest)?;
    println!("{} runs -> {}", rows.len(), sweep_dir.display());
    Ok(())
}

fn opt_str(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "inf".into())
}

/// Entry point used by the binary; returns the process exit code.
pub fn run_cli(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::GenScenario(args) => cmd_gen_scenario(args),
        Command::CpStats(args) => cmd_cp_stats(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
