//! Command-line front end: single runs, pause-time sweeps across protocols
//! and seeds, and ordinal ranking of sweep results.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use manetsim::metrics::{self, aggregate, MetricsReport};
use manetsim::scenario::{parse_flow, Protocol, Scenario, ScenarioFileError};
use manetsim::sim;
use manetsim::trace;

#[derive(Parser)]
#[command(
    name = "manetsim",
    version,
    about = "Deterministic MANET routing simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and report its metrics.
    Run(RunArgs),
    /// Run protocols x pause times x seeds and emit metrics CSV.
    Sweep(SweepArgs),
    /// Read a sweep CSV and print the per-metric protocol ordering.
    Rank(RankArgs),
}

/// Scenario source and overrides; flags win over the file.
#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Routing protocol: dymo, aodv, dsdv or dsr.
    #[arg(long, short = 'p')]
    protocol: Option<String>,
    #[arg(long)]
    nodes: Option<u32>,
    /// Field dimensions as WxH in meters, e.g. 800x800.
    #[arg(long)]
    field: Option<String>,
    /// Radio range in meters.
    #[arg(long)]
    range: Option<f64>,
    /// Simulated seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// CBR flow as src:dst:bytes:interval[:start[:stop]]; repeatable.
    #[arg(long = "flows")]
    flows: Vec<String>,
    /// Number of randomly generated CBR flows.
    #[arg(long)]
    random_flows: Option<u32>,
    /// Payload bytes for generated flows.
    #[arg(long)]
    packet_size: Option<u16>,
    /// Inter-packet interval for generated flows, seconds.
    #[arg(long)]
    interval: Option<f64>,
    /// Mobility pause time, seconds.
    #[arg(long)]
    pause_time: Option<f64>,
    /// Freeze all nodes (pause time = duration).
    #[arg(long = "static")]
    static_nodes: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Write the event trace here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write a metrics CSV row here.
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated protocols, e.g. dymo,aodv,dsdv,dsr.
    #[arg(long)]
    protocols: Option<String>,
    /// Comma-separated pause times in seconds.
    #[arg(long)]
    pause_times: Option<String>,
    /// Seeds as a..b (inclusive) or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Parallel runs (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct RankArgs {
    /// Sweep CSV to rank.
    csv: PathBuf,
}

enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) => m,
        }
    }
}

impl From<manetsim::ConfigError> for CliError {
    fn from(e: manetsim::ConfigError) -> CliError {
        CliError::Config(e.to_string())
    }
}

impl From<ScenarioFileError> for CliError {
    fn from(e: ScenarioFileError) -> CliError {
        match e {
            ScenarioFileError::Io { .. } => CliError::Io(e.to_string()),
            ScenarioFileError::Config(c) => CliError::Config(c.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help and --version land here.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Rank(args) => cmd_rank(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

/// File first, then flag overrides.
fn build_scenario(args: &ScenarioArgs) -> Result<Scenario, CliError> {
    let mut sc = match &args.config {
        Some(path) => Scenario::parse_file(path)?,
        None => Scenario::default(),
    };
    if let Some(p) = &args.protocol {
        sc.protocol = Protocol::parse(p)
            .ok_or_else(|| CliError::Config(format!("unknown protocol '{p}'")))?;
    }
    if let Some(n) = args.nodes {
        sc.node_count = n;
    }
    if let Some(f) = &args.field {
        let (x, y) = f
            .split_once(['x', 'X'])
            .ok_or_else(|| CliError::Config(format!("--field wants WxH, got '{f}'")))?;
        sc.field_x = x
            .parse()
            .map_err(|_| CliError::Config(format!("bad field width '{x}'")))?;
        sc.field_y = y
            .parse()
            .map_err(|_| CliError::Config(format!("bad field height '{y}'")))?;
    }
    if let Some(r) = args.range {
        sc.radio_range = r;
    }
    if let Some(d) = args.duration {
        sc.duration = d;
    }
    if let Some(s) = args.seed {
        sc.seed = s;
    }
    if let Some(n) = args.random_flows {
        sc.random_flows = n;
    }
    if let Some(b) = args.packet_size {
        sc.packet_size = b;
    }
    if let Some(i) = args.interval {
        sc.cbr_interval = i;
    }
    for spec in &args.flows {
        let flow = parse_flow(spec, sc.duration)
            .ok_or_else(|| CliError::Config(format!("bad flow spec '{spec}'")))?;
        sc.flows.push(flow);
    }
    if let Some(p) = args.pause_time {
        sc.mobility.pause_time = p;
    }
    if args.static_nodes {
        sc.mobility.pause_time = sc.duration;
    }
    sc.validate()?;
    Ok(sc)
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let sc = build_scenario(&args.scenario)?;
    let result = sim::run(&sc)?;
    if let Some(path) = &args.trace_out {
        std::fs::write(path, trace::format_trace(&result.trace)).map_err(|e| io_err(path, e))?;
    }
    let report = MetricsReport::from_trace(&result.trace, &sc);
    if let Some(path) = &args.csv_out {
        let text = format!("{}\n{}\n", metrics::CSV_HEADER, metrics::csv_row(&report));
        std::fs::write(path, text).map_err(|e| io_err(path, e))?;
    }
    print_report(&sc, &report);
    Ok(())
}

fn print_report(sc: &Scenario, r: &MetricsReport) {
    println!("protocol    {}", r.protocol);
    println!("nodes       {}", r.nodes);
    println!("pause_time  {}", r.pause_time);
    println!("seed        {}", r.seed);
    println!("duration_s  {}", sc.duration);
    match r.pdf {
        Some(p) => println!("pdf         {p:.6}"),
        None => println!("pdf         undefined (no data sent)"),
    }
    match r.aeed {
        Some(d) => println!("aeed_s      {d:.6}"),
        None => println!("aeed_s      undefined (no deliveries)"),
    }
    println!("ro          {}", r.ro);
    println!("tp_bps      {:.3}", r.tp);
    println!("sent        {}", r.data_sent);
    println!("delivered   {}", r.data_delivered);
    println!("dropped     {}", r.data_dropped);
}

fn parse_protocols(spec: Option<&str>) -> Result<Vec<Protocol>, CliError> {
    let Some(spec) = spec else {
        return Ok(Protocol::ALL.to_vec());
    };
    spec.split(',')
        .map(|s| {
            Protocol::parse(s.trim())
                .ok_or_else(|| CliError::Config(format!("unknown protocol '{s}'")))
        })
        .collect()
}

fn parse_pauses(spec: Option<&str>) -> Result<Vec<f64>, CliError> {
    let Some(spec) = spec else {
        return Ok(vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0]);
    };
    spec.split(',')
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad pause time '{s}'")))?;
            if v < 0.0 {
                return Err(CliError::Config(format!("negative pause time '{s}'")));
            }
            Ok(v)
        })
        .collect()
}

/// `a..b` (inclusive) or `a,b,c`.
fn parse_seeds(spec: Option<&str>) -> Result<Vec<u64>, CliError> {
    let Some(spec) = spec else {
        return Ok(vec![1]);
    };
    if let Some((a, b)) = spec.split_once("..") {
        let lo: u64 = a
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad seed '{a}'")))?;
        let hi: u64 = b
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad seed '{b}'")))?;
        if hi < lo {
            return Err(CliError::Config(format!("empty seed range '{spec}'")));
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad seed '{s}'")))
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let base = build_scenario(&args.scenario)?;
    let protocols = parse_protocols(args.protocols.as_deref())?;
    let pauses = parse_pauses(args.pause_times.as_deref())?;
    let seeds = parse_seeds(args.seeds.as_deref())?;
    if protocols.is_empty() || pauses.is_empty() || seeds.is_empty() {
        return Err(CliError::Config(
            "sweep needs protocols, pause times and seeds".into(),
        ));
    }

    let mut scenarios = Vec::new();
    for &protocol in &protocols {
        for &pause in &pauses {
            for &seed in &seeds {
                let mut sc = base.clone();
                sc.protocol = protocol;
                sc.mobility.pause_time = pause;
                sc.seed = seed;
                scenarios.push(sc);
            }
        }
    }

    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let reports = run_parallel(&scenarios, jobs)?;

    let mut out = String::new();
    out.push_str(metrics::CSV_HEADER);
    out.push('\n');
    let per_group = seeds.len();
    for (g, group) in reports.chunks(per_group).enumerate() {
        for report in group {
            out.push_str(&metrics::csv_row(report));
            out.push('\n');
        }
        let agg = aggregate(group).map_err(|e| CliError::Config(e.to_string()))?;
        let protocol = protocols[g / pauses.len()];
        let pause = pauses[g % pauses.len()];
        out.push_str(&metrics::csv_aggregate_row(
            protocol.as_str(),
            base.node_count,
            pause,
            &agg,
        ));
        out.push('\n');
    }
    match &args.csv_out {
        Some(path) => std::fs::write(path, out).map_err(|e| io_err(path, e))?,
        None => print!("{out}"),
    }
    Ok(())
}

/// Fixed-order results from a small worker pool.
fn run_parallel(scenarios: &[Scenario], jobs: usize) -> Result<Vec<MetricsReport>, CliError> {
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<MetricsReport, String>>>> = scenarios
        .iter()
        .map(|_| std::sync::Mutex::new(None))
        .collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(scenarios.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= scenarios.len() {
                    break;
                }
                let sc = &scenarios[i];
                let outcome = sim::run(sc)
                    .map(|result| MetricsReport::from_trace(&result.trace, sc))
                    .map_err(|e| e.to_string());
                *slots[i].lock().unwrap() = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().unwrap())
        .map(|r| r.map_err(CliError::Config))
        .collect()
}

struct RankRow {
    protocol: String,
    pdf: Option<f64>,
    aeed: Option<f64>,
    ro: f64,
    tp: f64,
}

fn cmd_rank(args: RankArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.csv).map_err(|e| io_err(&args.csv, e))?;
    let mut rows: Vec<RankRow> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 11 {
            return Err(CliError::Config(format!(
                "{}: line {}: too few columns",
                args.csv.display(),
                idx + 1
            )));
        }
        if fields[3] == "agg" {
            continue;
        }
        let parse = |s: &str| -> Result<Option<f64>, CliError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| CliError::Config(format!("line {}: bad number '{s}'", idx + 1)))
            }
        };
        let pdf = parse(fields[4])?;
        let aeed = parse(fields[5])?;
        let ro = parse(fields[6])?
            .ok_or_else(|| CliError::Config(format!("line {}: missing ro", idx + 1)))?;
        let tp = parse(fields[7])?
            .ok_or_else(|| CliError::Config(format!("line {}: missing tp", idx + 1)))?;
        rows.push(RankRow {
            protocol: fields[0].to_string(),
            pdf,
            aeed,
            ro,
            tp,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no data rows",
            args.csv.display()
        )));
    }

    let mut protocols: Vec<String> = rows.iter().map(|r| r.protocol.clone()).collect();
    protocols.sort();
    protocols.dedup();

    let mean_of = |protocol: &str, pick: fn(&RankRow) -> Option<f64>| {
        let values: Vec<f64> = rows
            .iter()
            .filter(|r| r.protocol == protocol)
            .filter_map(pick)
            .collect();
        if values.is_empty() {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    };

    // (label, means sorted descending by value)
    let metrics_table: Vec<(&str, Vec<(String, f64)>)> = vec![
        ("ro", ranked(&protocols, |p| mean_of(p, |r| Some(r.ro)))),
        ("tp_bps", ranked(&protocols, |p| mean_of(p, |r| Some(r.tp)))),
        ("pdf", ranked(&protocols, |p| mean_of(p, |r| r.pdf))),
        ("aeed_s", ranked(&protocols, |p| mean_of(p, |r| r.aeed))),
    ];

    let levels = ["high", "medium", "low", "very_low"];
    println!(
        "{:<10} {:<22} {:<22} {:<22} {:<22}",
        "level", "ro", "tp_bps", "pdf", "aeed_s"
    );
    for i in 0..protocols.len() {
        let label = if protocols.len() == 4 {
            levels[i].to_string()
        } else {
            format!("{}", i + 1)
        };
        let mut cells = Vec::new();
        for (_, order) in &metrics_table {
            let (name, value) = &order[i];
            cells.push(format!("{name} ({value:.4})"));
        }
        println!(
            "{:<10} {:<22} {:<22} {:<22} {:<22}",
            label, cells[0], cells[1], cells[2], cells[3]
        );
    }
    Ok(())
}

fn ranked(protocols: &[String], mean: impl Fn(&str) -> f64) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = protocols.iter().map(|p| (p.clone(), mean(p))).collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}
