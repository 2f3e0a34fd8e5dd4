//! One binary, many subcommands: the plan -> generate -> analyze -> internet
//! workflow is a pipeline, so everything shares config and output handling.
//!
//! Exit codes: 0 success, 1 operational error (single-line diagnostic on
//! stderr), 2 usage error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use webload::analytic;
use webload::analyzer;
use webload::core::{ThinkDistribution, WorkloadPoint};
use webload::loadgen::{self, LoadgenOptions, ObjectMix};
use webload::planner::{self, PlanOptions, ScheduleStart, TestPlan};
use webload::ruler::{ruler_experiment, RulerConfig};
use webload::simulator::{self, ServiceDistribution, SimConfig, SimMode};

#[derive(Parser)]
#[command(
    name = "webload",
    version,
    about = "Emulate asynchronous web traffic with a synchronous load-test rig",
    long_about = "Emulate asynchronous web traffic with a synchronous load-test rig.\n\
                  Principle A: scale think time Z with generator count N so N/Z stays\n\
                  constant. Principle B: verify the emulation by checking that the\n\
                  inter-arrival CoV is close to 1."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for output files.
    #[arg(long, global = true, env = "WEBLOAD_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,

    /// Table output format.
    #[arg(long, global = true, env = "WEBLOAD_FORMAT", value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one queueing model exactly (closed repairman or open M/M/1).
    Solve(SolveArgs),
    /// Sweep the closed solver over N (scaled Z per Principle A, or fixed Z).
    Sweep(SweepArgs),
    /// Run the seeded discrete-event simulator and write an arrival log.
    Simulate(SimulateArgs),
    /// Build a test plan (Principle A scaled-Z, or fixed-N descending-Z).
    Plan(PlanArgs),
    /// Check a plan against the saturation bound and the Q << N condition.
    Validate(ValidateArgs),
    /// Drive HTTP load from a plan and object mix, one log file per run.
    Generate(GenerateArgs),
    /// Run the bundled constant-latency target server.
    Serve(ServeArgs),
    /// Analyze an arrival log: Principle-B CoV and Little's-law metrics.
    Analyze(AnalyzeArgs),
    /// Estimate supportable Internet users N' = lambda (R + Z').
    Internet(InternetArgs),
    /// Meter-ruler demo: uniform marks, Poisson counts, exponential gaps.
    Ruler(RulerArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Service demand S of the SUT queue, seconds.
    #[arg(long)]
    service: f64,
    /// Generator count N (closed model).
    #[arg(long, conflicts_with = "lambda")]
    n: Option<u32>,
    /// Mean think time Z in seconds (closed model).
    #[arg(long, requires = "n")]
    z: Option<f64>,
    /// Open-queue arrival rate in requests/second (open M/M/1).
    #[arg(long, conflicts_with = "n")]
    lambda: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Service demand S, seconds.
    #[arg(long)]
    service: f64,
    /// Hold N/Z at this ratio (Principle A).
    #[arg(long, conflicts_with = "fixed_z")]
    lambda_rat: Option<f64>,
    /// Hold Z fixed at this many seconds instead.
    #[arg(long)]
    fixed_z: Option<f64>,
    /// Generator counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
    /// Write the sweep table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Generator count N (closed mode).
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Mean think time Z, seconds (closed mode).
    #[arg(long, default_value_t = 0.0)]
    z: f64,
    /// Think-time distribution: exponential, uniform, or constant.
    #[arg(long, default_value = "exponential")]
    think: String,
    /// Mean service time S, seconds.
    #[arg(long)]
    service: f64,
    /// Service distribution: exponential or constant.
    #[arg(long, default_value = "exponential")]
    service_dist: String,
    /// closed or open.
    #[arg(long, default_value = "closed")]
    mode: String,
    /// Open-mode arrival rate, requests/second.
    #[arg(long, default_value_t = 0.0)]
    rate: f64,
    /// Simulated seconds.
    #[arg(long)]
    horizon: f64,
    /// Random seed; omitted seeds are drawn and logged for replay.
    #[arg(long)]
    seed: Option<u64>,
    /// Arrival-log output path (default <output-dir>/sim-<seed>.csv).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(subcommand)]
    kind: PlanKind,
}

#[derive(Subcommand)]
enum PlanKind {
    /// Hold N/Z constant while N grows (Principle A).
    ScaledZ {
        /// Target ratio N/Z, requests/second.
        #[arg(long)]
        lambda_rat: f64,
        /// Generator counts, comma separated, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[command(flatten)]
        common: PlanCommon,
    },
    /// Hold N fixed and raise traffic by shrinking Z between runs.
    FixedN {
        /// Generator count for every run.
        #[arg(long)]
        n: u32,
        /// Think times in milliseconds, comma separated, strictly decreasing.
        #[arg(long, value_delimiter = ',', required = true)]
        z_ms: Vec<f64>,
        #[command(flatten)]
        common: PlanCommon,
    },
}

#[derive(Args)]
struct PlanCommon {
    /// Run duration, seconds.
    #[arg(long)]
    duration: f64,
    /// Seconds trimmed from the head of each run during analysis.
    #[arg(long, default_value_t = 0.0)]
    trim_head: f64,
    /// Seconds trimmed from the tail of each run during analysis.
    #[arg(long, default_value_t = 0.0)]
    trim_tail: f64,
    /// Think distribution for the generated workloads.
    #[arg(long, default_value = "exponential")]
    think: String,
    /// 24-hour-clock start (HHMM) for run labels like 1800, 1830, ...
    #[arg(long)]
    start: Option<String>,
    /// Mix file this plan targets (recorded in the plan).
    #[arg(long)]
    mix: Option<PathBuf>,
    /// Plan output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Longest service demand S_max of the SUT, seconds.
    #[arg(long)]
    s_max: f64,
    /// Q/N share above which a run is flagged.
    #[arg(long, default_value_t = planner::DEFAULT_Q_OVER_N_THRESHOLD)]
    q_over_n: f64,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Object-mix file; the bundled default mix is used when omitted.
    #[arg(long)]
    mix: Option<PathBuf>,
    #[arg(long)]
    base_url: String,
    /// Random seed; omitted seeds are drawn and logged for replay.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the per-run log files (default: the output dir).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Abort a run when the failure fraction exceeds this.
    #[arg(long, default_value_t = 0.10)]
    failure_ceiling: f64,
    /// OS worker threads serving the virtual users.
    #[arg(long, default_value_t = 512)]
    worker_cap: usize,
    /// Write the effective mix as JSON here before running.
    #[arg(long)]
    emit_mix: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// Object-mix file defining the paths; bundled default when omitted.
    #[arg(long)]
    mix: Option<PathBuf>,
    /// Flat artificial latency per object, milliseconds.
    #[arg(long, default_value_t = 50)]
    latency_ms: u64,
    /// Per-object overrides, repeatable: --latency name=ms.
    #[arg(long = "latency", value_name = "NAME=MS")]
    latency_overrides: Vec<String>,
    /// Port to bind (0 picks an ephemeral port).
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Response body size in bytes.
    #[arg(long, default_value_t = 1024)]
    body_bytes: usize,
    /// Stop serving after this many seconds (runs until killed if omitted).
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Arrival log (shared CSV format or JMeter JTL CSV).
    #[arg(long)]
    log: PathBuf,
    /// Seconds dropped from the start of the log.
    #[arg(long, default_value_t = 0.0)]
    trim_head: f64,
    /// Seconds dropped from the end of the log.
    #[arg(long, default_value_t = 0.0)]
    trim_tail: f64,
    /// Think time Z in milliseconds for the population check.
    #[arg(long, default_value_t = 0.0)]
    z: f64,
    /// Also report CoV restricted to the first k threads, comma separated.
    #[arg(long, value_delimiter = ',')]
    threads_cov: Vec<usize>,
    /// Also report interval-reconstructed concurrency beside Q = lambda R.
    #[arg(long)]
    concurrency: bool,
}

#[derive(Args)]
struct InternetArgs {
    /// Measured object arrival rate, objects/second.
    #[arg(long)]
    lambda_obj: f64,
    /// Measured mean response time, milliseconds.
    #[arg(long)]
    r_ms: f64,
    /// Mix file for the page/object ratio; bundled default when omitted.
    #[arg(long)]
    mix: Option<PathBuf>,
    /// Nominal Internet think times Z' in milliseconds, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [10_000.0, 20_000.0, 30_000.0, 40_000.0, 50_000.0])]
    z_prime: Vec<f64>,
    /// Row label.
    #[arg(long, default_value = "run")]
    label: String,
}

#[derive(Args)]
struct RulerArgs {
    /// Number of marks to draw.
    #[arg(long, default_value_t = 200)]
    marks: u64,
    /// Ruler length, millimeters.
    #[arg(long, default_value_t = 1000.0)]
    ruler_mm: f64,
    /// Histogram bin width, millimeters.
    #[arg(long, default_value_t = 10.0)]
    bin_mm: f64,
    /// Random seed; omitted seeds are drawn and logged for replay.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep fractional positions instead of rounding to integer mm.
    #[arg(long)]
    no_round: bool,
    /// Print a terminal bar chart of the counts histogram.
    #[arg(long)]
    chart: bool,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

/// Use the given seed or draw one and log it so the run stays replayable.
fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => s,
        None => {
            let s: u64 = rand::random();
            eprintln!("seed: {s} (pass --seed {s} to replay)");
            s
        }
    }
}

fn load_mix(path: &Option<PathBuf>) -> anyhow::Result<ObjectMix> {
    match path {
        Some(p) => ObjectMix::load(p).with_context(|| format!("loading mix {}", p.display())),
        None => Ok(ObjectMix::default_web_mix()),
    }
}

fn metrics_row(format: Format, label: &str, wp: Option<&WorkloadPoint>, m: &webload::core::QueueMetrics) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(m).unwrap(),
        Format::Csv => {
            let (n, z) = wp
                .map(|w| (w.n_generators.to_string(), format!("{}", w.think_time_mean)))
                .unwrap_or_else(|| ("-".into(), "-".into()));
            format!(
                "model,N,Z,lambda,X,R,W,S,Q,R_TT\n{label},{n},{z},{:.4},{:.4},{:.6},{:.6},{:.6},{:.4},{:.6}",
                m.arrival_rate,
                m.throughput,
                m.residence_time,
                m.waiting_time,
                m.service_time,
                m.concurrency,
                m.round_trip_time
            )
        }
    }
}

fn write_or_print(out: &Option<PathBuf>, output_dir: &Path, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let full = if path.is_absolute() {
                path.clone()
            } else {
                output_dir.join(path)
            };
            std::fs::write(&full, content).with_context(|| format!("writing {}", full.display()))?;
            println!("wrote {}", full.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cli.output_dir)
        .with_context(|| format!("creating output dir {}", cli.output_dir.display()))?;
    match cli.command {
        Command::Solve(args) => solve(args, cli.format),
        Command::Sweep(args) => sweep(args, &cli.output_dir),
        Command::Simulate(args) => simulate_cmd(args, cli.format, &cli.output_dir),
        Command::Plan(args) => plan_cmd(args, &cli.output_dir),
        Command::Validate(args) => validate(args),
        Command::Generate(args) => generate(args, &cli.output_dir),
        Command::Serve(args) => serve(args),
        Command::Analyze(args) => analyze(args, cli.format),
        Command::Internet(args) => internet(args, cli.format),
        Command::Ruler(args) => ruler_cmd(args, &cli.output_dir),
    }
}

fn solve(args: SolveArgs, format: Format) -> anyhow::Result<()> {
    match (args.n, args.lambda) {
        (Some(n), None) => {
            let z = args.z.unwrap_or(0.0);
            let wp = WorkloadPoint::new(n, z, ThinkDistribution::Exponential);
            let m = analytic::solve_closed(&analytic::ClosedModel::new(args.service, wp.clone()))?;
            println!("{}", metrics_row(format, "closed", Some(&wp), &m));
        }
        (None, Some(lambda)) => {
            let m = analytic::solve_open(lambda, args.service)?;
            println!("{}", metrics_row(format, "open", None, &m));
        }
        _ => bail!("pass either --n (with --z) for the closed model or --lambda for the open one"),
    }
    Ok(())
}

fn sweep(args: SweepArgs, output_dir: &Path) -> anyhow::Result<()> {
    let result = match (args.lambda_rat, args.fixed_z) {
        (Some(rat), None) => analytic::sweep_scaled_z(args.service, rat, &args.n)?,
        (None, Some(z)) => analytic::sweep_fixed_z(args.service, z, &args.n)?,
        _ => bail!("pass exactly one of --lambda-rat (scaled Z) or --fixed-z"),
    };
    if !result.bounds.is_feasible() {
        eprintln!(
            "note: N/Z reaches {:.3}/s above the saturation bound {:.3}/s",
            result.bounds.lambda_rat, result.bounds.lambda_sat
        );
    }
    write_or_print(&args.out, output_dir, &result.to_csv())
}

fn simulate_cmd(args: SimulateArgs, format: Format, output_dir: &Path) -> anyhow::Result<()> {
    let seed = resolve_seed(args.seed);
    let think: ThinkDistribution = args.think.parse()?;
    let service_dist: ServiceDistribution = args.service_dist.parse()?;
    let config = match args.mode.to_ascii_lowercase().as_str() {
        "closed" => SimConfig::closed(
            WorkloadPoint::new(args.n, args.z, think),
            args.service,
            service_dist,
            args.horizon,
            seed,
        ),
        "open" => SimConfig::open(args.rate, args.service, service_dist, args.horizon, seed),
        other => bail!("unknown mode `{other}` (closed or open)"),
    };
    let result = simulator::simulate(&config)?;
    let log_path = args
        .log
        .unwrap_or_else(|| PathBuf::from(format!("sim-{seed}.csv")));
    let log_path = if log_path.is_absolute() {
        log_path
    } else {
        output_dir.join(log_path)
    };
    loadgen::write_log(&log_path, &result.log.records)?;
    eprintln!(
        "log: {} ({} records, window {:.1}-{:.1} s)",
        log_path.display(),
        result.log.records.len(),
        result.window.start,
        result.window.end
    );
    let wp = match config.mode {
        SimMode::Closed => Some(config.workload.clone()),
        SimMode::Open => None,
    };
    println!("{}", metrics_row(format, "simulated", wp.as_ref(), &result.measured));
    Ok(())
}

fn plan_cmd(args: PlanArgs, output_dir: &Path) -> anyhow::Result<()> {
    let (plan, common) = match args.kind {
        PlanKind::ScaledZ { lambda_rat, n, common } => {
            let opts = plan_options(&common)?;
            (
                planner::plan_scaled_z(
                    lambda_rat,
                    &n,
                    common.duration,
                    (common.trim_head, common.trim_tail),
                    &opts,
                )?,
                common,
            )
        }
        PlanKind::FixedN { n, z_ms, common } => {
            let opts = plan_options(&common)?;
            let z_seconds: Vec<f64> = z_ms.iter().map(|z| z / 1000.0).collect();
            (
                planner::plan_fixed_n(
                    n,
                    &z_seconds,
                    common.duration,
                    (common.trim_head, common.trim_tail),
                    &opts,
                )?,
                common,
            )
        }
    };
    let mut plan = plan;
    plan.target_mix = common.mix.clone();
    let out = if common.out.is_absolute() {
        common.out.clone()
    } else {
        output_dir.join(&common.out)
    };
    plan.save(&out)?;
    println!("wrote {} ({} runs)", out.display(), plan.runs.len());
    Ok(())
}

fn plan_options(common: &PlanCommon) -> anyhow::Result<PlanOptions> {
    Ok(PlanOptions {
        think_distribution: common.think.parse()?,
        schedule_start: common.start.as_deref().map(ScheduleStart::parse).transpose()?,
    })
}

fn validate(args: ValidateArgs) -> anyhow::Result<()> {
    let plan = TestPlan::load(&args.plan)?;
    let warnings = planner::validate_plan_with(&plan, args.s_max, args.q_over_n)?;
    if warnings.is_empty() {
        println!(
            "plan OK: {} runs, all within lambda_sat = {:.3}/s and Q/N <= {:.0}%",
            plan.runs.len(),
            1.0 / args.s_max,
            args.q_over_n * 100.0
        );
    } else {
        for w in &warnings {
            println!("warning: {w}");
        }
    }
    Ok(())
}

fn generate(args: GenerateArgs, output_dir: &Path) -> anyhow::Result<()> {
    let seed = resolve_seed(args.seed);
    let plan = TestPlan::load(&args.plan)?;
    let mix_path = args.mix.clone().or_else(|| plan.target_mix.clone());
    let mix = load_mix(&mix_path)?;
    if let Some(emit) = &args.emit_mix {
        mix.save(emit)?;
        eprintln!("mix: {}", emit.display());
    }
    let out_dir = args.out_dir.unwrap_or_else(|| output_dir.to_path_buf());
    let opts = LoadgenOptions {
        failure_ceiling: args.failure_ceiling,
        worker_cap: args.worker_cap,
        ..LoadgenOptions::default()
    };
    let paths = loadgen::run_test(&plan, &mix, &args.base_url, seed, &out_dir, &opts)?;
    for (run, path) in plan.runs.iter().zip(&paths) {
        let ing = analyzer::ingest(path, run.trim_head, run.trim_tail)?;
        let analysis = analyzer::derive_metrics(&ing.log, &ing.window, run.workload.think_time_mean * 1000.0)?;
        println!(
            "{}: {} | lambda={:.2}/s R={:.1} ms Q={:.2} CoV={:.2} ({:?})",
            run.run_label,
            path.display(),
            analysis.lambda_obj,
            analysis.mean_r_ms,
            analysis.q,
            analysis.interarrival.cov,
            analysis.verdict,
        );
    }
    Ok(())
}

fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let mix = load_mix(&args.mix)?;
    let mut overrides = BTreeMap::new();
    for spec in &args.latency_overrides {
        let (name, ms) = spec
            .split_once('=')
            .with_context(|| format!("--latency needs NAME=MS, got `{spec}`"))?;
        overrides.insert(name.to_string(), ms.parse::<u64>()?);
    }
    let objects = loadgen::targets_from_mix(&mix, args.latency_ms, &overrides);
    let server = loadgen::serve_target_with_body(objects, args.port, args.body_bytes)?;
    println!("serving {} objects at {}", mix.entries.len(), server.base_url());
    println!("metrics at {}/metrics", server.base_url());
    match args.duration {
        Some(secs) => std::thread::sleep(std::time::Duration::from_secs_f64(secs)),
        None => loop {
            std::thread::sleep(std::time::Duration::from_secs(3600));
        },
    }
    server.shutdown();
    Ok(())
}

fn analyze(args: AnalyzeArgs, format: Format) -> anyhow::Result<()> {
    let ing = analyzer::ingest(&args.log, args.trim_head, args.trim_tail)?;
    for w in &ing.warnings {
        eprintln!("row {}: {}", w.row, w.message);
    }
    let analysis = analyzer::derive_metrics(&ing.log, &ing.window, args.z)?;
    match format {
        Format::Json => println!("{}", analysis.to_json()?),
        Format::Csv => {
            println!("{}", analyzer::RunAnalysis::CSV_HEADER);
            println!("{}", analysis.to_csv_row());
        }
    }
    if args.concurrency {
        let q = analyzer::concurrency_from_intervals(&ing.log, &ing.window);
        println!("interval_concurrency,{q:.4}");
    }
    if !args.threads_cov.is_empty() {
        let covs = analyzer::cov_by_thread_count(&ing.log, &args.threads_cov)?;
        println!("k,CoV");
        for (k, cov) in covs {
            println!("{k},{cov:.4}");
        }
    }
    Ok(())
}

fn internet(args: InternetArgs, format: Format) -> anyhow::Result<()> {
    let mix = load_mix(&args.mix)?;
    match format {
        Format::Csv => {
            let rows = vec![(args.label.clone(), args.lambda_obj, args.r_ms)];
            print!("{}", analyzer::internet_matrix_csv(&rows, &mix, &args.z_prime)?);
        }
        Format::Json => {
            let lambda_pages = analyzer::pages_rate(args.lambda_obj, &mix)?;
            let estimates: Vec<_> = args
                .z_prime
                .iter()
                .map(|zp| analyzer::estimate_internet_users(lambda_pages, args.r_ms, *zp))
                .collect::<webload::Result<_>>()?;
            println!("{}", serde_json::to_string_pretty(&estimates)?);
        }
    }
    Ok(())
}

fn ruler_cmd(args: RulerArgs, output_dir: &Path) -> anyhow::Result<()> {
    let seed = resolve_seed(args.seed);
    let config = RulerConfig {
        n_marks: args.marks,
        ruler_mm: args.ruler_mm,
        bin_mm: args.bin_mm,
        seed,
        round_to_mm: !args.no_round,
    };
    let result = ruler_experiment(&config)?;
    let counts_path = output_dir.join(format!("ruler-counts-{seed}.csv"));
    let gaps_path = output_dir.join(format!("ruler-gaps-{seed}.csv"));
    std::fs::write(&counts_path, result.counts_csv())?;
    std::fs::write(&gaps_path, result.gaps_csv())?;
    println!(
        "marks={} mean/bin={:.2} var/bin={:.2} | gap mean={:.2} mm sd={:.2} mm CoV={:.3}",
        args.marks,
        result.count_mean,
        result.count_variance,
        result.gap_stats.mean,
        result.gap_stats.std_dev,
        result.gap_stats.cov
    );
    println!("wrote {} and {}", counts_path.display(), gaps_path.display());
    if args.chart {
        print!("{}", result.counts_bar_chart());
    }
    Ok(())
}
