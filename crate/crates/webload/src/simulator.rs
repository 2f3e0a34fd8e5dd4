//! Seeded discrete-event simulation of the closed (generator-loop) and open
//! (Poisson-arrival) single-queue systems.
//!
//! Logs are shaped exactly like load-generator output, so the analyzer can
//! be exercised without a network. Everything is deterministic given the
//! config (including the seed): event ties at equal timestamps are broken
//! by generator id ascending, then by schedule order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::analyzer::ArrivalLog;
use crate::core::{draw_think_time, seeded_rng, MeasurementWindow, QueueMetrics, WorkloadPoint};
use crate::loadgen::RunRecord;
use crate::{Error, Result};

/// SUT service-time distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceDistribution {
    Exponential,
    Constant,
}

impl std::str::FromStr for ServiceDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(ServiceDistribution::Exponential),
            "constant" | "const" => Ok(ServiceDistribution::Constant),
            other => Err(Error::InvalidParameter(format!(
                "unknown service distribution `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// N generators loop think -> arrive -> (wait + service) -> think.
    Closed,
    /// Poisson arrivals at `open_arrival_rate` into the FIFO server.
    Open,
}

/// Full simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub workload: WorkloadPoint,
    pub service_time_mean: f64,
    pub service_distribution: ServiceDistribution,
    pub mode: SimMode,
    /// Used in open mode only.
    pub open_arrival_rate: f64,
    /// Simulated seconds.
    pub horizon: f64,
    pub seed: u64,
    /// Head fraction of the horizon excluded from `measured` (default 5%).
    pub trim_head_fraction: f64,
}

impl SimConfig {
    pub fn closed(
        workload: WorkloadPoint,
        service_time_mean: f64,
        service_distribution: ServiceDistribution,
        horizon: f64,
        seed: u64,
    ) -> Self {
        SimConfig {
            workload,
            service_time_mean,
            service_distribution,
            mode: SimMode::Closed,
            open_arrival_rate: 0.0,
            horizon,
            seed,
            trim_head_fraction: 0.05,
        }
    }

    pub fn open(
        arrival_rate: f64,
        service_time_mean: f64,
        service_distribution: ServiceDistribution,
        horizon: f64,
        seed: u64,
    ) -> Self {
        SimConfig {
            workload: WorkloadPoint::new(1, 0.0, crate::core::ThinkDistribution::Constant),
            service_time_mean,
            service_distribution,
            mode: SimMode::Open,
            open_arrival_rate: arrival_rate,
            horizon,
            seed,
            trim_head_fraction: 0.05,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        if !(self.service_time_mean > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "service time must be > 0, got {}",
                self.service_time_mean
            )));
        }
        if !(0.0..1.0).contains(&self.trim_head_fraction) {
            return Err(Error::InvalidParameter(format!(
                "trim fraction must be in [0, 1), got {}",
                self.trim_head_fraction
            )));
        }
        match self.mode {
            SimMode::Closed => self.workload.validate(),
            SimMode::Open => {
                if !(self.open_arrival_rate > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "open arrival rate must be > 0, got {}",
                        self.open_arrival_rate
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Simulation output: the log, trimmed-window metrics, the window itself,
/// and full-horizon metrics for comparison.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub log: ArrivalLog,
    /// Metrics over the post-warmup window.
    pub measured: QueueMetrics,
    pub window: MeasurementWindow,
    /// Metrics over the whole horizon.
    pub full: QueueMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Arrival,
    Departure,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    gen: u32,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq && self.gen == other.gen
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.gen.cmp(&other.gen))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// Accumulates a time-weighted queue-length integral and completed-request
/// sums over one interval.
#[derive(Default)]
struct WindowAccum {
    start: f64,
    end: f64,
    arrivals: u64,
    completions: u64,
    area: f64,
    sum_resident: f64,
    sum_wait: f64,
    sum_service: f64,
    finished: u64,
}

impl WindowAccum {
    fn new(start: f64, end: f64) -> Self {
        WindowAccum {
            start,
            end,
            ..Default::default()
        }
    }

    fn integrate(&mut self, from: f64, to: f64, level: u64) {
        let a = from.max(self.start);
        let b = to.min(self.end);
        if b > a {
            self.area += (b - a) * level as f64;
        }
    }

    fn contains(&self, t: f64) -> bool {
        (self.start..=self.end).contains(&t)
    }
}

/// Run one simulation.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let horizon = config.horizon;
    let n_gens = match config.mode {
        SimMode::Closed => config.workload.n_generators,
        SimMode::Open => 1,
    };
    let think = config.workload.think_distribution;
    let z = config.workload.think_time_mean;

    let draw_service = {
        let mean = config.service_time_mean;
        let dist = config.service_distribution;
        move |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
            match dist {
                ServiceDistribution::Constant => mean,
                ServiceDistribution::Exponential => {
                    let u: f64 = rand::RngExt::random(rng);
                    -mean * (1.0 - u).ln()
                }
            }
        }
    };

    let mut heap: BinaryHeap<Reverse<Event>> = BinaryHeap::new();
    let mut seq = 0u64;
    let push = |heap: &mut BinaryHeap<Reverse<Event>>, seq: &mut u64, time, gen, kind| {
        *seq += 1;
        heap.push(Reverse(Event {
            time,
            gen,
            seq: *seq,
            kind,
        }));
    };

    match config.mode {
        SimMode::Closed => {
            for gen in 0..n_gens {
                let t = draw_think_time(think, z, &mut rng)?;
                push(&mut heap, &mut seq, t, gen, EventKind::Arrival);
            }
        }
        SimMode::Open => {
            let u: f64 = rand::RngExt::random(&mut rng);
            let t = -(1.0 - u).ln() / config.open_arrival_rate;
            push(&mut heap, &mut seq, t, 0, EventKind::Arrival);
        }
    }

    // Per in-flight request bookkeeping.
    struct InFlight {
        arrival: f64,
        service_start: f64,
    }
    let mut fifo: VecDeque<(u32, f64)> = VecDeque::new(); // (gen, arrival time)
    let mut serving: Option<(u32, InFlight)> = None;
    let mut in_sut: u64 = 0;
    let mut last_t = 0.0f64;
    let mut total_arrivals: u64 = 0;

    let mut win = WindowAccum::new(config.trim_head_fraction * horizon, horizon);
    let mut full = WindowAccum::new(0.0, horizon);
    let mut records: Vec<RunRecord> = Vec::new();

    while let Some(Reverse(ev)) = heap.pop() {
        let te = ev.time.min(horizon);
        win.integrate(last_t, te, in_sut);
        full.integrate(last_t, te, in_sut);
        last_t = te;
        if ev.time > horizon {
            break;
        }
        match ev.kind {
            EventKind::Arrival => {
                total_arrivals += 1;
                if win.contains(ev.time) {
                    win.arrivals += 1;
                }
                full.arrivals += 1;
                in_sut += 1;
                if serving.is_none() {
                    let svc = draw_service(&mut rng);
                    serving = Some((
                        ev.gen,
                        InFlight {
                            arrival: ev.time,
                            service_start: ev.time,
                        },
                    ));
                    push(&mut heap, &mut seq, ev.time + svc, ev.gen, EventKind::Departure);
                } else {
                    fifo.push_back((ev.gen, ev.time));
                }
                if let SimMode::Open = config.mode {
                    // Schedule the next Poisson arrival.
                    let u: f64 = rand::RngExt::random(&mut rng);
                    let dt = -(1.0 - u).ln() / config.open_arrival_rate;
                    push(&mut heap, &mut seq, ev.time + dt, 0, EventKind::Arrival);
                }
            }
            EventKind::Departure => {
                let (gen, req) = serving.take().expect("departure without request in service");
                debug_assert_eq!(gen, ev.gen);
                in_sut -= 1;
                let elapsed = ev.time - req.arrival;
                let wait = req.service_start - req.arrival;
                let service = elapsed - wait;
                for acc in [&mut win, &mut full] {
                    if acc.contains(ev.time) {
                        acc.completions += 1;
                    }
                    if acc.contains(req.arrival) {
                        acc.sum_resident += elapsed;
                        acc.sum_wait += wait;
                        acc.sum_service += service;
                        acc.finished += 1;
                    }
                }
                records.push(RunRecord {
                    timestamp_ms: (req.arrival * 1000.0).round() as i64,
                    label: "request".into(),
                    elapsed_ms: (elapsed * 1000.0).round() as u64,
                    thread_name: match config.mode {
                        SimMode::Closed => format!("gen-{:04}", gen),
                        SimMode::Open => "open".into(),
                    },
                    success: true,
                });
                if let Some((next_gen, arrival)) = fifo.pop_front() {
                    let svc = draw_service(&mut rng);
                    serving = Some((
                        next_gen,
                        InFlight {
                            arrival,
                            service_start: ev.time,
                        },
                    ));
                    push(&mut heap, &mut seq, ev.time + svc, next_gen, EventKind::Departure);
                }
                if let SimMode::Closed = config.mode {
                    let delay = draw_think_time(think, z, &mut rng)?;
                    push(&mut heap, &mut seq, ev.time + delay, gen, EventKind::Arrival);
                }
            }
        }
    }
    // Integrate the tail out to the horizon.
    win.integrate(last_t, horizon, in_sut);
    full.integrate(last_t, horizon, in_sut);

    if total_arrivals < 2 {
        return Err(Error::InsufficientData(format!(
            "horizon {horizon} s produced only {total_arrivals} arrival(s)"
        )));
    }

    let metrics = |acc: &WindowAccum| -> QueueMetrics {
        let t = acc.end - acc.start;
        let finished = acc.finished.max(1) as f64;
        let r = acc.sum_resident / finished;
        QueueMetrics {
            arrival_rate: acc.arrivals as f64 / t,
            throughput: acc.completions as f64 / t,
            residence_time: r,
            waiting_time: acc.sum_wait / finished,
            service_time: acc.sum_service / finished,
            concurrency: acc.area / t,
            round_trip_time: r + z,
        }
    };
    let measured = metrics(&win);
    let full_metrics = metrics(&full);
    let window = MeasurementWindow::new(win.start, win.end, win.arrivals, win.completions)?;

    Ok(SimResult {
        log: ArrivalLog::from_records(records, format!("sim-{}", config.seed)),
        measured,
        window,
        full: full_metrics,
    })
}

/// Z-scaling policy for a load-line sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZPolicy {
    /// Keep the template's Z for every N (conventional virtual users).
    FixedZ,
    /// Scale Z = N / lambda_rat with the template's ratio (Principle A).
    ScaledZ,
}

/// One simulated operating point of a load line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadLinePoint {
    pub n: u32,
    pub z: f64,
    /// Time-averaged concurrency in the SUT.
    pub concurrency: f64,
    /// Measured arrival rate.
    pub arrival_rate: f64,
}

/// Simulate one point per N under the given Z policy.
pub fn load_line(template: &SimConfig, n_values: &[u32], policy: ZPolicy) -> Result<Vec<LoadLinePoint>> {
    if n_values.is_empty() {
        return Err(Error::InvalidParameter("n_values is empty".into()));
    }
    let lambda_rat = template.workload.lambda_rat();
    if let ZPolicy::ScaledZ = policy {
        if !(lambda_rat > 0.0) || !lambda_rat.is_finite() {
            return Err(Error::InvalidParameter(
                "scaled-z policy needs a template with Z > 0 to define N/Z".into(),
            ));
        }
    }
    let mut out = Vec::with_capacity(n_values.len());
    for (i, &n) in n_values.iter().enumerate() {
        let z = match policy {
            ZPolicy::FixedZ => template.workload.think_time_mean,
            ZPolicy::ScaledZ => f64::from(n) / lambda_rat,
        };
        let mut config = template.clone();
        config.workload.n_generators = n;
        config.workload.think_time_mean = z;
        config.seed = template.seed.wrapping_add(i as u64);
        let result = simulate(&config)?;
        out.push(LoadLinePoint {
            n,
            z,
            concurrency: result.measured.concurrency,
            arrival_rate: result.measured.arrival_rate,
        });
    }
    Ok(out)
}
