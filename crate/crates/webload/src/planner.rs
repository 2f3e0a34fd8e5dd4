//! Principle-A-conformant test plans: scaled-Z schedules holding N/Z
//! constant, or fixed-N schedules that raise traffic by shrinking Z.
//!
//! Plan files store Z in milliseconds to match the case-study tables;
//! in memory everything is seconds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{solve_closed, ClosedModel};
use crate::core::{ThinkDistribution, WorkloadPoint};
use crate::{Error, Result};

/// One scheduled run of a workload point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub workload: WorkloadPoint,
    /// Total run duration, seconds.
    pub duration: f64,
    /// Seconds dropped from the start of the run during analysis.
    pub trim_head: f64,
    /// Seconds dropped from the end of the run during analysis.
    pub trim_tail: f64,
    pub run_label: String,
}

impl RunSpec {
    fn validate(&self) -> Result<()> {
        self.workload.validate()?;
        if !(self.duration > self.trim_head + self.trim_tail) {
            return Err(Error::InvalidParameter(format!(
                "run `{}`: duration {} must exceed trim_head {} + trim_tail {}",
                self.run_label, self.duration, self.trim_head, self.trim_tail
            )));
        }
        Ok(())
    }

    /// Seconds left for analysis after trimming.
    pub fn measured_window(&self) -> f64 {
        self.duration - self.trim_head - self.trim_tail
    }
}

/// An ordered list of runs, executable by the simulator or the load
/// generator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TestPlan {
    pub runs: Vec<RunSpec>,
    /// Path of the object-mix file this plan targets, if any.
    pub target_mix: Option<PathBuf>,
    /// Set when the plan was built under Principle A (constant N/Z).
    pub declared_lambda_rat: Option<f64>,
}

/// Knobs shared by the plan constructors.
#[derive(Debug, Clone)]
pub struct PlanOptions {
    pub think_distribution: ThinkDistribution,
    /// When set, run labels are 24-hour-clock start times ("1800", "1830",
    /// ...), spaced by the run duration rounded up to a half hour.
    pub schedule_start: Option<ScheduleStart>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            think_distribution: ThinkDistribution::Exponential,
            schedule_start: None,
        }
    }
}

/// Wall-clock start of the first run, for 24-hour-clock labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleStart {
    pub hour: u32,
    pub minute: u32,
}

impl ScheduleStart {
    pub fn new(hour: u32, minute: u32) -> Result<Self> {
        if hour > 23 || minute > 59 {
            return Err(Error::InvalidParameter(format!(
                "invalid schedule start {hour:02}{minute:02}"
            )));
        }
        Ok(ScheduleStart { hour, minute })
    }

    /// Parse "1800" or "18:00".
    pub fn parse(s: &str) -> Result<Self> {
        let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
        if digits.len() != 4 {
            return Err(Error::InvalidParameter(format!(
                "schedule start must be HHMM, got `{s}`"
            )));
        }
        let hour = digits[..2].parse().unwrap();
        let minute = digits[2..].parse().unwrap();
        ScheduleStart::new(hour, minute)
    }
}

fn run_labels(count: usize, duration: f64, start: Option<ScheduleStart>) -> Vec<String> {
    match start {
        Some(s) => {
            // Consecutive starts land on the next half-hour boundary.
            let slot_min = ((duration / 60.0) / 30.0).ceil().max(1.0) as u32 * 30;
            (0..count as u32)
                .map(|i| {
                    let total = (s.hour * 60 + s.minute + i * slot_min) % (24 * 60);
                    format!("{:02}{:02}", total / 60, total % 60)
                })
                .collect()
        }
        None => (1..=count).map(|i| format!("run-{i:02}")).collect(),
    }
}

/// Build a Principle-A plan: one run per N with Z = N/lambda_rat.
pub fn plan_scaled_z(
    lambda_rat: f64,
    n_values: &[u32],
    run_duration: f64,
    trims: (f64, f64),
    opts: &PlanOptions,
) -> Result<TestPlan> {
    if !(lambda_rat > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda_rat must be > 0, got {lambda_rat}"
        )));
    }
    if n_values.is_empty() || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "n_values must be nonempty and strictly increasing".into(),
        ));
    }
    let labels = run_labels(n_values.len(), run_duration, opts.schedule_start);
    let runs = n_values
        .iter()
        .zip(labels)
        .map(|(&n, label)| {
            let run = RunSpec {
                workload: WorkloadPoint::new(n, f64::from(n) / lambda_rat, opts.think_distribution)
                    .with_label(format!("N{n}")),
                duration: run_duration,
                trim_head: trims.0,
                trim_tail: trims.1,
                run_label: label,
            };
            run.validate().map(|()| run)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TestPlan {
        runs,
        target_mix: None,
        declared_lambda_rat: Some(lambda_rat),
    })
}

/// Build a fixed-N plan: one run per Z, traffic raised by shrinking Z.
pub fn plan_fixed_n(
    n: u32,
    z_values: &[f64],
    run_duration: f64,
    trims: (f64, f64),
    opts: &PlanOptions,
) -> Result<TestPlan> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if z_values.is_empty() || z_values.windows(2).any(|w| w[0] <= w[1]) || z_values.iter().any(|z| !(*z > 0.0)) {
        return Err(Error::InvalidParameter(
            "z_values must be nonempty, strictly decreasing, and > 0".into(),
        ));
    }
    let labels = run_labels(z_values.len(), run_duration, opts.schedule_start);
    let runs = z_values
        .iter()
        .zip(labels)
        .map(|(&z, label)| {
            let run = RunSpec {
                workload: WorkloadPoint::new(n, z, opts.think_distribution)
                    .with_label(format!("Z{}ms", (z * 1000.0).round())),
                duration: run_duration,
                trim_head: trims.0,
                trim_tail: trims.1,
                run_label: label,
            };
            run.validate().map(|()| run)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TestPlan {
        runs,
        target_mix: None,
        declared_lambda_rat: None,
    })
}

/// Advisory findings from `validate_plan`. Validation never blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanWarning {
    /// N/Z exceeds the hard bottleneck 1/S_max (Principle A infeasible).
    RatioExceedsSaturation {
        run_label: String,
        lambda_rat: f64,
        lambda_sat: f64,
    },
    /// Predicted concurrency is not small relative to N, so request
    /// synchronization will distort the emulation.
    ConcurrencyShare {
        run_label: String,
        concurrency: f64,
        n: u32,
        share: f64,
        threshold: f64,
    },
}

impl std::fmt::Display for PlanWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanWarning::RatioExceedsSaturation {
                run_label,
                lambda_rat,
                lambda_sat,
            } => write!(
                f,
                "run {run_label}: N/Z = {lambda_rat:.3}/s exceeds the saturation bound {lambda_sat:.3}/s"
            ),
            PlanWarning::ConcurrencyShare {
                run_label,
                concurrency,
                n,
                share,
                threshold,
            } => write!(
                f,
                "run {run_label}: predicted Q = {concurrency:.2} is {:.0}% of N = {n} (above the {:.0}% Q<<N guideline)",
                share * 100.0,
                threshold * 100.0
            ),
        }
    }
}

/// Default Q/N share above which a run is flagged.
pub const DEFAULT_Q_OVER_N_THRESHOLD: f64 = 0.1;

/// Check a plan against the saturation bound and the Q << N condition,
/// predicting Q with the closed solver at service demand `s_max`.
pub fn validate_plan(plan: &TestPlan, s_max: f64) -> Result<Vec<PlanWarning>> {
    validate_plan_with(plan, s_max, DEFAULT_Q_OVER_N_THRESHOLD)
}

pub fn validate_plan_with(
    plan: &TestPlan,
    s_max: f64,
    q_over_n_threshold: f64,
) -> Result<Vec<PlanWarning>> {
    if !(s_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "s_max must be > 0, got {s_max}"
        )));
    }
    let lambda_sat = 1.0 / s_max;
    let mut warnings = Vec::new();
    for run in &plan.runs {
        let wp = &run.workload;
        if wp.think_time_mean > 0.0 {
            let ratio = wp.lambda_rat();
            if ratio > lambda_sat * (1.0 + 1e-12) {
                warnings.push(PlanWarning::RatioExceedsSaturation {
                    run_label: run.run_label.clone(),
                    lambda_rat: ratio,
                    lambda_sat,
                });
            }
        }
        let metrics = solve_closed(&ClosedModel::new(s_max, wp.clone()))?;
        let share = metrics.concurrency / f64::from(wp.n_generators);
        if share > q_over_n_threshold {
            warnings.push(PlanWarning::ConcurrencyShare {
                run_label: run.run_label.clone(),
                concurrency: metrics.concurrency,
                n: wp.n_generators,
                share,
                threshold: q_over_n_threshold,
            });
        }
    }
    Ok(warnings)
}

// --- plan file format (Z in milliseconds) ---
//
// The file stores Z in milliseconds to match case-study conventions. The
// second/millisecond conversion is exact for ms-resolution values; for
// arbitrary binary fractions it can move the last bit, so round-trip
// equality is guaranteed at millisecond resolution.

#[derive(Serialize, Deserialize)]
struct PlanFile {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    declared_lambda_rat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    target_mix: Option<PathBuf>,
    runs: Vec<RunFile>,
}

#[derive(Serialize, Deserialize)]
struct RunFile {
    run_label: String,
    label: String,
    n_generators: u32,
    think_time_ms: f64,
    think_distribution: ThinkDistribution,
    duration_s: f64,
    trim_head_s: f64,
    trim_tail_s: f64,
}

impl TestPlan {
    pub fn to_json(&self) -> Result<String> {
        let file = PlanFile {
            declared_lambda_rat: self.declared_lambda_rat,
            target_mix: self.target_mix.clone(),
            runs: self
                .runs
                .iter()
                .map(|r| RunFile {
                    run_label: r.run_label.clone(),
                    label: r.workload.label.clone(),
                    n_generators: r.workload.n_generators,
                    think_time_ms: r.workload.think_time_mean * 1000.0,
                    think_distribution: r.workload.think_distribution,
                    duration_s: r.duration,
                    trim_head_s: r.trim_head,
                    trim_tail_s: r.trim_tail,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: PlanFile = serde_json::from_str(json)?;
        let runs = file
            .runs
            .into_iter()
            .map(|r| {
                let run = RunSpec {
                    workload: WorkloadPoint {
                        n_generators: r.n_generators,
                        think_time_mean: r.think_time_ms / 1000.0,
                        think_distribution: r.think_distribution,
                        label: r.label,
                    },
                    duration: r.duration_s,
                    trim_head: r.trim_head_s,
                    trim_tail: r.trim_tail_s,
                    run_label: r.run_label,
                };
                run.validate().map(|()| run)
            })
            .collect::<Result<Vec<_>>>()?;
        let plan = TestPlan {
            runs,
            target_mix: file.target_mix,
            declared_lambda_rat: file.declared_lambda_rat,
        };
        if let Some(rat) = plan.declared_lambda_rat {
            for run in &plan.runs {
                let ratio = run.workload.lambda_rat();
                if ((ratio - rat) / rat).abs() >= 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "run `{}`: N/Z = {ratio} deviates from declared lambda_rat = {rat}",
                        run.run_label
                    )));
                }
            }
        }
        Ok(plan)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_json()?).map_err(|e| Error::io(e, path.as_ref()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(e, path.as_ref()))?;
        TestPlan::from_json(&text)
    }
}
