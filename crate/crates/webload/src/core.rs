//! Shared domain types, seeded random variates, and summary statistics.
//!
//! All internal times are seconds as `f64`; log files use integer
//! milliseconds to match the JMeter-style external format.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Think-time distribution drawn by each generator between requests.
///
/// `Uniform` samples on `[0, 2Z]` so the sample mean converges to `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThinkDistribution {
    Exponential,
    Uniform,
    Constant,
}

impl std::fmt::Display for ThinkDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThinkDistribution::Exponential => write!(f, "exponential"),
            ThinkDistribution::Uniform => write!(f, "uniform"),
            ThinkDistribution::Constant => write!(f, "constant"),
        }
    }
}

impl std::str::FromStr for ThinkDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(ThinkDistribution::Exponential),
            "uniform" => Ok(ThinkDistribution::Uniform),
            "constant" | "const" => Ok(ThinkDistribution::Constant),
            other => Err(Error::InvalidParameter(format!(
                "unknown think distribution `{other}`"
            ))),
        }
    }
}

/// One driver-side configuration: N generators with mean think time Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadPoint {
    /// Number of load generators (N).
    pub n_generators: u32,
    /// Mean think time Z in seconds; 0 means no think delay.
    pub think_time_mean: f64,
    pub think_distribution: ThinkDistribution,
    pub label: String,
}

impl WorkloadPoint {
    pub fn new(n_generators: u32, think_time_mean: f64, think_distribution: ThinkDistribution) -> Self {
        WorkloadPoint {
            n_generators,
            think_time_mean,
            think_distribution,
            label: String::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_generators < 1 {
            return Err(Error::InvalidParameter("n_generators must be >= 1".into()));
        }
        if !(self.think_time_mean >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "think_time_mean must be >= 0, got {}",
                self.think_time_mean
            )));
        }
        Ok(())
    }

    /// The soft-bottleneck ratio N/Z in requests/second.
    pub fn lambda_rat(&self) -> f64 {
        f64::from(self.n_generators) / self.think_time_mean
    }
}

/// Steady-state queueing metrics for one workload point.
///
/// Invariants for analytic results: `residence_time = waiting_time +
/// service_time`, `concurrency = arrival_rate * residence_time`, and
/// `round_trip_time = residence_time + Z` of the owning workload point.
/// In steady state `arrival_rate == throughput`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueMetrics {
    /// Arrival rate into the SUT, requests/second.
    pub arrival_rate: f64,
    /// Completion rate, requests/second.
    pub throughput: f64,
    /// Mean time in the SUT from arrival to departure, seconds.
    pub residence_time: f64,
    /// Mean time waiting before service, seconds.
    pub waiting_time: f64,
    /// Mean service time, seconds.
    pub service_time: f64,
    /// Mean number of requests resident in the SUT (waiting + in service).
    pub concurrency: f64,
    /// Full generator cycle time: residence plus think, seconds.
    pub round_trip_time: f64,
}

/// Hard and soft throughput bounds for a workload point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// Longest service demand in the SUT, seconds.
    pub s_max: f64,
    /// Hard bottleneck 1/S_max, requests/second.
    pub lambda_sat: f64,
    /// Soft bottleneck N/Z chosen by the driver, requests/second.
    pub lambda_rat: f64,
}

impl Bounds {
    /// A Principle-A plan is feasible when the chosen ratio does not exceed
    /// the hard bottleneck (equality allowed).
    pub fn is_feasible(&self) -> bool {
        self.lambda_rat <= self.lambda_sat
    }
}

/// A measurement interval with its arrival and completion counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementWindow {
    /// Window start, seconds.
    pub start: f64,
    /// Window end, seconds.
    pub end: f64,
    /// Arrivals counted in the window (A).
    pub arrival_count: u64,
    /// Completions counted in the window (C).
    pub completion_count: u64,
}

impl MeasurementWindow {
    pub fn new(start: f64, end: f64, arrival_count: u64, completion_count: u64) -> Result<Self> {
        if !(end > start) {
            return Err(Error::InvalidParameter(format!(
                "window duration must be > 0 (start={start}, end={end})"
            )));
        }
        Ok(MeasurementWindow {
            start,
            end,
            arrival_count,
            completion_count,
        })
    }

    /// T = end - start, seconds.
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// Arrival rate A/T.
    pub fn arrival_rate(&self) -> f64 {
        self.arrival_count as f64 / self.duration()
    }

    /// Steady state requires arrivals to closely match completions:
    /// |A - C| / max(A, 1) below `tolerance`.
    pub fn is_steady_state(&self, tolerance: f64) -> bool {
        let a = self.arrival_count as f64;
        let c = self.completion_count as f64;
        (a - c).abs() / a.max(1.0) < tolerance
    }
}

/// Mean, standard deviation, and CoV of inter-arrival gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterArrivalStats {
    pub sample_count: usize,
    /// Mean gap, in the unit of the input gaps.
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator).
    pub std_dev: f64,
    /// Coefficient of variation std_dev/mean; 1 for exponential gaps.
    pub cov: f64,
}

/// Deterministic generator seeded from a single `u64`.
///
/// Identical seeds produce identical variate streams on every platform.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream for a worker or generator entity.
///
/// Uses the cipher's native stream parameter, so substreams never overlap
/// and remain reproducible from `(seed, id)`.
pub fn seeded_stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id.wrapping_add(1));
    rng
}

/// Draw one think-time variate in seconds.
///
/// Exponential has rate 1/mean, uniform is on `[0, 2*mean]`, constant
/// returns exactly `mean`. A mean of 0 always yields 0.
pub fn draw_think_time(
    dist: ThinkDistribution,
    mean: f64,
    rng: &mut (impl RngExt + ?Sized),
) -> Result<f64> {
    if !(mean >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "think-time mean must be >= 0, got {mean}"
        )));
    }
    if mean == 0.0 {
        return Ok(0.0);
    }
    Ok(match dist {
        ThinkDistribution::Exponential => {
            // Inverse CDF on u in [0,1): ln(1-u) is finite and <= 0.
            let u: f64 = rng.random();
            -mean * (1.0 - u).ln()
        }
        ThinkDistribution::Uniform => rng.random_range(0.0..2.0 * mean),
        ThinkDistribution::Constant => mean,
    })
}

/// Reference sampler: geometric number of Bernoulli(p) trials until the
/// first success (support 1, 2, ...). Mean 1/p, CoV sqrt(1-p).
///
/// Nothing in the toolkit depends on it; it exists alongside the binomial
/// sampler so the discrete glossary distributions are runnable.
pub fn draw_geometric(p: f64, rng: &mut (impl RngExt + ?Sized)) -> Result<u64> {
    if !(0.0 < p && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be in (0, 1], got {p}")));
    }
    let mut k = 1;
    while rng.random::<f64>() >= p {
        k += 1;
    }
    Ok(k)
}

/// Reference sampler: binomial count of successes in n Bernoulli(p)
/// trials. Mean np, variance npq.
pub fn draw_binomial(n: u64, p: f64, rng: &mut (impl RngExt + ?Sized)) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p must be in [0, 1], got {p}")));
    }
    Ok((0..n).filter(|_| rng.random::<f64>() < p).count() as u64)
}

/// Summary statistics of an ordered list of inter-arrival gaps.
///
/// The standard deviation uses the n-1 denominator; a single gap yields
/// sd = 0. All-zero gaps have no defined CoV.
pub fn summarize_gaps(gaps: &[f64]) -> Result<InterArrivalStats> {
    if gaps.is_empty() {
        return Err(Error::InsufficientData("no gaps to summarize".into()));
    }
    if let Some(bad) = gaps.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::InvalidParameter(format!("negative gap {bad}")));
    }
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(Error::UndefinedCov);
    }
    let std_dev = if gaps.len() < 2 {
        0.0
    } else {
        let ss = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>();
        (ss / (n - 1.0)).sqrt()
    };
    Ok(InterArrivalStats {
        sample_count: gaps.len(),
        mean,
        std_dev,
        cov: std_dev / mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_think_time_is_exact() {
        let mut rng = seeded_rng(1);
        let v = draw_think_time(ThinkDistribution::Constant, 6.25, &mut rng).unwrap();
        assert_eq!(v, 6.25);
    }

    #[test]
    fn zero_mean_always_zero() {
        let mut rng = seeded_rng(1);
        for dist in [
            ThinkDistribution::Exponential,
            ThinkDistribution::Uniform,
            ThinkDistribution::Constant,
        ] {
            assert_eq!(draw_think_time(dist, 0.0, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn negative_mean_rejected() {
        let mut rng = seeded_rng(1);
        assert!(matches!(
            draw_think_time(ThinkDistribution::Exponential, -1.0, &mut rng),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn uniform_bounded_and_mean_converges() {
        let mut rng = seeded_rng(42);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        for _ in 0..n {
            let v = draw_think_time(ThinkDistribution::Uniform, 6.25, &mut rng).unwrap();
            assert!((0.0..12.5).contains(&v));
            sum += v;
        }
        let mean = sum / n as f64;
        assert!(
            (mean - 6.25).abs() / 6.25 < 0.01,
            "sample mean {mean} off by more than 1%"
        );
    }

    #[test]
    fn uniform_variance_matches_reference() {
        // Var of uniform on [0, 2Z] is (2Z)^2 / 12.
        let z = 6.25;
        let mut rng = seeded_rng(9);
        let n = 1_000_000usize;
        let draws: Vec<f64> = (0..n)
            .map(|_| draw_think_time(ThinkDistribution::Uniform, z, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        let expected = (2.0 * z) * (2.0 * z) / 12.0;
        assert!(
            (var - expected).abs() / expected < 0.02,
            "variance {var} vs {expected}"
        );
    }

    #[test]
    fn exponential_mean_sd_and_cov_converge() {
        let mut rng = seeded_rng(7);
        let mean_target = 10.0;
        let n = 1_000_000usize;
        let draws: Vec<f64> = (0..n)
            .map(|_| draw_think_time(ThinkDistribution::Exponential, mean_target, &mut rng).unwrap())
            .collect();
        assert!(draws.iter().all(|v| *v >= 0.0));
        let stats = summarize_gaps(&draws).unwrap();
        assert!((stats.mean - mean_target).abs() / mean_target < 0.01);
        assert!((stats.std_dev - mean_target).abs() / mean_target < 0.01);
        assert!((stats.cov - 1.0).abs() < 0.01, "cov {}", stats.cov);
    }

    #[test]
    fn identical_seeds_identical_streams() {
        let mut a = seeded_rng(123);
        let mut b = seeded_rng(123);
        for _ in 0..100 {
            let va = draw_think_time(ThinkDistribution::Exponential, 3.0, &mut a).unwrap();
            let vb = draw_think_time(ThinkDistribution::Exponential, 3.0, &mut b).unwrap();
            assert_eq!(va.to_bits(), vb.to_bits());
        }
    }

    #[test]
    fn substreams_are_independent_of_each_other() {
        use rand::Rng as _;
        let mut s0 = seeded_stream(5, 0);
        let mut s1 = seeded_stream(5, 1);
        let a: u64 = s0.next_u64();
        let b: u64 = s1.next_u64();
        assert_ne!(a, b);
        // Re-derivation reproduces the same substream.
        let mut s0b = seeded_stream(5, 0);
        assert_eq!(s0b.next_u64(), a);
    }

    #[test]
    fn identical_gaps_have_zero_cov() {
        let s = summarize_gaps(&[5.0, 5.0, 5.0, 5.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.std_dev, 0.0);
        assert_eq!(s.cov, 0.0);
    }

    #[test]
    fn case_study_row_statistics_give_unit_cov() {
        // Two-point list with mean 31.52 and sample sd 31.59: the CoV matches
        // the 1830 test run (1.00 at table precision).
        let d = 31.59 / 2.0_f64.sqrt();
        let gaps = [31.52 - d, 31.52 + d];
        let s = summarize_gaps(&gaps).unwrap();
        assert_relative_eq!(s.mean, 31.52, max_relative = 1e-12);
        assert_relative_eq!(s.std_dev, 31.59, max_relative = 1e-12);
        assert!((s.cov - 1.00).abs() < 0.005);
    }

    #[test]
    fn empty_and_all_zero_gap_errors() {
        assert!(matches!(
            summarize_gaps(&[]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            summarize_gaps(&[0.0, 0.0, 0.0]),
            Err(Error::UndefinedCov)
        ));
    }

    #[test]
    fn single_gap_is_degenerate_but_defined() {
        let s = summarize_gaps(&[2.5]).unwrap();
        assert_eq!(s.sample_count, 1);
        assert_eq!(s.std_dev, 0.0);
        assert_eq!(s.cov, 0.0);
    }

    #[test]
    fn exponential_sampler_large_sample_cov_spec_example() {
        // 1e5 exponential(rate 1) variates: CoV within 0.02 of 1.
        let mut rng = seeded_rng(2024);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| draw_think_time(ThinkDistribution::Exponential, 1.0, &mut rng).unwrap())
            .collect();
        let s = summarize_gaps(&draws).unwrap();
        assert!((s.cov - 1.0).abs() < 0.02, "cov {}", s.cov);
    }

    #[test]
    fn reference_discrete_samplers_match_their_moments() {
        let mut rng = seeded_rng(77);
        let n = 200_000;
        let geo: Vec<f64> = (0..n)
            .map(|_| draw_geometric(0.25, &mut rng).unwrap() as f64)
            .collect();
        let gm = geo.iter().sum::<f64>() / n as f64;
        assert!((gm - 4.0).abs() / 4.0 < 0.02, "geometric mean {gm}");

        let bins: Vec<f64> = (0..20_000)
            .map(|_| draw_binomial(30, 0.3, &mut rng).unwrap() as f64)
            .collect();
        let bm = bins.iter().sum::<f64>() / bins.len() as f64;
        let bv = bins.iter().map(|x| (x - bm) * (x - bm)).sum::<f64>() / (bins.len() as f64 - 1.0);
        assert!((bm - 9.0).abs() / 9.0 < 0.02, "binomial mean {bm}");
        assert!((bv - 6.3).abs() / 6.3 < 0.06, "binomial variance {bv}");
    }

    #[test]
    fn window_steady_state_flag() {
        let w = MeasurementWindow::new(0.0, 100.0, 1000, 995).unwrap();
        assert!(w.is_steady_state(0.02));
        assert!(!w.is_steady_state(0.001));
        assert_eq!(w.duration(), 100.0);
        assert!(MeasurementWindow::new(5.0, 5.0, 1, 1).is_err());
    }

    #[test]
    fn bounds_feasibility() {
        let b = Bounds {
            s_max: 0.05,
            lambda_sat: 20.0,
            lambda_rat: 20.0,
        };
        assert!(b.is_feasible());
        let b2 = Bounds {
            lambda_rat: 20.01,
            ..b
        };
        assert!(!b2.is_feasible());
    }
}
