//! The meter-ruler demonstration: uniform random marks on a ruler produce
//! Poisson-distributed counts per bin and exponentially distributed gaps
//! between adjacent marks — the two faces of a Poisson process.

use rand::RngExt;
use serde::Serialize;

use crate::core::{seeded_rng, summarize_gaps, InterArrivalStats};
use crate::{Error, Result};

/// Experiment parameters.
#[derive(Debug, Clone, Copy)]
pub struct RulerConfig {
    /// Number of marks to draw.
    pub n_marks: u64,
    /// Ruler length in millimeters.
    pub ruler_mm: f64,
    /// Histogram bin width in millimeters; must divide the ruler length.
    pub bin_mm: f64,
    pub seed: u64,
    /// Round positions to integer millimeters before differencing,
    /// reproducing the spreadsheet's zero-mm ties. Leave off to study the
    /// continuous-gap limit at large mark counts.
    pub round_to_mm: bool,
}

impl RulerConfig {
    pub fn new(n_marks: u64, ruler_mm: f64, bin_mm: f64, seed: u64) -> Self {
        RulerConfig {
            n_marks,
            ruler_mm,
            bin_mm,
            seed,
            round_to_mm: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_marks < 2 {
            return Err(Error::InvalidParameter("need at least 2 marks".into()));
        }
        if !(self.ruler_mm > 0.0) || !(self.bin_mm > 0.0) {
            return Err(Error::InvalidParameter("lengths must be > 0".into()));
        }
        let bins = self.ruler_mm / self.bin_mm;
        if (bins - bins.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "ruler length {} is not divisible by bin width {}",
                self.ruler_mm, self.bin_mm
            )));
        }
        Ok(())
    }
}

/// Everything the demo reports.
#[derive(Debug, Clone, Serialize)]
pub struct RulerResult {
    /// Sorted mark positions (rounded to integer mm when configured).
    pub marks: Vec<f64>,
    /// Marks per bin over the ruler.
    pub counts_per_bin: Vec<u64>,
    /// Differences between adjacent sorted marks.
    pub gaps: Vec<f64>,
    /// Mean marks per bin (exactly n_marks / bins).
    pub count_mean: f64,
    /// Sample variance of the bin counts (n-1 denominator).
    pub count_variance: f64,
    pub gap_stats: InterArrivalStats,
    /// Poisson PMF ordinates at alpha = count_mean, for k = 0..=max count.
    pub theoretical_poisson: Vec<(u64, f64)>,
    /// Exponential probability mass per 1 mm gap bin at the observed gap
    /// rate, for each observed integer gap value.
    pub theoretical_exponential: Vec<(f64, f64)>,
}

fn poisson_pmf(k: u64, alpha: f64) -> f64 {
    // alpha^k e^-alpha / k!, computed in log space for stability.
    let mut log_p = -alpha + k as f64 * alpha.ln();
    for i in 1..=k {
        log_p -= (i as f64).ln();
    }
    log_p.exp()
}

/// Draw marks, bin them, and difference them.
pub fn ruler_experiment(config: &RulerConfig) -> Result<RulerResult> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let mut marks: Vec<f64> = (0..config.n_marks)
        .map(|_| rng.random_range(0.0..config.ruler_mm))
        .collect();
    marks.sort_by(f64::total_cmp);

    let n_bins = (config.ruler_mm / config.bin_mm).round() as usize;
    let mut counts = vec![0u64; n_bins];
    for &m in &marks {
        let b = ((m / config.bin_mm) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let count_mean = config.n_marks as f64 / n_bins as f64;
    let count_variance = {
        let n = n_bins as f64;
        counts
            .iter()
            .map(|&c| {
                let d = c as f64 - count_mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0)
    };

    let positions: Vec<f64> = if config.round_to_mm {
        marks.iter().map(|m| m.round()).collect()
    } else {
        marks.clone()
    };
    let gaps: Vec<f64> = positions.windows(2).map(|w| w[1] - w[0]).collect();
    let gap_stats = summarize_gaps(&gaps)?;

    let max_count = counts.iter().copied().max().unwrap_or(0);
    let alpha = count_mean;
    let theoretical_poisson = (0..=max_count).map(|k| (k, poisson_pmf(k, alpha))).collect();

    // Exponential ordinates at the observed rate 1/mean-gap, expressed as
    // probability mass per 1 mm so they sit on the gap histogram.
    let rate = 1.0 / gap_stats.mean;
    let mut gap_values: Vec<f64> = gaps.clone();
    gap_values.sort_by(f64::total_cmp);
    gap_values.dedup();
    let theoretical_exponential = gap_values
        .iter()
        .map(|&g| (g, rate * (-rate * g).exp()))
        .collect();

    Ok(RulerResult {
        marks: positions,
        counts_per_bin: counts,
        gaps,
        count_mean,
        count_variance,
        gap_stats,
        theoretical_poisson,
        theoretical_exponential,
    })
}

impl RulerResult {
    /// Counts histogram plus Poisson ordinates as CSV.
    pub fn counts_csv(&self) -> String {
        let mut freq = std::collections::BTreeMap::new();
        for &c in &self.counts_per_bin {
            *freq.entry(c).or_insert(0u64) += 1;
        }
        let mut out = String::from("marks_per_bin,bins_observed,poisson_expected\n");
        let n_bins = self.counts_per_bin.len() as f64;
        for (k, pmf) in &self.theoretical_poisson {
            out.push_str(&format!(
                "{k},{},{:.4}\n",
                freq.get(k).copied().unwrap_or(0),
                pmf * n_bins
            ));
        }
        out
    }

    /// Gap histogram plus exponential ordinates as CSV.
    pub fn gaps_csv(&self) -> String {
        let mut freq = std::collections::BTreeMap::new();
        for &g in &self.gaps {
            *freq.entry(g as u64).or_insert(0u64) += 1;
        }
        let mut out = String::from("gap_mm,gaps_observed,exponential_expected\n");
        let n_gaps = self.gaps.len() as f64;
        for (g, pdf) in &self.theoretical_exponential {
            out.push_str(&format!(
                "{g},{},{:.4}\n",
                freq.get(&(*g as u64)).copied().unwrap_or(0),
                pdf * n_gaps
            ));
        }
        out
    }

    /// Simple terminal bar chart of the counts histogram.
    pub fn counts_bar_chart(&self) -> String {
        let mut freq = std::collections::BTreeMap::new();
        for &c in &self.counts_per_bin {
            *freq.entry(c).or_insert(0u64) += 1;
        }
        let mut out = String::new();
        for (k, n) in freq {
            out.push_str(&format!("{k:>3} | {}\n", "#".repeat(n as usize)));
        }
        out
    }
}
