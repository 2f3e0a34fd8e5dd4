//! Arrival-log analysis: Principle-B statistics and the Little's-law
//! metric derivations, including object-to-page conversion and
//! Internet-user estimation.
//!
//! Inputs are the shared CSV log format; JMeter JTL CSV parses too because
//! columns are matched by header name and extras are ignored. Gaps are
//! computed on request-send timestamps — the driver-side observable closest
//! to the arrival instant at the SUT boundary. Failed requests count as
//! arrivals (they arrived) but are excluded from response-time means.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::core::{summarize_gaps, InterArrivalStats, MeasurementWindow};
use crate::loadgen::{ObjectMix, RunRecord};
use crate::{Error, Result};

/// An ingested log: records sorted by timestamp (ties by thread name).
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalLog {
    pub records: Vec<RunRecord>,
    pub source_label: String,
}

impl ArrivalLog {
    pub fn from_records(mut records: Vec<RunRecord>, source_label: impl Into<String>) -> Self {
        records.sort_by(|a, b| {
            a.timestamp_ms
                .cmp(&b.timestamp_ms)
                .then_with(|| a.thread_name.cmp(&b.thread_name))
        });
        ArrivalLog {
            records,
            source_label: source_label.into(),
        }
    }

    /// Successive send-timestamp differences in milliseconds.
    pub fn gaps_ms(&self) -> Vec<f64> {
        self.records
            .windows(2)
            .map(|w| (w[1].timestamp_ms - w[0].timestamp_ms) as f64)
            .collect()
    }

    pub fn thread_names(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.records.iter().map(|r| r.thread_name.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }
}

/// A row the parser could not use, kept for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowWarning {
    /// 1-based data row number (the header is row 0).
    pub row: usize,
    pub message: String,
}

/// Result of ingesting a log file.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub log: ArrivalLog,
    pub window: MeasurementWindow,
    pub warnings: Vec<RowWarning>,
}

/// Fraction of bad rows above which the whole file is rejected.
const BAD_ROW_LIMIT: f64 = 0.01;

/// Read a log file, drop records outside
/// `[first_ts + trim_head, last_ts - trim_tail]`, and sort globally.
pub fn ingest(path: impl AsRef<Path>, trim_head: f64, trim_tail: f64) -> Result<Ingested> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(e, path))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));

    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::InvalidParameter(format!("{}: missing column `{name}`", path.display())))
    };
    let c_ts = col("timeStamp")?;
    let c_label = col("label")?;
    let c_elapsed = col("elapsed")?;
    let c_thread = col("threadName")?;
    let c_success = col("success")?;

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut total = 0usize;
    for (i, row) in reader.records().enumerate() {
        total += 1;
        let rownum = i + 1;
        let mut warn = |message: String| warnings.push(RowWarning { row: rownum, message });
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                warn(e.to_string());
                continue;
            }
        };
        // Numeric fields tolerate padding; text fields keep their bytes.
        let (Some(ts), Some(label), Some(elapsed), Some(thread), Some(success)) = (
            row.get(c_ts).map(str::trim),
            row.get(c_label),
            row.get(c_elapsed).map(str::trim),
            row.get(c_thread),
            row.get(c_success).map(str::trim),
        ) else {
            warn("short row".into());
            continue;
        };
        let Ok(timestamp_ms) = ts.parse::<i64>() else {
            warn(format!("bad timeStamp `{ts}`"));
            continue;
        };
        let Ok(elapsed_ms) = elapsed.parse::<u64>() else {
            warn(format!("bad elapsed `{elapsed}`"));
            continue;
        };
        let success = match success.to_ascii_lowercase().as_str() {
            "true" => true,
            "false" => false,
            other => {
                warn(format!("bad success flag `{other}`"));
                continue;
            }
        };
        records.push(RunRecord {
            timestamp_ms,
            label: label.to_string(),
            elapsed_ms,
            thread_name: thread.to_string(),
            success,
        });
    }

    if total > 0 && (warnings.len() as f64) / (total as f64) > BAD_ROW_LIMIT {
        return Err(Error::LogRejected {
            path: path.to_path_buf(),
            bad: warnings.len(),
            total,
            limit: BAD_ROW_LIMIT * 100.0,
        });
    }
    if records.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{}: no usable records",
            path.display()
        )));
    }

    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    ingest_records(records, label, trim_head, trim_tail).map(|mut ingested| {
        ingested.warnings = warnings;
        ingested
    })
}

/// Trim and window already-parsed records (used for simulator output).
pub fn ingest_records(
    records: Vec<RunRecord>,
    source_label: impl Into<String>,
    trim_head: f64,
    trim_tail: f64,
) -> Result<Ingested> {
    if records.is_empty() {
        return Err(Error::InsufficientData("empty record set".into()));
    }
    let first = records.iter().map(|r| r.timestamp_ms).min().unwrap();
    let last = records.iter().map(|r| r.timestamp_ms).max().unwrap();
    let w0 = first + (trim_head * 1000.0).round() as i64;
    let w1 = last - (trim_tail * 1000.0).round() as i64;
    if w1 <= w0 {
        return Err(Error::InsufficientData(format!(
            "trims ({trim_head} s, {trim_tail} s) leave no window in a log spanning {} s",
            (last - first) as f64 / 1000.0
        )));
    }
    let kept: Vec<RunRecord> = records
        .into_iter()
        .filter(|r| r.timestamp_ms >= w0 && r.timestamp_ms <= w1)
        .collect();
    if kept.is_empty() {
        return Err(Error::InsufficientData("no records left after trimming".into()));
    }
    let arrivals = kept.len() as u64;
    let completions = kept
        .iter()
        .filter(|r| r.timestamp_ms + r.elapsed_ms as i64 <= w1)
        .count() as u64;
    let window = MeasurementWindow::new(
        w0 as f64 / 1000.0,
        w1 as f64 / 1000.0,
        arrivals,
        completions,
    )?;
    Ok(Ingested {
        log: ArrivalLog::from_records(kept, source_label),
        window,
        warnings: Vec::new(),
    })
}

/// CoV verdict bands; the defaults are deliberately stricter than the
/// widest values the case study accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovBands {
    pub hypo_below: f64,
    pub hyper_above: f64,
}

impl Default for CovBands {
    fn default() -> Self {
        CovBands {
            hypo_below: 0.9,
            hyper_above: 1.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CovVerdict {
    /// CoV close to 1: the arrival stream looks Poisson.
    Pass,
    /// CoV below the band: hypo-exponential, closed-system damping visible.
    WarnHypo,
    /// CoV above the band: hyper-exponential, burstier than Poisson.
    WarnHyper,
}

/// Principle-B check result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipleB {
    /// Gap statistics in milliseconds.
    pub stats: InterArrivalStats,
    pub verdict: CovVerdict,
}

/// Inter-arrival CoV of the sorted log with the default verdict bands.
pub fn principle_b(log: &ArrivalLog) -> Result<PrincipleB> {
    principle_b_with_bands(log, CovBands::default())
}

pub fn principle_b_with_bands(log: &ArrivalLog, bands: CovBands) -> Result<PrincipleB> {
    if log.records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need >= 2 records, have {}",
            log.records.len()
        )));
    }
    let stats = summarize_gaps(&log.gaps_ms())?;
    let verdict = if stats.cov < bands.hypo_below {
        CovVerdict::WarnHypo
    } else if stats.cov > bands.hyper_above {
        CovVerdict::WarnHyper
    } else {
        CovVerdict::Pass
    };
    Ok(PrincipleB { stats, verdict })
}

/// Per-run derived metrics in case-study units (rates per second, times in
/// milliseconds).
#[derive(Debug, Clone, Serialize)]
pub struct RunAnalysis {
    pub source_label: String,
    pub window: MeasurementWindow,
    pub thread_count: usize,
    /// Object arrival rate over the window, objects/second.
    pub lambda_obj: f64,
    /// Mean response time of successful requests, milliseconds.
    pub mean_r_ms: f64,
    /// Percentile reported in `r_percentile_ms` (default 0.95).
    pub percentile: f64,
    /// Response time at `percentile`, milliseconds.
    pub r_percentile_ms: f64,
    /// Little's-law concurrency Q = lambda * R.
    pub q: f64,
    /// Population check N = lambda * (R + Z).
    pub n_check: f64,
    /// Think time used for the population check, milliseconds.
    pub z_ms: f64,
    /// Gap statistics in milliseconds.
    pub interarrival: InterArrivalStats,
    pub verdict: CovVerdict,
}

/// The pure arithmetic behind the derived columns: (Q, N) from a
/// (lambda, R, Z) triple with lambda in /s and times in ms.
pub fn derive_from_rates(lambda_obj: f64, mean_r_ms: f64, z_ms: f64) -> (f64, f64) {
    let q = lambda_obj * mean_r_ms / 1000.0;
    let n = lambda_obj * (mean_r_ms + z_ms) / 1000.0;
    (q, n)
}

/// Derive the full metric set for one windowed log, reporting the 95th
/// percentile alongside the mean.
pub fn derive_metrics(log: &ArrivalLog, window: &MeasurementWindow, z_ms: f64) -> Result<RunAnalysis> {
    derive_metrics_at(log, window, z_ms, 0.95)
}

/// Same as `derive_metrics` with a caller-chosen response-time percentile.
pub fn derive_metrics_at(
    log: &ArrivalLog,
    window: &MeasurementWindow,
    z_ms: f64,
    percentile: f64,
) -> Result<RunAnalysis> {
    if !(z_ms >= 0.0) {
        return Err(Error::InvalidParameter(format!("z_ms must be >= 0, got {z_ms}")));
    }
    if !(0.0..=1.0).contains(&percentile) {
        return Err(Error::InvalidParameter(format!(
            "percentile must be in [0, 1], got {percentile}"
        )));
    }
    if !(window.duration() > 0.0) {
        return Err(Error::InvalidParameter("window duration is zero".into()));
    }
    let lambda_obj = window.arrival_count as f64 / window.duration();
    let mut ok_elapsed: Vec<f64> = log
        .records
        .iter()
        .filter(|r| r.success)
        .map(|r| r.elapsed_ms as f64)
        .collect();
    if ok_elapsed.is_empty() {
        return Err(Error::InsufficientData("no successful requests in window".into()));
    }
    let mean_r_ms = ok_elapsed.iter().sum::<f64>() / ok_elapsed.len() as f64;
    ok_elapsed.sort_by(f64::total_cmp);
    let r_percentile_ms = percentile_sorted(&ok_elapsed, percentile);
    let (q, n_check) = derive_from_rates(lambda_obj, mean_r_ms, z_ms);
    let pb = principle_b(log)?;
    Ok(RunAnalysis {
        source_label: log.source_label.clone(),
        window: *window,
        thread_count: log.thread_names().len(),
        lambda_obj,
        mean_r_ms,
        percentile,
        r_percentile_ms,
        q,
        n_check,
        z_ms,
        interarrival: pb.stats,
        verdict: pb.verdict,
    })
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (p * (sorted.len() - 1) as f64).round() as usize;
    sorted[rank.min(sorted.len() - 1)]
}

/// Time-averaged in-flight request count reconstructed from the log's
/// request intervals over the window. Independent of `derive_from_rates`
/// only through boundary effects, which is exactly what it is for.
pub fn concurrency_from_intervals(log: &ArrivalLog, window: &MeasurementWindow) -> f64 {
    let w0 = window.start * 1000.0;
    let w1 = window.end * 1000.0;
    let mut area_ms = 0.0;
    for r in &log.records {
        let a = r.timestamp_ms as f64;
        let b = a + r.elapsed_ms as f64;
        let overlap = (b.min(w1) - a.max(w0)).max(0.0);
        area_ms += overlap;
    }
    area_ms / (w1 - w0)
}

/// Convert an object rate into a page rate via the mix consolidation
/// ratio (9:15 for the default mix).
pub fn pages_rate(lambda_obj: f64, mix: &ObjectMix) -> Result<f64> {
    Ok(lambda_obj * mix.page_object_ratio()?)
}

/// Estimated real-user population behind a measured page stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InternetEstimate {
    pub lambda_pages: f64,
    /// Pages resident in the SUT: lambda_pages * R.
    pub q_pages: f64,
    /// Nominal Internet think time, milliseconds.
    pub z_prime_ms: f64,
    /// Mean Internet users N' = lambda_pages * (R + Z').
    pub n_prime: f64,
}

/// N' = lambda (R + Z'), the open-population analog of the closed
/// population balance.
pub fn estimate_internet_users(lambda_pages: f64, mean_r_ms: f64, z_prime_ms: f64) -> Result<InternetEstimate> {
    if !(z_prime_ms >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "z_prime_ms must be >= 0, got {z_prime_ms}"
        )));
    }
    Ok(InternetEstimate {
        lambda_pages,
        q_pages: lambda_pages * mean_r_ms / 1000.0,
        z_prime_ms,
        n_prime: lambda_pages * (mean_r_ms + z_prime_ms) / 1000.0,
    })
}

/// CoV of the gaps restricted to the first k thread names
/// (lexicographic), for each requested k.
pub fn cov_by_thread_count(log: &ArrivalLog, subset_sizes: &[usize]) -> Result<Vec<(usize, f64)>> {
    let threads = log.thread_names();
    let mut out = Vec::with_capacity(subset_sizes.len());
    for &k in subset_sizes {
        if k == 0 || k > threads.len() {
            return Err(Error::InvalidParameter(format!(
                "subset size {k} outside 1..={} available threads",
                threads.len()
            )));
        }
        let chosen: BTreeSet<&str> = threads[..k].iter().map(String::as_str).collect();
        let ts: Vec<i64> = log
            .records
            .iter()
            .filter(|r| chosen.contains(r.thread_name.as_str()))
            .map(|r| r.timestamp_ms)
            .collect();
        if ts.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "only {} records from the first {k} threads",
                ts.len()
            )));
        }
        let gaps: Vec<f64> = ts.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
        out.push((k, summarize_gaps(&gaps)?.cov));
    }
    Ok(out)
}

impl RunAnalysis {
    /// Header for `to_csv_row`, matching the case-study table layout.
    pub const CSV_HEADER: &'static str = "Run,N,Z,lambda,R,Q,N_obj,Mean,StdDev,CoV";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:.0},{:.4},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2}",
            self.source_label,
            self.thread_count,
            self.z_ms,
            self.lambda_obj,
            self.mean_r_ms,
            self.q,
            self.n_check,
            self.interarrival.mean,
            self.interarrival.std_dev,
            self.interarrival.cov,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Render the Internet-user matrix: one row per (label, lambda_obj, R),
/// one N' column per Z' value. Layout matches the case-study table.
pub fn internet_matrix_csv(
    rows: &[(String, f64, f64)],
    mix: &ObjectMix,
    z_primes_ms: &[f64],
) -> Result<String> {
    let mut out = String::from("Run,lambda_obj,R_ms,Q_obj,lambda_pgs,Q_pgs");
    for zp in z_primes_ms {
        out.push_str(&format!(",N'@{}", zp));
    }
    out.push('\n');
    for (label, lambda_obj, r_ms) in rows {
        let (q_obj, _) = derive_from_rates(*lambda_obj, *r_ms, 0.0);
        let lp = pages_rate(*lambda_obj, mix)?;
        out.push_str(&format!(
            "{label},{lambda_obj:.4},{r_ms:.2},{q_obj:.2},{lp:.4},{:.2}",
            lp * r_ms / 1000.0
        ));
        for zp in z_primes_ms {
            let est = estimate_internet_users(lp, *r_ms, *zp)?;
            out.push_str(&format!(",{:.2}", est.n_prime));
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rec(ts: i64, thread: &str, elapsed: u64) -> RunRecord {
        RunRecord {
            timestamp_ms: ts,
            label: "obj".into(),
            elapsed_ms: elapsed,
            thread_name: thread.into(),
            success: true,
        }
    }

    #[test]
    fn records_sort_globally_with_thread_tiebreak() {
        let log = ArrivalLog::from_records(
            vec![rec(30, "t2", 1), rec(10, "t1", 1), rec(20, "t3", 1), rec(20, "t1", 1)],
            "x",
        );
        let ts: Vec<i64> = log.records.iter().map(|r| r.timestamp_ms).collect();
        assert_eq!(ts, vec![10, 20, 20, 30]);
        assert_eq!(log.records[1].thread_name, "t1");
        assert!(log.gaps_ms().iter().all(|g| *g >= 0.0));
    }

    #[test]
    fn derive_from_rates_reproduces_case_rows() {
        // (lambda, R, Z) -> (Q, N) for the lowest and highest case-study runs.
        let (q, n) = derive_from_rates(15.91, 53.17, 12500.0);
        assert!((q - 0.85).abs() < 0.01);
        assert!((n - 199.72).abs() < 0.05);
        let (q, n) = derive_from_rates(159.16, 253.38, 1000.0);
        assert!((q - 40.33).abs() < 0.01);
        assert!((n - 199.49).abs() < 0.05);
        let (q, n) = derive_from_rates(10.0, 500.0, 0.0);
        assert_relative_eq!(q, n);
    }

    #[test]
    fn internet_estimates_match_case_rows() {
        let est = estimate_internet_users(95.4960, 253.38, 30.0e3).unwrap();
        assert!((est.n_prime - 2889.08).abs() < 0.05, "{}", est.n_prime);
        let est = estimate_internet_users(36.1560, 59.64, 40.0e3).unwrap();
        assert!((est.n_prime - 1448.40).abs() < 0.05, "{}", est.n_prime);
        let est = estimate_internet_users(10.0, 250.0, 0.0).unwrap();
        assert_relative_eq!(est.n_prime, est.q_pages);
    }

    #[test]
    fn pages_rate_applies_mix_ratio() {
        let mix = ObjectMix::default_web_mix();
        assert!((pages_rate(159.16, &mix).unwrap() - 95.4960).abs() < 1e-9);
        assert!((pages_rate(15.91, &mix).unwrap() - 9.5460).abs() < 1e-9);
    }

    #[test]
    fn principle_b_verdicts() {
        // Periodic arrivals: CoV 0, hypo.
        let periodic: Vec<RunRecord> = (0..100).map(|i| rec(i * 50, "t", 1)).collect();
        let pb = principle_b(&ArrivalLog::from_records(periodic, "p")).unwrap();
        assert_eq!(pb.stats.cov, 0.0);
        assert_eq!(pb.verdict, CovVerdict::WarnHypo);

        // Heavy-tailed gaps (one huge gap per hundred): CoV far above 1.1.
        let mut t = 0i64;
        let bursty: Vec<RunRecord> = (0..500)
            .map(|i| {
                t += if i % 100 == 99 { 10_000 } else { 1 };
                rec(t, "t", 1)
            })
            .collect();
        let pb = principle_b(&ArrivalLog::from_records(bursty, "b")).unwrap();
        assert!(pb.stats.cov > 1.1, "cov {}", pb.stats.cov);
        assert_eq!(pb.verdict, CovVerdict::WarnHyper);
    }

    #[test]
    fn ingest_trims_and_windows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let records: Vec<RunRecord> = (0..100).map(|i| rec(i * 1000, "t", 10)).collect();
        crate::loadgen::write_log(&path, &records).unwrap();
        let ing = ingest(&path, 10.0, 20.0).unwrap();
        // Window is [10 s, 79 s] of the original [0 s, 99 s] span.
        assert_relative_eq!(ing.window.duration(), 69.0, max_relative = 1e-9);
        assert_eq!(ing.window.arrival_count, 70);
        assert!(ing.warnings.is_empty());
        assert_eq!(ing.log.source_label, "run");

        let full = ingest(&path, 0.0, 0.0).unwrap();
        assert_eq!(full.log.records.len(), 100);
    }

    #[test]
    fn ingest_tolerates_jmeter_superset_and_flags_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("jtl.csv");
        let mut text = String::from(
            "timeStamp,elapsed,label,responseCode,responseMessage,threadName,dataType,success,bytes\n",
        );
        for i in 0..300 {
            text.push_str(&format!(
                "{},{},obj,200,OK,Thread Group 1-{},text,true,123\n",
                1000 + i * 100,
                25,
                1 + (i % 3)
            ));
        }
        text.push_str("garbage,not,a,row,at,all,x,y,z\n");
        std::fs::write(&path, text).unwrap();
        let ing = ingest(&path, 0.0, 0.0).unwrap();
        assert_eq!(ing.warnings.len(), 1);
        assert_eq!(ing.log.records.len(), 300);
        assert_eq!(ing.log.thread_names().len(), 3);
    }

    #[test]
    fn ingest_rejects_mostly_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "timeStamp,label,elapsed,threadName,success\nnope,x,bad,t,true\n1000,x,5,t,true\n",
        )
        .unwrap();
        assert!(matches!(
            ingest(&path, 0.0, 0.0),
            Err(Error::LogRejected { .. })
        ));
    }

    #[test]
    fn derive_metrics_excludes_failures_from_response_mean_only() {
        let mut records: Vec<RunRecord> = (0..50).map(|i| rec(i * 100, "t", 20)).collect();
        records.push(RunRecord {
            timestamp_ms: 5_000,
            label: "obj".into(),
            elapsed_ms: 99_999,
            thread_name: "t".into(),
            success: false,
        });
        let ing = ingest_records(records, "x", 0.0, 0.0).unwrap();
        let ra = derive_metrics(&ing.log, &ing.window, 1000.0).unwrap();
        // 51 arrivals counted, but the failed request's elapsed is excluded.
        assert_eq!(ing.window.arrival_count, 51);
        assert_relative_eq!(ra.mean_r_ms, 20.0, max_relative = 1e-12);
    }

    #[test]
    fn concurrency_from_intervals_matches_little() {
        // Back-to-back 100 ms requests from 4 threads: Q should be ~4.
        let mut records = Vec::new();
        for th in 0..4 {
            for i in 0..200 {
                records.push(rec(i * 100, &format!("t{th}"), 100));
            }
        }
        let ing = ingest_records(records, "x", 1.0, 1.0).unwrap();
        let q = concurrency_from_intervals(&ing.log, &ing.window);
        assert!((q - 4.0).abs() < 0.1, "q {q}");
        let ra = derive_metrics(&ing.log, &ing.window, 0.0).unwrap();
        assert!((ra.q - q).abs() / q < 0.05);
    }

    #[test]
    fn thread_subsets_validate_bounds() {
        let records: Vec<RunRecord> = (0..60)
            .map(|i| rec(i * 10, &format!("t{}", i % 3), 1))
            .collect();
        let log = ArrivalLog::from_records(records, "x");
        let covs = cov_by_thread_count(&log, &[1, 3]).unwrap();
        assert_eq!(covs.len(), 2);
        assert!(cov_by_thread_count(&log, &[4]).is_err());
        assert!(cov_by_thread_count(&log, &[0]).is_err());
    }

    #[test]
    fn merged_logs_analyze_like_concatenation() {
        let a: Vec<RunRecord> = (0..50).map(|i| rec(i * 37, "a", 5)).collect();
        let b: Vec<RunRecord> = (0..50).map(|i| rec(13 + i * 41, "b", 5)).collect();
        let mut concat = a.clone();
        concat.extend(b.clone());
        let mut merged = b;
        merged.extend(a);
        let la = ArrivalLog::from_records(concat, "x");
        let lb = ArrivalLog::from_records(merged, "x");
        assert_eq!(la.records, lb.records);
        let sa = principle_b(&la).unwrap().stats;
        let sb = principle_b(&lb).unwrap().stats;
        assert_eq!(sa, sb);
    }

    #[test]
    fn csv_row_layout() {
        let records: Vec<RunRecord> = (0..100).map(|i| rec(i * 63, "t", 52)).collect();
        let ing = ingest_records(records, "1830", 0.0, 0.0).unwrap();
        let ra = derive_metrics(&ing.log, &ing.window, 6250.0).unwrap();
        let row = ra.to_csv_row();
        assert!(row.starts_with("1830,1,6250,"));
        assert_eq!(row.split(',').count(), RunAnalysis::CSV_HEADER.split(',').count());
    }

    #[test]
    fn internet_matrix_layout() {
        let mix = ObjectMix::default_web_mix();
        let rows = vec![("2100".to_string(), 159.16, 253.38)];
        let csv = internet_matrix_csv(&rows, &mix, &[10_000.0, 30_000.0]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "Run,lambda_obj,R_ms,Q_obj,lambda_pgs,Q_pgs,N'@10000,N'@30000");
        let row = lines.next().unwrap();
        assert!(row.contains("95.4960"));
        assert!(row.contains("2889.08"));
    }
}
