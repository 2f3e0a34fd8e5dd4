//! Property tests for order-invariance, monotonicity, and file round-trips.

use proptest::prelude::*;

use webload::analytic::{solve_closed, ClosedModel};
use webload::core::{summarize_gaps, ThinkDistribution, WorkloadPoint};
use webload::loadgen::RunRecord;
use webload::planner::{plan_scaled_z, PlanOptions, TestPlan};

proptest! {
    #[test]
    fn gap_statistics_ignore_order(
        mut gaps in proptest::collection::vec(0.001f64..1e4, 2..200),
    ) {
        let a = summarize_gaps(&gaps).unwrap();
        gaps.reverse();
        let b = summarize_gaps(&gaps).unwrap();
        prop_assert!((a.mean - b.mean).abs() <= 1e-9 * a.mean.abs());
        prop_assert!((a.std_dev - b.std_dev).abs() <= 1e-9 * a.std_dev.abs().max(1e-12));
        prop_assert_eq!(a.sample_count, b.sample_count);
    }

    #[test]
    fn concatenation_equals_merge(
        xs in proptest::collection::vec(0.001f64..1e3, 1..80),
        ys in proptest::collection::vec(0.001f64..1e3, 1..80),
    ) {
        let mut concat = xs.clone();
        concat.extend(ys.iter().copied());
        let mut interleaved = Vec::new();
        let mut xi = xs.iter();
        let mut yi = ys.iter();
        loop {
            match (xi.next(), yi.next()) {
                (None, None) => break,
                (x, y) => {
                    if let Some(&v) = x { interleaved.push(v); }
                    if let Some(&v) = y { interleaved.push(v); }
                }
            }
        }
        let a = summarize_gaps(&concat).unwrap();
        let b = summarize_gaps(&interleaved).unwrap();
        prop_assert!((a.mean - b.mean).abs() <= 1e-9 * a.mean);
        prop_assert!((a.std_dev - b.std_dev).abs() <= 1e-9 * a.std_dev.max(1e-12));
    }

    #[test]
    fn closed_solver_is_monotone_and_bounded(
        s in 0.005f64..0.5,
        z in 0.5f64..60.0,
        n_step in 1u32..200,
    ) {
        let mut prev = 0.0;
        for i in 1..=6u32 {
            let n = i * n_step;
            let m = solve_closed(&ClosedModel::new(
                s,
                WorkloadPoint::new(n, z, ThinkDistribution::Exponential),
            )).unwrap();
            prop_assert!(m.arrival_rate >= prev - 1e-12);
            let cap = (1.0 / s).min(f64::from(n) / z);
            prop_assert!(m.arrival_rate <= cap + 1e-9);
            // Conservation: N = Q + lambda * Z.
            let back = m.concurrency + m.arrival_rate * z;
            prop_assert!((back - f64::from(n)).abs() <= 1e-9 * f64::from(n));
            prev = m.arrival_rate;
        }
    }

    #[test]
    fn plans_round_trip_losslessly(
        lambda_rat in 0.5f64..50.0,
        base in 1u32..50,
        count in 1usize..6,
        duration in 60.0f64..3600.0,
    ) {
        let n_values: Vec<u32> = (1..=count as u32).map(|i| base * i).collect();
        let plan = plan_scaled_z(
            lambda_rat,
            &n_values,
            duration,
            (duration * 0.05, duration * 0.05),
            &PlanOptions::default(),
        ).unwrap();
        let back = TestPlan::from_json(&plan.to_json().unwrap()).unwrap();
        // The file carries Z in milliseconds; the unit conversion may move
        // think time by one last bit, everything else is exact.
        prop_assert_eq!(plan.runs.len(), back.runs.len());
        prop_assert_eq!(plan.declared_lambda_rat, back.declared_lambda_rat);
        for (a, b) in plan.runs.iter().zip(&back.runs) {
            prop_assert!((a.workload.think_time_mean - b.workload.think_time_mean).abs()
                <= a.workload.think_time_mean * f64::EPSILON * 2.0);
            let mut a2 = a.clone();
            a2.workload.think_time_mean = b.workload.think_time_mean;
            prop_assert_eq!(&a2, b);
        }
    }

    #[test]
    fn ms_resolution_plans_round_trip_bit_exactly(
        z_ms_hi in 100u32..100_000,
        duration in 60.0f64..3600.0,
        n in 1u32..500,
    ) {
        // Z values at millisecond resolution, as the case-study tables use.
        let zs = [f64::from(z_ms_hi) / 1000.0, f64::from(z_ms_hi) / 2000.0];
        let plan = webload::planner::plan_fixed_n(
            n,
            &zs,
            duration,
            (0.0, 0.0),
            &PlanOptions::default(),
        ).unwrap();
        let back = TestPlan::from_json(&plan.to_json().unwrap()).unwrap();
        prop_assert_eq!(plan, back);
    }

    #[test]
    fn log_files_round_trip(
        rows in proptest::collection::vec(
            (0i64..10_000_000, 0u64..100_000, 0usize..6, any::<bool>(), "[a-zA-Z0-9 _,./-]{0,20}"),
            1..60,
        ),
    ) {
        let records: Vec<RunRecord> = rows
            .into_iter()
            .map(|(ts, elapsed, thread, success, label)| RunRecord {
                timestamp_ms: ts,
                label,
                elapsed_ms: elapsed,
                thread_name: format!("vu-{thread:04}"),
                success,
            })
            .collect();
        // A zero-span log has no measurement window; that case is a
        // documented ingest error, not a round-trip subject.
        let min_ts = records.iter().map(|r| r.timestamp_ms).min().unwrap();
        let max_ts = records.iter().map(|r| r.timestamp_ms).max().unwrap();
        prop_assume!(max_ts > min_ts);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.csv");
        webload::loadgen::write_log(&path, &records).unwrap();
        let ing = webload::analyzer::ingest(&path, 0.0, 0.0).unwrap();
        prop_assert!(ing.warnings.is_empty());
        // Ingest sorts globally; compare as multisets via sorted copies.
        let mut expected = records;
        expected.sort_by(|a, b| {
            a.timestamp_ms
                .cmp(&b.timestamp_ms)
                .then_with(|| a.thread_name.cmp(&b.thread_name))
        });
        let mut got = ing.log.records.clone();
        got.sort_by(|a, b| {
            a.timestamp_ms
                .cmp(&b.timestamp_ms)
                .then_with(|| a.thread_name.cmp(&b.thread_name))
                .then_with(|| a.label.cmp(&b.label))
        });
        expected.sort_by(|a, b| {
            a.timestamp_ms
                .cmp(&b.timestamp_ms)
                .then_with(|| a.thread_name.cmp(&b.thread_name))
                .then_with(|| a.label.cmp(&b.label))
        });
        prop_assert_eq!(expected, got);
    }
}
