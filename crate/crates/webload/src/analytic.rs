//! Exact analytic solvers for the closed repairman queue and the open single
//! queue, plus the bounds and asymptotes behind Principle A.
//!
//! The closed solver is the exact mean-value-analysis recursion for
//! M/M/1/N/N: `R(n) = S*(1 + Q(n-1))`, `X(n) = n/(R(n)+Z)`,
//! `Q(n) = X(n)*R(n)` for n = 1..N. It satisfies `N = lambda*(R+Z)` to
//! machine precision and its steady state was cross-checked against the
//! birth-death chain solution and against discrete-event simulation.

use serde::Serialize;

use crate::core::{Bounds, QueueMetrics, ThinkDistribution, WorkloadPoint};
use crate::{Error, Result};

/// The closed model: a single-queue SUT with service demand S, driven by a
/// workload point (N generators, think time Z).
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedModel {
    /// Service demand of the SUT queue, seconds (S_max for bounds).
    pub service_demand: f64,
    pub workload: WorkloadPoint,
}

impl ClosedModel {
    pub fn new(service_demand: f64, workload: WorkloadPoint) -> Self {
        ClosedModel {
            service_demand,
            workload,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.service_demand > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "service demand must be > 0, got {}",
                self.service_demand
            )));
        }
        self.workload.validate()
    }
}

/// Solve the closed queue exactly via the MVA recursion.
pub fn solve_closed(model: &ClosedModel) -> Result<QueueMetrics> {
    model.validate()?;
    let s = model.service_demand;
    let z = model.workload.think_time_mean;
    let n = model.workload.n_generators;

    let mut q = 0.0;
    let mut x = 0.0;
    let mut r = s;
    for k in 1..=u64::from(n) {
        r = s * (1.0 + q);
        x = k as f64 / (r + z);
        q = x * r;
    }
    Ok(QueueMetrics {
        arrival_rate: x,
        throughput: x,
        residence_time: r,
        waiting_time: r - s,
        service_time: s,
        concurrency: q,
        round_trip_time: r + z,
    })
}

/// Arrival rate from the population balance: lambda = N/Z - Q/Z.
///
/// Q > N would imply a negative arrival rate, which is not physically
/// possible, so it is rejected.
pub fn arrival_rate_identity(n: f64, z: f64, q: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::InvalidParameter(format!("z must be > 0, got {z}")));
    }
    if !(q >= 0.0) {
        return Err(Error::InvalidParameter(format!("q must be >= 0, got {q}")));
    }
    if q > n {
        return Err(Error::InfeasibleState(format!(
            "concurrency {q} exceeds population {n}"
        )));
    }
    Ok(n / z - q / z)
}

/// Hard and soft throughput bounds for (S_max, N, Z).
pub fn bounds(s_max: f64, n: u32, z: f64) -> Result<Bounds> {
    if !(s_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "s_max must be > 0, got {s_max}"
        )));
    }
    if !(z > 0.0) {
        return Err(Error::InvalidParameter(format!("z must be > 0, got {z}")));
    }
    Ok(Bounds {
        s_max,
        lambda_sat: 1.0 / s_max,
        lambda_rat: f64::from(n) / z,
    })
}

/// Closed-form open M/M/1 metrics at a given arrival rate.
///
/// Inputs at or within 1e-9 of saturation are rejected rather than clamped,
/// to avoid silently misleading capacity numbers.
pub fn solve_open(arrival_rate: f64, service_time: f64) -> Result<QueueMetrics> {
    if !(service_time > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "service time must be > 0, got {service_time}"
        )));
    }
    if !(arrival_rate >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "arrival rate must be >= 0, got {arrival_rate}"
        )));
    }
    let rho = arrival_rate * service_time;
    if rho > 1.0 - 1e-9 {
        return Err(Error::Saturated {
            lambda: arrival_rate,
            service: service_time,
            utilization: rho,
        });
    }
    let r = service_time / (1.0 - rho);
    Ok(QueueMetrics {
        arrival_rate,
        throughput: arrival_rate,
        residence_time: r,
        waiting_time: r - service_time,
        service_time,
        concurrency: arrival_rate * r,
        round_trip_time: r,
    })
}

/// Response time R(N) = N/X(N) - Z per closed solve, at each requested N.
pub fn response_curve(service_demand: f64, z: f64, n_values: &[u32]) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let model = ClosedModel::new(
            service_demand,
            WorkloadPoint::new(n, z, ThinkDistribution::Exponential),
        );
        let m = solve_closed(&model)?;
        out.push((n, f64::from(n) / m.throughput - z));
    }
    Ok(out)
}

/// Large-N response-time asymptote: R_inf = N*S_max - Z.
///
/// Crosses R=0 at N = Z/S_max and intersects the R axis (N=0) at -Z.
pub fn response_asymptote(n: f64, s_max: f64, z: f64) -> f64 {
    n * s_max - z
}

/// An ordered list of solved workload points with the governing bounds.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub points: Vec<(WorkloadPoint, QueueMetrics)>,
    pub bounds: Bounds,
}

fn sweep(service_demand: f64, points: Vec<WorkloadPoint>) -> Result<SweepResult> {
    let mut solved = Vec::with_capacity(points.len());
    let mut max_ratio: f64 = 0.0;
    for wp in points {
        let metrics = solve_closed(&ClosedModel::new(service_demand, wp.clone()))?;
        max_ratio = max_ratio.max(wp.lambda_rat());
        solved.push((wp, metrics));
    }
    Ok(SweepResult {
        points: solved,
        bounds: Bounds {
            s_max: service_demand,
            lambda_sat: 1.0 / service_demand,
            lambda_rat: max_ratio,
        },
    })
}

/// Solve a Principle-A sweep: Z scaled so every point has N/Z = lambda_rat.
pub fn sweep_scaled_z(service_demand: f64, lambda_rat: f64, n_values: &[u32]) -> Result<SweepResult> {
    if !(lambda_rat > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda_rat must be > 0, got {lambda_rat}"
        )));
    }
    let points = n_values
        .iter()
        .map(|&n| {
            WorkloadPoint::new(n, f64::from(n) / lambda_rat, ThinkDistribution::Exponential)
                .with_label(format!("N{n}"))
        })
        .collect();
    sweep(service_demand, points)
}

/// Solve a conventional sweep: N varies, Z held fixed.
pub fn sweep_fixed_z(service_demand: f64, z: f64, n_values: &[u32]) -> Result<SweepResult> {
    let points = n_values
        .iter()
        .map(|&n| WorkloadPoint::new(n, z, ThinkDistribution::Exponential).with_label(format!("N{n}")))
        .collect();
    sweep(service_demand, points)
}

impl SweepResult {
    /// CSV rows for external plotting; column order is fixed:
    /// `N,Z,lambda,R,Q,lambda_rat,lambda_sat` with per-row N/Z.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,Z,lambda,R,Q,lambda_rat,lambda_sat\n");
        for (wp, m) in &self.points {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                wp.n_generators,
                wp.think_time_mean,
                m.arrival_rate,
                m.residence_time,
                m.concurrency,
                wp.lambda_rat(),
                self.bounds.lambda_sat,
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn closed(s: f64, n: u32, z: f64) -> QueueMetrics {
        solve_closed(&ClosedModel::new(
            s,
            WorkloadPoint::new(n, z, ThinkDistribution::Exponential),
        ))
        .unwrap()
    }

    // Frozen golden values from an independent solution of the M/M/1/N/N
    // birth-death chain (agrees with this recursion to ~1e-12).
    #[test]
    fn matches_birth_death_chain() {
        let cases = [
            (100, 10.0, 9.903712753978134, 0.9628724602186307),
            (200, 10.0, 18.912951543227802, 10.87048456772209),
            (100, 5.0, 18.48599094578279, 7.570045271086106),
            (400, 20.0, 19.222941805273518, 15.541163894529612),
            (1000, 50.0, 19.503761647076804, 24.81191764616046),
        ];
        for (n, z, lam, q) in cases {
            let m = closed(0.05, n, z);
            assert_relative_eq!(m.arrival_rate, lam, max_relative = 1e-10);
            assert_relative_eq!(m.concurrency, q, max_relative = 1e-10);
        }
    }

    #[test]
    fn single_customer_never_waits() {
        let m = closed(0.05, 1, 10.0);
        assert_relative_eq!(m.arrival_rate, 1.0 / 10.05, max_relative = 1e-12);
        assert_relative_eq!(m.residence_time, 0.05, max_relative = 1e-12);
        assert_relative_eq!(m.concurrency, m.arrival_rate * 0.05, max_relative = 1e-12);
        assert_eq!(m.waiting_time, 0.0);
    }

    #[test]
    fn population_balance_holds_to_1e9() {
        // N = lambda*R + lambda*Z and N = Q + lambda*Z.
        for (n, z) in [(100u32, 5.0), (200, 10.0), (600, 30.0), (1000, 50.0), (137, 3.3)] {
            let m = closed(0.05, n, z);
            let lhs = m.arrival_rate * m.residence_time + m.arrival_rate * z;
            assert_relative_eq!(lhs, f64::from(n), max_relative = 1e-9);
            assert_relative_eq!(
                m.concurrency + m.arrival_rate * z,
                f64::from(n),
                max_relative = 1e-9
            );
            assert_relative_eq!(
                m.residence_time,
                m.waiting_time + m.service_time,
                max_relative = 1e-9
            );
            assert_relative_eq!(
                m.concurrency,
                m.arrival_rate * m.residence_time,
                max_relative = 1e-9
            );
            assert_relative_eq!(m.round_trip_time, m.residence_time + z, max_relative = 1e-9);
        }
    }

    #[test]
    fn identity_examples() {
        assert_relative_eq!(
            arrival_rate_identity(200.0, 10.0, 15.37).unwrap(),
            18.463,
            max_relative = 1e-12
        );
        assert_relative_eq!(arrival_rate_identity(400.0, 20.0, 0.0).unwrap(), 20.0);
        // Internet-user cross-check from the case study (Z' = 30 s column).
        assert_relative_eq!(
            arrival_rate_identity(1086.84, 30.0, 2.16).unwrap(),
            36.156,
            max_relative = 1e-12
        );
        assert!(matches!(
            arrival_rate_identity(100.0, 10.0, 100.5),
            Err(Error::InfeasibleState(_))
        ));
    }

    #[test]
    fn bounds_examples() {
        let b = bounds(0.05, 200, 10.0).unwrap();
        assert_eq!(b.lambda_sat, 20.0);
        assert_eq!(b.lambda_rat, 20.0);
        assert!(b.is_feasible());

        let b = bounds(0.05, 400, 10.0).unwrap();
        assert_eq!(b.lambda_rat, 40.0);
        assert!(!b.is_feasible());

        let b = bounds(0.1, 100, 10.0).unwrap();
        assert_eq!(b.lambda_sat, 10.0);
        assert!(b.is_feasible());
    }

    #[test]
    fn open_queue_closed_form() {
        let m = solve_open(0.0, 0.05).unwrap();
        assert_eq!(m.residence_time, 0.05);
        assert_eq!(m.concurrency, 0.0);

        let m = solve_open(10.0, 0.05).unwrap();
        assert_relative_eq!(m.residence_time, 0.1, max_relative = 1e-12);
        assert_relative_eq!(m.concurrency, 1.0, max_relative = 1e-12);
        assert_relative_eq!(
            m.concurrency,
            m.arrival_rate * m.residence_time,
            max_relative = 1e-15
        );

        // Near saturation the queue blows up roughly as rho/(1-rho).
        let m = solve_open(19.99, 0.05).unwrap();
        assert!((m.concurrency - 1998.0).abs() / 1998.0 < 0.001, "{}", m.concurrency);

        assert!(matches!(
            solve_open(20.0, 0.05),
            Err(Error::Saturated { .. })
        ));
    }

    #[test]
    fn response_curve_and_asymptote() {
        let curve = response_curve(0.05, 10.0, &[1, 100, 1000]).unwrap();
        assert_relative_eq!(curve[0].1, 0.05, max_relative = 1e-9);
        let m100 = closed(0.05, 100, 10.0);
        assert_relative_eq!(curve[1].1, 100.0 / m100.throughput - 10.0, max_relative = 1e-12);
        // Large N approaches the asymptote N*S - Z = 40 s.
        assert!((curve[2].1 - 40.0).abs() / 40.0 < 0.02);

        assert_eq!(response_asymptote(0.0, 0.05, 10.0), -10.0);
        assert_eq!(response_asymptote(400.0, 0.05, 20.0), 0.0);
        assert_eq!(response_asymptote(1000.0, 0.05, 50.0), 0.0);
    }

    #[test]
    fn asymptote_zero_crossing_matches_ratio_slope() {
        // The diagonal's rise/run Z/N at the crossing is 1/lambda_rat.
        for (n, z) in [(400.0, 20.0), (1000.0, 50.0), (130.0, 1.3 * 130.0 / 20.0)] {
            let s = z / n;
            assert_relative_eq!(response_asymptote(n, s, z), 0.0, epsilon = 1e-9);
            assert_relative_eq!(z / n, s, max_relative = 1e-12);
        }
    }

    #[test]
    fn scaled_sweep_monotone_and_bounded() {
        let ns = [100, 200, 400, 600, 800, 1000];
        let sweep = sweep_scaled_z(0.05, 20.0, &ns).unwrap();
        let mut prev = 0.0;
        for (wp, m) in &sweep.points {
            assert!(m.arrival_rate >= prev);
            assert!(m.arrival_rate <= sweep.bounds.lambda_sat.min(wp.lambda_rat()) + 1e-9);
            prev = m.arrival_rate;
        }
        assert_eq!(sweep.bounds.lambda_rat, 20.0);
    }

    #[test]
    fn principle_a_gap_is_q_over_z_and_shrinks() {
        let mut prev_gap = f64::INFINITY;
        for n in [100u32, 200, 400, 800, 1600] {
            let z = f64::from(n) / 20.0;
            let m = closed(0.05, n, z);
            let gap = 20.0 - m.arrival_rate;
            assert_relative_eq!(gap, m.concurrency / z, max_relative = 1e-9);
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
    }

    #[test]
    fn open_is_the_scaled_closed_limit() {
        // Z = N/lambda: closed R approaches open R within 1% for
        // lambda <= 0.9 * lambda_sat. Convergence is slowest at the 0.9
        // boundary (1.6% at N=10^4), so that point gets a larger N.
        for (lambda, n) in [(5.0, 10_000u32), (10.0, 10_000), (15.0, 10_000), (18.0, 30_000)] {
            let open = solve_open(lambda, 0.05).unwrap();
            let closed = closed(0.05, n, f64::from(n) / lambda);
            let rel = (closed.residence_time - open.residence_time).abs() / open.residence_time;
            assert!(rel < 0.01, "lambda={lambda}: closed R {} vs open R {}", closed.residence_time, open.residence_time);
        }
    }

    #[test]
    fn sweep_csv_layout() {
        let sweep = sweep_scaled_z(0.05, 20.0, &[100, 200]).unwrap();
        let csv = sweep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "N,Z,lambda,R,Q,lambda_rat,lambda_sat");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "100");
        assert_eq!(row[1], "5");
        assert_eq!(row.len(), 7);
    }
}
