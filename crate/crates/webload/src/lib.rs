//! Tools for emulating asynchronous (open, web-style) traffic with a
//! synchronous (closed) load-test architecture.
//!
//! A conventional load rig is a closed queueing system: N generator threads
//! each hold at most one outstanding request, so the arrival rate at the
//! system under test is coupled to its queueing state. Real web traffic is
//! open: requests arrive from an unknown population at a rate independent of
//! server state. This crate implements the two principles that bridge the
//! gap, plus everything needed to apply and check them end to end:
//!
//! - **Principle A** — scale the mean think time `Z` with the generator
//!   count `N` so the ratio `N/Z` stays constant; the arrival rate then
//!   converges to the soft bottleneck `lambda_rat = N/Z` from below.
//! - **Principle B** — verify the emulation by checking that the coefficient
//!   of variation of the inter-arrival periods is close to 1 (exponential
//!   gaps, i.e. a Poisson arrival process).
//!
//! Module map:
//!
//! - [`core`] — shared domain types, seeded think-time variates, gap stats.
//! - [`analytic`] — exact solvers for the closed repairman queue and the
//!   open M/M/1 queue, bounds, response curves and sweeps.
//! - [`planner`] — Principle-A-conformant test plans (scaled-Z and fixed-N
//!   schedules) with feasibility warnings.
//! - [`simulator`] — seeded discrete-event simulation of the closed and open
//!   systems, producing arrival logs interchangeable with real ones.
//! - [`loadgen`] — a real HTTP load generator plus a bundled constant-latency
//!   target server for desk-scale end-to-end runs.
//! - [`analyzer`] — arrival-log ingestion (including JMeter JTL CSV),
//!   Principle-B statistics, Little's-law metrics, and Internet-user
//!   estimation.
//! - [`ruler`] — the meter-ruler demonstration that uniform random marks
//!   produce Poisson bin counts and exponential gaps.

// Parameter guards are written `!(x > 0.0)` so NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod analyzer;
pub mod core;
mod error;
pub mod loadgen;
pub mod planner;
pub mod ruler;
pub mod simulator;

pub use error::{Error, Result};
