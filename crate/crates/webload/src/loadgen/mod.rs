//! Real HTTP load generator: N virtual users with weighted random object
//! selection and a seeded think timer, plus a bundled constant-latency
//! target server for desk-scale end-to-end tests.
//!
//! Each virtual user holds at most one outstanding request — the defining
//! closed-system property. Up to `worker_cap` users get a dedicated OS
//! thread's worth of capacity from a scheduled worker pool; beyond the cap
//! the same pool multiplexes users without breaking the one-outstanding
//! contract, because a user is rescheduled only after its response returns.

mod server;

use std::collections::BinaryHeap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::RngExt;
use serde::{Deserialize, Serialize};

pub use server::{serve_target, serve_target_with_body, targets_from_mix, TargetObject, TargetServer};

use crate::core::{draw_think_time, seeded_stream, ThinkDistribution};
use crate::planner::TestPlan;
use crate::{Error, Result};

/// Header of the shared arrival-log CSV format. The columns are a strict
/// subset of JMeter's JTL CSV columns, so real JMeter logs parse too.
pub const LOG_HEADER: [&str; 5] = ["timeStamp", "label", "elapsed", "threadName", "success"];

/// One logged request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Request send time, integer milliseconds since the epoch.
    pub timestamp_ms: i64,
    /// Object name requested.
    pub label: String,
    /// Response time sample, integer milliseconds.
    pub elapsed_ms: u64,
    /// Owning generator thread; timestamps are monotone per thread only.
    pub thread_name: String,
    pub success: bool,
}

/// Write records to the shared CSV log format.
pub fn write_log(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let file = std::fs::File::create(path.as_ref()).map_err(|e| Error::io(e, path.as_ref()))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(LOG_HEADER)?;
    for r in records {
        w.write_record([
            r.timestamp_ms.to_string().as_str(),
            r.label.as_str(),
            r.elapsed_ms.to_string().as_str(),
            r.thread_name.as_str(),
            if r.success { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(|e| Error::io(e, path.as_ref()))?;
    Ok(())
}

/// One requestable object: a name, a URL path, and a selection weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixEntry {
    pub object_name: String,
    pub path: String,
    pub weight: u32,
}

/// A page and the objects a browser would fetch to render it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageEntry {
    pub page_name: String,
    pub object_names: Vec<String>,
}

/// Weighted object mix plus the page -> objects consolidation map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectMix {
    pub entries: Vec<MixEntry>,
    pub page_map: Vec<PageEntry>,
}

impl ObjectMix {
    /// The bundled default: six objects over four pages, fifteen object
    /// instances consolidating to nine page instances (a 9:15 ratio).
    pub fn default_web_mix() -> Self {
        let entries = [
            ("010_Home", "/home", 4),
            ("012_Home_jpg", "/home.jpg", 4),
            ("020_Dept", "/dept", 2),
            ("022_Dept_jpg", "/dept.jpg", 2),
            ("030_Demographics", "/demographics", 2),
            ("040_Statistics", "/statistics", 1),
        ]
        .into_iter()
        .map(|(name, path, weight)| MixEntry {
            object_name: name.into(),
            path: path.into(),
            weight,
        })
        .collect();
        let page_map = [
            ("Home", vec!["010_Home", "012_Home_jpg"]),
            ("Department", vec!["020_Dept", "022_Dept_jpg"]),
            ("Demographics", vec!["030_Demographics"]),
            ("Statistics", vec!["040_Statistics"]),
        ]
        .into_iter()
        .map(|(page, objects)| PageEntry {
            page_name: page.into(),
            object_names: objects.into_iter().map(String::from).collect(),
        })
        .collect();
        ObjectMix { entries, page_map }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidParameter("mix has no entries".into()));
        }
        if let Some(e) = self.entries.iter().find(|e| e.weight < 1) {
            return Err(Error::InvalidParameter(format!(
                "object `{}` has weight 0",
                e.object_name
            )));
        }
        for page in &self.page_map {
            for obj in &page.object_names {
                if !self.entries.iter().any(|e| &e.object_name == obj) {
                    return Err(Error::InvalidParameter(format!(
                        "page `{}` references unknown object `{obj}`",
                        page.page_name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Total object instances: the weight sum.
    pub fn object_instance_count(&self) -> u32 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// Page instances: each page contributes the weight of its first
    /// (root) object, matching how repeated page visits are counted.
    pub fn page_instance_count(&self) -> u32 {
        self.page_map
            .iter()
            .filter_map(|p| {
                let root = p.object_names.first()?;
                self.entries
                    .iter()
                    .find(|e| &e.object_name == root)
                    .map(|e| e.weight)
            })
            .sum()
    }

    /// pages / object instances, e.g. 9/15 = 0.6 for the default mix.
    pub fn page_object_ratio(&self) -> Result<f64> {
        let objs = self.object_instance_count();
        if objs == 0 {
            return Err(Error::InvalidParameter("mix has zero object instances".into()));
        }
        Ok(f64::from(self.page_instance_count()) / f64::from(objs))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let mix: ObjectMix = serde_json::from_str(json)?;
        mix.validate()?;
        Ok(mix)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(e, path.as_ref()))?;
        ObjectMix::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_json()?).map_err(|e| Error::io(e, path.as_ref()))
    }

    /// Pick an entry index by cumulative weight.
    fn pick(&self, roll: u32) -> usize {
        let mut acc = 0;
        for (i, e) in self.entries.iter().enumerate() {
            acc += e.weight;
            if roll < acc {
                return i;
            }
        }
        self.entries.len() - 1
    }
}

/// Runtime knobs for `run_test`.
#[derive(Debug, Clone)]
pub struct LoadgenOptions {
    /// Abort a run when the failure fraction exceeds this (default 10%).
    pub failure_ceiling: f64,
    /// OS worker threads serving the virtual users (default min(N, 512)).
    pub worker_cap: usize,
    pub request_timeout: Duration,
}

impl Default for LoadgenOptions {
    fn default() -> Self {
        LoadgenOptions {
            failure_ceiling: 0.10,
            worker_cap: 512,
            request_timeout: Duration::from_secs(30),
        }
    }
}

/// Execute every run of a plan against `base_url`, writing one log file per
/// run (named by run label) into `out_dir`. Returns the log paths.
pub fn run_test(
    plan: &TestPlan,
    mix: &ObjectMix,
    base_url: &str,
    seed: u64,
    out_dir: impl AsRef<Path>,
    opts: &LoadgenOptions,
) -> Result<Vec<PathBuf>> {
    mix.validate()?;
    if plan.runs.is_empty() {
        return Err(Error::InvalidParameter("plan has no runs".into()));
    }
    std::fs::create_dir_all(out_dir.as_ref()).map_err(|e| Error::io(e, out_dir.as_ref()))?;
    preflight(base_url, mix, opts)?;

    let mut paths = Vec::new();
    for (idx, run) in plan.runs.iter().enumerate() {
        let run_seed = seed.wrapping_add((idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let records = run_one(
            &run.workload.think_distribution,
            run.workload.think_time_mean,
            run.workload.n_generators,
            run.duration,
            &run.run_label,
            mix,
            base_url,
            run_seed,
            opts,
        )?;
        let path = out_dir.as_ref().join(format!("{}.csv", run.run_label));
        write_log(&path, &records)?;
        paths.push(path);
    }
    Ok(paths)
}

fn preflight(base_url: &str, mix: &ObjectMix, opts: &LoadgenOptions) -> Result<()> {
    let agent = make_agent(opts);
    let url = format!("{}{}", base_url.trim_end_matches('/'), mix.entries[0].path);
    match agent.get(&url).call() {
        Ok(_) => Ok(()),
        Err(e) => Err(Error::TargetUnreachable(format!("{url}: {e}"))),
    }
}

fn make_agent(opts: &LoadgenOptions) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(opts.request_timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

/// A virtual user waiting for its next send time.
struct PendingUser {
    fire_at: Instant,
    user: u32,
}

impl PartialEq for PendingUser {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.user == other.user
    }
}
impl Eq for PendingUser {}
impl PartialOrd for PendingUser {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PendingUser {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the earliest fire time.
        other
            .fire_at
            .cmp(&self.fire_at)
            .then(other.user.cmp(&self.user))
    }
}

struct RunState {
    queue: Mutex<BinaryHeap<PendingUser>>,
    wakeup: Condvar,
    abort: AtomicBool,
    total: AtomicU64,
    failed: AtomicU64,
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    dist: &ThinkDistribution,
    think_mean: f64,
    n_users: u32,
    duration: f64,
    run_label: &str,
    mix: &ObjectMix,
    base_url: &str,
    seed: u64,
    opts: &LoadgenOptions,
) -> Result<Vec<RunRecord>> {
    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(duration);
    let base = base_url.trim_end_matches('/').to_string();
    let total_weight = mix.object_instance_count();

    // Per-user rng streams; the stagger delay spreads the initial burst
    // uniformly over one think interval.
    let mut rngs = Vec::with_capacity(n_users as usize);
    let state = RunState {
        queue: Mutex::new(BinaryHeap::new()),
        wakeup: Condvar::new(),
        abort: AtomicBool::new(false),
        total: AtomicU64::new(0),
        failed: AtomicU64::new(0),
    };
    {
        let mut q = state.queue.lock().unwrap();
        for user in 0..n_users {
            let mut rng = seeded_stream(seed, u64::from(user));
            let stagger = if think_mean > 0.0 {
                rng.random_range(0.0..think_mean)
            } else {
                0.0
            };
            q.push(PendingUser {
                fire_at: start + Duration::from_secs_f64(stagger),
                user,
            });
            rngs.push(Some(rng));
        }
    }
    let rngs = Mutex::new(rngs);
    let state = &state;
    let rngs = &rngs;
    let mix_ref = mix;
    let base = &base;

    let workers = (n_users as usize).min(opts.worker_cap.max(1));
    let records = Mutex::new(Vec::<RunRecord>::new());
    let records_ref = &records;

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(move || {
                let agent = make_agent(opts);
                loop {
                    if state.abort.load(Ordering::Relaxed) {
                        break;
                    }
                    // Claim the next due user, or sleep until one is due.
                    // An empty queue only means every live user is in flight
                    // on another worker, so idle until the deadline instead
                    // of exiting and shrinking the pool.
                    let next = {
                        let mut q = state.queue.lock().unwrap();
                        loop {
                            if state.abort.load(Ordering::Relaxed) {
                                break None;
                            }
                            let now = Instant::now();
                            if now >= deadline {
                                break None;
                            }
                            let wait = match q.peek() {
                                Some(p) if p.fire_at <= now => break q.pop(),
                                Some(p) => (p.fire_at - now).min(deadline - now),
                                None => deadline - now,
                            };
                            let (guard, _) = state.wakeup.wait_timeout(q, wait).unwrap();
                            q = guard;
                        }
                    };
                    let Some(pending) = next else { break };
                    if Instant::now() >= deadline {
                        break;
                    }
                    let user = pending.user;
                    let mut rng = rngs.lock().unwrap()[user as usize].take().unwrap();

                    let entry = &mix_ref.entries[mix_ref.pick(rng.random_range(0..total_weight))];
                    let url = format!("{base}{}", entry.path);
                    let sent_at = SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .unwrap()
                        .as_millis() as i64;
                    let t0 = Instant::now();
                    let success = match agent.get(&url).call() {
                        Ok(mut res) => {
                            let ok = res.status().is_success();
                            // Drain the body so the connection can be reused.
                            let _ = res.body_mut().read_to_vec();
                            ok
                        }
                        Err(_) => false,
                    };
                    let elapsed_ms = t0.elapsed().as_millis() as u64;
                    records_ref.lock().unwrap().push(RunRecord {
                        timestamp_ms: sent_at,
                        label: entry.object_name.clone(),
                        elapsed_ms,
                        thread_name: format!("vu-{user:04}"),
                        success,
                    });

                    let total = state.total.fetch_add(1, Ordering::Relaxed) + 1;
                    let failed = if success {
                        state.failed.load(Ordering::Relaxed)
                    } else {
                        state.failed.fetch_add(1, Ordering::Relaxed) + 1
                    };
                    if total >= 20 && failed as f64 / total as f64 > opts.failure_ceiling {
                        state.abort.store(true, Ordering::Relaxed);
                        state.wakeup.notify_all();
                        break;
                    }

                    let think = draw_think_time(*dist, think_mean, &mut rng).unwrap_or(0.0);
                    let fire_at = Instant::now() + Duration::from_secs_f64(think);
                    rngs.lock().unwrap()[user as usize] = Some(rng);
                    if fire_at < deadline {
                        let mut q = state.queue.lock().unwrap();
                        q.push(PendingUser { fire_at, user });
                        state.wakeup.notify_one();
                    }
                }
                state.wakeup.notify_all();
            });
        }
    });

    if state.abort.load(Ordering::Relaxed) {
        let total = state.total.load(Ordering::Relaxed).max(1);
        let failed = state.failed.load(Ordering::Relaxed);
        return Err(Error::FailureCeiling {
            run: run_label.to_string(),
            rate: failed as f64 / total as f64 * 100.0,
            ceiling: opts.failure_ceiling * 100.0,
        });
    }
    let mut out = records.into_inner().unwrap();
    out.sort_by(|a, b| {
        a.timestamp_ms
            .cmp(&b.timestamp_ms)
            .then_with(|| a.thread_name.cmp(&b.thread_name))
    });
    Ok(out)
}

/// Convenience used by tests and the CLI: print per-object request shares.
pub fn selection_report(records: &[RunRecord]) -> Vec<(String, usize)> {
    let mut counts = std::collections::BTreeMap::new();
    for r in records {
        *counts.entry(r.label.clone()).or_insert(0usize) += 1;
    }
    let mut v: Vec<_> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_mix_ratio_is_nine_to_fifteen() {
        let mix = ObjectMix::default_web_mix();
        mix.validate().unwrap();
        assert_eq!(mix.object_instance_count(), 15);
        assert_eq!(mix.page_instance_count(), 9);
        assert!((mix.page_object_ratio().unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn one_to_one_mix_ratio_is_identity() {
        let mix = ObjectMix {
            entries: vec![MixEntry {
                object_name: "only".into(),
                path: "/only".into(),
                weight: 1,
            }],
            page_map: vec![PageEntry {
                page_name: "Only".into(),
                object_names: vec!["only".into()],
            }],
        };
        assert_eq!(mix.page_object_ratio().unwrap(), 1.0);
    }

    #[test]
    fn mix_round_trips_through_json() {
        let mix = ObjectMix::default_web_mix();
        let back = ObjectMix::from_json(&mix.to_json().unwrap()).unwrap();
        assert_eq!(mix, back);
    }

    #[test]
    fn mix_rejects_unknown_page_object() {
        let mut mix = ObjectMix::default_web_mix();
        mix.page_map[0].object_names.push("missing".into());
        assert!(mix.validate().is_err());
    }

    #[test]
    fn weighted_pick_respects_cumulative_ranges() {
        let mix = ObjectMix {
            entries: vec![
                MixEntry {
                    object_name: "a".into(),
                    path: "/a".into(),
                    weight: 3,
                },
                MixEntry {
                    object_name: "b".into(),
                    path: "/b".into(),
                    weight: 1,
                },
            ],
            page_map: vec![],
        };
        assert_eq!(mix.pick(0), 0);
        assert_eq!(mix.pick(2), 0);
        assert_eq!(mix.pick(3), 1);
    }

    #[test]
    fn weighted_selection_converges_to_probabilities() {
        // 3:1 weights over many seeded draws land within 1% of 75/25.
        let mix = ObjectMix {
            entries: vec![
                MixEntry {
                    object_name: "a".into(),
                    path: "/a".into(),
                    weight: 3,
                },
                MixEntry {
                    object_name: "b".into(),
                    path: "/b".into(),
                    weight: 1,
                },
            ],
            page_map: vec![],
        };
        let mut rng = crate::core::seeded_rng(11);
        let n = 100_000;
        let mut a = 0usize;
        for _ in 0..n {
            if mix.pick(rng.random_range(0..4)) == 0 {
                a += 1;
            }
        }
        let share = a as f64 / n as f64;
        assert!((share - 0.75).abs() < 0.01, "share {share}");
    }

    #[test]
    fn log_write_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        write_log(
            &path,
            &[RunRecord {
                timestamp_ms: 1000,
                label: "010_Home".into(),
                elapsed_ms: 52,
                thread_name: "vu-0001".into(),
                success: true,
            }],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "timeStamp,label,elapsed,threadName,success");
        assert_eq!(lines.next().unwrap(), "1000,010_Home,52,vu-0001,true");
    }
}
