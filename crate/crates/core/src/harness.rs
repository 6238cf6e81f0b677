//! Multi-threaded throughput driver.
//!
//! Each worker alternates insert and delete-min (insert first) on a shared
//! MultiQueue until a deadline. The clock is read once every
//! [`DEADLINE_CHECK_OPS`] operations. Prefill happens before the clock
//! starts and there is no warm-up phase.

use std::io::Write;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::MultiQueueConfig;
use crate::element::{Element, Key};
use crate::error::{Error, Result};
use crate::multiqueue::{MultiQueue, OpStats};
use crate::workload::{KeyStream, WorkloadMode, WorkloadSpec, PREFILL_STREAM};

pub const DEADLINE_CHECK_OPS: u64 = 1024;

/// CSV header matching [`BenchResult::csv_row`].
pub const CSV_HEADER: &str = "p,c,num_queues,n0,mode,ops,seconds,ops_per_sec,failed_locks";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadCounts {
    pub inserts: u64,
    pub deletes: u64,
    pub max_inserted_key: Key,
}

impl ThreadCounts {
    pub fn ops(&self) -> u64 {
        self.inserts + self.deletes
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinningReport {
    pub requested: usize,
    pub pinned: usize,
    pub note: Option<String>,
}

/// Outcome of the post-run conservation check in verify mode.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub inserted: u64,
    pub deleted: u64,
    pub drained: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub threads: usize,
    pub queue_factor: f64,
    pub num_queues: usize,
    pub prefill: usize,
    pub mode: WorkloadMode,
    pub total_ops: u64,
    pub seconds: f64,
    pub ops_per_second: f64,
    pub per_thread: Vec<ThreadCounts>,
    pub lock_stats: OpStats,
    pub pinning: PinningReport,
    pub conservation: Option<ConservationReport>,
}

impl BenchResult {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{:.1},{}",
            self.threads,
            self.queue_factor,
            self.num_queues,
            self.prefill,
            self.mode,
            self.total_ops,
            self.seconds,
            self.ops_per_second,
            self.lock_stats.failed_locks
        )
    }

    pub fn max_inserted_key(&self) -> Key {
        self.per_thread.iter().map(|t| t.max_inserted_key).max().unwrap_or(0)
    }
}

pub fn write_csv<'a>(mut w: impl Write, results: impl IntoIterator<Item = &'a BenchResult>) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in results {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Inserts `n0` keys uniform in `0..=key_max` from the calling thread.
/// Payloads are `0..n0`.
pub fn prefill(q: &MultiQueue, n0: usize, key_max: Key, seed: u64) {
    let w = WorkloadSpec {
        key_max,
        seed,
        ..WorkloadSpec::default()
    };
    let mut keys = KeyStream::new(&w, PREFILL_STREAM);
    let mut h = q.handle_with_id(usize::MAX);
    for id in 0..n0 {
        h.insert(Element::new(keys.uniform(), id as u32));
    }
}

struct WorkerOutput {
    counts: ThreadCounts,
    inserted: Vec<Element>,
    deleted: Vec<Element>,
}

fn worker(q: &MultiQueue, w: &WorkloadSpec, t: usize, deadline: Instant) -> WorkerOutput {
    let mut h = q.handle_with_id(t);
    let mut keys = KeyStream::new(w, t as u64);
    let mut counts = ThreadCounts::default();
    let (mut inserted, mut deleted) = (Vec::new(), Vec::new());
    let stride = w.threads as u32;
    let mut next_id = (w.prefill + t) as u32;
    loop {
        for _ in 0..DEADLINE_CHECK_OPS / 2 {
            let key = keys.next_key();
            let e = Element::new(key, next_id);
            h.insert(e);
            counts.inserts += 1;
            counts.max_inserted_key = counts.max_inserted_key.max(key);
            let d = h.delete_min_blocking();
            counts.deletes += 1;
            keys.deleted(d.key);
            if w.verify {
                next_id = next_id.wrapping_add(stride);
                inserted.push(e);
                deleted.push(d);
            }
        }
        if Instant::now() >= deadline {
            break;
        }
    }
    WorkerOutput {
        counts,
        inserted,
        deleted,
    }
}

fn pin_plan(threads: usize) -> (Vec<Option<core_affinity::CoreId>>, PinningReport) {
    let cores = core_affinity::get_core_ids().unwrap_or_default();
    let plan: Vec<_> = (0..threads).map(|t| cores.get(t).copied()).collect();
    let pinned = plan.iter().filter(|c| c.is_some()).count();
    let note = if cores.is_empty() {
        Some("thread pinning unsupported on this platform".to_string())
    } else if pinned < threads {
        Some(format!("only {} logical cores; {} threads left unpinned", cores.len(), threads - pinned))
    } else {
        None
    };
    (
        plan,
        PinningReport {
            requested: threads,
            pinned,
            note,
        },
    )
}

/// Checks that every inserted element was deleted or drained exactly once.
/// Payloads must be unique per inserted element.
pub fn check_conservation(
    inserted: &[Element],
    deleted: &[Element],
    drained: &[Element],
) -> Result<ConservationReport> {
    let mut expected: Vec<(u32, Key)> = inserted.iter().map(|e| (e.value, e.key)).collect();
    expected.sort_unstable();
    if let Some(w) = expected.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Conservation(format!("payload {} inserted twice", w[0].0)));
    }
    let mut seen: Vec<(u32, Key)> = deleted.iter().chain(drained).map(|e| (e.value, e.key)).collect();
    seen.sort_unstable();
    if let Some(w) = seen.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Conservation(format!("payload {} came out twice", w[0].0)));
    }
    if expected != seen {
        let missing = expected.iter().find(|x| seen.binary_search(x).is_err());
        let extra = seen.iter().find(|x| expected.binary_search(x).is_err());
        return Err(Error::Conservation(format!(
            "{} inserted vs {} recovered; first missing {missing:?}, first unexpected {extra:?}",
            expected.len(),
            seen.len()
        )));
    }
    Ok(ConservationReport {
        inserted: inserted.len() as u64,
        deleted: deleted.len() as u64,
        drained: drained.len() as u64,
    })
}

/// Prefills, runs `w.threads` alternating workers for `w.duration` and
/// aggregates their counts. In verify mode the queue is drained afterwards
/// and conservation is checked; a violation is returned as an error.
pub fn run_throughput(cfg: &MultiQueueConfig, w: &WorkloadSpec) -> Result<BenchResult> {
    w.validate()?;
    if w.duration.is_zero() {
        return Err(Error::Workload("duration must be positive".into()));
    }
    if w.verify && (w.prefill as u64) >= u32::MAX as u64 {
        return Err(Error::Workload("prefill too large for unique payload ids".into()));
    }
    let mut cfg = cfg.clone();
    if cfg.initial_capacity.is_none() {
        cfg = cfg.with_capacity_for(w.prefill);
    }
    let mut q = MultiQueue::new(cfg)?;
    prefill(&q, w.prefill, w.key_max, w.seed);
    let prefill_stats = q.stats();

    let (plan, pinning) = pin_plan(w.threads);
    let started = Instant::now();
    let deadline = started + w.duration;
    let outputs: Vec<WorkerOutput> = thread::scope(|s| {
        let handles = plan
            .iter()
            .enumerate()
            .map(|(t, core)| {
                let (q, core) = (&q, *core);
                thread::Builder::new()
                    .name(format!("mq-bench-{t}"))
                    .spawn_scoped(s, move || {
                        if let Some(core) = core {
                            core_affinity::set_for_current(core);
                        }
                        worker(q, w, t, deadline)
                    })
                    .map_err(Error::Spawn)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok::<_, Error>(
            handles
                .into_iter()
                .map(|h| h.join().expect("benchmark worker panicked"))
                .collect(),
        )
    })?;
    let elapsed = started.elapsed().as_secs_f64();

    let mut lock_stats = q.stats();
    lock_stats.lock_attempts -= prefill_stats.lock_attempts;
    lock_stats.failed_locks -= prefill_stats.failed_locks;
    lock_stats.inserts -= prefill_stats.inserts;

    let per_thread: Vec<ThreadCounts> = outputs.iter().map(|o| o.counts).collect();
    let total_ops = per_thread.iter().map(ThreadCounts::ops).sum();

    let conservation = if w.verify {
        let mut inserted: Vec<Element> = Vec::new();
        let mut deleted = Vec::new();
        let mut keys = KeyStream::new(w, PREFILL_STREAM);
        inserted.extend((0..w.prefill).map(|id| Element::new(keys.uniform(), id as u32)));
        for o in &outputs {
            inserted.extend_from_slice(&o.inserted);
            deleted.extend_from_slice(&o.deleted);
        }
        let drained = q.drain();
        Some(check_conservation(&inserted, &deleted, &drained)?)
    } else {
        None
    };

    Ok(BenchResult {
        threads: w.threads,
        queue_factor: q.config().queue_factor,
        num_queues: q.num_queues(),
        prefill: w.prefill,
        mode: w.mode,
        total_ops,
        seconds: elapsed,
        ops_per_second: total_ops as f64 / elapsed,
        per_thread,
        lock_stats,
        pinning,
        conservation,
    })
}

/// One [`run_throughput`] per initial size, in input order.
pub fn run_size_sweep(cfg: &MultiQueueConfig, w: &WorkloadSpec, sizes: &[usize]) -> Result<Vec<BenchResult>> {
    if sizes.is_empty() {
        return Err(Error::Workload("size sweep needs at least one size".into()));
    }
    sizes
        .iter()
        .map(|&n0| {
            let w = WorkloadSpec {
                prefill: n0,
                ..w.clone()
            };
            run_throughput(cfg, &w)
        })
        .collect()
}

/// Decades `1, 10, ..., 10^max_exp`.
pub fn decade_sizes(max_exp: u32) -> Vec<usize> {
    (0..=max_exp).map(|e| 10usize.pow(e)).collect()
}
