//! Sequential rank-error measurement.
//!
//! One thread drives the MultiQueue while an order-statistic multiset
//! shadows its contents. The rank of every deleted key in the shadow is the
//! rank error of that delete. With a single thread no lock ever fails, so
//! `p` enters only through the number of queues `ceil(c*p)`.

use std::thread;

use crate::config::MultiQueueConfig;
use crate::element::{Element, Key};
use crate::error::{Error, Result};
use crate::multiqueue::MultiQueue;
use crate::quality::log::{LogClock, LoggedHandle, OpLog};
use crate::quality::ostree::OrderStatTree;
use crate::quality::stats::RankErrorStats;
use crate::workload::{KeyStream, WorkloadSpec, PREFILL_STREAM};

/// Rank of `key` in `oracle` (count of strictly smaller keys), removing one
/// copy of it. Absence means an element was lost or duplicated.
pub fn oracle_rank(oracle: &mut OrderStatTree, key: Key) -> Result<u64> {
    oracle.rank_and_remove(key).ok_or(Error::OracleMismatch(key))
}

fn quality_queue(cfg: &MultiQueueConfig, w: &WorkloadSpec) -> Result<MultiQueue> {
    w.validate()?;
    let mut cfg = cfg.clone();
    if cfg.initial_capacity.is_none() {
        cfg = cfg.with_capacity_for(w.prefill);
    }
    MultiQueue::new(cfg)
}

/// Runs `w.prefill` uniform inserts followed by `n_ops` alternating
/// insert / delete-min operations on one thread and returns the rank error
/// of every delete. Deterministic for a fixed seed.
pub fn simulate_quality(cfg: &MultiQueueConfig, w: &WorkloadSpec, n_ops: u64) -> Result<RankErrorStats> {
    if n_ops == 0 {
        return Err(Error::Workload("quality run needs at least one operation".into()));
    }
    let mq = quality_queue(cfg, w)?;
    let mut h = mq.handle_with_id(0);
    let mut oracle = OrderStatTree::with_capacity(w.prefill + 1);
    let mut stats = RankErrorStats::new();

    let mut prefill_keys = KeyStream::new(w, PREFILL_STREAM);
    for id in 0..w.prefill {
        let key = prefill_keys.uniform();
        h.insert(Element::new(key, id as u32));
        oracle.insert(key);
    }

    let mut keys = KeyStream::new(w, 0);
    let mut next_id = w.prefill as u32;
    for op in 0..n_ops {
        if op % 2 == 0 {
            let key = keys.next_key();
            h.insert(Element::new(key, next_id));
            next_id = next_id.wrapping_add(1);
            oracle.insert(key);
        } else {
            let e = h.delete_min_blocking();
            keys.deleted(e.key);
            stats.record(oracle_rank(&mut oracle, e.key)?);
        }
    }
    Ok(stats)
}

/// Same operation sequence as [`simulate_quality`], recorded as a log
/// instead of being ranked on the fly.
pub fn record_serial_log(cfg: &MultiQueueConfig, w: &WorkloadSpec, n_ops: u64) -> Result<OpLog> {
    let mq = quality_queue(cfg, w)?;
    let clock = LogClock::new();
    let mut h = LoggedHandle::new(mq.handle_with_id(0), &clock);

    let mut prefill_keys = KeyStream::new(w, PREFILL_STREAM);
    for id in 0..w.prefill {
        h.insert(Element::new(prefill_keys.uniform(), id as u32));
    }
    let mut keys = KeyStream::new(w, 0);
    let mut next_id = w.prefill as u32;
    for op in 0..n_ops {
        if op % 2 == 0 {
            h.insert(Element::new(keys.next_key(), next_id));
            next_id = next_id.wrapping_add(1);
        } else {
            let e = h.delete_min_blocking();
            keys.deleted(e.key);
        }
    }
    Ok(OpLog::merge([h.into_records()]))
}

/// Genuinely concurrent run: prefill from one thread, then `w.threads`
/// threads each perform `n_ops / threads` alternating operations, every one
/// stamped by a shared [`LogClock`].
pub fn record_concurrent_log(cfg: &MultiQueueConfig, w: &WorkloadSpec, n_ops: u64) -> Result<OpLog> {
    let mq = quality_queue(cfg, w)?;
    let clock = LogClock::new();
    let threads = w.threads;

    let mut prefill = LoggedHandle::new(mq.handle_with_id(threads), &clock);
    let mut prefill_keys = KeyStream::new(w, PREFILL_STREAM);
    for id in 0..w.prefill {
        prefill.insert(Element::new(prefill_keys.uniform(), id as u32));
    }
    let mut buffers = vec![prefill.into_records()];

    let per_thread = n_ops / threads as u64;
    let results: Vec<Result<Vec<_>>> = thread::scope(|s| {
        let workers: Vec<_> = (0..threads)
            .map(|t| {
                let (mq, clock) = (&mq, &clock);
                thread::Builder::new()
                    .name(format!("mq-log-{t}"))
                    .spawn_scoped(s, move || {
                        let mut h = LoggedHandle::new(mq.handle_with_id(t), clock);
                        let mut keys = KeyStream::new(w, t as u64);
                        // payload ids: prefill uses 0..n0, thread t uses n0 + t + threads*i
                        let mut next_id = (w.prefill + t) as u32;
                        for op in 0..per_thread {
                            if op % 2 == 0 {
                                h.insert(Element::new(keys.next_key(), next_id));
                                next_id = next_id.wrapping_add(threads as u32);
                            } else {
                                let e = h.delete_min_blocking();
                                keys.deleted(e.key);
                            }
                        }
                        h.into_records()
                    })
                    .map_err(Error::Spawn)
            })
            .collect();
        workers
            .into_iter()
            .map(|w| w.map(|j| j.join().expect("logging worker panicked")))
            .collect()
    });
    for r in results {
        buffers.push(r?);
    }
    Ok(OpLog::merge(buffers))
}
