//! The concurrent MultiQueue.
//!
//! `num_queues` sequential heaps, each guarded by a one-byte try-lock that
//! sits next to a copy of the heap's minimum key. Insertion locks a random
//! queue; deletion compares the cached minima of two random queues and pops
//! from the smaller one. A failed lock attempt never waits, it just samples
//! again.
//!
//! Threads operate through a [`Handle`], which owns that thread's random
//! generator and operation counters.

use std::cell::UnsafeCell;
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, AtomicUsize, Ordering};

use crossbeam_utils::CachePadded;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

use crate::config::MultiQueueConfig;
use crate::element::{Element, Key, SENTINEL};
use crate::error::{Error, Result};
use crate::heap::{DaryHeap, SequentialQueue};

/// Random generator used by a handle with the given id.
///
/// Exposed so tests can replay the exact index stream a handle will draw.
pub fn handle_rng(base_seed: u64, thread_id: usize) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(base_seed ^ thread_id as u64)
}

struct LocalQueue<H> {
    lock: AtomicBool,
    cached_min: AtomicU32,
    heap: UnsafeCell<H>,
}

// SAFETY: `heap` is only touched through a `LockGuard`, which exists only while
// this thread holds `lock`, or through `&mut MultiQueue`.
unsafe impl<H: Send> Sync for LocalQueue<H> {}

impl<H: SequentialQueue> LocalQueue<H> {
    fn new(heap: H) -> Self {
        Self {
            cached_min: AtomicU32::new(heap.peek_min()),
            lock: AtomicBool::new(false),
            heap: UnsafeCell::new(heap),
        }
    }

    #[inline]
    fn try_lock(&self) -> Option<LockGuard<'_, H>> {
        if self.lock.swap(true, Ordering::Acquire) {
            None
        } else {
            Some(LockGuard { queue: self })
        }
    }

    #[inline]
    fn min(&self) -> Key {
        self.cached_min.load(Ordering::Relaxed)
    }

    fn heap_mut(&mut self) -> &mut H {
        self.heap.get_mut()
    }
}

/// Held lock on one local queue. Refreshes the cached minimum and releases
/// the lock on drop.
struct LockGuard<'a, H: SequentialQueue> {
    queue: &'a LocalQueue<H>,
}

impl<H: SequentialQueue> LockGuard<'_, H> {
    #[inline]
    fn heap(&mut self) -> &mut H {
        // SAFETY: we hold the lock, so no other reference to the heap exists.
        unsafe { &mut *self.queue.heap.get() }
    }
}

impl<H: SequentialQueue> Drop for LockGuard<'_, H> {
    #[inline]
    fn drop(&mut self) {
        let min = self.heap().peek_min();
        self.queue.cached_min.store(min, Ordering::Relaxed);
        self.queue.lock.store(false, Ordering::Release);
    }
}

/// Operation counters. Per handle while it lives, summed into the queue when
/// the handle is dropped or flushed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpStats {
    pub lock_attempts: u64,
    pub failed_locks: u64,
    pub inserts: u64,
    pub deletes: u64,
    /// `delete_min` calls that found both sampled queues empty.
    pub empty_deletes: u64,
    /// Strict mode only: locks given up because the minimum moved.
    pub strict_retries: u64,
}

impl OpStats {
    pub fn completed_ops(&self) -> u64 {
        self.inserts + self.deletes + self.empty_deletes
    }

    /// Mean lock attempts per completed operation; 0 when nothing completed.
    pub fn mean_attempts_per_op(&self) -> f64 {
        match self.completed_ops() {
            0 => 0.0,
            n => self.lock_attempts as f64 / n as f64,
        }
    }

    pub fn merge(&mut self, other: &OpStats) {
        self.lock_attempts += other.lock_attempts;
        self.failed_locks += other.failed_locks;
        self.inserts += other.inserts;
        self.deletes += other.deletes;
        self.empty_deletes += other.empty_deletes;
        self.strict_retries += other.strict_retries;
    }
}

#[derive(Default)]
struct SharedStats {
    lock_attempts: AtomicU64,
    failed_locks: AtomicU64,
    inserts: AtomicU64,
    deletes: AtomicU64,
    empty_deletes: AtomicU64,
    strict_retries: AtomicU64,
}

impl SharedStats {
    fn add(&self, s: &OpStats) {
        let r = Ordering::Relaxed;
        self.lock_attempts.fetch_add(s.lock_attempts, r);
        self.failed_locks.fetch_add(s.failed_locks, r);
        self.inserts.fetch_add(s.inserts, r);
        self.deletes.fetch_add(s.deletes, r);
        self.empty_deletes.fetch_add(s.empty_deletes, r);
        self.strict_retries.fetch_add(s.strict_retries, r);
    }

    fn snapshot(&self) -> OpStats {
        let r = Ordering::Relaxed;
        OpStats {
            lock_attempts: self.lock_attempts.load(r),
            failed_locks: self.failed_locks.load(r),
            inserts: self.inserts.load(r),
            deletes: self.deletes.load(r),
            empty_deletes: self.empty_deletes.load(r),
            strict_retries: self.strict_retries.load(r),
        }
    }
}

/// Relaxed concurrent priority queue over `num_queues` sequential heaps.
pub struct MultiQueue<H = DaryHeap> {
    queues: Box<[CachePadded<LocalQueue<H>>]>,
    config: MultiQueueConfig,
    base_seed: u64,
    next_handle: AtomicUsize,
    stats: CachePadded<SharedStats>,
}

impl MultiQueue<DaryHeap> {
    pub fn new(config: MultiQueueConfig) -> Result<Self> {
        let arity = config.arity;
        let capacity = config.initial_capacity.unwrap_or(0);
        Self::with_backend(config, || DaryHeap::with_capacity(arity, capacity))
    }

    /// Total number of heap resizes across all local queues.
    pub fn grow_count(&mut self) -> u64 {
        self.queues
            .iter_mut()
            .map(|q| q.heap_mut().grow_count())
            .sum()
    }
}

impl<H: SequentialQueue> MultiQueue<H> {
    /// Builds a queue whose local queues come from `make_backend`.
    pub fn with_backend(config: MultiQueueConfig, mut make_backend: impl FnMut() -> H) -> Result<Self> {
        let n = config.validate()?;
        let queues = (0..n)
            .map(|_| CachePadded::new(LocalQueue::new(make_backend())))
            .collect();
        let base_seed = config.base_seed();
        Ok(Self {
            queues,
            config,
            base_seed,
            next_handle: AtomicUsize::new(0),
            stats: CachePadded::new(SharedStats::default()),
        })
    }

    pub fn num_queues(&self) -> usize {
        self.queues.len()
    }

    pub fn config(&self) -> &MultiQueueConfig {
        &self.config
    }

    /// Seed the per-handle generators are derived from.
    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    /// New handle with the next unused thread id.
    pub fn handle(&self) -> Handle<'_, H> {
        let id = self.next_handle.fetch_add(1, Ordering::Relaxed);
        self.handle_with_id(id)
    }

    /// New handle with an explicit thread id. Two live handles with the same
    /// id draw identical random streams, which is safe but correlated.
    pub fn handle_with_id(&self, id: usize) -> Handle<'_, H> {
        Handle {
            mq: self,
            id,
            rng: handle_rng(self.base_seed, id),
            stats: OpStats::default(),
        }
    }

    /// Counters flushed by handles so far.
    pub fn stats(&self) -> OpStats {
        self.stats.snapshot()
    }

    /// Cached minimum of queue `i`, possibly stale under concurrency.
    pub fn cached_min(&self, i: usize) -> Key {
        self.queues[i].min()
    }

    /// True when no local queue is locked.
    pub fn all_unlocked(&self) -> bool {
        self.queues.iter().all(|q| !q.lock.load(Ordering::Acquire))
    }

    pub fn queue_lens(&mut self) -> Vec<usize> {
        self.queues.iter_mut().map(|q| q.heap_mut().len()).collect()
    }

    pub fn len(&mut self) -> usize {
        self.queue_lens().iter().sum()
    }

    pub fn is_empty(&mut self) -> bool {
        self.len() == 0
    }

    /// Places `e` directly into queue `index`, bypassing random placement.
    pub fn insert_into(&mut self, index: usize, e: Element) -> Result<()> {
        let len = self.queues.len();
        let q = self.queues.get_mut(index).ok_or(Error::QueueIndex { index, len })?;
        assert_ne!(e.key, SENTINEL, "sentinel key cannot be inserted");
        let heap = q.heap.get_mut();
        heap.push(e);
        let min = heap.peek_min();
        *q.cached_min.get_mut() = min;
        Ok(())
    }

    /// Empties every local queue and returns what was in them.
    pub fn drain(&mut self) -> Vec<Element> {
        let mut out = Vec::new();
        for q in self.queues.iter_mut() {
            out.extend(q.heap.get_mut().drain_all());
            *q.cached_min.get_mut() = SENTINEL;
        }
        out
    }
}

/// Per-thread access point to a [`MultiQueue`].
pub struct Handle<'a, H: SequentialQueue = DaryHeap> {
    mq: &'a MultiQueue<H>,
    id: usize,
    rng: Pcg64Mcg,
    stats: OpStats,
}

impl<'a, H: SequentialQueue> Handle<'a, H> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn queue(&self) -> &'a MultiQueue<H> {
        self.mq
    }

    /// Counters for operations issued through this handle and not yet flushed.
    pub fn stats(&self) -> OpStats {
        self.stats
    }

    /// Adds this handle's counters to the queue-wide totals and resets them.
    pub fn flush_stats(&mut self) {
        self.mq.stats.add(&self.stats);
        self.stats = OpStats::default();
    }

    #[inline]
    fn random_index(&mut self) -> usize {
        self.rng.random_range(0..self.mq.queues.len())
    }

    #[inline]
    fn lock_random(&mut self) -> LockGuard<'a, H> {
        loop {
            let i = self.random_index();
            self.stats.lock_attempts += 1;
            if let Some(guard) = self.mq.queues[i].try_lock() {
                return guard;
            }
            self.stats.failed_locks += 1;
        }
    }

    /// Inserts `e` into a uniformly random unlocked queue.
    ///
    /// Panics if `e.key` is the sentinel.
    pub fn insert(&mut self, e: Element) {
        self.insert_observed(e, || {});
    }

    /// Like [`insert`](Self::insert), running `observe` while the target
    /// queue is still locked.
    pub fn insert_observed(&mut self, e: Element, observe: impl FnOnce()) {
        assert_ne!(e.key, SENTINEL, "sentinel key cannot be inserted");
        let mut guard = self.lock_random();
        guard.heap().push(e);
        observe();
        self.stats.inserts += 1;
    }

    /// Pops the smaller minimum of two randomly sampled queues.
    ///
    /// `None` means both candidates were empty, not that the whole
    /// MultiQueue is.
    pub fn delete_min(&mut self) -> Option<Element> {
        self.delete_min_observed(|_| {})
    }

    /// Like [`delete_min`](Self::delete_min), running `observe` on the popped
    /// element while its queue is still locked.
    pub fn delete_min_observed(&mut self, observe: impl FnOnce(&Element)) -> Option<Element> {
        let queues = &self.mq.queues;
        let mut guard = loop {
            let mut i = self.random_index();
            let mut j = self.random_index();
            let (mut min_i, min_j) = (queues[i].min(), queues[j].min());
            if min_i > min_j {
                std::mem::swap(&mut i, &mut j);
                min_i = min_j;
            }
            self.stats.lock_attempts += 1;
            match queues[i].try_lock() {
                Some(guard) => {
                    if self.mq.config.strict_min && queues[i].min() != min_i {
                        self.stats.strict_retries += 1;
                        drop(guard);
                        continue;
                    }
                    break guard;
                }
                None => self.stats.failed_locks += 1,
            }
        };
        match guard.heap().pop_min() {
            Some(e) => {
                observe(&e);
                self.stats.deletes += 1;
                Some(e)
            }
            None => {
                self.stats.empty_deletes += 1;
                None
            }
        }
    }

    /// Repeats [`delete_min`](Self::delete_min) until it yields an element.
    ///
    /// Spins forever if the queue is and stays empty.
    pub fn delete_min_blocking(&mut self) -> Element {
        loop {
            if let Some(e) = self.delete_min() {
                return e;
            }
            std::hint::spin_loop();
        }
    }
}

impl<H: SequentialQueue> Drop for Handle<'_, H> {
    fn drop(&mut self) {
        self.flush_stats();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mq(p: usize, c: f64) -> MultiQueue {
        MultiQueue::new(MultiQueueConfig::new(p, c)).unwrap()
    }

    #[test]
    fn queue_counts() {
        assert_eq!(mq(56, 2.0).num_queues(), 112);
        assert_eq!(mq(1, 1.0).num_queues(), 1);
        let q = MultiQueue::new(MultiQueueConfig::new(4, 2.0).with_num_queues(7)).unwrap();
        assert_eq!(q.num_queues(), 7);
    }

    #[test]
    fn construction_errors() {
        assert!(MultiQueue::new(MultiQueueConfig::new(4, 2.0).with_num_queues(0)).is_err());
        assert!(MultiQueue::new(MultiQueueConfig::new(4, 2.0).with_arity(1)).is_err());
    }

    #[test]
    fn fresh_queue_is_empty_and_unlocked() {
        let mut q = mq(4, 2.0);
        assert!((0..8).all(|i| q.cached_min(i) == SENTINEL));
        assert!(q.all_unlocked());
        assert_eq!(q.stats(), OpStats::default());
        assert!(q.is_empty());
    }

    #[test]
    fn single_queue_round_trip() {
        let q = mq(1, 1.0);
        let mut h = q.handle();
        h.insert(Element::new(5, 77));
        let e = h.delete_min().unwrap();
        assert_eq!((e.key, e.value), (5, 77));
        assert_eq!(h.delete_min(), None);
    }

    #[test]
    fn insert_lands_in_first_sampled_queue() {
        let seed = (0..10_000u64)
            .find(|&s| handle_rng(s, 0).random_range(0..4usize) == 2)
            .expect("some seed draws index 2 first");
        let mut q = MultiQueue::new(MultiQueueConfig::new(2, 2.0).with_seed(seed)).unwrap();
        q.handle_with_id(0).insert(Element::new(5, 1));
        assert_eq!(q.cached_min(2), 5);
        assert_eq!(q.queue_lens(), vec![0, 0, 1, 0]);
    }

    #[test]
    fn two_choice_picks_smaller_minimum() {
        let seed = (0..10_000u64)
            .find(|&s| {
                let mut r = handle_rng(s, 0);
                (r.random_range(0..2usize), r.random_range(0..2usize)) == (0, 1)
            })
            .unwrap();
        for (a, b) in [(3, 7), (7, 3)] {
            let mut q = MultiQueue::new(MultiQueueConfig::new(1, 2.0).with_seed(seed)).unwrap();
            q.insert_into(0, Element::new(a, 0)).unwrap();
            q.insert_into(1, Element::new(b, 0)).unwrap();
            assert_eq!(q.handle_with_id(0).delete_min().unwrap().key, 3);
        }
    }

    #[test]
    fn all_empty_gives_empty_signal() {
        let q = mq(4, 2.0);
        let mut h = q.handle();
        assert_eq!(h.delete_min(), None);
        assert_eq!(h.stats().empty_deletes, 1);
        assert!(q.all_unlocked());
    }

    #[test]
    fn blocking_delete_finds_lone_element() {
        let mut q = mq(4, 2.0);
        q.insert_into(3, Element::new(11, 5)).unwrap();
        let e = q.handle().delete_min_blocking();
        assert_eq!((e.key, e.value), (11, 5));
        assert!(q.is_empty());
    }

    #[test]
    fn single_queue_is_exact() {
        let q = mq(1, 1.0);
        let mut h = q.handle();
        let mut rng = handle_rng(99, 0);
        let keys: Vec<Key> = (0..5000).map(|_| rng.random_range(0..1_000_000)).collect();
        for &k in &keys {
            h.insert(Element::new(k, 0));
        }
        let out: Vec<Key> = std::iter::from_fn(|| h.delete_min()).map(|e| e.key).collect();
        let mut sorted = keys;
        sorted.sort_unstable();
        assert_eq!(out, sorted);
    }

    #[test]
    fn uncontended_handle_never_fails_a_lock() {
        let q = mq(1, 2.0);
        {
            let mut h = q.handle();
            for k in 0..1000 {
                h.insert(Element::new(k, 0));
                if k % 2 == 1 {
                    h.delete_min();
                }
            }
        }
        let s = q.stats();
        assert_eq!(s.failed_locks, 0);
        assert_eq!(s.lock_attempts, s.completed_ops());
        assert_eq!(s.inserts, 1000);
    }

    #[test]
    fn strict_mode_still_conserves() {
        let mut q = MultiQueue::new(MultiQueueConfig::new(2, 2.0).with_strict_min(true)).unwrap();
        {
            let mut h = q.handle();
            for k in 0..200 {
                h.insert(Element::new(k, k));
            }
            for _ in 0..100 {
                h.delete_min_blocking();
            }
        }
        assert_eq!(q.len(), 100);
    }

    #[test]
    fn cached_min_tracks_heap_after_every_op() {
        let mut q = mq(2, 2.0);
        {
            let mut h = q.handle();
            let mut rng = handle_rng(5, 5);
            for _ in 0..2000 {
                if rng.random_bool(0.6) {
                    h.insert(Element::new(rng.random_range(0..1000), 0));
                } else {
                    h.delete_min();
                }
            }
        }
        let mins: Vec<Key> = (0..q.num_queues()).map(|i| q.cached_min(i)).collect();
        for (i, q) in q.queues.iter_mut().enumerate() {
            assert_eq!(q.heap_mut().peek_min(), mins[i]);
        }
    }

    #[test]
    fn insert_into_rejects_bad_index() {
        let mut q = mq(1, 2.0);
        assert!(matches!(
            q.insert_into(2, Element::new(1, 0)),
            Err(Error::QueueIndex { index: 2, len: 2 })
        ));
    }
}
