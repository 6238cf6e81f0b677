//! MultiQueue: a relaxed concurrent priority queue.
//!
//! The structure keeps `c * p` sequential d-ary heaps for `p` threads, each
//! behind a try-lock. Inserts go to a random unlocked heap; `delete_min`
//! compares the cached minima of two random heaps and pops the smaller one.
//! Deleted elements are close to, but not always equal to, the global
//! minimum.
//!
//! ```
//! use multiqueue::{Element, MultiQueue, MultiQueueConfig};
//!
//! let q = MultiQueue::new(MultiQueueConfig::new(4, 2.0)).unwrap();
//! std::thread::scope(|s| {
//!     for t in 0..4 {
//!         let q = &q;
//!         s.spawn(move || {
//!             let mut h = q.handle();
//!             h.insert(Element::new(t, t));
//!             h.delete_min_blocking();
//!         });
//!     }
//! });
//! ```
//!
//! Besides the queue the crate carries the measurement tooling built around
//! it: [`harness`] for throughput runs and [`quality`] for rank-error
//! statistics and the geometric model they are compared with.

pub mod config;
pub mod element;
pub mod error;
pub mod harness;
pub mod heap;
pub mod multiqueue;
pub mod quality;
pub mod workload;

pub use config::{MultiQueueConfig, Seed, DEFAULT_SEED};
pub use element::{Element, Key, MAX_KEY, SENTINEL};
pub use error::{Error, Result};
pub use harness::{run_size_sweep, run_throughput, BenchResult};
pub use heap::{DaryHeap, SequentialQueue, DEFAULT_ARITY};
pub use multiqueue::{handle_rng, Handle, MultiQueue, OpStats};
pub use quality::{replay_log, simulate_quality, RankErrorStats, TheoryModel};
pub use workload::{WorkloadMode, WorkloadSpec};
