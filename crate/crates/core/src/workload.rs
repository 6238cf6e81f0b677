//! Declarative workloads and the key streams they produce.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

use crate::config::DEFAULT_SEED;
use crate::element::{Key, MAX_KEY};
use crate::error::{Error, Result};

pub const DEFAULT_KEY_MAX: Key = 100_000_000;
pub const DEFAULT_PREFILL: usize = 1_000_000;
pub const DEFAULT_MONOTONIC_INCREMENT: Key = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkloadMode {
    /// Every insert draws a key uniformly from `0..=key_max`.
    Uniform,
    /// After deleting key `x` a thread inserts `x + y`, `y` uniform in
    /// `1..=monotonic_increment_max`.
    Monotonic,
    /// Uniform keys, run once per initial size.
    SizeSweep,
}

impl fmt::Display for WorkloadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorkloadMode::Uniform => "uniform",
            WorkloadMode::Monotonic => "monotonic",
            WorkloadMode::SizeSweep => "size-sweep",
        })
    }
}

impl FromStr for WorkloadMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(WorkloadMode::Uniform),
            "monotonic" => Ok(WorkloadMode::Monotonic),
            "size-sweep" => Ok(WorkloadMode::SizeSweep),
            other => Err(Error::Workload(format!("unknown mode {other:?}"))),
        }
    }
}

/// What a benchmark or quality run does. Operations always alternate
/// insert / delete-min per thread, starting with an insert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub mode: WorkloadMode,
    pub key_max: Key,
    pub prefill: usize,
    pub threads: usize,
    /// Wall-clock budget for throughput runs.
    pub duration: Duration,
    /// Total operations for quality runs.
    pub op_count: u64,
    pub monotonic_increment_max: Key,
    pub seed: u64,
    /// Track every element by a unique payload and check conservation
    /// after the run. Slower; never combine with throughput numbers.
    pub verify: bool,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            mode: WorkloadMode::Uniform,
            key_max: DEFAULT_KEY_MAX,
            prefill: DEFAULT_PREFILL,
            threads: 1,
            duration: Duration::from_secs(1),
            op_count: 10_000_000,
            monotonic_increment_max: DEFAULT_MONOTONIC_INCREMENT,
            seed: DEFAULT_SEED,
            verify: false,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::Workload("at least one thread is required".into()));
        }
        if self.key_max > MAX_KEY {
            return Err(Error::Workload(format!("key_max {} collides with the sentinel", self.key_max)));
        }
        if self.mode == WorkloadMode::Monotonic && self.monotonic_increment_max == 0 {
            return Err(Error::Workload("monotonic increment must be at least 1".into()));
        }
        Ok(())
    }
}

/// Key generator used only by the prefill phase.
pub(crate) const PREFILL_STREAM: u64 = u64::MAX;

/// Random stream for workload keys, independent of the queue-index stream of
/// the handle with the same id.
pub fn key_rng(seed: u64, stream: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(seed.rotate_left(29) ^ 0x6b65_7973_7472_6561 ^ stream)
}

/// Produces insert keys for one thread.
pub struct KeyStream {
    mode: WorkloadMode,
    key_max: Key,
    increment_max: Key,
    rng: Pcg64Mcg,
    last_deleted: Option<Key>,
}

impl KeyStream {
    pub fn new(w: &WorkloadSpec, stream: u64) -> Self {
        Self {
            mode: w.mode,
            key_max: w.key_max,
            increment_max: w.monotonic_increment_max.max(1),
            rng: key_rng(w.seed, stream),
            last_deleted: None,
        }
    }

    #[inline]
    pub fn uniform(&mut self) -> Key {
        self.rng.random_range(0..=self.key_max)
    }

    /// Key for the next insert. In monotonic mode this follows the last
    /// deleted key; the first insert of a thread draws uniformly.
    #[inline]
    pub fn next_key(&mut self) -> Key {
        match (self.mode, self.last_deleted) {
            (WorkloadMode::Monotonic, Some(x)) => {
                let y = self.rng.random_range(1..=self.increment_max);
                x.saturating_add(y).min(MAX_KEY)
            }
            _ => self.uniform(),
        }
    }

    #[inline]
    pub fn deleted(&mut self, key: Key) {
        self.last_deleted = Some(key);
    }
}
