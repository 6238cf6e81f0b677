use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heap::DEFAULT_ARITY;

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 0x5eed_0f4d_5155;

/// Where per-thread random generators get their seed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seed {
    Fixed(u64),
    /// Drawn once from the OS at construction time.
    Entropy,
}

impl Default for Seed {
    fn default() -> Self {
        Seed::Fixed(DEFAULT_SEED)
    }
}

/// Construction parameters for a [`MultiQueue`](crate::MultiQueue).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiQueueConfig {
    /// Expected number of threads operating on the queue.
    pub threads_hint: usize,
    /// Queues per thread.
    pub queue_factor: f64,
    /// Overrides `ceil(queue_factor * threads_hint)` when set.
    pub num_queues: Option<usize>,
    pub arity: usize,
    /// Slots preallocated in every local heap. `None` means the heap starts
    /// empty and grows on demand.
    pub initial_capacity: Option<usize>,
    pub seed: Seed,
    /// Re-check the cached minimum after locking and retry if it moved.
    pub strict_min: bool,
}

impl Default for MultiQueueConfig {
    fn default() -> Self {
        Self {
            threads_hint: 1,
            queue_factor: 2.0,
            num_queues: None,
            arity: DEFAULT_ARITY,
            initial_capacity: None,
            seed: Seed::default(),
            strict_min: false,
        }
    }
}

impl MultiQueueConfig {
    pub fn new(threads_hint: usize, queue_factor: f64) -> Self {
        Self {
            threads_hint,
            queue_factor,
            ..Self::default()
        }
    }

    pub fn with_num_queues(mut self, n: usize) -> Self {
        self.num_queues = Some(n);
        self
    }

    pub fn with_arity(mut self, d: usize) -> Self {
        self.arity = d;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Seed::Fixed(seed);
        self
    }

    pub fn with_entropy_seed(mut self) -> Self {
        self.seed = Seed::Entropy;
        self
    }

    pub fn with_initial_capacity(mut self, slots: usize) -> Self {
        self.initial_capacity = Some(slots);
        self
    }

    /// Sizes each local heap for `prefill` elements spread over all queues:
    /// `2 * prefill / num_queues`, rounded up to a power of two.
    pub fn with_capacity_for(mut self, prefill: usize) -> Self {
        let n = self.resolved_num_queues().unwrap_or(1).max(1);
        self.initial_capacity = Some((2 * prefill).div_ceil(n).max(1).next_power_of_two());
        self
    }

    pub fn with_strict_min(mut self, strict: bool) -> Self {
        self.strict_min = strict;
        self
    }

    /// Number of local queues this config produces.
    pub fn resolved_num_queues(&self) -> Result<usize> {
        let n = match self.num_queues {
            Some(n) => n,
            None => {
                if !(self.queue_factor.is_finite() && self.queue_factor > 0.0) {
                    return Err(Error::InvalidQueueFactor(self.queue_factor));
                }
                if self.threads_hint == 0 {
                    return Err(Error::NoThreads);
                }
                // guard against 2.0 * 56 = 112.00000000000001 style noise
                let raw = self.queue_factor * self.threads_hint as f64;
                (raw - 1e-9).ceil().max(1.0) as usize
            }
        };
        if n == 0 {
            return Err(Error::NoQueues);
        }
        Ok(n)
    }

    pub(crate) fn validate(&self) -> Result<usize> {
        if self.arity < 2 {
            return Err(Error::InvalidArity(self.arity));
        }
        self.resolved_num_queues()
    }

    pub(crate) fn base_seed(&self) -> u64 {
        match self.seed {
            Seed::Fixed(s) => s,
            Seed::Entropy => {
                use rand::TryRngCore;
                rand::rngs::OsRng.try_next_u64().unwrap_or(DEFAULT_SEED)
            }
        }
    }
}
