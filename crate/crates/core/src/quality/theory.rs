//! Closed-form rank model.
//!
//! Assume the `m` queued elements sit in uniformly random local queues and
//! nothing is locked. A delete looks at two of the `c*p` queues, so each
//! element is "visible" with probability `q = 2 / (c*p)` and the rank of the
//! deleted element (counting from 1) is geometric with parameter `q`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryModel {
    pub queue_factor: f64,
    pub threads: f64,
}

impl TheoryModel {
    /// Panics unless `0 < 2 / (c*p) <= 1`.
    pub fn new(queue_factor: f64, threads: f64) -> Self {
        let m = Self { queue_factor, threads };
        let q = m.visibility();
        assert!(
            q.is_finite() && q > 0.0 && q <= 1.0,
            "model needs 0 < 2/(c*p) <= 1, got c={queue_factor} p={threads}"
        );
        m
    }

    /// Chance that a given element sits in one of the two sampled queues.
    pub fn visibility(&self) -> f64 {
        2.0 / (self.queue_factor * self.threads)
    }

    /// `P(rank = i)` for `i >= 1`; zero for `i = 0`.
    pub fn rank_pmf(&self, i: u64) -> f64 {
        if i == 0 {
            return 0.0;
        }
        let q = self.visibility();
        (1.0 - q).powf((i - 1) as f64) * q
    }

    /// `sum_{i=1..=n} P(rank = i)`, via the geometric closed form
    /// `1 - (1-q)^n`.
    pub fn rank_cdf(&self, n: u64) -> f64 {
        1.0 - self.tail(n)
    }

    /// Mean of the geometric model, `c*p/2`. Upper bound on the expected rank
    /// when fewer than infinitely many elements are queued.
    pub fn expected_rank(&self) -> f64 {
        self.queue_factor * self.threads / 2.0
    }

    /// `P(rank > k) = (1 - 2/(c*p))^k`.
    pub fn tail(&self, k: u64) -> f64 {
        (1.0 - self.visibility()).powf(k as f64)
    }

    /// Rank `k = (c*a/2) * p * ln p` at which the tail falls to about `p^-a`.
    pub fn tail_threshold(&self, a: f64) -> f64 {
        self.queue_factor * a / 2.0 * self.threads * self.threads.ln()
    }
}
