use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

/// Ranks below this bound are counted in a dense array.
pub const DENSE_RANKS: usize = 1 << 16;

/// Histogram of observed rank errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankErrorStats {
    dense: Vec<u64>,
    sparse: BTreeMap<u64, u64>,
    total: u64,
    rank_sum: u128,
}

/// Quartile summary in the shape of a `0% 25% 50% 75% 100%` table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub total_deletes: u64,
    pub mean_rank: f64,
    /// Keys `"0"`, `"25"`, `"50"`, `"75"`, `"100"`.
    pub quartiles: BTreeMap<String, u64>,
}

impl Default for RankErrorStats {
    fn default() -> Self {
        Self::new()
    }
}

impl RankErrorStats {
    pub fn new() -> Self {
        Self {
            dense: Vec::new(),
            sparse: BTreeMap::new(),
            total: 0,
            rank_sum: 0,
        }
    }

    pub fn record(&mut self, rank: u64) {
        if (rank as usize) < DENSE_RANKS {
            let r = rank as usize;
            if r >= self.dense.len() {
                self.dense.resize((r + 1).next_power_of_two().min(DENSE_RANKS), 0);
            }
            self.dense[r] += 1;
        } else {
            *self.sparse.entry(rank).or_default() += 1;
        }
        self.total += 1;
        self.rank_sum += rank as u128;
    }

    pub fn total_deletes(&self) -> u64 {
        self.total
    }

    pub fn count(&self, rank: u64) -> u64 {
        if (rank as usize) < DENSE_RANKS {
            self.dense.get(rank as usize).copied().unwrap_or(0)
        } else {
            self.sparse.get(&rank).copied().unwrap_or(0)
        }
    }

    /// Nonzero `(rank, count)` pairs in increasing rank order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.dense
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(r, &c)| (r as u64, c))
            .chain(self.sparse.iter().map(|(&r, &c)| (r, c)))
    }

    pub fn mean_rank(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.rank_sum as f64 / self.total as f64
        }
    }

    pub fn max_rank(&self) -> Option<u64> {
        self.iter().last().map(|(r, _)| r)
    }

    pub fn min_rank(&self) -> Option<u64> {
        self.iter().next().map(|(r, _)| r)
    }

    /// Lower nearest-rank quantile: the rank at sorted position
    /// `floor(q * (total - 1))`. `quantile(0)` is the minimum and
    /// `quantile(1)` the maximum. `None` when nothing was recorded.
    pub fn quantile(&self, q: f64) -> Option<u64> {
        if self.total == 0 {
            return None;
        }
        let q = q.clamp(0.0, 1.0);
        let target = (q * (self.total - 1) as f64).floor() as u64;
        let mut seen = 0;
        for (r, c) in self.iter() {
            seen += c;
            if seen > target {
                return Some(r);
            }
        }
        self.max_rank()
    }

    /// Empirical `P(rank > k)`.
    pub fn tail(&self, k: u64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let at_most: u64 = self.iter().take_while(|&(r, _)| r <= k).map(|(_, c)| c).sum();
        (self.total - at_most) as f64 / self.total as f64
    }

    /// `P(rank > k)` for every `k` in `0..=k_max`, in one pass.
    pub fn tail_curve(&self, k_max: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(k_max as usize + 1);
        let mut at_most = 0;
        let total = self.total.max(1) as f64;
        for k in 0..=k_max {
            at_most += self.count(k);
            out.push((self.total - at_most) as f64 / total);
        }
        out
    }

    pub fn summary(&self) -> QualitySummary {
        let quartiles = [0u32, 25, 50, 75, 100]
            .into_iter()
            .map(|p| (p.to_string(), self.quantile(p as f64 / 100.0).unwrap_or(0)))
            .collect();
        QualitySummary {
            total_deletes: self.total,
            mean_rank: self.mean_rank(),
            quartiles,
        }
    }

    /// Writes the histogram as `rank,count` CSV.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "rank,count")?;
        for (r, c) in self.iter() {
            writeln!(w, "{r},{c}")?;
        }
        Ok(())
    }
}

impl QualitySummary {
    pub fn quartile(&self, pct: u32) -> u64 {
        self.quartiles.get(&pct.to_string()).copied().unwrap_or(0)
    }
}

impl Extend<u64> for RankErrorStats {
    fn extend<T: IntoIterator<Item = u64>>(&mut self, iter: T) {
        for r in iter {
            self.record(r);
        }
    }
}

impl FromIterator<u64> for RankErrorStats {
    fn from_iter<T: IntoIterator<Item = u64>>(iter: T) -> Self {
        let mut s = Self::new();
        s.extend(iter);
        s
    }
}
