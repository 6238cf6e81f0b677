//! Timestamped operation logs.
//!
//! Text format, one record per line:
//!
//! ```text
//! timestamp,thread,kind,key,payload
//! ```
//!
//! all decimal, `kind` is `I` or `D`. Lines starting with `#` are comments;
//! `# multi_socket=1` marks a log whose timestamps came from several sockets.
//!
//! Timestamps come from a [`LogClock`], a process-wide counter ticked while
//! the affected local queue is locked. Lock handoff orders the ticks, so an
//! element's insert always precedes its delete in timestamp order.

use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::element::{Element, Key};
use crate::error::{Error, Result};
use crate::heap::SequentialQueue;
use crate::multiqueue::Handle;
use crate::quality::ostree::OrderStatTree;
use crate::quality::stats::RankErrorStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Insert,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpLogRecord {
    pub timestamp: u64,
    pub thread: u32,
    pub kind: OpKind,
    pub key: Key,
    pub payload: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpLog {
    pub records: Vec<OpLogRecord>,
    pub multi_socket: bool,
}

/// Monotonic tick source shared by all recording threads.
#[derive(Debug, Default)]
pub struct LogClock(AtomicU64);

impl LogClock {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn tick(&self) -> u64 {
        self.0.fetch_add(1, Ordering::Relaxed)
    }
}

/// A [`Handle`] that records each completed operation into a thread-local
/// buffer.
pub struct LoggedHandle<'a, 'c, H: SequentialQueue> {
    handle: Handle<'a, H>,
    clock: &'c LogClock,
    thread: u32,
    records: Vec<OpLogRecord>,
}

impl<'a, 'c, H: SequentialQueue> LoggedHandle<'a, 'c, H> {
    pub fn new(handle: Handle<'a, H>, clock: &'c LogClock) -> Self {
        let thread = handle.id() as u32;
        Self {
            handle,
            clock,
            thread,
            records: Vec::new(),
        }
    }

    pub fn insert(&mut self, e: Element) {
        let mut ts = 0;
        self.handle.insert_observed(e, || ts = self.clock.tick());
        self.records.push(OpLogRecord {
            timestamp: ts,
            thread: self.thread,
            kind: OpKind::Insert,
            key: e.key,
            payload: e.value,
        });
    }

    pub fn delete_min(&mut self) -> Option<Element> {
        let mut ts = 0;
        let e = self.handle.delete_min_observed(|_| ts = self.clock.tick())?;
        self.records.push(OpLogRecord {
            timestamp: ts,
            thread: self.thread,
            kind: OpKind::Delete,
            key: e.key,
            payload: e.value,
        });
        Some(e)
    }

    pub fn delete_min_blocking(&mut self) -> Element {
        loop {
            if let Some(e) = self.delete_min() {
                return e;
            }
            std::hint::spin_loop();
        }
    }

    pub fn into_records(self) -> Vec<OpLogRecord> {
        self.records
    }
}

impl OpLog {
    /// Merges per-thread buffers into one log sorted by timestamp.
    pub fn merge(buffers: impl IntoIterator<Item = Vec<OpLogRecord>>) -> Self {
        let mut records: Vec<OpLogRecord> = buffers.into_iter().flatten().collect();
        records.sort_by_key(|r| r.timestamp);
        Self {
            records,
            multi_socket: false,
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        if self.multi_socket {
            writeln!(w, "# multi_socket=1")?;
        }
        for r in &self.records {
            let kind = match r.kind {
                OpKind::Insert => 'I',
                OpKind::Delete => 'D',
            };
            writeln!(w, "{},{},{},{},{}", r.timestamp, r.thread, kind, r.key, r.payload)?;
        }
        Ok(())
    }

    pub fn parse(r: impl BufRead) -> Result<Self> {
        let mut log = OpLog::default();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if comment.trim() == "multi_socket=1" {
                    log.multi_socket = true;
                }
                continue;
            }
            log.records.push(parse_record(line).map_err(|reason| Error::LogParse { line: lineno, reason })?);
        }
        Ok(log)
    }

    /// Checks that each thread's timestamps strictly increase in file order.
    pub fn check_thread_order(&self) -> Result<()> {
        let mut last = std::collections::HashMap::new();
        for (i, r) in self.records.iter().enumerate() {
            if let Some(prev) = last.insert(r.thread, r.timestamp) {
                if r.timestamp <= prev {
                    return Err(Error::LogParse {
                        line: i + 1,
                        reason: format!("timestamp {} of thread {} does not increase", r.timestamp, r.thread),
                    });
                }
            }
        }
        Ok(())
    }
}

fn parse_record(line: &str) -> std::result::Result<OpLogRecord, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let [ts, thread, kind, key, payload] = fields[..] else {
        return Err(format!("expected 5 fields, found {}", fields.len()));
    };
    let num = |name: &str, s: &str| s.parse::<u64>().map_err(|e| format!("bad {name} {s:?}: {e}"));
    let kind = match kind {
        "I" => OpKind::Insert,
        "D" => OpKind::Delete,
        other => return Err(format!("unknown kind {other:?}")),
    };
    let narrow = |name: &str, v: u64| u32::try_from(v).map_err(|_| format!("{name} {v} out of range"));
    Ok(OpLogRecord {
        timestamp: num("timestamp", ts)?,
        thread: narrow("thread", num("thread", thread)?)?,
        kind,
        key: narrow("key", num("key", key)?)?,
        payload: narrow("payload", num("payload", payload)?)?,
    })
}

/// Feeds the log through the sorted-multiset oracle in timestamp order.
///
/// Logs flagged as multi-socket are refused unless `force` is set.
pub fn replay_log(log: &OpLog, force: bool) -> Result<RankErrorStats> {
    if log.multi_socket && !force {
        return Err(Error::MultiSocketLog);
    }
    let mut order: Vec<&OpLogRecord> = log.records.iter().collect();
    order.sort_by_key(|r| r.timestamp);
    let mut oracle = OrderStatTree::with_capacity(order.len() / 2);
    let mut stats = RankErrorStats::new();
    for r in order {
        match r.kind {
            OpKind::Insert => oracle.insert(r.key),
            OpKind::Delete => {
                let rank = oracle.rank_and_remove(r.key).ok_or(Error::OracleMismatch(r.key))?;
                stats.record(rank);
            }
        }
    }
    Ok(stats)
}
