use thiserror::Error;

use crate::element::Key;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("number of queues must be at least 1")]
    NoQueues,
    #[error("thread hint must be at least 1")]
    NoThreads,
    #[error("queue factor must be a positive finite number, got {0}")]
    InvalidQueueFactor(f64),
    #[error("heap arity must be at least 2, got {0}")]
    InvalidArity(usize),
    #[error("queue index {index} out of range for {len} queues")]
    QueueIndex { index: usize, len: usize },

    #[error("deleted key {0} is not present in the oracle multiset")]
    OracleMismatch(Key),
    #[error("log is flagged as recorded across sockets; timestamps may be skewed (use force to replay anyway)")]
    MultiSocketLog,
    #[error("malformed log line {line}: {reason}")]
    LogParse { line: usize, reason: String },

    #[error("workload is invalid: {0}")]
    Workload(String),
    #[error("failed to spawn worker thread: {0}")]
    Spawn(std::io::Error),
    #[error("conservation check failed: {0}")]
    Conservation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
