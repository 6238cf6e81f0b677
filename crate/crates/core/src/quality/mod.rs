//! Rank-error measurement: a sorted-multiset oracle fed either by a
//! sequential simulation or by replaying a timestamped concurrent log, plus
//! the closed-form geometric model to compare against.

pub mod log;
pub mod ostree;
pub mod simulate;
pub mod stats;
pub mod theory;

pub use log::{replay_log, LogClock, LoggedHandle, OpKind, OpLog, OpLogRecord};
pub use ostree::OrderStatTree;
pub use simulate::{oracle_rank, record_concurrent_log, record_serial_log, simulate_quality};
pub use stats::{QualitySummary, RankErrorStats};
pub use theory::TheoryModel;
