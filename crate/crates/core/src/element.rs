use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Priority key. Smaller keys are deleted first.
pub type Key = u32;

/// Reserved key marking an empty local queue.
///
/// Being the maximum key, an empty queue loses every two-choice comparison.
/// Real elements never carry this key.
pub const SENTINEL: Key = Key::MAX;

/// Largest key a real element may carry.
pub const MAX_KEY: Key = SENTINEL - 1;

/// A key with an opaque 32-bit payload.
///
/// Equality and ordering look at the key only, so two elements with the same
/// key compare equal regardless of payload.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Element {
    pub key: Key,
    pub value: u32,
}

impl Element {
    #[inline]
    pub const fn new(key: Key, value: u32) -> Self {
        Self { key, value }
    }
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Element {}

impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Element {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

impl From<(Key, u32)> for Element {
    fn from((key, value): (Key, u32)) -> Self {
        Self { key, value }
    }
}
