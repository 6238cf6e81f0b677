//! Sequential priority queue backends.
//!
//! The MultiQueue only needs push / pop-min / peek-min / len from the queue
//! sitting behind each lock, captured by [`SequentialQueue`]. [`DaryHeap`] is
//! the default backend: an implicit array heap where node `i` has children
//! `d*i + 1 ..= d*i + d`. With 8-byte elements and `d = 8` all children of a
//! node fit into one 64-byte cache line.

use crate::element::{Element, Key, SENTINEL};

/// Default heap arity.
pub const DEFAULT_ARITY: usize = 8;

/// Minimal interface for the single-threaded queue guarded by each lock.
pub trait SequentialQueue: Send {
    fn push(&mut self, e: Element);

    fn pop_min(&mut self) -> Option<Element>;

    /// Smallest key, or [`SENTINEL`] when empty.
    fn peek_min(&self) -> Key;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Removes every element, in no particular order.
    fn drain_all(&mut self) -> Vec<Element>;
}

/// Array-backed d-ary min-heap.
#[derive(Debug, Clone)]
pub struct DaryHeap {
    arity: usize,
    data: Vec<Element>,
    grow_count: u64,
}

impl DaryHeap {
    /// Creates an empty heap. Panics if `arity < 2`.
    pub fn new(arity: usize) -> Self {
        Self::with_capacity(arity, 0)
    }

    /// Creates an empty heap with room for `capacity` elements before the
    /// first resize. Panics if `arity < 2`.
    pub fn with_capacity(arity: usize, capacity: usize) -> Self {
        assert!(arity >= 2, "heap arity must be at least 2, got {arity}");
        Self {
            arity,
            data: Vec::with_capacity(capacity),
            grow_count: 0,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn capacity(&self) -> usize {
        self.data.capacity()
    }

    /// Number of times a push had to resize the backing array.
    pub fn grow_count(&self) -> u64 {
        self.grow_count
    }

    /// Elements in heap (array) order.
    pub fn as_slice(&self) -> &[Element] {
        &self.data
    }

    #[inline]
    fn parent(&self, i: usize) -> usize {
        (i - 1) / self.arity
    }

    #[inline]
    fn first_child(&self, i: usize) -> usize {
        self.arity * i + 1
    }

    fn sift_up(&mut self, mut pos: usize) {
        let moving = self.data[pos];
        while pos > 0 {
            let parent = self.parent(pos);
            if self.data[parent].key <= moving.key {
                break;
            }
            self.data[pos] = self.data[parent];
            pos = parent;
        }
        self.data[pos] = moving;
    }

    fn sift_down(&mut self, mut pos: usize) {
        let len = self.data.len();
        let moving = self.data[pos];
        loop {
            let first = self.first_child(pos);
            if first >= len {
                break;
            }
            let last = (first + self.arity).min(len);
            let mut best = first;
            let mut best_key = self.data[first].key;
            for c in first + 1..last {
                let k = self.data[c].key;
                if k < best_key {
                    best = c;
                    best_key = k;
                }
            }
            if moving.key <= best_key {
                break;
            }
            self.data[pos] = self.data[best];
            pos = best;
        }
        self.data[pos] = moving;
    }

    /// Checks the heap property over the whole array.
    pub fn is_valid(&self) -> bool {
        (1..self.data.len()).all(|i| self.data[self.parent(i)].key <= self.data[i].key)
    }
}

impl Default for DaryHeap {
    fn default() -> Self {
        Self::new(DEFAULT_ARITY)
    }
}

impl SequentialQueue for DaryHeap {
    fn push(&mut self, e: Element) {
        debug_assert_ne!(e.key, SENTINEL, "sentinel key pushed into heap");
        if self.data.len() == self.data.capacity() {
            self.grow_count += 1;
            let extra = self.data.capacity().max(1);
            self.data.reserve_exact(extra);
        }
        self.data.push(e);
        let last = self.data.len() - 1;
        self.sift_up(last);
    }

    fn pop_min(&mut self) -> Option<Element> {
        let last = self.data.pop()?;
        if self.data.is_empty() {
            return Some(last);
        }
        let min = std::mem::replace(&mut self.data[0], last);
        self.sift_down(0);
        Some(min)
    }

    #[inline]
    fn peek_min(&self) -> Key {
        self.data.first().map_or(SENTINEL, |e| e.key)
    }

    #[inline]
    fn len(&self) -> usize {
        self.data.len()
    }

    fn drain_all(&mut self) -> Vec<Element> {
        std::mem::take(&mut self.data)
    }
}
