//! Order-statistic multiset used as the rank oracle.
//!
//! An arena-backed treap keyed by [`Key`], one node per distinct key with a
//! multiplicity count, each node carrying the total multiplicity of its
//! subtree. `rank` is a root-to-leaf walk.

use crate::element::Key;

const NIL: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Node {
    key: Key,
    prio: u32,
    count: u32,
    left: u32,
    right: u32,
    /// Total multiplicity in this subtree.
    size: u64,
}

#[derive(Clone)]
pub struct OrderStatTree {
    nodes: Vec<Node>,
    free: Vec<u32>,
    root: u32,
    prio_state: u64,
}

impl Default for OrderStatTree {
    fn default() -> Self {
        Self::new()
    }
}

impl OrderStatTree {
    pub fn new() -> Self {
        Self::with_capacity(0)
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: Vec::with_capacity(n),
            free: Vec::new(),
            root: NIL,
            prio_state: 0x9e37_79b9_7f4a_7c15,
        }
    }

    pub fn len(&self) -> u64 {
        self.size(self.root)
    }

    pub fn is_empty(&self) -> bool {
        self.root == NIL
    }

    #[inline]
    fn size(&self, n: u32) -> u64 {
        if n == NIL {
            0
        } else {
            self.nodes[n as usize].size
        }
    }

    #[inline]
    fn update(&mut self, n: u32) {
        let node = self.nodes[n as usize];
        let s = node.count as u64 + self.size(node.left) + self.size(node.right);
        self.nodes[n as usize].size = s;
    }

    // splitmix64; priorities only need to look random to the tree shape
    fn next_prio(&mut self) -> u32 {
        self.prio_state = self.prio_state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.prio_state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        (z ^ (z >> 31)) as u32
    }

    fn alloc(&mut self, key: Key) -> u32 {
        let node = Node {
            key,
            prio: self.next_prio(),
            count: 1,
            left: NIL,
            right: NIL,
            size: 1,
        };
        match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    fn rotate_right(&mut self, n: u32) -> u32 {
        let l = self.nodes[n as usize].left;
        self.nodes[n as usize].left = self.nodes[l as usize].right;
        self.nodes[l as usize].right = n;
        self.update(n);
        self.update(l);
        l
    }

    fn rotate_left(&mut self, n: u32) -> u32 {
        let r = self.nodes[n as usize].right;
        self.nodes[n as usize].right = self.nodes[r as usize].left;
        self.nodes[r as usize].left = n;
        self.update(n);
        self.update(r);
        r
    }

    pub fn insert(&mut self, key: Key) {
        self.root = self.insert_at(self.root, key);
    }

    fn insert_at(&mut self, n: u32, key: Key) -> u32 {
        if n == NIL {
            return self.alloc(key);
        }
        let node_key = self.nodes[n as usize].key;
        if key == node_key {
            self.nodes[n as usize].count += 1;
            self.nodes[n as usize].size += 1;
            return n;
        }
        if key < node_key {
            let l = self.insert_at(self.nodes[n as usize].left, key);
            self.nodes[n as usize].left = l;
            self.update(n);
            if self.nodes[l as usize].prio > self.nodes[n as usize].prio {
                return self.rotate_right(n);
            }
        } else {
            let r = self.insert_at(self.nodes[n as usize].right, key);
            self.nodes[n as usize].right = r;
            self.update(n);
            if self.nodes[r as usize].prio > self.nodes[n as usize].prio {
                return self.rotate_left(n);
            }
        }
        n
    }

    /// Removes one copy of `key`. Returns false if it was absent.
    pub fn remove(&mut self, key: Key) -> bool {
        let mut found = false;
        self.root = self.remove_at(self.root, key, &mut found);
        found
    }

    fn remove_at(&mut self, n: u32, key: Key, found: &mut bool) -> u32 {
        if n == NIL {
            return NIL;
        }
        let node = self.nodes[n as usize];
        if key < node.key {
            let l = self.remove_at(node.left, key, found);
            self.nodes[n as usize].left = l;
        } else if key > node.key {
            let r = self.remove_at(node.right, key, found);
            self.nodes[n as usize].right = r;
        } else {
            *found = true;
            if node.count > 1 {
                self.nodes[n as usize].count -= 1;
            } else {
                let merged = self.merge(node.left, node.right);
                self.free.push(n);
                return merged;
            }
        }
        self.update(n);
        n
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let r = self.merge(self.nodes[a as usize].right, b);
            self.nodes[a as usize].right = r;
            self.update(a);
            a
        } else {
            let l = self.merge(a, self.nodes[b as usize].left);
            self.nodes[b as usize].left = l;
            self.update(b);
            b
        }
    }

    /// Number of stored keys strictly smaller than `key`.
    pub fn rank(&self, key: Key) -> u64 {
        let mut n = self.root;
        let mut acc = 0;
        while n != NIL {
            let node = &self.nodes[n as usize];
            if key <= node.key {
                n = node.left;
            } else {
                acc += self.size(node.left) + node.count as u64;
                n = node.right;
            }
        }
        acc
    }

    pub fn contains(&self, key: Key) -> bool {
        self.count(key) > 0
    }

    pub fn count(&self, key: Key) -> u32 {
        let mut n = self.root;
        while n != NIL {
            let node = &self.nodes[n as usize];
            match key.cmp(&node.key) {
                std::cmp::Ordering::Less => n = node.left,
                std::cmp::Ordering::Greater => n = node.right,
                std::cmp::Ordering::Equal => return node.count,
            }
        }
        0
    }

    /// Rank of `key` followed by removal of one copy; `None` if absent.
    pub fn rank_and_remove(&mut self, key: Key) -> Option<u64> {
        if !self.contains(key) {
            return None;
        }
        let r = self.rank(key);
        self.remove(key);
        Some(r)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    /// Sorted-vector multiset, the brute-force reference.
    #[derive(Default)]
    struct SortedVec(Vec<Key>);

    impl SortedVec {
        fn insert(&mut self, k: Key) {
            let at = self.0.partition_point(|&x| x <= k);
            self.0.insert(at, k);
        }
        fn remove(&mut self, k: Key) -> bool {
            match self.0.binary_search(&k) {
                Ok(i) => {
                    self.0.remove(i);
                    true
                }
                Err(_) => false,
            }
        }
        fn rank(&self, k: Key) -> u64 {
            self.0.partition_point(|&x| x < k) as u64
        }
    }

    #[test]
    fn small_ranks() {
        let mut t = OrderStatTree::new();
        for k in [1, 2, 3] {
            t.insert(k);
        }
        assert_eq!(t.rank(1), 0);
        assert_eq!(t.rank(3), 2);
        let mut t = OrderStatTree::new();
        for k in [5, 5, 7] {
            t.insert(k);
        }
        assert_eq!(t.rank(5), 0);
        assert_eq!(t.rank(7), 2);
        assert_eq!(t.rank_and_remove(5), Some(0));
        assert_eq!(t.rank_and_remove(5), Some(0));
        assert_eq!(t.rank_and_remove(5), None);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn remove_absent_is_reported() {
        let mut t = OrderStatTree::new();
        t.insert(4);
        assert!(!t.remove(3));
        assert!(t.remove(4));
        assert!(t.is_empty());
    }

    proptest! {
        #[test]
        fn matches_sorted_vector(ops in prop::collection::vec((any::<bool>(), 0..64u32), 0..600)) {
            let mut t = OrderStatTree::new();
            let mut r = SortedVec::default();
            for (ins, k) in ops {
                if ins {
                    t.insert(k);
                    r.insert(k);
                } else {
                    prop_assert_eq!(t.remove(k), r.remove(k));
                }
                prop_assert_eq!(t.len(), r.0.len() as u64);
                prop_assert_eq!(t.rank(k), r.rank(k));
                prop_assert_eq!(t.rank(k + 1), r.rank(k + 1));
            }
        }
    }
}
