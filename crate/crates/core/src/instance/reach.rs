use std::sync::OnceLock;

use super::{slot_of, Instance, NodeId};
use crate::scalar::Scalar;

/// Inner-node count up to which the full closure is materialized eagerly.
pub const DENSE_REACH_LIMIT: usize = 4096;

/// Reflexive reachability relation of the flow network.
///
/// Small graphs keep the whole transitive closure as a bit matrix; larger
/// ones compute a row by DFS the first time it is queried and cache it.
#[derive(Debug, Clone)]
pub struct Reachability {
    n: usize,
    words: usize,
    store: Store,
}

#[derive(Debug, Clone)]
enum Store {
    Dense(Vec<u64>),
    Lazy { succ: Vec<Vec<u32>>, rows: Vec<OnceLock<Vec<u64>>> },
}

impl Reachability {
    pub(crate) fn build(n: usize, succ: Vec<Vec<u32>>, topo_slots: &[usize]) -> Self {
        if n <= DENSE_REACH_LIMIT {
            Self::dense(n, &succ, topo_slots)
        } else {
            Self::lazy(n, succ)
        }
    }

    fn dense(n: usize, succ: &[Vec<u32>], topo_slots: &[usize]) -> Self {
        let slots = n + 2;
        let words = slots.div_ceil(64);
        let mut bits = vec![0u64; slots * words];
        for &s in topo_slots.iter().rev() {
            bits[s * words + s / 64] |= 1 << (s % 64);
            // successors come later in topological order, their rows are final
            for &t in &succ[s] {
                let t = t as usize;
                for w in 0..words {
                    let word = bits[t * words + w];
                    bits[s * words + w] |= word;
                }
            }
        }
        Reachability { n, words, store: Store::Dense(bits) }
    }

    fn lazy(n: usize, succ: Vec<Vec<u32>>) -> Self {
        let slots = n + 2;
        let rows = (0..slots).map(|_| OnceLock::new()).collect();
        Reachability { n, words: slots.div_ceil(64), store: Store::Lazy { succ, rows } }
    }

    /// Forces the memoized-DFS representation regardless of size.
    pub fn lazy_for<T: Scalar>(instance: &Instance<T>) -> Self {
        let n = instance.inner_count();
        Self::lazy(n, successor_slots(instance))
    }

    /// Whether a directed path from `v` to `w` exists (`v == w` included).
    pub fn reaches(&self, v: NodeId, w: NodeId) -> bool {
        let (a, b) = (slot_of(v, self.n), slot_of(w, self.n));
        let bit = |row: &[u64]| row[b / 64] >> (b % 64) & 1 == 1;
        match &self.store {
            Store::Dense(bits) => bit(&bits[a * self.words..(a + 1) * self.words]),
            Store::Lazy { succ, rows } => bit(rows[a].get_or_init(|| dfs_row(succ, a, self.words))),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.store, Store::Dense(_))
    }
}

fn dfs_row(succ: &[Vec<u32>], start: usize, words: usize) -> Vec<u64> {
    let mut row = vec![0u64; words];
    let mut stack = vec![start];
    row[start / 64] |= 1 << (start % 64);
    while let Some(s) = stack.pop() {
        for &t in &succ[s] {
            let t = t as usize;
            if row[t / 64] >> (t % 64) & 1 == 0 {
                row[t / 64] |= 1 << (t % 64);
                stack.push(t);
            }
        }
    }
    row
}

fn successor_slots<T: Scalar>(instance: &Instance<T>) -> Vec<Vec<u32>> {
    instance
        .out_base_slots()
        .iter()
        .map(|es| es.iter().map(|&e| instance.slot(instance.base_edge(e).to) as u32).collect())
        .collect()
}

/// Computes the reachability relation of `instance` from scratch.
pub fn compute_reachability<T: Scalar>(instance: &Instance<T>) -> Reachability {
    let topo: Vec<usize> = instance.topological_order().iter().map(|&v| instance.slot(v)).collect();
    Reachability::build(instance.inner_count(), successor_slots(instance), &topo)
}
