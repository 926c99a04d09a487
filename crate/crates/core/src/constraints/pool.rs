use std::collections::{BTreeMap, HashSet};

use crate::milp::{ConstraintKey, Family, LinearConstraint};
use crate::scalar::Scalar;

/// Active constraint set of the master problem. Constraints are deduplicated
/// by their canonical form, so the same inequality reached through two
/// families is stored once under the family that added it first.
#[derive(Clone, Debug, Default)]
pub struct CutPool<T> {
    constraints: Vec<LinearConstraint<T>>,
    keys: HashSet<ConstraintKey>,
    counts: BTreeMap<Family, usize>,
}

impl<T: Scalar> CutPool<T> {
    pub fn new() -> Self {
        CutPool { constraints: Vec::new(), keys: HashSet::new(), counts: BTreeMap::new() }
    }

    /// Adds `c` unless an identical constraint is present; returns whether it was new.
    pub fn insert(&mut self, c: LinearConstraint<T>) -> bool {
        if !self.keys.insert(c.key()) {
            return false;
        }
        *self.counts.entry(c.family()).or_default() += 1;
        self.constraints.push(c);
        true
    }

    /// Inserts all of `cs`, returning how many were new per family.
    pub fn extend(&mut self, cs: impl IntoIterator<Item = LinearConstraint<T>>) -> BTreeMap<Family, usize> {
        let mut added = BTreeMap::new();
        for c in cs {
            let f = c.family();
            if self.insert(c) {
                *added.entry(f).or_default() += 1;
            }
        }
        added
    }

    pub fn contains(&self, c: &LinearConstraint<T>) -> bool {
        self.keys.contains(&c.key())
    }

    pub fn constraints(&self) -> &[LinearConstraint<T>] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn counts(&self) -> &BTreeMap<Family, usize> {
        &self.counts
    }
}
