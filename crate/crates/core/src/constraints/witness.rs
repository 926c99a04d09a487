use std::collections::HashSet;

use crate::instance::{EdgeKind, Instance, NodeId};
use crate::scalar::Scalar;

use super::ConstraintError;

/// One step of a witness path: a base edge or a lifted edge, by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Hop {
    Base(usize),
    Lifted(usize),
}

/// A path in the multigraph `G ∪ G'` over inner nodes. Consecutive nodes are
/// joined by exactly one chosen edge, either base or lifted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathWitness {
    nodes: Vec<NodeId>,
    hops: Vec<Hop>,
}

impl PathWitness {
    /// Path consisting of the single node `v`.
    pub fn single(v: NodeId) -> Self {
        PathWitness { nodes: vec![v], hops: Vec::new() }
    }

    pub fn new<T: Scalar>(instance: &Instance<T>, nodes: Vec<NodeId>, hops: Vec<Hop>) -> Result<Self, ConstraintError> {
        if nodes.is_empty() || hops.len() + 1 != nodes.len() {
            return Err(ConstraintError::MalformedWitness("hop count must be one less than node count".into()));
        }
        let mut seen = HashSet::with_capacity(nodes.len());
        for &v in &nodes {
            if !v.is_inner() || v.inner_index().unwrap() >= instance.inner_count() {
                return Err(ConstraintError::NotInner(v));
            }
            if !seen.insert(v) {
                return Err(ConstraintError::MalformedWitness(format!("node {v} repeats")));
            }
        }
        for (k, &hop) in hops.iter().enumerate() {
            let ends = match hop {
                Hop::Base(e) => instance.base_edges().get(e),
                Hop::Lifted(e) => instance.lifted_edges().get(e),
            }
            .map(|e| (e.from, e.to));
            if ends != Some((nodes[k], nodes[k + 1])) {
                return Err(ConstraintError::MalformedWitness(format!(
                    "hop {k} does not join {} and {}",
                    nodes[k],
                    nodes[k + 1]
                )));
            }
        }
        Ok(PathWitness { nodes, hops })
    }

    /// Witness using the base edge between every pair of consecutive nodes.
    pub fn base_path<T: Scalar>(instance: &Instance<T>, nodes: Vec<NodeId>) -> Result<Self, ConstraintError> {
        let kinds = vec![EdgeKind::Base; nodes.len().saturating_sub(1)];
        Self::from_kinds(instance, nodes, &kinds)
    }

    /// Witness choosing, for every consecutive pair, the edge of the given kind.
    pub fn from_kinds<T: Scalar>(
        instance: &Instance<T>,
        nodes: Vec<NodeId>,
        kinds: &[EdgeKind],
    ) -> Result<Self, ConstraintError> {
        if nodes.is_empty() || kinds.len() + 1 != nodes.len() {
            return Err(ConstraintError::MalformedWitness("one edge kind per consecutive node pair".into()));
        }
        let mut hops = Vec::with_capacity(kinds.len());
        for (w, &kind) in nodes.windows(2).zip(kinds) {
            let hop = match kind {
                EdgeKind::Base => instance.find_base(w[0], w[1]).map(Hop::Base),
                EdgeKind::Lifted => instance.find_lifted(w[0], w[1]).map(Hop::Lifted),
            };
            hops.push(hop.ok_or_else(|| {
                ConstraintError::MalformedWitness(format!("no {kind} edge {}->{}", w[0], w[1]))
            })?);
        }
        Self::new(instance, nodes, hops)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }

    pub fn first(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn last(&self) -> NodeId {
        *self.nodes.last().expect("nonempty witness")
    }

    /// `P_E`
    pub fn base_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.hops.iter().filter_map(|h| match *h {
            Hop::Base(e) => Some(e),
            Hop::Lifted(_) => None,
        })
    }

    /// `P_E'`
    pub fn lifted_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.hops.iter().filter_map(|h| match *h {
            Hop::Lifted(e) => Some(e),
            Hop::Base(_) => None,
        })
    }

    pub fn is_base_only(&self) -> bool {
        self.hops.iter().all(|h| matches!(h, Hop::Base(_)))
    }

    /// Edge count.
    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }
}
