//! Lifted disjoint paths instances: the flow network `G`, the lifted graph
//! `G'`, their costs and structural validation.

mod format;
mod reach;
mod solution;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

pub use format::{parse_instance, parse_solution, serialize_instance, write_solution, ParseError, ParseErrorKind};
pub use reach::{compute_reachability, Reachability, DENSE_REACH_LIMIT};
pub use solution::{
    active_st_paths, evaluate_objective, lifted_labels_from_flow, solution_from_paths, FlowError, FlowSolution,
};

/// Node of the flow network. Inner nodes are numbered `1..=N`; the source and
/// sink are sentinels outside that range.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub const SOURCE: NodeId = NodeId(0);
    pub const SINK: NodeId = NodeId(u32::MAX);

    /// Inner node with 1-based number `k`.
    #[inline]
    pub fn inner(k: usize) -> NodeId {
        assert!(k >= 1 && k < u32::MAX as usize, "inner node ids are 1-based");
        NodeId(k as u32)
    }

    #[inline]
    pub fn is_inner(self) -> bool {
        self != Self::SOURCE && self != Self::SINK
    }

    #[inline]
    pub fn is_terminal(self) -> bool {
        !self.is_inner()
    }

    /// Zero-based index of an inner node, `None` for the terminals.
    #[inline]
    pub fn inner_index(self) -> Option<usize> {
        self.is_inner().then(|| self.0 as usize - 1)
    }

    /// The 1-based number as written in instance files.
    #[inline]
    pub fn number(self) -> u32 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::SOURCE => f.write_str("s"),
            Self::SINK => f.write_str("t"),
            NodeId(k) => write!(f, "{k}"),
        }
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge<T> {
    pub from: NodeId,
    pub to: NodeId,
    pub cost: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Base,
    Lifted,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Base => "base",
            EdgeKind::Lifted => "lifted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("node {node} is out of range 1..={n}")]
    NodeOutOfRange { node: u32, n: usize },
    #[error("{kind} edge {from}->{to} has an invalid endpoint: {reason}")]
    BadEndpoint { kind: EdgeKind, from: NodeId, to: NodeId, reason: &'static str },
    #[error("{kind} edge {from}->{to} is a self-loop")]
    SelfLoop { kind: EdgeKind, from: NodeId, to: NodeId },
    #[error("duplicate {kind} edge {from}->{to}")]
    DuplicateEdge { kind: EdgeKind, from: NodeId, to: NodeId },
    #[error("non-finite cost on {what}")]
    NonFiniteCost { what: String },
    #[error("base graph has a cycle through edge {from}->{to}")]
    Cycle { from: NodeId, to: NodeId },
    #[error("node {node} is not reachable from the source")]
    UnreachableFromSource { node: NodeId },
    #[error("node {node} cannot reach the sink")]
    CannotReachSink { node: NodeId },
    #[error("lifted edge {from}->{to} joins nodes with no base path between them")]
    LiftedNotReachable { from: NodeId, to: NodeId },
    #[error("node {node} has no frame while other nodes do")]
    MissingFrame { node: NodeId },
    #[error("{kind} edge {from}->{to} does not go forward in time")]
    FrameOrder { kind: EdgeKind, from: NodeId, to: NodeId },
}

/// A validated lifted disjoint paths instance. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Instance<T> {
    n: usize,
    base: Vec<Edge<T>>,
    lifted: Vec<Edge<T>>,
    node_costs: Vec<T>,
    frames: Option<Vec<u32>>,
    out_base: Vec<Vec<usize>>,
    in_base: Vec<Vec<usize>>,
    out_lifted: Vec<Vec<usize>>,
    in_lifted: Vec<Vec<usize>>,
    base_index: HashMap<(NodeId, NodeId), usize>,
    lifted_index: HashMap<(NodeId, NodeId), usize>,
    topo: Vec<NodeId>,
    reach: Reachability,
}

impl<T: Scalar> Instance<T> {
    /// Number of inner nodes `N`.
    #[inline]
    pub fn inner_count(&self) -> usize {
        self.n
    }

    pub fn base_edges(&self) -> &[Edge<T>] {
        &self.base
    }

    pub fn lifted_edges(&self) -> &[Edge<T>] {
        &self.lifted
    }

    pub fn base_edge(&self, idx: usize) -> &Edge<T> {
        &self.base[idx]
    }

    pub fn lifted_edge(&self, idx: usize) -> &Edge<T> {
        &self.lifted[idx]
    }

    pub fn node_cost(&self, v: NodeId) -> T {
        v.inner_index().map_or_else(T::zero, |i| self.node_costs[i])
    }

    pub fn node_costs(&self) -> &[T] {
        &self.node_costs
    }

    pub fn frames(&self) -> Option<&[u32]> {
        self.frames.as_deref()
    }

    pub fn frame(&self, v: NodeId) -> Option<u32> {
        let i = v.inner_index()?;
        self.frames.as_ref().map(|f| f[i])
    }

    /// Inner nodes in increasing id order.
    pub fn inner_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (1..=self.n).map(NodeId::inner)
    }

    /// All nodes (terminals included) in a topological order of `G`.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// Array slot: source 0, inner nodes 1..=N, sink N+1.
    #[inline]
    pub fn slot(&self, v: NodeId) -> usize {
        slot_of(v, self.n)
    }

    #[inline]
    pub fn node_at(&self, slot: usize) -> NodeId {
        node_at(slot, self.n)
    }

    /// Indices of base edges leaving `v`.
    pub fn out_base(&self, v: NodeId) -> &[usize] {
        &self.out_base[self.slot(v)]
    }

    pub fn in_base(&self, v: NodeId) -> &[usize] {
        &self.in_base[self.slot(v)]
    }

    pub fn out_lifted(&self, v: NodeId) -> &[usize] {
        &self.out_lifted[self.slot(v)]
    }

    pub fn in_lifted(&self, v: NodeId) -> &[usize] {
        &self.in_lifted[self.slot(v)]
    }

    pub fn find_base(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.base_index.get(&(from, to)).copied()
    }

    pub fn find_lifted(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.lifted_index.get(&(from, to)).copied()
    }

    /// Reachability relation of `G` (reflexive).
    pub fn reach(&self) -> &Reachability {
        &self.reach
    }

    #[inline]
    pub fn reaches(&self, v: NodeId, w: NodeId) -> bool {
        self.reach.reaches(v, w)
    }

    pub(crate) fn out_base_slots(&self) -> &[Vec<usize>] {
        &self.out_base
    }
}

#[inline]
pub(crate) fn slot_of(v: NodeId, n: usize) -> usize {
    match v {
        NodeId::SOURCE => 0,
        NodeId::SINK => n + 1,
        NodeId(k) => k as usize,
    }
}

#[inline]
pub(crate) fn node_at(slot: usize, n: usize) -> NodeId {
    if slot == 0 {
        NodeId::SOURCE
    } else if slot == n + 1 {
        NodeId::SINK
    } else {
        NodeId::inner(slot)
    }
}

/// Incremental constructor; all structural checks run in [`InstanceBuilder::build`].
#[derive(Clone, Debug)]
pub struct InstanceBuilder<T> {
    n: usize,
    base: Vec<Edge<T>>,
    lifted: Vec<Edge<T>>,
    node_costs: Vec<T>,
    frames: Vec<Option<u32>>,
}

impl<T: Scalar> InstanceBuilder<T> {
    pub fn new(inner_count: usize) -> Self {
        InstanceBuilder {
            n: inner_count,
            base: Vec::new(),
            lifted: Vec::new(),
            node_costs: vec![T::zero(); inner_count],
            frames: vec![None; inner_count],
        }
    }

    pub fn inner_count(&self) -> usize {
        self.n
    }

    pub fn base(&mut self, from: NodeId, to: NodeId, cost: T) -> &mut Self {
        self.base.push(Edge { from, to, cost });
        self
    }

    pub fn lifted(&mut self, from: NodeId, to: NodeId, cost: T) -> &mut Self {
        self.lifted.push(Edge { from, to, cost });
        self
    }

    /// Sets the cost of inner node `v`. Out-of-range ids are ignored here
    /// and cannot occur through the parser.
    pub fn node_cost(&mut self, v: NodeId, cost: T) -> &mut Self {
        if let Some(slot) = v.inner_index().and_then(|i| self.node_costs.get_mut(i)) {
            *slot = cost;
        }
        self
    }

    pub fn frame(&mut self, v: NodeId, frame: u32) -> &mut Self {
        if let Some(slot) = v.inner_index().and_then(|i| self.frames.get_mut(i)) {
            *slot = Some(frame);
        }
        self
    }

    pub fn build(self) -> Result<Instance<T>, InstanceError> {
        let n = self.n;
        let check_range = |v: NodeId| -> Result<(), InstanceError> {
            if v.is_inner() && v.0 as usize > n {
                Err(InstanceError::NodeOutOfRange { node: v.0, n })
            } else {
                Ok(())
            }
        };

        for e in &self.base {
            check_range(e.from)?;
            check_range(e.to)?;
            let bad = |reason| InstanceError::BadEndpoint { kind: EdgeKind::Base, from: e.from, to: e.to, reason };
            if e.from == NodeId::SINK {
                return Err(bad("edges cannot leave the sink"));
            }
            if e.to == NodeId::SOURCE {
                return Err(bad("edges cannot enter the source"));
            }
            if e.from == NodeId::SOURCE && e.to == NodeId::SINK {
                return Err(bad("a source-sink edge carries no inner node"));
            }
            if e.from == e.to {
                return Err(InstanceError::SelfLoop { kind: EdgeKind::Base, from: e.from, to: e.to });
            }
            if !e.cost.is_finite() {
                return Err(InstanceError::NonFiniteCost { what: format!("base edge {}->{}", e.from, e.to) });
            }
        }
        for e in &self.lifted {
            check_range(e.from)?;
            check_range(e.to)?;
            if e.from.is_terminal() || e.to.is_terminal() {
                return Err(InstanceError::BadEndpoint {
                    kind: EdgeKind::Lifted,
                    from: e.from,
                    to: e.to,
                    reason: "lifted edges join inner nodes only",
                });
            }
            if e.from == e.to {
                return Err(InstanceError::SelfLoop { kind: EdgeKind::Lifted, from: e.from, to: e.to });
            }
            if !e.cost.is_finite() {
                return Err(InstanceError::NonFiniteCost { what: format!("lifted edge {}->{}", e.from, e.to) });
            }
        }
        for (i, c) in self.node_costs.iter().enumerate() {
            if !c.is_finite() {
                return Err(InstanceError::NonFiniteCost { what: format!("node {}", i + 1) });
            }
        }

        let mut base_index = HashMap::with_capacity(self.base.len());
        for (i, e) in self.base.iter().enumerate() {
            if base_index.insert((e.from, e.to), i).is_some() {
                return Err(InstanceError::DuplicateEdge { kind: EdgeKind::Base, from: e.from, to: e.to });
            }
        }
        let mut lifted_index = HashMap::with_capacity(self.lifted.len());
        for (i, e) in self.lifted.iter().enumerate() {
            if lifted_index.insert((e.from, e.to), i).is_some() {
                return Err(InstanceError::DuplicateEdge { kind: EdgeKind::Lifted, from: e.from, to: e.to });
            }
        }

        let frames = if self.frames.iter().any(Option::is_some) {
            let mut out = Vec::with_capacity(n);
            for (i, f) in self.frames.iter().enumerate() {
                match f {
                    Some(f) => out.push(*f),
                    None => return Err(InstanceError::MissingFrame { node: NodeId::inner(i + 1) }),
                }
            }
            let forward = |a: NodeId, b: NodeId| match (a.inner_index(), b.inner_index()) {
                (Some(i), Some(j)) => out[i] < out[j],
                _ => true,
            };
            for e in &self.base {
                if !forward(e.from, e.to) {
                    return Err(InstanceError::FrameOrder { kind: EdgeKind::Base, from: e.from, to: e.to });
                }
            }
            for e in &self.lifted {
                if !forward(e.from, e.to) {
                    return Err(InstanceError::FrameOrder { kind: EdgeKind::Lifted, from: e.from, to: e.to });
                }
            }
            Some(out)
        } else {
            None
        };

        let slots = n + 2;
        let mut out_base = vec![Vec::new(); slots];
        let mut in_base = vec![Vec::new(); slots];
        for (i, e) in self.base.iter().enumerate() {
            out_base[slot_of(e.from, n)].push(i);
            in_base[slot_of(e.to, n)].push(i);
        }
        let mut out_lifted = vec![Vec::new(); slots];
        let mut in_lifted = vec![Vec::new(); slots];
        for (i, e) in self.lifted.iter().enumerate() {
            out_lifted[slot_of(e.from, n)].push(i);
            in_lifted[slot_of(e.to, n)].push(i);
        }

        let topo = topological_order(n, &self.base, &out_base, &in_base)?;

        // every inner node lies on some s-t path
        let fwd = bfs(slots, 0, |s| out_base[s].iter().map(|&e| slot_of(self.base[e].to, n)));
        if let Some(s) = (1..=n).find(|&s| !fwd[s]) {
            return Err(InstanceError::UnreachableFromSource { node: NodeId::inner(s) });
        }
        let bwd = bfs(slots, n + 1, |s| in_base[s].iter().map(|&e| slot_of(self.base[e].from, n)));
        if let Some(s) = (1..=n).find(|&s| !bwd[s]) {
            return Err(InstanceError::CannotReachSink { node: NodeId::inner(s) });
        }

        let succ: Vec<Vec<u32>> =
            out_base.iter().map(|es| es.iter().map(|&e| slot_of(self.base[e].to, n) as u32).collect()).collect();
        let topo_slots: Vec<usize> = topo.iter().map(|&v| slot_of(v, n)).collect();
        let reach = Reachability::build(n, succ, &topo_slots);

        for e in &self.lifted {
            if !reach.reaches(e.from, e.to) {
                return Err(InstanceError::LiftedNotReachable { from: e.from, to: e.to });
            }
        }

        Ok(Instance {
            n,
            base: self.base,
            lifted: self.lifted,
            node_costs: self.node_costs,
            frames,
            out_base,
            in_base,
            out_lifted,
            in_lifted,
            base_index,
            lifted_index,
            topo,
            reach,
        })
    }
}

fn bfs<I>(slots: usize, start: usize, next: impl Fn(usize) -> I) -> Vec<bool>
where
    I: Iterator<Item = usize>,
{
    let mut seen = vec![false; slots];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(s) = queue.pop_front() {
        for t in next(s) {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    seen
}

fn topological_order<T>(
    n: usize,
    base: &[Edge<T>],
    out_base: &[Vec<usize>],
    in_base: &[Vec<usize>],
) -> Result<Vec<NodeId>, InstanceError> {
    let slots = n + 2;
    let mut indeg: Vec<usize> = in_base.iter().map(Vec::len).collect();
    let mut queue: VecDeque<usize> = (0..slots).filter(|&s| indeg[s] == 0).collect();
    let mut order = Vec::with_capacity(slots);
    while let Some(s) = queue.pop_front() {
        order.push(node_at(s, n));
        for &e in &out_base[s] {
            let t = slot_of(base[e].to, n);
            indeg[t] -= 1;
            if indeg[t] == 0 {
                queue.push_back(t);
            }
        }
    }
    if order.len() == slots {
        return Ok(order);
    }
    // walk predecessors inside the unsorted remainder until a node repeats
    let mut cur = (0..slots).find(|&s| indeg[s] > 0).expect("leftover node");
    let mut visited = vec![false; slots];
    loop {
        visited[cur] = true;
        let e = in_base[cur]
            .iter()
            .copied()
            .find(|&e| indeg[slot_of(base[e].from, n)] > 0)
            .expect("leftover node has a leftover predecessor");
        let prev = slot_of(base[e].from, n);
        if visited[prev] {
            return Err(InstanceError::Cycle { from: base[e].from, to: base[e].to });
        }
        cur = prev;
    }
}
