use thiserror::Error;

use super::{Instance, NodeId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("flow conservation violated at node {node}: in {inflow}, out {outflow}, x {x}")]
    Conservation { node: NodeId, inflow: usize, outflow: usize, x: bool },
    #[error("{what}[{index}] = {value} is not integral")]
    NotIntegral { what: &'static str, index: usize, value: f64 },
    #[error("path uses missing base edge {from}->{to}")]
    MissingEdge { from: NodeId, to: NodeId },
    #[error("node {node} appears on more than one path")]
    NodeReused { node: NodeId },
    #[error("empty path")]
    EmptyPath,
}

/// Binary labeling `(x, y, y')` together with its objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution<T> {
    /// Node usage, indexed by inner node (`NodeId::inner_index`).
    pub x: Vec<bool>,
    /// Base edge flow, indexed like `Instance::base_edges`.
    pub y: Vec<bool>,
    /// Lifted edge labels, indexed like `Instance::lifted_edges`.
    pub y_lifted: Vec<bool>,
    pub objective: T,
}

impl<T: Scalar> FlowSolution<T> {
    pub fn empty(instance: &Instance<T>) -> Self {
        FlowSolution {
            x: vec![false; instance.inner_count()],
            y: vec![false; instance.base_edges().len()],
            y_lifted: vec![false; instance.lifted_edges().len()],
            objective: T::zero(),
        }
    }

    /// Rounds LP/ILP values to a binary labeling; values further than the
    /// integrality tolerance from 0 or 1 are rejected.
    pub fn from_values(instance: &Instance<T>, x: &[T], y: &[T], y_lifted: &[T]) -> Result<Self, FlowError> {
        fn round<T: Scalar>(what: &'static str, vals: &[T], expected: usize) -> Result<Vec<bool>, FlowError> {
            if vals.len() != expected {
                return Err(FlowError::LengthMismatch { what, expected, got: vals.len() });
            }
            vals.iter()
                .enumerate()
                .map(|(index, &v)| {
                    if v.abs() <= T::integrality_tol() {
                        Ok(false)
                    } else if (v - T::one()).abs() <= T::integrality_tol() {
                        Ok(true)
                    } else {
                        Err(FlowError::NotIntegral { what, index, value: v.as_f64() })
                    }
                })
                .collect()
        }
        let mut sol = FlowSolution {
            x: round("x", x, instance.inner_count())?,
            y: round("y", y, instance.base_edges().len())?,
            y_lifted: round("y_lifted", y_lifted, instance.lifted_edges().len())?,
            objective: T::zero(),
        };
        sol.objective = evaluate_objective(instance, &sol);
        Ok(sol)
    }
}

/// Checks conservation and decomposes the active base edges into their
/// vertex-disjoint s-t paths (inner nodes only), ordered by first node.
pub(crate) fn trace_paths<T: Scalar>(
    instance: &Instance<T>,
    x: &[bool],
    y: &[bool],
) -> Result<Vec<Vec<NodeId>>, FlowError> {
    if x.len() != instance.inner_count() {
        return Err(FlowError::LengthMismatch { what: "x", expected: instance.inner_count(), got: x.len() });
    }
    if y.len() != instance.base_edges().len() {
        return Err(FlowError::LengthMismatch { what: "y", expected: instance.base_edges().len(), got: y.len() });
    }
    for v in instance.inner_nodes() {
        let inflow = instance.in_base(v).iter().filter(|&&e| y[e]).count();
        let outflow = instance.out_base(v).iter().filter(|&&e| y[e]).count();
        let xv = x[v.inner_index().unwrap()];
        let want = usize::from(xv);
        if inflow != want || outflow != want {
            return Err(FlowError::Conservation { node: v, inflow, outflow, x: xv });
        }
    }
    let mut paths = Vec::new();
    for &e in instance.out_base(NodeId::SOURCE) {
        if !y[e] {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = instance.base_edge(e).to;
        while cur != NodeId::SINK {
            path.push(cur);
            // conservation guarantees exactly one active out-edge
            let next = instance.out_base(cur).iter().copied().find(|&f| y[f]).expect("active successor");
            cur = instance.base_edge(next).to;
        }
        paths.push(path);
    }
    paths.sort();
    Ok(paths)
}

/// Lifted labels implied by the flow: `y'_vw = 1` iff an active `vw`-path exists.
pub fn lifted_labels_from_flow<T: Scalar>(
    instance: &Instance<T>,
    x: &[bool],
    y: &[bool],
) -> Result<Vec<bool>, FlowError> {
    let paths = trace_paths(instance, x, y)?;
    Ok(labels_from_paths(instance, &paths))
}

pub(crate) fn labels_from_paths<T: Scalar>(instance: &Instance<T>, paths: &[Vec<NodeId>]) -> Vec<bool> {
    let mut pos: Vec<Option<(usize, usize)>> = vec![None; instance.inner_count()];
    for (p, path) in paths.iter().enumerate() {
        for (i, v) in path.iter().enumerate() {
            pos[v.inner_index().unwrap()] = Some((p, i));
        }
    }
    instance
        .lifted_edges()
        .iter()
        .map(|e| match (pos[e.from.inner_index().unwrap()], pos[e.to.inner_index().unwrap()]) {
            (Some((pa, ia)), Some((pb, ib))) => pa == pb && ia < ib,
            _ => false,
        })
        .collect()
}

/// `<c, y> + <c', y'> + <omega, x>`.
pub fn evaluate_objective<T: Scalar>(instance: &Instance<T>, solution: &FlowSolution<T>) -> T {
    let nodes: T = instance.node_costs().iter().zip(&solution.x).filter(|(_, &on)| on).map(|(&c, _)| c).sum();
    let base: T = instance.base_edges().iter().zip(&solution.y).filter(|(_, &on)| on).map(|(e, _)| e.cost).sum();
    let lifted: T =
        instance.lifted_edges().iter().zip(&solution.y_lifted).filter(|(_, &on)| on).map(|(e, _)| e.cost).sum();
    base + lifted + nodes
}

/// Vertex-disjoint s-t paths of an integral feasible flow, inner nodes only.
pub fn active_st_paths<T: Scalar>(
    instance: &Instance<T>,
    solution: &FlowSolution<T>,
) -> Result<Vec<Vec<NodeId>>, FlowError> {
    trace_paths(instance, &solution.x, &solution.y)
}

/// Assembles the labeling for a set of node-disjoint paths given by their
/// inner nodes; lifted labels and objective follow from the flow.
pub fn solution_from_paths<T: Scalar>(
    instance: &Instance<T>,
    paths: &[Vec<NodeId>],
) -> Result<FlowSolution<T>, FlowError> {
    let mut sol = FlowSolution::empty(instance);
    for path in paths {
        let (first, last) = match (path.first(), path.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(FlowError::EmptyPath),
        };
        let hops = std::iter::once((NodeId::SOURCE, first))
            .chain(path.windows(2).map(|w| (w[0], w[1])))
            .chain(std::iter::once((last, NodeId::SINK)));
        for (a, b) in hops {
            let e = instance.find_base(a, b).ok_or(FlowError::MissingEdge { from: a, to: b })?;
            sol.y[e] = true;
        }
        for &v in path {
            let i = v.inner_index().ok_or(FlowError::MissingEdge { from: v, to: v })?;
            if sol.x[i] {
                return Err(FlowError::NodeReused { node: v });
            }
            sol.x[i] = true;
        }
    }
    let mut sorted: Vec<Vec<NodeId>> = paths.to_vec();
    sorted.sort();
    sol.y_lifted = labels_from_paths(instance, &sorted);
    sol.objective = evaluate_objective(instance, &sol);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceBuilder;

    fn n(k: usize) -> NodeId {
        NodeId::inner(k)
    }

    /// s -> 1 -> 2 -> 3 -> t with lifted (1,3), (2,3), (1,2) and a parallel
    /// branch s -> 4 -> 5 -> t with lifted (4,3) bridging into the first branch.
    fn two_branch() -> Instance<f64> {
        let mut b = InstanceBuilder::new(5);
        b.base(NodeId::SOURCE, n(1), 0.5)
            .base(n(1), n(2), 1.0)
            .base(n(2), n(3), 1.0)
            .base(n(3), NodeId::SINK, 0.0)
            .base(NodeId::SOURCE, n(4), 0.0)
            .base(n(4), n(5), -2.0)
            .base(n(5), NodeId::SINK, 0.0)
            .base(n(4), n(3), 0.0)
            .lifted(n(1), n(3), -1.0)
            .lifted(n(2), n(3), 2.0)
            .lifted(n(1), n(2), 0.5)
            .lifted(n(4), n(3), 4.0)
            .node_cost(n(2), 1.5);
        b.build().unwrap()
    }

    #[test]
    fn zero_flow_has_no_lifted_labels() {
        let inst = two_branch();
        let sol = FlowSolution::empty(&inst);
        assert_eq!(lifted_labels_from_flow(&inst, &sol.x, &sol.y).unwrap(), vec![false; 4]);
        assert_eq!(evaluate_objective(&inst, &sol), 0.0);
    }

    #[test]
    fn single_path_activates_all_internal_lifted_edges() {
        let inst = two_branch();
        let sol = solution_from_paths(&inst, &[vec![n(1), n(2), n(3)]]).unwrap();
        assert_eq!(sol.y_lifted, vec![true, true, true, false]);
        assert_eq!(active_st_paths(&inst, &sol).unwrap(), vec![vec![n(1), n(2), n(3)]]);
        // 0.5 + 1 + 1 + 0 base, -1 + 2 + 0.5 lifted, 1.5 node
        assert_eq!(sol.objective, 5.5);
    }

    #[test]
    fn disjoint_paths_do_not_bridge() {
        let inst = two_branch();
        let sol = solution_from_paths(&inst, &[vec![n(4), n(5)], vec![n(1), n(2), n(3)]]).unwrap();
        assert!(!sol.y_lifted[3]);
        let paths = active_st_paths(&inst, &sol).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0], vec![n(1), n(2), n(3)]);
    }

    #[test]
    fn conservation_violation_reported() {
        let inst = two_branch();
        let mut sol = solution_from_paths(&inst, &[vec![n(1), n(2), n(3)]]).unwrap();
        sol.y[1] = false;
        let err = lifted_labels_from_flow(&inst, &sol.x, &sol.y).unwrap_err();
        assert!(matches!(err, FlowError::Conservation { node, .. } if node == n(1)));
    }

    #[test]
    fn reassembling_paths_reproduces_flow() {
        let inst = two_branch();
        for paths in [vec![], vec![vec![n(4), n(3)]], vec![vec![n(1), n(2), n(3)], vec![n(4), n(5)]]] {
            let sol = solution_from_paths(&inst, &paths).unwrap();
            let back = solution_from_paths(&inst, &active_st_paths(&inst, &sol).unwrap()).unwrap();
            assert_eq!(back.y, sol.y);
            assert_eq!(back.y_lifted, lifted_labels_from_flow(&inst, &sol.x, &sol.y).unwrap());
        }
    }

    #[test]
    fn node_reuse_and_missing_edges() {
        let inst = two_branch();
        assert_eq!(
            solution_from_paths(&inst, &[vec![n(4), n(3)], vec![n(1), n(2), n(3)]]).unwrap_err(),
            FlowError::NodeReused { node: n(3) }
        );
        assert_eq!(
            solution_from_paths(&inst, &[vec![n(1), n(3)]]).unwrap_err(),
            FlowError::MissingEdge { from: n(1), to: n(3) }
        );
    }

    #[test]
    fn rounding_values() {
        let inst = two_branch();
        let x = [1.0, 1.0, 1.0, 0.0, 0.0];
        let y = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let yl = [1.0, 1.0, 1.0 - 1e-8, 0.0];
        let sol = FlowSolution::from_values(&inst, &x, &y, &yl).unwrap();
        assert_eq!(sol.objective, 5.5);
        let bad = [0.5, 1.0, 1.0, 0.0, 0.0];
        assert!(matches!(FlowSolution::from_values(&inst, &bad, &y, &yl), Err(FlowError::NotIntegral { .. })));
    }
}
