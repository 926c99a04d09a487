//! Exhaustive reference solver for small instances.
//!
//! Enumerates every set of pairwise node-disjoint s-t paths. Lifted edges
//! can only be active between nodes of one path, so each path carries its
//! full cost contribution and a set's objective is the sum over its paths.

use thiserror::Error;

use crate::instance::{solution_from_paths, FlowSolution, Instance, NodeId};
use crate::scalar::Scalar;

/// Inner node count above which the oracle refuses to run.
pub const MAX_ORACLE_NODES: usize = 128;

pub const DEFAULT_ORACLE_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {0} inner nodes; the oracle handles at most {MAX_ORACLE_NODES}")]
    TooLarge(usize),
    #[error("enumeration limit of {0} reached")]
    LimitExceeded(usize),
}

/// An s-t path with its precomputed cost share.
#[derive(Clone, Debug)]
pub struct OraclePath<T> {
    /// Inner nodes in path order.
    pub nodes: Vec<NodeId>,
    pub cost: T,
    mask: u128,
}

fn bit(v: NodeId) -> u128 {
    1u128 << v.inner_index().unwrap()
}

/// All s-t paths in lexicographic order of their node numbers.
pub fn enumerate_paths<T: Scalar>(instance: &Instance<T>, limit: usize) -> Result<Vec<OraclePath<T>>, OracleError> {
    let n = instance.inner_count();
    if n > MAX_ORACLE_NODES {
        return Err(OracleError::TooLarge(n));
    }
    let sorted_succ = |v: NodeId| {
        let mut s: Vec<(NodeId, usize)> = instance.out_base(v).iter().map(|&e| (instance.base_edge(e).to, e)).collect();
        // the sink ends a path, so it sorts before any continuation
        s.sort_by_key(|&(w, _)| if w == NodeId::SINK { 0 } else { w.number() });
        s
    };
    let succ: Vec<Vec<(NodeId, usize)>> = (0..=n).map(|i| sorted_succ(if i == 0 { NodeId::SOURCE } else { NodeId::inner(i) })).collect();
    let succ_of = |v: NodeId| &succ[if v == NodeId::SOURCE { 0 } else { v.number() as usize }];

    let mut out = Vec::new();
    let mut nodes: Vec<NodeId> = Vec::new();
    let mut edge_cost: Vec<T> = Vec::new();
    // explicit DFS stack of (node, next successor position)
    let mut stack: Vec<(NodeId, usize)> = vec![(NodeId::SOURCE, 0)];
    while let Some(top) = stack.last_mut() {
        let (v, pos) = *top;
        let Some(&(w, e)) = succ_of(v).get(pos) else {
            stack.pop();
            if v != NodeId::SOURCE {
                nodes.pop();
                edge_cost.pop();
            }
            continue;
        };
        top.1 += 1;
        let c = instance.base_edge(e).cost;
        if w == NodeId::SINK {
            if out.len() >= limit {
                return Err(OracleError::LimitExceeded(limit));
            }
            out.push(finish_path(instance, &nodes, edge_cost.iter().copied().sum::<T>() + c));
        } else {
            nodes.push(w);
            edge_cost.push(c);
            stack.push((w, 0));
        }
    }
    Ok(out)
}

fn finish_path<T: Scalar>(instance: &Instance<T>, nodes: &[NodeId], base_cost: T) -> OraclePath<T> {
    let mut pos = vec![usize::MAX; instance.inner_count()];
    for (i, v) in nodes.iter().enumerate() {
        pos[v.inner_index().unwrap()] = i;
    }
    let mut cost = base_cost + nodes.iter().map(|&v| instance.node_cost(v)).sum::<T>();
    for &v in nodes {
        for &e in instance.out_lifted(v) {
            let edge = instance.lifted_edge(e);
            if pos[edge.to.inner_index().unwrap()] != usize::MAX {
                cost = cost + edge.cost;
            }
        }
    }
    OraclePath { nodes: nodes.to_vec(), cost, mask: nodes.iter().map(|&v| bit(v)).fold(0, |a, b| a | b) }
}

/// Feasible solutions in enumeration order, possibly truncated.
#[derive(Clone, Debug)]
pub struct Enumeration<T> {
    pub solutions: Vec<FlowSolution<T>>,
    pub truncated: bool,
}

/// Visits every set of disjoint paths, as indices into `paths`, in
/// lexicographic order of the index sequences. Returns the number of sets
/// visited, or the limit error when more than `limit` exist.
fn for_each_path_set<T: Scalar>(
    paths: &[OraclePath<T>],
    limit: usize,
    mut visit: impl FnMut(&[usize], T),
) -> Result<usize, OracleError> {
    fn rec<T: Scalar>(
        paths: &[OraclePath<T>],
        start: usize,
        used: u128,
        cost: T,
        chosen: &mut Vec<usize>,
        count: &mut usize,
        limit: usize,
        visit: &mut dyn FnMut(&[usize], T),
    ) -> Result<(), OracleError> {
        if *count >= limit {
            return Err(OracleError::LimitExceeded(limit));
        }
        *count += 1;
        visit(chosen, cost);
        for i in start..paths.len() {
            if paths[i].mask & used == 0 {
                chosen.push(i);
                rec(paths, i + 1, used | paths[i].mask, cost + paths[i].cost, chosen, count, limit, visit)?;
                chosen.pop();
            }
        }
        Ok(())
    }
    let mut count = 0;
    rec(paths, 0, 0, T::zero(), &mut Vec::new(), &mut count, limit, &mut visit)?;
    Ok(count)
}

fn to_solution<T: Scalar>(instance: &Instance<T>, paths: &[OraclePath<T>], chosen: &[usize], cost: T) -> FlowSolution<T> {
    let node_lists: Vec<Vec<NodeId>> = chosen.iter().map(|&i| paths[i].nodes.clone()).collect();
    let mut sol = solution_from_paths(instance, &node_lists).expect("enumerated paths are disjoint");
    sol.objective = cost;
    sol
}

/// Every feasible labeling, starting with the empty flow. Stops after
/// `limit` solutions and sets the truncation flag.
pub fn enumerate_feasible<T: Scalar>(instance: &Instance<T>, limit: usize) -> Result<Enumeration<T>, OracleError> {
    let paths = match enumerate_paths(instance, limit) {
        Ok(p) => p,
        Err(OracleError::LimitExceeded(_)) => return Ok(Enumeration { solutions: Vec::new(), truncated: true }),
        Err(e) => return Err(e),
    };
    let mut solutions = Vec::new();
    let res = for_each_path_set(&paths, limit, |chosen, cost| solutions.push(to_solution(instance, &paths, chosen, cost)));
    match res {
        Ok(_) => Ok(Enumeration { solutions, truncated: false }),
        Err(OracleError::LimitExceeded(_)) => Ok(Enumeration { solutions, truncated: true }),
        Err(e) => Err(e),
    }
}

/// Number of feasible labelings, or the limit error.
pub fn count_feasible<T: Scalar>(instance: &Instance<T>, limit: usize) -> Result<usize, OracleError> {
    let paths = enumerate_paths(instance, limit)?;
    for_each_path_set(&paths, limit, |_, _| {})
}

fn sorted_nodes(paths: &[OraclePath<impl Scalar>], chosen: &[usize]) -> Vec<u32> {
    let mut v: Vec<u32> = chosen.iter().flat_map(|&i| paths[i].nodes.iter().map(|n| n.number())).collect();
    v.sort_unstable();
    v
}

/// Minimum-objective feasible labeling. Among optima within the feasibility
/// tolerance, the one with the lexicographically smallest sorted node set wins.
pub fn brute_force_optimum<T: Scalar>(instance: &Instance<T>, limit: usize) -> Result<FlowSolution<T>, OracleError> {
    let paths = enumerate_paths(instance, limit)?;
    let tol = T::feasibility_tol();
    let mut best: Option<(T, Vec<u32>, Vec<usize>)> = None;
    for_each_path_set(&paths, limit, |chosen, cost| {
        let replace = match &best {
            None => true,
            Some((b, _, _)) if cost < *b - tol => true,
            Some((b, nodes, _)) if (cost - *b).abs() <= tol => sorted_nodes(&paths, chosen) < *nodes,
            _ => false,
        };
        if replace {
            best = Some((cost, sorted_nodes(&paths, chosen), chosen.to_vec()));
        }
    })?;
    let (cost, _, chosen) = best.expect("the empty set is always feasible");
    Ok(to_solution(instance, &paths, &chosen, cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{evaluate_objective, InstanceBuilder};

    fn n(k: usize) -> NodeId {
        NodeId::inner(k)
    }

    #[test]
    fn chain_has_two_solutions() {
        let mut b = InstanceBuilder::new(1);
        b.base(NodeId::SOURCE, n(1), 0.0).base(n(1), NodeId::SINK, 0.0);
        let inst = b.build().unwrap();
        let e = enumerate_feasible(&inst, 100).unwrap();
        assert_eq!(e.solutions.len(), 2);
        assert!(!e.truncated);
    }

    #[test]
    fn diamond_has_four_solutions() {
        let mut b = InstanceBuilder::new(2);
        for k in [1, 2] {
            b.base(NodeId::SOURCE, n(k), 0.0).base(n(k), NodeId::SINK, 0.0);
        }
        let inst = b.build().unwrap();
        let e = enumerate_feasible(&inst, 100).unwrap();
        let sets: Vec<Vec<bool>> = e.solutions.iter().map(|s| s.x.clone()).collect();
        assert_eq!(sets, vec![vec![false, false], vec![true, false], vec![true, true], vec![false, true]]);
        assert!(enumerate_feasible(&inst, 3).unwrap().truncated);
        assert_eq!(count_feasible(&inst, 3), Err(OracleError::LimitExceeded(3)));
    }

    #[test]
    fn positive_costs_give_empty_optimum() {
        let mut b = InstanceBuilder::new(2);
        b.base(NodeId::SOURCE, n(1), 1.0).base(n(1), n(2), 0.5).base(n(2), NodeId::SINK, 2.0).lifted(n(1), n(2), 1.0);
        let inst = b.build().unwrap();
        let opt = brute_force_optimum(&inst, 100).unwrap();
        assert_eq!(opt.objective, 0.0);
        assert!(opt.x.iter().all(|&x| !x));
    }

    #[test]
    fn objective_matches_evaluation() {
        let mut b = InstanceBuilder::new(3);
        b.base(NodeId::SOURCE, n(1), -1.0)
            .base(n(1), n(2), 0.5)
            .base(n(2), n(3), 0.5)
            .base(n(1), n(3), 0.0)
            .base(n(3), NodeId::SINK, 0.0)
            .lifted(n(1), n(3), -1.5)
            .lifted(n(2), n(3), 2.0)
            .node_cost(n(2), 0.5);
        let inst = b.build().unwrap();
        for s in enumerate_feasible(&inst, 100).unwrap().solutions {
            assert_eq!(s.objective, evaluate_objective(&inst, &s));
        }
        let opt = brute_force_optimum(&inst, 100).unwrap();
        assert_eq!(opt.objective, -2.5);
        assert!(!opt.x[1]);
    }

    #[test]
    fn ties_prefer_smaller_node_sets() {
        let mut b = InstanceBuilder::new(2);
        for k in [1, 2] {
            b.base(NodeId::SOURCE, n(k), -1.0).base(n(k), NodeId::SINK, 0.0);
        }
        b.base(n(1), n(2), 0.0).node_cost(n(1), 1.0);
        let inst = b.build().unwrap();
        // {2} alone and {1} with {2} both cost -1; node set [1, 2] sorts first
        let opt = brute_force_optimum(&inst, 100).unwrap();
        assert_eq!(opt.objective, -1.0);
        assert_eq!(opt.x, vec![true, true]);
    }
}
