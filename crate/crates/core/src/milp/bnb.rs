use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use crate::scalar::Scalar;

use super::{Basis, Compiled, LinearConstraint, LpError, LpStatus, VarValues, VariableSpace, DEFAULT_ITERATION_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryStatus {
    Optimal,
    Infeasible,
    /// Node budget exhausted; the incumbent, if any, is returned with the
    /// best remaining bound.
    NodeLimit,
}

#[derive(Clone, Debug)]
pub struct BinaryResult<T> {
    pub status: BinaryStatus,
    /// Incumbent 0/1 assignment.
    pub values: Option<VarValues<T>>,
    /// Objective of the incumbent, `+inf` without one.
    pub objective: T,
    /// Proven lower bound on the optimum.
    pub bound: T,
    /// LP relaxations solved.
    pub nodes: usize,
    /// Nodes that were split on a fractional variable.
    pub branchings: usize,
    pub infeasible_constraint: Option<usize>,
    /// Optimal basis of the root relaxation, for restarting after rows are
    /// appended.
    pub(crate) root_basis: Option<Basis>,
}

#[derive(Clone, Copy, Debug)]
pub struct BnbOptions {
    pub node_limit: usize,
    pub iteration_limit: usize,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions { node_limit: 100_000, iteration_limit: DEFAULT_ITERATION_LIMIT }
    }
}

struct Node {
    bound: f64,
    seq: usize,
    fixings: Vec<(usize, bool)>,
    basis: Option<Rc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: smallest bound first, newest node among equal bounds
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(self.seq.cmp(&other.seq))
    }
}

/// Exact 0/1 minimization by best-first branch-and-bound.
pub fn solve_binary<T: Scalar>(
    space: &VariableSpace,
    objective: &[T],
    constraints: &[LinearConstraint<T>],
    node_limit: usize,
) -> Result<BinaryResult<T>, LpError> {
    solve_binary_with(space, objective, constraints, &BnbOptions { node_limit, ..BnbOptions::default() })
}

pub fn solve_binary_with<T: Scalar>(
    space: &VariableSpace,
    objective: &[T],
    constraints: &[LinearConstraint<T>],
    options: &BnbOptions,
) -> Result<BinaryResult<T>, LpError> {
    solve_binary_from(space, objective, constraints, options, None)
}

/// As [`solve_binary_with`], with the root relaxation restarted from `root`.
pub(crate) fn solve_binary_from<T: Scalar>(
    space: &VariableSpace,
    objective: &[T],
    constraints: &[LinearConstraint<T>],
    options: &BnbOptions,
    root: Option<Basis>,
) -> Result<BinaryResult<T>, LpError> {
    let compiled = Compiled::new(space, objective, constraints)?;
    let n = space.len();
    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, seq: 0, fixings: Vec::new(), basis: root.map(Rc::new) });
    let mut root_basis = None;
    let mut seq = 1;
    let mut incumbent: Option<(Vec<T>, T)> = None;
    let mut nodes = 0;
    let mut branchings = 0;
    let mut root_conflict = None;
    let gap = T::gap_tol();

    while let Some(node) = heap.pop() {
        if let Some((_, best)) = &incumbent {
            if T::lit(node.bound) >= *best - gap {
                continue;
            }
        }
        if nodes >= options.node_limit {
            heap.push(node);
            break;
        }
        nodes += 1;
        let mut lower = vec![T::zero(); n];
        let mut upper = vec![T::one(); n];
        for &(j, v) in &node.fixings {
            let b = if v { T::one() } else { T::zero() };
            lower[j] = b;
            upper[j] = b;
        }
        let (res, basis) = compiled.solve(space, &lower, &upper, options.iteration_limit, node.basis.as_deref())?;
        if nodes == 1 {
            root_basis = basis.clone();
        }
        if res.status != LpStatus::Optimal {
            if nodes == 1 {
                root_conflict = res.infeasible_constraint;
            }
            continue;
        }
        if let Some((_, best)) = &incumbent {
            if res.objective >= *best - gap {
                continue;
            }
        }
        let dense = res.values.flatten();
        let mut branch: Option<(usize, T)> = None;
        for (j, &v) in dense.iter().enumerate() {
            let frac = v.min(T::one() - v);
            if frac > T::integrality_tol() && branch.is_none_or(|(_, f)| frac > f) {
                branch = Some((j, frac));
            }
        }
        match branch {
            None => {
                let rounded: Vec<T> = dense.iter().map(|&v| if v > T::lit(0.5) { T::one() } else { T::zero() }).collect();
                let obj = rounded.iter().zip(objective).map(|(&v, &c)| v * c).sum();
                log::trace!("incumbent {obj} after {nodes} nodes");
                incumbent = Some((rounded, obj));
            }
            Some((j, _)) => {
                branchings += 1;
                let basis = basis.map(Rc::new);
                for v in [false, true] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(Node { bound: res.objective.as_f64(), seq, fixings, basis: basis.clone() });
                    seq += 1;
                }
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let limited = !heap.is_empty()
        && incumbent.as_ref().is_none_or(|(_, best)| T::lit(open_bound) < *best - gap);
    let (values, objective_value) = match incumbent {
        Some((v, obj)) => (Some(space.unflatten(&v)), obj),
        None => (None, T::infinity()),
    };
    let status = if limited {
        BinaryStatus::NodeLimit
    } else if values.is_some() {
        BinaryStatus::Optimal
    } else {
        BinaryStatus::Infeasible
    };
    let bound = if limited { T::lit(open_bound).min(objective_value) } else { objective_value };
    Ok(BinaryResult {
        status,
        values,
        objective: objective_value,
        bound,
        nodes,
        branchings,
        infeasible_constraint: if status == BinaryStatus::Infeasible { root_conflict } else { None },
        root_basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Family, Sense, VarHandle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(n: usize, c: &[f64], cons: &[LinearConstraint<f64>]) -> Option<f64> {
        let space = VariableSpace::new(0, 0, n);
        let mut best: Option<f64> = None;
        for mask in 0u32..(1 << n) {
            let dense: Vec<f64> = (0..n).map(|j| (mask >> j & 1) as f64).collect();
            let vals = space.unflatten(&dense);
            if cons.iter().all(|k| k.violation(&vals).unwrap() <= 1e-9) {
                let obj: f64 = dense.iter().zip(c).map(|(v, c)| v * c).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        best
    }

    #[test]
    fn integral_root_needs_no_branching() {
        let space = VariableSpace::new(0, 0, 2);
        let cons = vec![LinearConstraint::new(
            Family::Custom,
            [(VarHandle::lifted(0), 1.0), (VarHandle::lifted(1), 1.0)],
            Sense::Le,
            1.0,
        )];
        let res = solve_binary(&space, &[-1.0, -2.0], &cons, 10).unwrap();
        assert_eq!(res.status, BinaryStatus::Optimal);
        assert_eq!(res.branchings, 0);
        assert_eq!(res.nodes, 1);
        assert_eq!(res.objective, -2.0);
    }

    #[test]
    fn infeasible_pair() {
        let space = VariableSpace::new(0, 0, 1);
        let h = VarHandle::lifted(0);
        let cons = vec![
            LinearConstraint::new(Family::Custom, [(h, 1.0)], Sense::Le, 0.0),
            LinearConstraint::new(Family::Custom, [(h, 1.0)], Sense::Ge, 1.0),
        ];
        let res = solve_binary(&space, &[0.0], &cons, 10).unwrap();
        assert_eq!(res.status, BinaryStatus::Infeasible);
        assert!(res.values.is_none());
    }

    #[test]
    fn node_limit_reports_bound() {
        // knapsack-like: fractional root, needs branching
        let space = VariableSpace::new(0, 0, 3);
        let cons = vec![LinearConstraint::new(
            Family::Custom,
            (0..3).map(|j| (VarHandle::lifted(j), 2.0)),
            Sense::Le,
            3.0,
        )];
        let res = solve_binary(&space, &[-1.0, -1.0, -1.0], &cons, 1).unwrap();
        assert_eq!(res.status, BinaryStatus::NodeLimit);
        assert!(res.bound <= -1.0);
        let full = solve_binary(&space, &[-1.0, -1.0, -1.0], &cons, 100).unwrap();
        assert_eq!(full.status, BinaryStatus::Optimal);
        assert_eq!(full.objective, -1.0);
    }

    #[test]
    fn matches_enumeration_up_to_18_variables() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for round in 0..60 {
            let n = if round < 5 { 18 } else { rng.gen_range(2..=12) };
            let m = rng.gen_range(1..=5);
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=4) as f64 * 0.5).collect();
            let cons: Vec<_> = (0..m)
                .map(|_| {
                    let mut terms = Vec::new();
                    for j in 0..n {
                        if rng.gen_bool(0.6) {
                            terms.push((VarHandle::lifted(j), rng.gen_range(-3..=3) as f64));
                        }
                    }
                    let sense = [Sense::Le, Sense::Ge, Sense::Eq][rng.gen_range(0..3)];
                    LinearConstraint::new(Family::Custom, terms, sense, rng.gen_range(-2..=3) as f64)
                })
                .collect();
            let space = VariableSpace::new(0, 0, n);
            let res = solve_binary(&space, &c, &cons, 1_000_000).unwrap();
            match brute_force(n, &c, &cons) {
                Some(opt) => {
                    assert_eq!(res.status, BinaryStatus::Optimal, "round {round}");
                    assert!((res.objective - opt).abs() <= 1e-9, "round {round}: {} vs {opt}", res.objective);
                    let vals = res.values.unwrap();
                    assert!(cons.iter().all(|k| k.violation(&vals).unwrap() <= 1e-9));
                }
                None => assert_eq!(res.status, BinaryStatus::Infeasible, "round {round}"),
            }
        }
    }
}
