//! LP bounds under chosen inequality families, by exhaustive instantiation
//! of each family over witness paths of bounded length.

use thiserror::Error;

use crate::constraints::{
    all_flow_conservation, all_single_node_cuts, build_lifted_flow_inequalities, build_lifted_path_induced_cut,
    build_lifted_path_inequality, build_multicut_path, build_path_induced_cut, build_path_inequality, build_symmetric_cut,
    ConstraintError, CutPool, Hop, PathWitness, SymVariant,
};
use crate::instance::{Instance, NodeId};
use crate::milp::{solve_lp, Family, LinearConstraint, LpError, LpStatus, VarValues, VariableSpace};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_PATH_LEN: usize = 8;

/// Constraints enumerated per call before giving up.
pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("max path length {0} exceeds the supported maximum of {DEFAULT_MAX_PATH_LEN}")]
    PathLenTooLarge(usize),
    #[error("enumeration budget of {0} constraints exceeded")]
    BudgetExceeded(usize),
    #[error("family `{0}` cannot be enumerated")]
    Unsupported(Family),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("relaxation is {0:?}")]
    NotOptimal(LpStatus),
}

/// Walks from `start` in `G ∪ G'` with at most `max_len` edges, following
/// edges backwards when `backward` is set. `visit` sees every walk of at least
/// one edge, with nodes and hops in forward order.
fn for_each_walk<T: Scalar>(
    instance: &Instance<T>,
    start: NodeId,
    max_len: usize,
    backward: bool,
    base_only: bool,
    visit: &mut dyn FnMut(&[NodeId], &[Hop]) -> Result<(), BoundError>,
) -> Result<(), BoundError> {
    fn rec<T: Scalar>(
        instance: &Instance<T>,
        nodes: &mut Vec<NodeId>,
        hops: &mut Vec<Hop>,
        max_len: usize,
        backward: bool,
        base_only: bool,
        visit: &mut dyn FnMut(&[NodeId], &[Hop]) -> Result<(), BoundError>,
    ) -> Result<(), BoundError> {
        if hops.len() == max_len {
            return Ok(());
        }
        let cur = *nodes.last().unwrap();
        let mut next: Vec<(NodeId, Hop)> = Vec::new();
        let (base, lifted) = if backward {
            (instance.in_base(cur), instance.in_lifted(cur))
        } else {
            (instance.out_base(cur), instance.out_lifted(cur))
        };
        for &e in base {
            let edge = instance.base_edge(e);
            let other = if backward { edge.from } else { edge.to };
            if other.is_inner() {
                next.push((other, Hop::Base(e)));
            }
        }
        if !base_only {
            for &e in lifted {
                let edge = instance.lifted_edge(e);
                next.push((if backward { edge.from } else { edge.to }, Hop::Lifted(e)));
            }
        }
        for (other, hop) in next {
            nodes.push(other);
            hops.push(hop);
            if backward {
                let n: Vec<NodeId> = nodes.iter().rev().copied().collect();
                let h: Vec<Hop> = hops.iter().rev().copied().collect();
                visit(&n, &h)?;
            } else {
                visit(nodes, hops)?;
            }
            rec(instance, nodes, hops, max_len, backward, base_only, visit)?;
            nodes.pop();
            hops.pop();
        }
        Ok(())
    }
    rec(instance, &mut vec![start], &mut Vec::new(), max_len, backward, base_only, visit)
}

fn witness<T: Scalar>(instance: &Instance<T>, nodes: &[NodeId], hops: &[Hop]) -> PathWitness {
    PathWitness::new(instance, nodes.to_vec(), hops.to_vec()).expect("walks follow instance edges")
}

/// Every instantiation of `family` with witness paths of at most
/// `max_path_len` edges. Lifted flow inequalities are empty without frames.
pub fn enumerate_family<T: Scalar>(
    instance: &Instance<T>,
    family: Family,
    max_path_len: usize,
) -> Result<Vec<LinearConstraint<T>>, BoundError> {
    enumerate_family_with_budget(instance, family, max_path_len, DEFAULT_BUDGET)
}

pub fn enumerate_family_with_budget<T: Scalar>(
    instance: &Instance<T>,
    family: Family,
    max_path_len: usize,
    budget: usize,
) -> Result<Vec<LinearConstraint<T>>, BoundError> {
    if max_path_len > DEFAULT_MAX_PATH_LEN {
        return Err(BoundError::PathLenTooLarge(max_path_len));
    }
    let mut out = CutPool::new();
    let push = |out: &mut CutPool<T>, c: LinearConstraint<T>| {
        out.insert(c);
        if out.len() > budget {
            Err(BoundError::BudgetExceeded(budget))
        } else {
            Ok(())
        }
    };
    match family {
        Family::Flow => all_flow_conservation(instance).into_iter().try_for_each(|c| push(&mut out, c))?,
        Family::SingleCut => all_single_node_cuts(instance).into_iter().try_for_each(|c| push(&mut out, c))?,
        Family::LiftedFlow => {
            if instance.frames().is_some() {
                build_lifted_flow_inequalities(instance)?.into_iter().try_for_each(|c| push(&mut out, c))?
            }
        }
        Family::Custom => return Err(BoundError::Unsupported(family)),
        Family::SymPathCut | Family::SymLiftedPathCut | Family::SymLiftedPathCutStrong => {
            let base_only = family == Family::SymPathCut;
            for (e, edge) in instance.lifted_edges().iter().enumerate() {
                let (v, w) = (edge.from, edge.to);
                let mut visit = |nodes: &[NodeId], hops: &[Hop]| {
                    for c in sym_cuts(instance, family, e, v, &witness(instance, nodes, hops))? {
                        push(&mut out, c)?;
                    }
                    Ok(())
                };
                visit(&[w], &[])?;
                for_each_walk(instance, w, max_path_len, true, base_only, &mut visit)?;
            }
        }
        _ => {
            let base_only = matches!(family, Family::Path | Family::PathCut | Family::MulticutPath);
            for (e, edge) in instance.lifted_edges().iter().enumerate() {
                let (v, w) = (edge.from, edge.to);
                let mut visit = |nodes: &[NodeId], hops: &[Hop]| {
                    if let Some(c) = forward(instance, family, e, w, &witness(instance, nodes, hops))? {
                        push(&mut out, c)?;
                    }
                    Ok(())
                };
                visit(&[v], &[])?;
                for_each_walk(instance, v, max_path_len, false, base_only, &mut visit)?;
            }
        }
    }
    Ok(out.constraints().to_vec())
}

/// The constraint of a forward family for lifted edge `e` over a witness
/// starting at its tail, if the witness qualifies.
fn forward<T: Scalar>(
    instance: &Instance<T>,
    family: Family,
    e: usize,
    w: NodeId,
    p: &PathWitness,
) -> Result<Option<LinearConstraint<T>>, ConstraintError> {
    let u = p.last();
    let only_self = p.hops() == [Hop::Lifted(e)];
    Ok(match family {
        Family::Path if u == w => Some(build_path_inequality(instance, e, p)?),
        Family::MulticutPath if u == w => Some(build_multicut_path(instance, e, p)?),
        Family::LiftedPath if u == w && !only_self => Some(build_lifted_path_inequality(instance, e, p)?),
        Family::PathCut if u != w && instance.reaches(u, w) => Some(build_path_induced_cut(instance, e, p)?),
        Family::LiftedPathCut if u != w && instance.reaches(u, w) => {
            Some(build_lifted_path_induced_cut(instance, e, p, false)?)
        }
        Family::LiftedPathCutStrong if u != p.first() && instance.find_lifted(u, w).is_some() => {
            Some(build_lifted_path_induced_cut(instance, e, p, true)?)
        }
        _ => None,
    })
}

fn sym_cuts<T: Scalar>(
    instance: &Instance<T>,
    family: Family,
    e: usize,
    v: NodeId,
    p: &PathWitness,
) -> Result<Vec<LinearConstraint<T>>, ConstraintError> {
    let u = p.first();
    Ok(match family {
        Family::SymPathCut if u != v && instance.reaches(v, u) => vec![build_symmetric_cut(instance, e, p, SymVariant::Plain)?],
        Family::SymLiftedPathCut if u != v && instance.reaches(v, u) => {
            vec![build_symmetric_cut(instance, e, p, SymVariant::Lifted)?]
        }
        Family::SymLiftedPathCutStrong if u != p.last() && instance.find_lifted(v, u).is_some() => {
            vec![build_symmetric_cut(instance, e, p, SymVariant::Strengthened)?]
        }
        _ => Vec::new(),
    })
}

/// All enumerated constraints of the given families, deduplicated.
pub fn enumerate_families<T: Scalar>(
    instance: &Instance<T>,
    families: &[Family],
    max_path_len: usize,
) -> Result<Vec<LinearConstraint<T>>, BoundError> {
    let mut pool = CutPool::new();
    for &f in families {
        pool.extend(enumerate_family(instance, f, max_path_len)?);
    }
    Ok(pool.constraints().to_vec())
}

#[derive(Clone, Debug)]
pub struct LpBound<T> {
    pub value: T,
    pub point: VarValues<T>,
    pub constraints: usize,
}

/// Optimum of the LP relaxation over the `[0, 1]` box and the given families.
pub fn lp_bound<T: Scalar>(instance: &Instance<T>, families: &[Family], max_path_len: usize) -> Result<LpBound<T>, BoundError> {
    let constraints = enumerate_families(instance, families, max_path_len)?;
    let space = VariableSpace::for_instance(instance);
    let res = solve_lp(&space, &VariableSpace::objective(instance), &constraints)?;
    if res.status != LpStatus::Optimal {
        return Err(BoundError::NotOptimal(res.status));
    }
    Ok(LpBound { value: res.objective, point: res.values, constraints: constraints.len() })
}
