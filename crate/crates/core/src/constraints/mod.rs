//! Builders for every inequality family of the lifted disjoint paths
//! relaxation, plus the cut pool that collects them across rounds.
//!
//! Builders take the path or node argument explicitly; enumerating
//! arguments is left to separation and to the bound tool.

mod pool;
mod witness;

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::instance::{Instance, NodeId};
use crate::milp::{Family, LinearConstraint, Sense, VarHandle, VarValues};
use crate::scalar::Scalar;

pub use crate::milp::MissingHandle;
pub use pool::CutPool;
pub use witness::{Hop, PathWitness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("{0} is not an inner node")]
    NotInner(NodeId),
    #[error("lifted edge index {0} out of range")]
    UnknownLifted(usize),
    #[error("malformed witness: {0}")]
    MalformedWitness(String),
    #[error("witness runs {found_from}->{found_to}, expected {expected_from}->{expected_to}")]
    Endpoints { expected_from: NodeId, expected_to: NodeId, found_from: NodeId, found_to: NodeId },
    #[error("witness must use base edges only")]
    NotBasePath,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("instance has no frame annotations")]
    FramesAbsent,
}

/// Side of a single-node cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutSide {
    /// `y'_vw <= sum of y_vu` over successors `u` of `v` that reach `w`.
    OutOfV,
    /// `y'_vw <= sum of y_uw` over predecessors `u` of `w` reachable from `v`.
    IntoW,
}

/// Variant of the cut inequalities built over paths ending in `w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymVariant {
    Plain,
    Lifted,
    Strengthened,
}

fn lifted_ends<T: Scalar>(instance: &Instance<T>, lifted: usize) -> Result<(NodeId, NodeId), ConstraintError> {
    let e = instance.lifted_edges().get(lifted).ok_or(ConstraintError::UnknownLifted(lifted))?;
    Ok((e.from, e.to))
}

fn check_ends(witness: &PathWitness, from: NodeId, to: NodeId) -> Result<(), ConstraintError> {
    if witness.first() != from || witness.last() != to {
        return Err(ConstraintError::Endpoints {
            expected_from: from,
            expected_to: to,
            found_from: witness.first(),
            found_to: witness.last(),
        });
    }
    Ok(())
}

/// `-y'_ij + y_ij(parallel)` for every lifted hop, the correction shared by
/// all lifted forms, with the sign convention of a `<=` cut.
fn lifted_hop_terms<T: Scalar>(instance: &Instance<T>, witness: &PathWitness, sign: T, terms: &mut Vec<(VarHandle, T)>) {
    for e in witness.lifted_edges() {
        terms.push((VarHandle::lifted(e), sign));
        let edge = instance.lifted_edge(e);
        if let Some(b) = instance.find_base(edge.from, edge.to) {
            terms.push((VarHandle::base(b), -sign));
        }
    }
}

/// Flow conservation at inner node `v`: in-flow `= x_v` and out-flow `= x_v`.
pub fn build_flow_conservation<T: Scalar>(
    instance: &Instance<T>,
    v: NodeId,
) -> Result<[LinearConstraint<T>; 2], ConstraintError> {
    let i = v.inner_index().filter(|&i| i < instance.inner_count()).ok_or(ConstraintError::NotInner(v))?;
    let x = (VarHandle::node(i), -T::one());
    let inflow = instance.in_base(v).iter().map(|&e| (VarHandle::base(e), T::one())).chain([x]);
    let outflow = instance.out_base(v).iter().map(|&e| (VarHandle::base(e), T::one())).chain([x]);
    Ok([
        LinearConstraint::new(Family::Flow, inflow, Sense::Eq, T::zero()),
        LinearConstraint::new(Family::Flow, outflow, Sense::Eq, T::zero()),
    ])
}

pub fn build_single_node_cut<T: Scalar>(
    instance: &Instance<T>,
    lifted: usize,
    side: CutSide,
) -> Result<LinearConstraint<T>, ConstraintError> {
    let (v, w) = lifted_ends(instance, lifted)?;
    let mut terms = vec![(VarHandle::lifted(lifted), T::one())];
    match side {
        CutSide::OutOfV => {
            for &e in instance.out_base(v) {
                if instance.reaches(instance.base_edge(e).to, w) {
                    terms.push((VarHandle::base(e), -T::one()));
                }
            }
        }
        CutSide::IntoW => {
            for &e in instance.in_base(w) {
                if instance.reaches(v, instance.base_edge(e).from) {
                    terms.push((VarHandle::base(e), -T::one()));
                }
            }
        }
    }
    Ok(LinearConstraint::new(Family::SingleCut, terms, Sense::Le, T::zero()))
}

fn path_inequality_terms<T: Scalar>(
    instance: &Instance<T>,
    lifted: usize,
    witness: &PathWitness,
) -> Result<Vec<(VarHandle, T)>, ConstraintError> {
    let (v, w) = lifted_ends(instance, lifted)?;
    check_ends(witness, v, w)?;
    let on_path: HashSet<NodeId> = witness.nodes().iter().copied().collect();
    // y'_vw - sum_{j in P_V} y_vj + sum_{interior i} sum_{k not in P_V} y_ik >= 0
    let mut terms = vec![(VarHandle::lifted(lifted), T::one())];
    for &e in instance.out_base(v) {
        if on_path.contains(&instance.base_edge(e).to) {
            terms.push((VarHandle::base(e), -T::one()));
        }
    }
    for &i in &witness.nodes()[1..witness.nodes().len() - 1] {
        for &e in instance.out_base(i) {
            if !on_path.contains(&instance.base_edge(e).to) {
                terms.push((VarHandle::base(e), T::one()));
            }
        }
    }
    Ok(terms)
}

/// Path inequality for lifted edge `vw` along a base-edge `vw`-path.
pub fn build_path_inequality<T: Scalar>(
    instance: &Instance<T>,
    lifted: usize,
    path: &PathWitness,
) -> Result<LinearConstraint<T>, ConstraintError> {
    if !path.is_base_only() {
        return Err(ConstraintError::NotBasePath);
    }
    let terms = path_inequality_terms(instance, lifted, path)?;
    Ok(LinearConstraint::new(Family::Path, terms, Sense::Ge, T::zero()))
}

/// Lifted path inequality: the path inequality over a witness in `G ∪ G'`,
/// adding `+ sum y'_ij - sum y_ij(parallel)` over its lifted hops.
pub fn build_lifted_path_inequality<T: Scalar>(
    instance: &Instance<T>,
    lifted: usize,
    witness: &PathWitness,
) -> Result<LinearConstraint<T>, ConstraintError> {
    let mut terms = path_inequality_terms(instance, lifted, witness)?;
    lifted_hop_terms(instance, witness, -T::one(), &mut terms);
    Ok(LinearConstraint::new(Family::LiftedPath, terms, Sense::Ge, T::zero()))
}

/// Multicut-style path inequality `y'_vw >= sum_{P_E} (y_ij - 1) + 1`.
///
/// Provably weaker than [`build_path_inequality`]; kept for comparisons and
/// never added by the solver.
pub fn build_multicut_path<T: Scalar>(
    instance: &Instance<T>,
    lifted: usize,
    path: &PathWitness,
) -> Result<LinearConstraint<T>, ConstraintError> {
    if !path.is_base_only() {
        return Err(ConstraintError::NotBasePath);
    }
    let (v, w) = lifted_ends(instance, lifted)?;
    check_ends(path, v, w)?;
    let mut terms = vec![(VarHandle::lifted(lifted), T::one())];
    terms.extend(path.base_edges().map(|e| (VarHandle::base(e), -T::one())));
    let rhs = T::one() - T::from_usize(path.len()).expect("path length fits");
    Ok(LinearConstraint::new(Family::MulticutPath, terms, Sense::Ge, rhs))
}

/// `y'_vw - sum_{i in P_V, i != skip} sum_{k not in P_V, keep(k)} y_ik <= 0`
/// with outgoing (`forward`) or incoming edges.
fn cut_terms<T: Scalar>(
    instance: &Instance<T>,
    lifted: usize,
    witness: &PathWitness,
    forward: bool,
    skip: Option<NodeId>,
) -> Vec<(VarHandle, T)> {
    let (v, w) = (instance.lifted_edge(lifted).from, instance.lifted_edge(lifted).to);
    let on_path: HashSet<NodeId> = witness.nodes().iter().copied().collect();
    let mut terms = vec![(VarHandle::lifted(lifted), T::one())];
    for &i in witness.nodes() {
        if Some(i) == skip {
            continue;
        }
        if forward {
            for &e in instance.out_base(i) {
                let k = instance.base_edge(e).to;
                if !on_path.contains(&k) && instance.reaches(k, w) {
                    terms.push((VarHandle::base(e), -T::one()));
                }
            }
        } else {
            for &e in instance.in_base(i) {
                let k = instance.base_edge(e).from;
                if !on_path.contains(&k) && instance.reaches(v, k) {
                    terms.push((VarHandle::base(e), -T::one()));
                }
            }
        }
    }
    terms
}

/// Path-induced cut for lifted edge `vw` and a base `vu`-path with
/// `uw ∈ R`, `u != w`.
pub fn build_path_induced_cut<T: Scalar>(
    instance: &Instance<T>,
    lifted: usize,
    path: &PathWitness,
) -> Result<LinearConstraint<T>, ConstraintError> {
    if !path.is_base_only() {
        return Err(ConstraintError::NotBasePath);
    }
    let mut c = build_lifted_path_induced_cut(instance, lifted, path, false)?;
    c = LinearConstraint::new(Family::PathCut, c.terms().to_vec(), c.sense(), c.rhs());
    Ok(c)
}

/// Lifted path-induced cut for lifted edge `vw` over a `vu`-witness in
/// `G ∪ G'`. The strengthened form requires `uw ∈ E'`, drops the edges
/// leaving `u` and adds `y'_uw`.
pub fn build_lifted_path_induced_cut<T: Scalar>(
    instance: &Instance<T>,
    lifted: usize,
    witness: &PathWitness,
    strengthened: bool,
) -> Result<LinearConstraint<T>, ConstraintError> {
    let (v, w) = lifted_ends(instance, lifted)?;
    let u = witness.last();
    check_ends(witness, v, u)?;
    if strengthened {
        let uw = instance
            .find_lifted(u, w)
            .ok_or_else(|| ConstraintError::Precondition(format!("no lifted edge {u}->{w}")))?;
        let mut terms = cut_terms(instance, lifted, witness, true, Some(u));
        lifted_hop_terms(instance, witness, T::one(), &mut terms);
        terms.push((VarHandle::lifted(uw), -T::one()));
        Ok(LinearConstraint::new(Family::LiftedPathCutStrong, terms, Sense::Le, T::zero()))
    } else {
        if u == w || !instance.reaches(u, w) {
            return Err(ConstraintError::Precondition(format!("cut path must end at u != {w} with a path to {w}")));
        }
        let mut terms = cut_terms(instance, lifted, witness, true, None);
        lifted_hop_terms(instance, witness, T::one(), &mut terms);
        Ok(LinearConstraint::new(Family::LiftedPathCut, terms, Sense::Le, T::zero()))
    }
}

/// Cut inequalities over a `uw`-witness ending in `w`, summing edges that
/// enter the witness from nodes reachable from `v`.
pub fn build_symmetric_cut<T: Scalar>(
    instance: &Instance<T>,
    lifted: usize,
    witness: &PathWitness,
    variant: SymVariant,
) -> Result<LinearConstraint<T>, ConstraintError> {
    let (v, w) = lifted_ends(instance, lifted)?;
    let u = witness.first();
    check_ends(witness, u, w)?;
    match variant {
        SymVariant::Plain | SymVariant::Lifted => {
            if variant == SymVariant::Plain && !witness.is_base_only() {
                return Err(ConstraintError::NotBasePath);
            }
            if u == v || !instance.reaches(v, u) {
                return Err(ConstraintError::Precondition(format!("cut path must start at u != {v} reachable from {v}")));
            }
            let mut terms = cut_terms(instance, lifted, witness, false, None);
            lifted_hop_terms(instance, witness, T::one(), &mut terms);
            let family = if variant == SymVariant::Plain { Family::SymPathCut } else { Family::SymLiftedPathCut };
            Ok(LinearConstraint::new(family, terms, Sense::Le, T::zero()))
        }
        SymVariant::Strengthened => {
            let vu = instance
                .find_lifted(v, u)
                .ok_or_else(|| ConstraintError::Precondition(format!("no lifted edge {v}->{u}")))?;
            let mut terms = cut_terms(instance, lifted, witness, false, Some(u));
            lifted_hop_terms(instance, witness, T::one(), &mut terms);
            terms.push((VarHandle::lifted(vu), -T::one()));
            Ok(LinearConstraint::new(Family::SymLiftedPathCutStrong, terms, Sense::Le, T::zero()))
        }
    }
}

/// For every node and every other frame, at most one lifted edge between the
/// node and that frame can be active, and only if the node is used.
pub fn build_lifted_flow_inequalities<T: Scalar>(instance: &Instance<T>) -> Result<Vec<LinearConstraint<T>>, ConstraintError> {
    if instance.frames().is_none() {
        return Err(ConstraintError::FramesAbsent);
    }
    let frame = |v: NodeId| instance.frame(v).expect("frames present");
    let mut out = Vec::new();
    for v in instance.inner_nodes() {
        let x = (VarHandle::node(v.inner_index().unwrap()), -T::one());
        for (edges, far) in [(instance.out_lifted(v), true), (instance.in_lifted(v), false)] {
            let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
            for &e in edges {
                let edge = instance.lifted_edge(e);
                groups.entry(frame(if far { edge.to } else { edge.from })).or_default().push(e);
            }
            for group in groups.into_values() {
                let terms = group.into_iter().map(|e| (VarHandle::lifted(e), T::one())).chain([x]);
                out.push(LinearConstraint::new(Family::LiftedFlow, terms, Sense::Le, T::zero()));
            }
        }
    }
    Ok(out)
}

/// Amount by which `values` violate `constraint`; zero when satisfied.
pub fn check_violation<T: Scalar>(constraint: &LinearConstraint<T>, values: &VarValues<T>) -> Result<T, MissingHandle> {
    constraint.violation(values)
}

/// Flow conservation for every inner node.
pub fn all_flow_conservation<T: Scalar>(instance: &Instance<T>) -> Vec<LinearConstraint<T>> {
    instance
        .inner_nodes()
        .flat_map(|v| build_flow_conservation(instance, v).expect("inner node"))
        .collect()
}

/// Both single-node cuts for every lifted edge.
pub fn all_single_node_cuts<T: Scalar>(instance: &Instance<T>) -> Vec<LinearConstraint<T>> {
    (0..instance.lifted_edges().len())
        .flat_map(|e| {
            [CutSide::OutOfV, CutSide::IntoW].map(|side| build_single_node_cut(instance, e, side).expect("valid lifted edge"))
        })
        .collect()
}

#[cfg(test)]
mod tests;
