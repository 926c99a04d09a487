use std::fmt;
use std::str::FromStr;

use crate::instance::{FlowSolution, Instance};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Node,
    Base,
    Lifted,
}

/// A variable of the master problem: `x_v`, `y_e` or `y'_e`, identified by
/// its index in the instance's node, base-edge or lifted-edge list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarHandle {
    pub kind: VarKind,
    pub index: usize,
}

impl VarHandle {
    /// Node variable of the inner node with zero-based index `i`.
    pub const fn node(i: usize) -> Self {
        VarHandle { kind: VarKind::Node, index: i }
    }

    pub const fn base(e: usize) -> Self {
        VarHandle { kind: VarKind::Base, index: e }
    }

    pub const fn lifted(e: usize) -> Self {
        VarHandle { kind: VarKind::Lifted, index: e }
    }

    /// Readable name in terms of node numbers, e.g. `x3`, `y[s,1]`, `y'[1,4]`.
    pub fn name<T: Scalar>(self, instance: &Instance<T>) -> String {
        match self.kind {
            VarKind::Node => format!("x{}", self.index + 1),
            VarKind::Base => {
                let e = instance.base_edge(self.index);
                format!("y[{},{}]", e.from, e.to)
            }
            VarKind::Lifted => {
                let e = instance.lifted_edge(self.index);
                format!("y'[{},{}]", e.from, e.to)
            }
        }
    }
}

impl fmt::Display for VarHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            VarKind::Node => write!(f, "x#{}", self.index),
            VarKind::Base => write!(f, "y#{}", self.index),
            VarKind::Lifted => write!(f, "y'#{}", self.index),
        }
    }
}

/// Dense layout of all handles: nodes, then base edges, then lifted edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariableSpace {
    pub nodes: usize,
    pub base: usize,
    pub lifted: usize,
}

impl VariableSpace {
    pub fn new(nodes: usize, base: usize, lifted: usize) -> Self {
        VariableSpace { nodes, base, lifted }
    }

    pub fn for_instance<T: Scalar>(instance: &Instance<T>) -> Self {
        Self::new(instance.inner_count(), instance.base_edges().len(), instance.lifted_edges().len())
    }

    pub fn len(&self) -> usize {
        self.nodes + self.base + self.lifted
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, h: VarHandle) -> Option<usize> {
        match h.kind {
            VarKind::Node => (h.index < self.nodes).then_some(h.index),
            VarKind::Base => (h.index < self.base).then_some(self.nodes + h.index),
            VarKind::Lifted => (h.index < self.lifted).then_some(self.nodes + self.base + h.index),
        }
    }

    pub fn handle(&self, col: usize) -> VarHandle {
        if col < self.nodes {
            VarHandle::node(col)
        } else if col < self.nodes + self.base {
            VarHandle::base(col - self.nodes)
        } else {
            assert!(col < self.len(), "column out of range");
            VarHandle::lifted(col - self.nodes - self.base)
        }
    }

    pub fn zeros<T: Scalar>(&self) -> VarValues<T> {
        VarValues { x: vec![T::zero(); self.nodes], y: vec![T::zero(); self.base], y_lifted: vec![T::zero(); self.lifted] }
    }

    pub fn unflatten<T: Scalar>(&self, dense: &[T]) -> VarValues<T> {
        let (x, rest) = dense.split_at(self.nodes);
        let (y, yl) = rest.split_at(self.base);
        VarValues { x: x.to_vec(), y: y.to_vec(), y_lifted: yl.to_vec() }
    }

    /// Objective coefficients of an instance in dense column order.
    pub fn objective<T: Scalar>(instance: &Instance<T>) -> Vec<T> {
        let mut c = instance.node_costs().to_vec();
        c.extend(instance.base_edges().iter().map(|e| e.cost));
        c.extend(instance.lifted_edges().iter().map(|e| e.cost));
        c
    }
}

/// Values of all variables, possibly fractional.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct VarValues<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub y_lifted: Vec<T>,
}

impl<T: Scalar> VarValues<T> {
    pub fn get(&self, h: VarHandle) -> Option<T> {
        match h.kind {
            VarKind::Node => self.x.get(h.index).copied(),
            VarKind::Base => self.y.get(h.index).copied(),
            VarKind::Lifted => self.y_lifted.get(h.index).copied(),
        }
    }

    pub fn set(&mut self, h: VarHandle, value: T) {
        match h.kind {
            VarKind::Node => self.x[h.index] = value,
            VarKind::Base => self.y[h.index] = value,
            VarKind::Lifted => self.y_lifted[h.index] = value,
        }
    }

    pub fn from_solution(solution: &FlowSolution<T>) -> Self {
        let conv = |v: &[bool]| v.iter().map(|&b| if b { T::one() } else { T::zero() }).collect();
        VarValues { x: conv(&solution.x), y: conv(&solution.y), y_lifted: conv(&solution.y_lifted) }
    }

    pub fn flatten(&self) -> Vec<T> {
        self.x.iter().chain(&self.y).chain(&self.y_lifted).copied().collect()
    }

    pub fn is_integral(&self) -> bool {
        self.x
            .iter()
            .chain(&self.y)
            .chain(&self.y_lifted)
            .all(|&v| (v - v.round()).abs() <= T::integrality_tol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// Inequality family a constraint was instantiated from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Flow,
    SingleCut,
    Path,
    PathCut,
    LiftedPath,
    LiftedPathCut,
    LiftedPathCutStrong,
    SymPathCut,
    SymLiftedPathCut,
    SymLiftedPathCutStrong,
    LiftedFlow,
    MulticutPath,
    Custom,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::Flow,
        Family::SingleCut,
        Family::Path,
        Family::PathCut,
        Family::LiftedPath,
        Family::LiftedPathCut,
        Family::LiftedPathCutStrong,
        Family::SymPathCut,
        Family::SymLiftedPathCut,
        Family::SymLiftedPathCutStrong,
        Family::LiftedFlow,
        Family::MulticutPath,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Flow => "flow",
            Family::SingleCut => "single-cut",
            Family::Path => "path",
            Family::PathCut => "path-cut",
            Family::LiftedPath => "lifted-path",
            Family::LiftedPathCut => "lifted-path-cut",
            Family::LiftedPathCutStrong => "lifted-path-cut-strong",
            Family::SymPathCut => "sym-path-cut",
            Family::SymLiftedPathCut => "sym-lifted-path-cut",
            Family::SymLiftedPathCutStrong => "sym-lifted-path-cut-strong",
            Family::LiftedFlow => "lifted-flow",
            Family::MulticutPath => "multicut-path",
            Family::Custom => "custom",
        }
    }
}

impl From<Family> for &'static str {
    fn from(f: Family) -> Self {
        f.name()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .chain([Family::Custom])
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown inequality family `{s}`"))
    }
}

/// Sparse linear constraint `sum a_h * v_h (sense) rhs`.
///
/// Terms are kept sorted by handle with duplicates merged and zero
/// coefficients dropped, so equal constraints compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint<T> {
    family: Family,
    terms: Vec<(VarHandle, T)>,
    sense: Sense,
    rhs: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no value for variable {0}")]
pub struct MissingHandle(pub VarHandle);

impl<T: Scalar> LinearConstraint<T> {
    pub fn new(family: Family, terms: impl IntoIterator<Item = (VarHandle, T)>, sense: Sense, rhs: T) -> Self {
        let mut terms: Vec<(VarHandle, T)> = terms.into_iter().collect();
        terms.sort_by_key(|&(h, _)| h);
        let mut merged: Vec<(VarHandle, T)> = Vec::with_capacity(terms.len());
        for (h, a) in terms {
            match merged.last_mut() {
                Some((lh, la)) if *lh == h => *la = *la + a,
                _ => merged.push((h, a)),
            }
        }
        merged.retain(|(_, a)| !a.is_zero());
        LinearConstraint { family, terms: merged, sense, rhs: rhs + T::zero() }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn terms(&self) -> &[(VarHandle, T)] {
        &self.terms
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn rhs(&self) -> T {
        self.rhs
    }

    pub fn coefficient(&self, h: VarHandle) -> T {
        self.terms.binary_search_by_key(&h, |&(k, _)| k).map_or_else(|_| T::zero(), |i| self.terms[i].1)
    }

    pub fn lhs(&self, values: &VarValues<T>) -> Result<T, MissingHandle> {
        let mut s = T::zero();
        for &(h, a) in &self.terms {
            s = s + a * values.get(h).ok_or(MissingHandle(h))?;
        }
        Ok(s)
    }

    /// Amount by which `values` violates the constraint, zero when satisfied.
    pub fn violation(&self, values: &VarValues<T>) -> Result<T, MissingHandle> {
        Ok(self.violation_of_lhs(self.lhs(values)?))
    }

    pub(crate) fn violation_of_lhs(&self, lhs: T) -> T {
        let d = match self.sense {
            Sense::Le => lhs - self.rhs,
            Sense::Ge => self.rhs - lhs,
            Sense::Eq => (lhs - self.rhs).abs(),
        };
        d.max(T::zero())
    }

    /// Hashable identity of the inequality, independent of its family tag.
    pub fn key(&self) -> ConstraintKey {
        ConstraintKey {
            terms: self.terms.iter().map(|&(h, a)| (h, a.hash_bits())).collect(),
            sense: self.sense,
            rhs: self.rhs.hash_bits(),
        }
    }

    /// One line of the debugging dump: `tag: a*var + ... <= rhs`.
    pub fn dump(&self, instance: &Instance<T>) -> String {
        use crate::scalar::format_sig;
        let mut out = format!("{}:", self.family);
        if self.terms.is_empty() {
            out.push_str(" 0");
        }
        for (k, &(h, a)) in self.terms.iter().enumerate() {
            let v = a.as_f64();
            out.push_str(match (k, v < 0.0) {
                (0, false) => " ",
                (0, true) => " -",
                (_, false) => " + ",
                (_, true) => " - ",
            });
            if v.abs() != 1.0 {
                out.push_str(&format_sig(v.abs()));
                out.push('*');
            }
            out.push_str(&h.name(instance));
        }
        out.push(' ');
        out.push_str(self.sense.symbol());
        out.push(' ');
        out.push_str(&format_sig(self.rhs.as_f64()));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConstraintKey {
    terms: Vec<(VarHandle, u64)>,
    sense: Sense,
    rhs: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_terms() {
        let c = LinearConstraint::new(
            Family::Custom,
            [(VarHandle::lifted(2), 1.0), (VarHandle::node(0), -1.0), (VarHandle::lifted(2), 1.0), (VarHandle::base(1), 0.0)],
            Sense::Le,
            0.0,
        );
        assert_eq!(c.terms(), &[(VarHandle::node(0), -1.0), (VarHandle::lifted(2), 2.0)]);
        let d = LinearConstraint::new(Family::Path, [(VarHandle::lifted(2), 2.0), (VarHandle::node(0), -1.0)], Sense::Le, -0.0);
        assert_eq!(c.key(), d.key());
    }

    #[test]
    fn violation_amounts() {
        let space = VariableSpace::new(1, 0, 1);
        let mut v = space.zeros::<f64>();
        v.set(VarHandle::lifted(0), 1.0);
        let eq = LinearConstraint::new(Family::Flow, [(VarHandle::node(0), 1.0)], Sense::Eq, 0.0);
        assert_eq!(eq.violation(&v).unwrap(), 0.0);
        let cut = LinearConstraint::new(Family::SingleCut, [(VarHandle::lifted(0), 1.0)], Sense::Le, 0.0);
        assert_eq!(cut.violation(&v).unwrap(), 1.0);
        let missing = LinearConstraint::new(Family::Custom, [(VarHandle::base(3), 1.0)], Sense::Le, 0.0);
        assert_eq!(missing.violation(&v), Err(MissingHandle(VarHandle::base(3))));
    }

    #[test]
    fn space_layout() {
        let s = VariableSpace::new(2, 3, 1);
        assert_eq!(s.len(), 6);
        for col in 0..6 {
            assert_eq!(s.column(s.handle(col)), Some(col));
        }
        assert_eq!(s.column(VarHandle::base(3)), None);
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("bogus".parse::<Family>().is_err());
    }
}
