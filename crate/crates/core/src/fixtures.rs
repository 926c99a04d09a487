//! Small hand-built instances with fractional points separating the
//! inequality families. Each fixture records the point, the weaker family
//! set it satisfies and one constraint of a stronger family it violates.
//!
//! Nodes without a predecessor get an edge from `s`, nodes without a
//! successor an edge to `t`; the point puts on those edges whatever keeps
//! flow conservation intact.

use std::collections::HashMap;

use crate::constraints::{
    build_lifted_path_induced_cut, build_lifted_path_inequality, build_path_inequality, build_symmetric_cut, PathWitness,
    SymVariant,
};
use crate::instance::{EdgeKind, Instance, InstanceBuilder, NodeId};
use crate::milp::{Family, LinearConstraint, VarHandle, VarValues, VariableSpace};

/// A fractional point that one inequality family cuts off and another does not.
#[derive(Clone, Debug)]
pub struct StrictnessFixture {
    pub name: &'static str,
    pub instance: Instance<f64>,
    /// Node labels, `names[i]` is inner node `i + 1`.
    pub names: Vec<&'static str>,
    pub point: VarValues<f64>,
    /// The lifted edge `vw` whose label is bounded.
    pub lifted: usize,
    /// Families whose every instantiation the point satisfies.
    pub weaker: Vec<Family>,
    /// Best bound on `y'_vw` any weaker-family constraint gives at the point.
    pub weaker_bound: f64,
    pub stronger: LinearConstraint<f64>,
    /// Bound on `y'_vw` given by `stronger` at the point.
    pub stronger_bound: f64,
    pub violation: f64,
}

impl StrictnessFixture {
    pub fn node(&self, name: &str) -> NodeId {
        node_named(&self.names, name)
    }
}

fn node_named(names: &[&str], name: &str) -> NodeId {
    let i = names.iter().position(|&n| n == name).unwrap_or_else(|| panic!("no node {name}"));
    NodeId::inner(i + 1)
}

/// Bound on the variable `h` implied by `c` when every other variable is
/// fixed at `point`: an upper bound for `<=`, a lower bound for `>=`.
pub fn implied_bound(c: &LinearConstraint<f64>, h: VarHandle, point: &VarValues<f64>) -> f64 {
    let a = c.coefficient(h);
    assert!(a != 0.0, "constraint does not involve {h}");
    let rest: f64 = c.terms().iter().filter(|(k, _)| *k != h).map(|&(k, b)| b * point.get(k).expect("handle in space")).sum();
    (c.rhs() - rest) / a
}

struct Draft {
    names: Vec<&'static str>,
    base: Vec<(&'static str, &'static str, f64)>,
    lifted: Vec<(&'static str, &'static str, f64)>,
    target: (&'static str, &'static str),
    lifted_cost: f64,
}

impl Draft {
    fn build(self) -> (Instance<f64>, Vec<&'static str>, VarValues<f64>, usize) {
        let n = self.names.len();
        let id = |s: &str| node_named(&self.names, s);
        let mut inflow = vec![0.0; n];
        let mut outflow = vec![0.0; n];
        let mut has_pred = vec![false; n];
        let mut has_succ = vec![false; n];
        for &(a, b, val) in &self.base {
            let (i, j) = (id(a).inner_index().unwrap(), id(b).inner_index().unwrap());
            outflow[i] += val;
            inflow[j] += val;
            has_succ[i] = true;
            has_pred[j] = true;
        }
        let mut values: HashMap<(NodeId, NodeId), f64> = HashMap::new();
        let mut b = InstanceBuilder::new(n);
        for &(a, c, val) in &self.base {
            b.base(id(a), id(c), -0.5);
            values.insert((id(a), id(c)), val);
        }
        for i in 0..n {
            let v = NodeId::inner(i + 1);
            if !has_pred[i] {
                b.base(NodeId::SOURCE, v, 0.0);
                values.insert((NodeId::SOURCE, v), outflow[i]);
                inflow[i] = outflow[i];
            }
            if !has_succ[i] {
                b.base(v, NodeId::SINK, 0.0);
                values.insert((v, NodeId::SINK), inflow[i]);
            }
        }
        let target = (id(self.target.0), id(self.target.1));
        for &(a, c, _) in &self.lifted {
            let cost = if (id(a), id(c)) == target { self.lifted_cost } else { 0.0 };
            b.lifted(id(a), id(c), cost);
        }
        let instance = b.build().expect("fixture instance is valid");
        let mut point = VariableSpace::for_instance(&instance).zeros::<f64>();
        for (i, x) in inflow.iter().enumerate() {
            point.set(VarHandle::node(i), *x);
        }
        for (e, edge) in instance.base_edges().iter().enumerate() {
            point.set(VarHandle::base(e), values[&(edge.from, edge.to)]);
        }
        for &(a, c, val) in &self.lifted {
            point.set(VarHandle::lifted(instance.find_lifted(id(a), id(c)).unwrap()), val);
        }
        let lifted = instance.find_lifted(target.0, target.1).expect("target lifted edge");
        (instance, self.names, point, lifted)
    }
}

fn finish(
    name: &'static str,
    draft: Draft,
    weaker: &[Family],
    weaker_bound: f64,
    stronger: impl FnOnce(&Instance<f64>, &dyn Fn(&str) -> NodeId, usize) -> LinearConstraint<f64>,
) -> StrictnessFixture {
    let (instance, names, point, lifted) = draft.build();
    let id = |s: &str| node_named(&names, s);
    let stronger = stronger(&instance, &id, lifted);
    let stronger_bound = implied_bound(&stronger, VarHandle::lifted(lifted), &point);
    let violation = stronger.violation(&point).expect("complete point");
    StrictnessFixture {
        name,
        instance,
        names,
        point,
        lifted,
        weaker: weaker.to_vec(),
        weaker_bound,
        stronger,
        stronger_bound,
        violation,
    }
}

fn witness(instance: &Instance<f64>, id: &dyn Fn(&str) -> NodeId, hops: &[(&str, EdgeKind)], last: &str) -> PathWitness {
    let mut nodes: Vec<NodeId> = hops.iter().map(|&(n, _)| id(n)).collect();
    nodes.push(id(last));
    let kinds: Vec<EdgeKind> = hops.iter().map(|&(_, k)| k).collect();
    PathWitness::from_kinds(instance, nodes, &kinds).expect("fixture witness")
}

use EdgeKind::{Base as B, Lifted as L};

/// Path inequality versus the multicut-style path inequality. Two routes
/// from `v` to `w`; the long one carries half a unit that leaves nowhere.
pub fn multicut_comparison() -> StrictnessFixture {
    let draft = Draft {
        names: vec!["v", "v1", "v2", "v3", "v4", "w", "v5", "v6"],
        base: vec![
            ("v", "v1", 0.5),
            ("v1", "v2", 0.5),
            ("v2", "v3", 0.5),
            ("v3", "v4", 0.5),
            ("v4", "w", 1.0),
            ("v1", "v5", 0.0),
            ("v4", "v6", 0.0),
            ("v", "v2", 0.5),
            ("v2", "v4", 0.5),
        ],
        lifted: vec![("v", "w", 0.0)],
        target: ("v", "w"),
        lifted_cost: 2.0,
    };
    finish("multicut-comparison", draft, &[Family::Flow, Family::SingleCut, Family::MulticutPath], 0.0, |inst, id, vw| {
        let p = witness(inst, id, &[("v", B), ("v1", B), ("v2", B), ("v3", B), ("v4", B)], "w");
        build_path_inequality(inst, vw, &p).unwrap()
    })
}

/// Lifted path inequality versus plain path inequalities.
pub fn lifted_path_strictness() -> StrictnessFixture {
    let draft = Draft {
        names: vec!["v", "v1", "v2", "v3", "v4", "v5", "v6", "w"],
        base: vec![
            ("v", "v1", 1.0),
            ("v1", "v2", 0.5),
            ("v1", "v3", 0.5),
            ("v2", "v4", 0.5),
            ("v3", "v4", 0.5),
            ("v4", "v5", 0.5),
            ("v4", "v6", 0.5),
            ("v5", "w", 0.5),
            ("v6", "w", 0.5),
        ],
        lifted: vec![("v1", "v4", 1.0), ("v4", "w", 1.0), ("v", "w", 0.0)],
        target: ("v", "w"),
        lifted_cost: 2.0,
    };
    finish("lifted-path", draft, &[Family::Flow, Family::SingleCut, Family::Path], 0.0, |inst, id, vw| {
        let p = witness(inst, id, &[("v", B), ("v1", L), ("v4", L)], "w");
        build_lifted_path_inequality(inst, vw, &p).unwrap()
    })
}

const CUT_NAMES: [&str; 8] = ["v", "v1", "v2", "v3", "u1", "u2", "w", "w~"];

/// Lifted path-induced cut versus plain path-induced cuts.
pub fn lifted_cut_strictness() -> StrictnessFixture {
    let draft = Draft {
        names: CUT_NAMES.to_vec(),
        base: vec![
            ("v1", "v2", 0.5),
            ("v2", "u2", 0.5),
            ("v3", "u2", 0.5),
            ("v", "v3", 0.5),
            ("v3", "u1", 0.5),
            ("u1", "w~", 1.0),
            ("u1", "w", 0.0),
            ("v2", "u1", 0.5),
            ("u2", "w~", 0.0),
            ("v", "v2", 0.5),
            ("v1", "v3", 0.5),
            ("u2", "w", 1.0),
        ],
        lifted: vec![("v", "u1", 1.0), ("v1", "u2", 1.0), ("v", "w", 1.0)],
        target: ("v", "w"),
        lifted_cost: -2.0,
    };
    finish("lifted-path-cut", draft, &[Family::Flow, Family::SingleCut, Family::PathCut], 1.0, |inst, id, vw| {
        let p = witness(inst, id, &[("v", L)], "u1");
        build_lifted_path_induced_cut(inst, vw, &p, false).unwrap()
    })
}

/// Strengthened lifted cut versus plain and lifted path-induced cuts.
pub fn strengthened_cut_strictness() -> StrictnessFixture {
    let draft = Draft {
        names: CUT_NAMES.to_vec(),
        base: vec![
            ("v1", "v2", 1.0),
            ("v2", "u2", 0.5),
            ("v3", "u2", 0.5),
            ("v", "v3", 1.0),
            ("v3", "u1", 0.5),
            ("u1", "w~", 0.5),
            ("u1", "w", 0.5),
            ("v2", "u1", 0.5),
            ("u2", "w~", 0.5),
            ("v", "v2", 0.0),
            ("v1", "v3", 0.0),
            ("u2", "w", 0.5),
        ],
        lifted: vec![("v3", "w", 0.0), ("v", "w", 1.0)],
        target: ("v", "w"),
        lifted_cost: -2.0,
    };
    finish(
        "lifted-path-cut-strong",
        draft,
        &[Family::Flow, Family::SingleCut, Family::PathCut, Family::LiftedPathCut],
        1.0,
        |inst, id, vw| {
            let p = witness(inst, id, &[("v", B)], "v3");
            build_lifted_path_induced_cut(inst, vw, &p, true).unwrap()
        },
    )
}

/// Symmetric path-induced cut versus forward path-induced cuts.
pub fn symmetric_cut_strictness() -> StrictnessFixture {
    let draft = Draft {
        names: vec!["v", "v~", "v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8", "w~", "w"],
        base: vec![
            ("v~", "v1", 1.0),
            ("v~", "v2", 0.0),
            ("v1", "v4", 1.0),
            ("v2", "v4", 0.0),
            ("v4", "v6", 1.0),
            ("v4", "v7", 0.0),
            ("v6", "w", 1.0),
            ("v7", "w", 0.0),
            ("v", "v3", 0.5),
            ("v", "v2", 0.5),
            ("v3", "v5", 0.5),
            ("v2", "v5", 0.5),
            ("v5", "v7", 0.5),
            ("v5", "v8", 0.5),
            ("v7", "w~", 0.5),
            ("v8", "w~", 0.5),
            ("v3", "v4", 0.0),
            ("v8", "w", 0.0),
        ],
        lifted: vec![("v", "w", 1.0)],
        target: ("v", "w"),
        lifted_cost: -2.0,
    };
    finish("sym-path-cut", draft, &[Family::Flow, Family::SingleCut, Family::PathCut], 1.0, |inst, id, vw| {
        let p = witness(inst, id, &[("v4", B), ("v6", B)], "w");
        build_symmetric_cut(inst, vw, &p, SymVariant::Plain).unwrap()
    })
}

/// Symmetric lifted cut versus forward lifted cuts.
pub fn symmetric_lifted_cut_strictness() -> StrictnessFixture {
    let draft = Draft {
        names: vec!["v1", "u2", "v2", "w", "v", "u1", "v3", "w~"],
        base: vec![
            ("v1", "u2", 1.0),
            ("u2", "v2", 0.5),
            ("u1", "v2", 0.5),
            ("v", "u1", 1.0),
            ("u1", "v3", 0.5),
            ("v3", "w~", 0.5),
            ("v3", "w", 0.5),
            ("u2", "v3", 0.5),
            ("v2", "w~", 0.5),
            ("v", "u2", 0.0),
            ("v1", "u1", 0.0),
            ("v2", "w", 0.5),
        ],
        lifted: vec![("u1", "w~", 1.0), ("u2", "w", 1.0), ("v", "w", 1.0)],
        target: ("v", "w"),
        lifted_cost: -2.0,
    };
    finish(
        "sym-lifted-path-cut",
        draft,
        &[Family::Flow, Family::SingleCut, Family::PathCut, Family::LiftedPathCut, Family::LiftedPathCutStrong],
        1.0,
        |inst, id, vw| {
            let p = witness(inst, id, &[("u2", L)], "w");
            build_symmetric_cut(inst, vw, &p, SymVariant::Lifted).unwrap()
        },
    )
}

/// Symmetric strengthened cut versus every other cut family.
pub fn symmetric_strengthened_cut_strictness() -> StrictnessFixture {
    let draft = Draft {
        names: vec!["v1", "v2", "u", "w", "v", "v3", "v4", "w~"],
        base: vec![
            ("v1", "v2", 0.5),
            ("v2", "u", 0.5),
            ("v3", "u", 0.5),
            ("v", "v3", 0.5),
            ("v3", "v4", 0.5),
            ("v4", "w~", 1.0),
            ("v4", "w", 0.0),
            ("v2", "v4", 0.5),
            ("u", "w~", 0.0),
            ("v", "v2", 0.5),
            ("v1", "v3", 0.5),
            ("u", "w", 1.0),
        ],
        lifted: vec![("v", "u", 0.0), ("v", "w", 1.0)],
        target: ("v", "w"),
        lifted_cost: -2.0,
    };
    finish(
        "sym-lifted-path-cut-strong",
        draft,
        &[
            Family::Flow,
            Family::SingleCut,
            Family::PathCut,
            Family::LiftedPathCut,
            Family::LiftedPathCutStrong,
            Family::SymPathCut,
            Family::SymLiftedPathCut,
        ],
        1.0,
        |inst, id, vw| {
            let p = witness(inst, id, &[("u", B)], "w");
            build_symmetric_cut(inst, vw, &p, SymVariant::Strengthened).unwrap()
        },
    )
}

/// All strictness fixtures.
pub fn all_strictness_fixtures() -> Vec<StrictnessFixture> {
    vec![
        multicut_comparison(),
        lifted_path_strictness(),
        lifted_cut_strictness(),
        strengthened_cut_strictness(),
        symmetric_cut_strictness(),
        symmetric_lifted_cut_strictness(),
        symmetric_strengthened_cut_strictness(),
    ]
}
