use super::*;
use crate::fixtures::{self, implied_bound};
use crate::instance::{EdgeKind, InstanceBuilder};
use crate::milp::VariableSpace;

fn n(k: usize) -> NodeId {
    NodeId::inner(k)
}

fn chain(len: usize, lifted: &[(usize, usize)]) -> Instance<f64> {
    let mut b = InstanceBuilder::new(len);
    b.base(NodeId::SOURCE, n(1), 0.0);
    for k in 1..len {
        b.base(n(k), n(k + 1), 0.0);
    }
    b.base(n(len), NodeId::SINK, 0.0);
    for &(a, c) in lifted {
        b.lifted(n(a), n(c), 0.0);
    }
    b.build().unwrap()
}

#[test]
fn conservation_term_counts() {
    let mut b = InstanceBuilder::new(6);
    for k in [1, 2, 3] {
        b.base(NodeId::SOURCE, n(k), 0.0).base(n(k), n(4), 0.0);
    }
    b.base(n(4), n(5), 0.0).base(n(4), n(6), 0.0).base(n(5), NodeId::SINK, 0.0).base(n(6), NodeId::SINK, 0.0);
    let inst = b.build().unwrap();
    let [inflow, outflow] = build_flow_conservation(&inst, n(4)).unwrap();
    assert_eq!(inflow.terms().len(), 4);
    assert_eq!(outflow.terms().len(), 3);
    assert_eq!(inflow.coefficient(VarHandle::node(3)), -1.0);
    assert_eq!(inflow.sense(), Sense::Eq);
    assert!(matches!(build_flow_conservation(&inst, NodeId::SOURCE), Err(ConstraintError::NotInner(_))));
}

#[test]
fn conservation_telescopes_on_chain() {
    let inst = chain(5, &[]);
    let mut sum: BTreeMap<VarHandle, f64> = BTreeMap::new();
    for v in inst.inner_nodes() {
        let [inflow, outflow] = build_flow_conservation(&inst, v).unwrap();
        // in - x and x - out summed: in - out
        for (h, a) in inflow.terms() {
            *sum.entry(*h).or_default() += a;
        }
        for (h, a) in outflow.terms() {
            *sum.entry(*h).or_default() -= a;
        }
    }
    sum.retain(|_, a| *a != 0.0);
    let src = inst.find_base(NodeId::SOURCE, n(1)).unwrap();
    let snk = inst.find_base(n(5), NodeId::SINK).unwrap();
    assert_eq!(sum.into_iter().collect::<Vec<_>>(), vec![(VarHandle::base(src), 1.0), (VarHandle::base(snk), -1.0)]);
}

#[test]
fn single_cut_filters_by_reachability() {
    // 1 -> 2 -> 4, 1 -> 3 (3 cannot reach 4)
    let mut b = InstanceBuilder::new(4);
    b.base(NodeId::SOURCE, n(1), 0.0)
        .base(n(1), n(2), 0.0)
        .base(n(1), n(3), 0.0)
        .base(n(2), n(4), 0.0)
        .base(n(3), NodeId::SINK, 0.0)
        .base(n(4), NodeId::SINK, 0.0)
        .lifted(n(1), n(4), 0.0)
        .lifted(n(1), n(3), 0.0);
    let inst = b.build().unwrap();
    let c = build_single_node_cut(&inst, 0, CutSide::OutOfV).unwrap();
    let e12 = inst.find_base(n(1), n(2)).unwrap();
    assert_eq!(c.terms(), &[(VarHandle::base(e12), -1.0), (VarHandle::lifted(0), 1.0)]);

    // into 3 only from 1, which 1 reaches trivially
    let into = build_single_node_cut(&inst, 1, CutSide::IntoW).unwrap();
    assert_eq!(into.terms().len(), 2);
}

#[test]
fn single_cut_with_no_route_is_zero_bound() {
    // lifted 1 -> 3 on chain 1 -> 2 -> 3, but 1's only successor is cut off in a
    // copy where 2 does not lead to 3 is impossible to build (lifted must be
    // reachable), so use the empty side: w = 3 entered only from 2, and a
    // path-cut covering 2 leaves nothing.
    let inst = chain(3, &[(1, 3)]);
    let p = PathWitness::base_path(&inst, vec![n(1), n(2)]).unwrap();
    let c = build_path_induced_cut(&inst, 0, &p).unwrap();
    let e23 = inst.find_base(n(2), n(3)).unwrap();
    assert_eq!(c.terms(), &[(VarHandle::base(e23), -1.0), (VarHandle::lifted(0), 1.0)]);
    let full = PathWitness::base_path(&inst, vec![n(1), n(2), n(3)]).unwrap();
    assert!(build_path_induced_cut(&inst, 0, &full).is_err());
}

#[test]
fn single_cut_is_path_cut_of_single_node() {
    let f = fixtures::lifted_cut_strictness();
    let inst = &f.instance;
    for e in 0..inst.lifted_edges().len() {
        let edge = inst.lifted_edge(e);
        let out = build_single_node_cut(inst, e, CutSide::OutOfV).unwrap();
        let pc = build_path_induced_cut(inst, e, &PathWitness::single(edge.from)).unwrap();
        assert_eq!(out.terms(), pc.terms());
        let into = build_single_node_cut(inst, e, CutSide::IntoW).unwrap();
        let sym = build_symmetric_cut(inst, e, &PathWitness::single(edge.to), SymVariant::Plain).unwrap();
        assert_eq!(into.terms(), sym.terms());
    }
}

#[test]
fn active_path_forces_lifted_label() {
    let inst = chain(3, &[(1, 3)]);
    let p = PathWitness::base_path(&inst, vec![n(1), n(2), n(3)]).unwrap();
    let c = build_path_inequality(&inst, 0, &p).unwrap();
    let mut vals = VariableSpace::for_instance(&inst).zeros::<f64>();
    for e in 0..inst.base_edges().len() {
        vals.set(VarHandle::base(e), 1.0);
    }
    assert_eq!(implied_bound(&c, VarHandle::lifted(0), &vals), 1.0);
    assert_eq!(check_violation(&c, &vals).unwrap(), 1.0);
    vals.set(VarHandle::lifted(0), 1.0);
    assert_eq!(check_violation(&c, &vals).unwrap(), 0.0);
}

#[test]
fn path_builders_check_endpoints() {
    let inst = chain(3, &[(1, 3)]);
    let p = PathWitness::base_path(&inst, vec![n(1), n(2)]).unwrap();
    assert!(matches!(build_path_inequality(&inst, 0, &p), Err(ConstraintError::Endpoints { .. })));
    assert!(matches!(build_single_node_cut(&inst, 4, CutSide::OutOfV), Err(ConstraintError::UnknownLifted(4))));
}

#[test]
fn lifted_builders_specialize_to_base_builders() {
    let f = fixtures::lifted_path_strictness();
    let inst = &f.instance;
    let vw = f.lifted;
    let nodes: Vec<NodeId> = ["v", "v1", "v3", "v4", "v6", "w"].iter().map(|s| f.node(s)).collect();
    let p = PathWitness::base_path(inst, nodes.clone()).unwrap();
    assert_eq!(build_path_inequality(inst, vw, &p).unwrap().terms(), build_lifted_path_inequality(inst, vw, &p).unwrap().terms());
    let q = PathWitness::base_path(inst, nodes[..4].to_vec()).unwrap();
    assert_eq!(
        build_path_induced_cut(inst, vw, &q).unwrap().terms(),
        build_lifted_path_induced_cut(inst, vw, &q, false).unwrap().terms()
    );
}

#[test]
fn lifted_hop_with_parallel_base_edge() {
    // chain 1 -> 2 -> 3 with lifted 1->2 parallel to the base edge and lifted 1->3
    let inst = chain(3, &[(1, 2), (1, 3)]);
    let p = PathWitness::from_kinds(&inst, vec![n(1), n(2), n(3)], &[EdgeKind::Lifted, EdgeKind::Base]).unwrap();
    let c = build_lifted_path_inequality(&inst, 1, &p).unwrap();
    let e12 = inst.find_base(n(1), n(2)).unwrap();
    // -y_12 from the v-out sum cancels against +y_12 of the parallel correction
    assert_eq!(c.coefficient(VarHandle::base(e12)), 0.0);
    assert_eq!(c.coefficient(VarHandle::lifted(0)), -1.0);
}

#[test]
fn multicut_fixture_bounds() {
    let f = fixtures::multicut_comparison();
    assert_eq!(f.stronger_bound, 1.0);
    assert_eq!(f.violation, 1.0);
    let vw = VarHandle::lifted(f.lifted);
    let short = PathWitness::base_path(&f.instance, ["v", "v2", "v4", "w"].iter().map(|s| f.node(s)).collect()).unwrap();
    let weak = build_multicut_path(&f.instance, f.lifted, &short).unwrap();
    assert_eq!(implied_bound(&weak, vw, &f.point), 0.0);
    let long =
        PathWitness::base_path(&f.instance, ["v", "v1", "v2", "v3", "v4", "w"].iter().map(|s| f.node(s)).collect()).unwrap();
    assert_eq!(implied_bound(&build_multicut_path(&f.instance, f.lifted, &long).unwrap(), vw, &f.point), -1.0);
}

#[test]
fn lifted_path_fixture_bounds() {
    let f = fixtures::lifted_path_strictness();
    assert_eq!(f.stronger_bound, 1.0);
    assert_eq!(f.violation, 1.0);
    let vw = VarHandle::lifted(f.lifted);
    for mid in [["v2", "v5"], ["v2", "v6"], ["v3", "v5"], ["v3", "v6"]] {
        let nodes = ["v", "v1", mid[0], "v4", mid[1], "w"].iter().map(|s| f.node(s)).collect();
        let p = PathWitness::base_path(&f.instance, nodes).unwrap();
        assert_eq!(implied_bound(&build_path_inequality(&f.instance, f.lifted, &p).unwrap(), vw, &f.point), 0.0);
    }
}

#[test]
fn lifted_cut_fixture_bounds() {
    let f = fixtures::lifted_cut_strictness();
    assert_eq!(f.stronger_bound, 0.0);
    assert_eq!(f.violation, 1.0);
    let vw = VarHandle::lifted(f.lifted);
    let out = build_single_node_cut(&f.instance, f.lifted, CutSide::OutOfV).unwrap();
    assert_eq!(implied_bound(&out, vw, &f.point), 1.0);
    // routes ending in u2 also count the active edge u2 -> w
    let mut best = f64::INFINITY;
    for (route, bound) in
        [(["v", "v2", "u1"], 1.0), (["v", "v3", "u1"], 1.0), (["v", "v2", "u2"], 2.0), (["v", "v3", "u2"], 2.0)]
    {
        let p = PathWitness::base_path(&f.instance, route.iter().map(|s| f.node(s)).collect()).unwrap();
        let c = build_path_induced_cut(&f.instance, f.lifted, &p).unwrap();
        assert_eq!(implied_bound(&c, vw, &f.point), bound, "{route:?}");
        best = best.min(bound);
    }
    assert_eq!(best, f.weaker_bound);
}

#[test]
fn strengthened_cut_fixture_bounds() {
    let f = fixtures::strengthened_cut_strictness();
    assert_eq!(f.stronger_bound, 0.0);
    assert_eq!(f.violation, 1.0);
    let p = PathWitness::base_path(&f.instance, vec![f.node("v"), f.node("v3")]).unwrap();
    let plain = build_lifted_path_induced_cut(&f.instance, f.lifted, &p, false).unwrap();
    assert_eq!(implied_bound(&plain, VarHandle::lifted(f.lifted), &f.point), 1.0);
    let no_lift = PathWitness::base_path(&f.instance, vec![f.node("v"), f.node("v2")]).unwrap();
    assert!(matches!(
        build_lifted_path_induced_cut(&f.instance, f.lifted, &no_lift, true),
        Err(ConstraintError::Precondition(_))
    ));
}

#[test]
fn symmetric_fixture_bounds() {
    for f in [
        fixtures::symmetric_cut_strictness(),
        fixtures::symmetric_lifted_cut_strictness(),
        fixtures::symmetric_strengthened_cut_strictness(),
    ] {
        assert_eq!(f.stronger_bound, 0.0, "{}", f.name);
        assert_eq!(f.violation, 1.0, "{}", f.name);
        let out = build_single_node_cut(&f.instance, f.lifted, CutSide::OutOfV).unwrap();
        assert_eq!(implied_bound(&out, VarHandle::lifted(f.lifted), &f.point), 1.0, "{}", f.name);
    }
}

fn reversed(inst: &Instance<f64>) -> Instance<f64> {
    let flip = |v: NodeId| match v {
        NodeId::SOURCE => NodeId::SINK,
        NodeId::SINK => NodeId::SOURCE,
        v => v,
    };
    let mut b = InstanceBuilder::new(inst.inner_count());
    for e in inst.base_edges() {
        b.base(flip(e.to), flip(e.from), e.cost);
    }
    for e in inst.lifted_edges() {
        b.lifted(e.to, e.from, e.cost);
    }
    b.build().unwrap()
}

#[test]
fn symmetric_cut_is_forward_cut_on_reversed_graph() {
    for f in fixtures::all_strictness_fixtures() {
        let inst = &f.instance;
        let rev = reversed(inst);
        for e in 0..inst.lifted_edges().len() {
            let (v, w) = (inst.lifted_edge(e).from, inst.lifted_edge(e).to);
            // every base path u -> w with u != v reachable from v
            let mut stack = vec![vec![w]];
            while let Some(back) = stack.pop() {
                let u = *back.last().unwrap();
                for &be in inst.in_base(u) {
                    let k = inst.base_edge(be).from;
                    if k.is_inner() && inst.reaches(v, k) && !back.contains(&k) {
                        let mut next = back.clone();
                        next.push(k);
                        stack.push(next);
                    }
                }
                if u == v {
                    continue;
                }
                let nodes: Vec<NodeId> = back.iter().rev().copied().collect();
                let p = PathWitness::base_path(inst, nodes).unwrap();
                let sym = build_symmetric_cut(inst, e, &p, SymVariant::Plain).unwrap();
                let q = PathWitness::base_path(&rev, back.clone()).unwrap();
                let fwd = if q.last() == v {
                    // u = w in the reversed view is excluded; the single node case
                    // collapses to the into-w single cut instead
                    continue;
                } else {
                    build_path_induced_cut(&rev, e, &q).unwrap()
                };
                assert_eq!(sym.terms(), fwd.terms(), "{} edge {e}", f.name);
            }
        }
    }
}

#[test]
fn lifted_flow_groups_by_frame() {
    let mut b = InstanceBuilder::new(4);
    b.base(NodeId::SOURCE, n(1), 0.0)
        .base(n(1), n(2), 0.0)
        .base(n(1), n(3), 0.0)
        .base(n(2), n(4), 0.0)
        .base(n(3), n(4), 0.0)
        .base(n(4), NodeId::SINK, 0.0)
        .lifted(n(1), n(4), 0.0)
        .lifted(n(1), n(2), 0.0)
        .lifted(n(1), n(3), 0.0);
    b.frame(n(1), 1).frame(n(2), 2).frame(n(3), 2).frame(n(4), 3);
    let inst = b.build().unwrap();
    let cs = build_lifted_flow_inequalities(&inst).unwrap();
    let x1 = VarHandle::node(0);
    let from_one: Vec<_> = cs.iter().filter(|c| c.coefficient(x1) == -1.0).collect();
    assert_eq!(from_one.len(), 2);
    assert!(from_one.iter().any(|c| c.terms().len() == 3));
    assert!(from_one.iter().any(|c| c.terms().len() == 2));
    // incoming groups: 2 and 3 from frame 1, 4 from frame 1
    assert_eq!(cs.len(), 5);
    assert!(matches!(build_lifted_flow_inequalities(&chain(3, &[(1, 3)])), Err(ConstraintError::FramesAbsent)));
}

#[test]
fn pool_deduplicates() {
    let inst = chain(3, &[(1, 3)]);
    let mut pool = CutPool::new();
    let added = pool.extend(all_single_node_cuts(&inst));
    // on a chain both single cuts differ (y_12 versus y_23)
    assert_eq!(added[&Family::SingleCut], 2);
    let p = PathWitness::single(n(1));
    assert!(!pool.insert(build_path_induced_cut(&inst, 0, &p).unwrap()));
    assert_eq!(pool.len(), 2);
    assert_eq!(pool.counts()[&Family::SingleCut], 2);
}

#[test]
fn dump_format() {
    let inst = chain(3, &[(1, 3)]);
    let c = build_single_node_cut(&inst, 0, CutSide::OutOfV).unwrap();
    assert_eq!(c.dump(&inst), "single-cut: -y[1,2] + y'[1,3] <= 0");
}
