//! Random small instances for testing and benchmarking.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::instance::{Instance, InstanceBuilder, NodeId};

/// Shape of a random instance. Node labels are shuffled so that label order
/// carries no topological information.
#[derive(Clone, Copy, Debug)]
pub struct RandomInstanceParams {
    pub max_nodes: usize,
    /// Cap on base edges, including the source and sink edges.
    pub max_base: usize,
    pub max_lifted: usize,
    /// Costs are drawn from the multiples of `cost_step` in `[-cost_bound, cost_bound]`.
    pub cost_bound: f64,
    pub cost_step: f64,
    /// Draw random node costs too.
    pub node_costs: bool,
}

impl Default for RandomInstanceParams {
    fn default() -> Self {
        RandomInstanceParams { max_nodes: 12, max_base: 30, max_lifted: 10, cost_bound: 2.0, cost_step: 0.5, node_costs: false }
    }
}

fn cost(rng: &mut impl Rng, p: &RandomInstanceParams) -> f64 {
    let k = (p.cost_bound / p.cost_step).round() as i64;
    rng.gen_range(-k..=k) as f64 * p.cost_step
}

/// A random valid instance with between 2 and `max_nodes` inner nodes.
pub fn random_instance(rng: &mut impl Rng, p: &RandomInstanceParams) -> Instance<f64> {
    assert!(p.max_nodes >= 2 && p.max_base >= 2 * p.max_nodes, "edge budget must cover source and sink edges");
    let n = rng.gen_range(2..=p.max_nodes);
    let mut label: Vec<usize> = (1..=n).collect();
    label.shuffle(rng);
    let node = |i: usize| NodeId::inner(label[i]);

    // inner edges go forward in the hidden order 0..n
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs.shuffle(rng);
    let mut k = rng.gen_range(n / 2..=pairs.len().min(p.max_base));
    let (edges, has_pred, has_succ) = loop {
        let mut edges: Vec<(usize, usize)> = pairs[..k].to_vec();
        edges.sort_unstable();
        let mut has_pred = vec![false; n];
        let mut has_succ = vec![false; n];
        for &(i, j) in &edges {
            has_succ[i] = true;
            has_pred[j] = true;
        }
        let forced = has_pred.iter().chain(&has_succ).filter(|&&b| !b).count();
        if k + forced <= p.max_base {
            break (edges, has_pred, has_succ);
        }
        k = k * 3 / 4;
    };
    let mut b = InstanceBuilder::new(n);
    for &(i, j) in &edges {
        b.base(node(i), node(j), cost(rng, p));
    }
    for i in 0..n {
        if !has_pred[i] {
            b.base(NodeId::SOURCE, node(i), cost(rng, p));
        }
        if !has_succ[i] {
            b.base(node(i), NodeId::SINK, cost(rng, p));
        }
    }
    let mut used = edges.len() + has_pred.iter().chain(&has_succ).filter(|&&b| !b).count();
    for i in 0..n {
        if has_pred[i] && used < p.max_base && rng.gen_bool(0.3) {
            b.base(NodeId::SOURCE, node(i), cost(rng, p));
            used += 1;
        }
        if has_succ[i] && used < p.max_base && rng.gen_bool(0.3) {
            b.base(node(i), NodeId::SINK, cost(rng, p));
            used += 1;
        }
    }

    // reachability in the hidden order
    let mut reach = vec![vec![false; n]; n];
    for i in (0..n).rev() {
        reach[i][i] = true;
        for &(a, c) in &edges {
            if a == i {
                for k in 0..n {
                    if reach[c][k] {
                        reach[i][k] = true;
                    }
                }
            }
        }
    }
    let mut cands: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| i != j && reach[i][j]).collect();
    cands.shuffle(rng);
    let m = rng.gen_range(0..=p.max_lifted.min(cands.len()));
    for &(i, j) in &cands[..m] {
        b.lifted(node(i), node(j), cost(rng, p));
    }
    if p.node_costs {
        for i in 0..n {
            b.node_cost(node(i), cost(rng, p));
        }
    }
    b.build().expect("generator respects instance invariants")
}
