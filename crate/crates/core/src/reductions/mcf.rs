//! Unit-capacity integer multicommodity flow to lifted disjoint paths, via
//! the line graph of the network.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use super::{on_st_paths, DecideError, FormatError};
use crate::driver::{solve, SolveConfig, SolveStatus};
use crate::instance::{serialize_instance, Instance, InstanceBuilder, NodeId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Commodity {
    pub source: usize,
    pub sink: usize,
    pub demand: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum McfError {
    #[error("commodity {0} has zero demand")]
    ZeroDemand(usize),
    #[error("commodity {0} has the same source and sink")]
    SameTerminal(usize),
    #[error("commodity {0} has a direct source-sink edge")]
    DirectEdge(usize),
    #[error("edge {0} is a self loop")]
    SelfLoop(usize),
    #[error("edge {0} repeats an earlier edge")]
    DuplicateEdge(usize),
    #[error("network contains a cycle")]
    Cycle,
    #[error("a route of commodity {0} can pass through the terminals of commodity {1}")]
    Chained(usize, usize),
    #[error("no commodities")]
    NoCommodities,
}

/// Directed network with unit capacities and source-sink demands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McfProblem {
    names: Vec<String>,
    edges: Vec<(usize, usize)>,
    commodities: Vec<Commodity>,
}

fn reach_matrix(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for (a, row) in reach.iter_mut().enumerate() {
        let mut stack = vec![a];
        while let Some(u) = stack.pop() {
            for &(x, y) in edges {
                if x == u && !row[y] {
                    row[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    reach
}

impl McfProblem {
    /// Nodes are named by the strings used in `edges` and `commodities`.
    ///
    /// Besides the basic checks, networks must be acyclic and no route of one
    /// commodity may run through the terminals of another, since such a route
    /// would collect the lifted rewards of both.
    pub fn new(edges: &[(&str, &str)], commodities: &[(&str, &str, u32)]) -> Result<Self, McfError> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut id = |s: &str| -> usize {
            *index.entry(s.to_string()).or_insert_with(|| {
                names.push(s.to_string());
                names.len() - 1
            })
        };
        let edges: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (id(a), id(b))).collect();
        let commodities: Vec<Commodity> =
            commodities.iter().map(|&(s, t, r)| Commodity { source: id(s), sink: id(t), demand: r }).collect();
        let p = McfProblem { names, edges, commodities };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), McfError> {
        if self.commodities.is_empty() {
            return Err(McfError::NoCommodities);
        }
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            if a == b {
                return Err(McfError::SelfLoop(i + 1));
            }
            if self.edges[..i].contains(&(a, b)) {
                return Err(McfError::DuplicateEdge(i + 1));
            }
        }
        let reach = reach_matrix(self.names.len(), &self.edges);
        if (0..self.names.len()).any(|v| reach[v][v]) {
            return Err(McfError::Cycle);
        }
        for (i, c) in self.commodities.iter().enumerate() {
            if c.demand == 0 {
                return Err(McfError::ZeroDemand(i + 1));
            }
            if c.source == c.sink {
                return Err(McfError::SameTerminal(i + 1));
            }
            if self.edges.contains(&(c.source, c.sink)) {
                return Err(McfError::DirectEdge(i + 1));
            }
        }
        for (i, a) in self.commodities.iter().enumerate() {
            for (j, b) in self.commodities.iter().enumerate() {
                if i == j || (a.source == b.source && a.sink == b.sink) {
                    continue;
                }
                let chained = if a.source == b.source {
                    reach[a.sink][b.sink]
                } else {
                    reach[a.source][b.source] && reach[b.source][b.sink]
                };
                if chained {
                    return Err(McfError::Chained(i + 1, j + 1));
                }
            }
        }
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn total_demand(&self) -> u32 {
        self.commodities.iter().map(|c| c.demand).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &(a, b) in &self.edges {
            out.push_str(&format!("edge {} {}\n", self.names[a], self.names[b]));
        }
        for c in &self.commodities {
            out.push_str(&format!("pair {} {} {}\n", self.names[c.source], self.names[c.sink], c.demand));
        }
        out
    }
}

/// Parses `edge u v` and `pair s t R` lines; `#` starts a comment.
pub fn parse_mcf(text: &str) -> Result<McfProblem, FormatError> {
    let mut edges = Vec::new();
    let mut pairs = Vec::new();
    let mut edge_lines = Vec::new();
    let mut pair_lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            ["edge", u, v] => {
                edges.push((*u, *v));
                edge_lines.push(line);
            }
            ["pair", s, t, r] => {
                let r: u32 = r.parse().map_err(|_| FormatError::new(line, format!("invalid demand `{r}`")))?;
                pairs.push((*s, *t, r));
                pair_lines.push(line);
            }
            ["edge", ..] => return Err(FormatError::new(line, "`edge` expects 2 fields")),
            ["pair", ..] => return Err(FormatError::new(line, "`pair` expects 3 fields")),
            [kw, ..] => return Err(FormatError::new(line, format!("unknown keyword `{kw}`"))),
        }
    }
    McfProblem::new(&edges, &pairs).map_err(|e| {
        let line = match e {
            McfError::ZeroDemand(i) | McfError::SameTerminal(i) | McfError::DirectEdge(i) | McfError::Chained(i, _) => {
                pair_lines[i - 1]
            }
            McfError::SelfLoop(i) | McfError::DuplicateEdge(i) => edge_lines[i - 1],
            McfError::Cycle | McfError::NoCommodities => 1,
        };
        FormatError::new(line, e.to_string())
    })
}

/// The reduced instance with a label per inner node.
#[derive(Clone, Debug)]
pub struct McfReduction {
    pub instance: Instance<f64>,
    pub labels: Vec<String>,
    /// Demand nodes kept in the instance.
    pub demand_nodes: usize,
    /// Every source-edge to sink-edge pair of the construction, as labels.
    pub lifted_pairs: Vec<(String, String)>,
    /// Pairs left out because no path joins them; their label is always 0.
    pub dropped_lifted: Vec<(String, String)>,
}

impl McfReduction {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(&format!("# node {} {}\n", i + 1, l));
        }
        out + &serialize_instance(&self.instance)
    }
}

/// Builds the line-graph instance: a node per network edge, a node per unit
/// of demand, zero base costs and lifted edges of cost -1 from every edge
/// leaving a source to every edge entering its sink. Nodes on no s-t path
/// are dropped.
pub fn reduce_mcf(problem: &McfProblem) -> McfReduction {
    let name = |v: usize| problem.names[v].as_str();
    // items: demand nodes first, then edge nodes
    let mut labels = Vec::new();
    let mut demand_of = Vec::new();
    for (i, c) in problem.commodities.iter().enumerate() {
        for r in 1..=c.demand {
            labels.push(format!("demand {} {}", name(c.source), r));
            demand_of.push(i);
        }
    }
    let d = labels.len();
    for &(a, b) in &problem.edges {
        labels.push(format!("edge {}->{}", name(a), name(b)));
    }
    let n = labels.len();
    let edge = |item: usize| problem.edges[item - d];
    let succ = |item: usize| -> Vec<usize> {
        if item < d {
            let src = problem.commodities[demand_of[item]].source;
            (d..n).filter(|&j| edge(j).0 == src).collect()
        } else {
            let (_, head) = edge(item);
            (d..n).filter(|&j| edge(j).0 == head).collect()
        }
    };
    let into_sink = |item: usize| item >= d && problem.commodities.iter().any(|c| c.sink == edge(item).1);
    let keep = on_st_paths(n, |a| a < d, into_sink, succ);

    let mut id = vec![None; n];
    let mut kept_labels = Vec::new();
    for a in 0..n {
        if keep[a] {
            kept_labels.push(labels[a].clone());
            id[a] = Some(NodeId::inner(kept_labels.len()));
        }
    }
    let mut b = InstanceBuilder::new(kept_labels.len());
    for a in 0..n {
        let Some(va) = id[a] else { continue };
        if a < d {
            b.base(NodeId::SOURCE, va, 0.0);
        }
        if into_sink(a) {
            b.base(va, NodeId::SINK, 0.0);
        }
        for c in succ(a) {
            if let Some(vc) = id[c] {
                b.base(va, vc, 0.0);
            }
        }
    }
    let built_reach = {
        // reachability among kept items, to filter lifted pairs
        let mut order: Vec<usize> = (0..n).filter(|&a| keep[a]).collect();
        order.sort_unstable();
        let adj: Vec<Vec<usize>> = (0..n).map(|a| succ(a).into_iter().filter(|&c| keep[c]).collect()).collect();
        move |from: usize, to: usize| {
            let mut seen = vec![false; n];
            let mut stack = vec![from];
            while let Some(u) = stack.pop() {
                if u == to {
                    return true;
                }
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            false
        }
    };
    let mut lifted_pairs = Vec::new();
    let mut dropped = Vec::new();
    let mut added = std::collections::HashSet::new();
    for c in &problem.commodities {
        for a in d..n {
            if edge(a).0 != c.source {
                continue;
            }
            for z in d..n {
                if edge(z).1 != c.sink || !added.insert((a, z)) {
                    continue;
                }
                let pair = (labels[a].clone(), labels[z].clone());
                lifted_pairs.push(pair.clone());
                match (id[a], id[z]) {
                    (Some(va), Some(vz)) if a != z && built_reach(a, z) => {
                        b.lifted(va, vz, -1.0);
                    }
                    _ => dropped.push(pair),
                }
            }
        }
    }
    let instance = b.build().expect("reduced network instance validates");
    let demand_nodes = (0..d).filter(|&a| keep[a]).count();
    McfReduction { instance, labels: kept_labels, demand_nodes, lifted_pairs, dropped_lifted: dropped }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McfDecision {
    pub feasible: bool,
    pub optimum: f64,
}

/// Feasible iff the optimum is at most minus the total demand.
pub fn decide_mcf(problem: &McfProblem, config: &SolveConfig) -> Result<McfDecision, DecideError> {
    let red = reduce_mcf(problem);
    let out = solve(&red.instance, config)?;
    if out.status != SolveStatus::Optimal {
        return Err(DecideError::Limit(out.status));
    }
    let optimum = out.solution.objective;
    Ok(McfDecision { feasible: optimum <= -(problem.total_demand() as f64) + 1e-9, optimum })
}

/// Routes per commodity as edge index lists, by exhaustive packing of
/// edge-disjoint paths.
pub fn brute_force_mcf(problem: &McfProblem) -> Option<Vec<Vec<Vec<usize>>>> {
    assert!(problem.edges.len() <= 128, "brute force is for small networks");
    let paths_of = |c: &Commodity| -> Vec<u128> {
        let mut out = Vec::new();
        let mut stack = vec![(c.source, 0u128)];
        while let Some((v, used)) = stack.pop() {
            if v == c.sink {
                out.push(used);
                continue;
            }
            for (e, &(a, b)) in problem.edges.iter().enumerate() {
                if a == v {
                    stack.push((b, used | 1 << e));
                }
            }
        }
        out.sort_unstable();
        out
    };
    let routes: Vec<Vec<u128>> = problem.commodities.iter().map(paths_of).collect();

    fn pack(routes: &[Vec<u128>], demands: &[u32], i: usize, start: usize, left: u32, used: u128, chosen: &mut Vec<Vec<u128>>) -> bool {
        if i == routes.len() {
            return true;
        }
        if left == 0 {
            let next_left = demands.get(i + 1).copied().unwrap_or(0);
            chosen.push(Vec::new());
            if pack(routes, demands, i + 1, 0, next_left, used, chosen) {
                return true;
            }
            chosen.pop();
            return false;
        }
        for k in start..routes[i].len() {
            let p = routes[i][k];
            if p & used == 0 {
                chosen.last_mut().unwrap().push(p);
                if pack(routes, demands, i, k + 1, left - 1, used | p, chosen) {
                    return true;
                }
                chosen.last_mut().unwrap().pop();
            }
        }
        false
    }
    let demands: Vec<u32> = problem.commodities.iter().map(|c| c.demand).collect();
    let mut chosen = vec![Vec::new()];
    if !pack(&routes, &demands, 0, 0, demands[0], 0, &mut chosen) {
        return None;
    }
    chosen.pop();
    Some(
        chosen
            .into_iter()
            .map(|ps| ps.into_iter().map(|m| (0..problem.edges.len()).filter(|&e| m >> e & 1 == 1).collect()).collect())
            .collect(),
    )
}

/// The network of the construction figure: sources `s1`, `s2`, sinks `t1`,
/// `t2` and inner nodes `a` to `e`.
pub fn figure_network(r1: u32, r2: u32) -> McfProblem {
    let edges = [
        ("s1", "a"),
        ("s1", "b"),
        ("s2", "b"),
        ("s2", "c"),
        ("a", "t1"),
        ("b", "d"),
        ("b", "e"),
        ("c", "e"),
        ("d", "t2"),
        ("e", "t1"),
        ("e", "t2"),
    ];
    McfProblem::new(&edges, &[("s1", "t1", r1), ("s2", "t2", r2)]).expect("figure network is valid")
}

/// A random acyclic network with at most `max_edges` edges and one or two
/// commodities. Sources have no incoming and sinks no outgoing edges.
pub fn random_network(rng: &mut impl Rng, max_edges: usize) -> McfProblem {
    loop {
        let k = rng.gen_range(1..=2usize);
        let inner = rng.gen_range(1..=4usize);
        let sources: Vec<String> = (1..=k).map(|i| format!("s{i}")).collect();
        let sinks: Vec<String> = (1..=k).map(|i| format!("t{i}")).collect();
        let mids: Vec<String> = (1..=inner).map(|i| format!("m{i}")).collect();
        // order: sources, mids, sinks; edges go forward
        let mut cands: Vec<(String, String)> = Vec::new();
        for s in &sources {
            for m in mids.iter().chain(&sinks) {
                cands.push((s.clone(), m.clone()));
            }
        }
        for (i, a) in mids.iter().enumerate() {
            for b in mids[i + 1..].iter().chain(&sinks) {
                cands.push((a.clone(), b.clone()));
            }
        }
        cands.retain(|(a, b)| !(a.starts_with('s') && b.starts_with('t') && a[1..] == b[1..]));
        cands.shuffle(rng);
        let m = rng.gen_range(1..=max_edges.min(cands.len()));
        let edges: Vec<(&str, &str)> = cands[..m].iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let pairs: Vec<(&str, &str, u32)> =
            (0..k).map(|i| (sources[i].as_str(), sinks[i].as_str(), rng.gen_range(1..=2))).collect();
        if let Ok(p) = McfProblem::new(&edges, &pairs) {
            return p;
        }
    }
}
