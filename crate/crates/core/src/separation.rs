//! Separation of lifted path and lifted path-induced cut inequalities at
//! integral points.
//!
//! Both separators decompose the active flow into its paths once and then
//! classify every lifted edge once, so a call touches each active base edge
//! and each lifted edge a bounded number of times. Witness paths are read off
//! the active paths, preferring active lifted shortcuts.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::constraints::{
    build_lifted_path_induced_cut, build_lifted_path_inequality, build_symmetric_cut, ConstraintError, Hop, PathWitness,
    SymVariant,
};
use crate::instance::{active_st_paths, FlowError, FlowSolution, Instance, NodeId};
use crate::milp::{Family, LinearConstraint, VarValues};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeparationError {
    #[error("separation needs an integral flow: {0}")]
    Flow(#[from] FlowError),
    #[error("{v} and {w} are not on the path in this order")]
    NotOnPath { v: NodeId, w: NodeId },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// Work counters of one separation call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScanStats {
    pub paths_scanned: usize,
    /// Nodes visited while decomposing the flow into paths.
    pub path_nodes: usize,
    /// Lifted edges looked at while classifying.
    pub lifted_inspected: usize,
    /// `|E¹|`, active base edges.
    pub active_edges: usize,
    /// `|E'|`.
    pub lifted_edges: usize,
}

impl ScanStats {
    /// Items inspected by the scan; never exceeds [`ScanStats::budget`].
    pub fn inspected(&self) -> usize {
        self.path_nodes + self.lifted_inspected
    }

    pub fn budget(&self) -> usize {
        self.active_edges + self.lifted_edges
    }
}

#[derive(Clone, Debug)]
pub struct SeparationReport<T> {
    pub constraints: Vec<LinearConstraint<T>>,
    pub counts: BTreeMap<Family, usize>,
    pub stats: ScanStats,
}

impl<T: Scalar> SeparationReport<T> {
    fn new(stats: ScanStats) -> Self {
        SeparationReport { constraints: Vec::new(), counts: BTreeMap::new(), stats }
    }

    fn push(&mut self, c: LinearConstraint<T>, point: &VarValues<T>) {
        let violation = c.violation(point).expect("point covers all variables");
        if violation > T::feasibility_tol() {
            *self.counts.entry(c.family()).or_default() += 1;
            self.constraints.push(c);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }
}

/// Active paths with, for every node on them, the active lifted edges
/// arriving from earlier nodes of the same path, sorted by source position.
struct PathIndex {
    paths: Vec<Vec<NodeId>>,
    /// `pos[inner index] = (path, position)`
    pos: Vec<Option<(usize, usize)>>,
    /// `(position of source, lifted edge)` keyed by target inner index.
    shortcuts: Vec<Vec<(usize, usize)>>,
}

impl PathIndex {
    fn build<T: Scalar>(instance: &Instance<T>, solution: &FlowSolution<T>, stats: &mut ScanStats) -> Result<Self, FlowError> {
        let paths = active_st_paths(instance, solution)?;
        let mut pos = vec![None; instance.inner_count()];
        for (p, path) in paths.iter().enumerate() {
            stats.paths_scanned += 1;
            for (i, v) in path.iter().enumerate() {
                stats.path_nodes += 1;
                pos[v.inner_index().unwrap()] = Some((p, i));
            }
        }
        Ok(PathIndex { paths, pos, shortcuts: vec![Vec::new(); instance.inner_count()] })
    }

    fn at(&self, v: NodeId) -> Option<(usize, usize)> {
        self.pos[v.inner_index().unwrap()]
    }

    fn finish_shortcuts(&mut self) {
        for s in &mut self.shortcuts {
            s.sort_unstable();
        }
    }

    /// Backward walk from `w` to `v` along path `p`, jumping over the longest
    /// active lifted shortcut that does not start before `v`.
    fn extract<T: Scalar>(&self, instance: &Instance<T>, p: usize, from: usize, to: usize) -> PathWitness {
        let path = &self.paths[p];
        let mut nodes = vec![path[to]];
        let mut hops = Vec::new();
        let mut cur = to;
        while cur > from {
            let j = path[cur];
            let cands = &self.shortcuts[j.inner_index().unwrap()];
            let k = cands.partition_point(|&(src, _)| src < from);
            match cands.get(k) {
                Some(&(src, e)) if src < cur => {
                    hops.push(Hop::Lifted(e));
                    cur = src;
                }
                _ => {
                    let e = instance.find_base(path[cur - 1], j).expect("consecutive path nodes share a base edge");
                    hops.push(Hop::Base(e));
                    cur -= 1;
                }
            }
            nodes.push(path[cur]);
        }
        nodes.reverse();
        hops.reverse();
        PathWitness::new(instance, nodes, hops).expect("witness follows the active path")
    }
}

fn stats_for<T: Scalar>(instance: &Instance<T>, solution: &FlowSolution<T>) -> ScanStats {
    ScanStats {
        active_edges: solution.y.iter().filter(|&&b| b).count(),
        lifted_edges: instance.lifted_edges().len(),
        ..ScanStats::default()
    }
}

fn point_of<T: Scalar>(solution: &FlowSolution<T>) -> VarValues<T> {
    VarValues::from_solution(solution)
}

/// Witness for `vw` read off the active path `path`: walks from `w` back to
/// `v`, taking active lifted edges between path nodes whenever they jump
/// further back than the preceding base edge.
pub fn extract_path<T: Scalar>(
    instance: &Instance<T>,
    path: &[NodeId],
    v: NodeId,
    w: NodeId,
    y_lifted: &[bool],
) -> Result<PathWitness, SeparationError> {
    let find = |x: NodeId| path.iter().position(|&n| n == x);
    let (Some(from), Some(to)) = (find(v), find(w)) else {
        return Err(SeparationError::NotOnPath { v, w });
    };
    if from > to {
        return Err(SeparationError::NotOnPath { v, w });
    }
    let mut index = PathIndex {
        paths: vec![path.to_vec()],
        pos: vec![None; instance.inner_count()],
        shortcuts: vec![Vec::new(); instance.inner_count()],
    };
    for (i, n) in path.iter().enumerate() {
        index.pos[n.inner_index().unwrap()] = Some((0, i));
    }
    for (e, edge) in instance.lifted_edges().iter().enumerate() {
        if let (true, Some((0, a)), Some((0, b))) = (y_lifted[e], index.at(edge.from), index.at(edge.to)) {
            if a < b {
                index.shortcuts[edge.to.inner_index().unwrap()].push((a, e));
            }
        }
    }
    index.finish_shortcuts();
    Ok(index.extract(instance, 0, from, to))
}

/// Lifted path inequalities for every lifted edge joining two nodes of one
/// active path while labeled 0.
pub fn separate_lifted_path<T: Scalar>(
    instance: &Instance<T>,
    solution: &FlowSolution<T>,
) -> Result<SeparationReport<T>, SeparationError> {
    let mut stats = stats_for(instance, solution);
    let mut index = PathIndex::build(instance, solution, &mut stats)?;
    let mut pending = Vec::new();
    for (e, edge) in instance.lifted_edges().iter().enumerate() {
        stats.lifted_inspected += 1;
        if let (Some((pa, a)), Some((pb, b))) = (index.at(edge.from), index.at(edge.to)) {
            if pa == pb && a < b {
                if solution.y_lifted[e] {
                    index.shortcuts[edge.to.inner_index().unwrap()].push((a, e));
                } else {
                    pending.push((e, pa, a, b));
                }
            }
        }
    }
    index.finish_shortcuts();
    let point = point_of(solution);
    let mut report = SeparationReport::new(stats);
    for (e, p, a, b) in pending {
        let witness = index.extract(instance, p, a, b);
        report.push(build_lifted_path_inequality(instance, e, &witness)?, &point);
    }
    Ok(report)
}

/// Which branch of the cut separator produced a constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CutCase {
    Strengthened(usize),
    Plain(usize),
}

/// Lifted path-induced cuts for every lifted edge labeled 1 that leaves an
/// active path; with `include_symmetric`, also for those entering one.
pub fn separate_lifted_cut<T: Scalar>(
    instance: &Instance<T>,
    solution: &FlowSolution<T>,
    include_symmetric: bool,
) -> Result<SeparationReport<T>, SeparationError> {
    let mut stats = stats_for(instance, solution);
    let mut index = PathIndex::build(instance, solution, &mut stats)?;

    // latest source position of a 0-labeled lifted edge into w per (path, w),
    // and earliest target position of one out of v per (path, v)
    let mut latest_zero: HashMap<(usize, NodeId), (usize, usize)> = HashMap::new();
    let mut earliest_zero: HashMap<(usize, NodeId), (usize, usize)> = HashMap::new();
    let mut leaving = Vec::new();
    let mut entering = Vec::new();
    for (e, edge) in instance.lifted_edges().iter().enumerate() {
        stats.lifted_inspected += 1;
        let (pv, pw) = (index.at(edge.from), index.at(edge.to));
        let on = solution.y_lifted[e];
        if let (Some((a, i)), Some((b, j))) = (pv, pw) {
            if a == b && i < j && on {
                index.shortcuts[edge.to.inner_index().unwrap()].push((i, e));
            }
        }
        if let Some((p, i)) = pv {
            if !on {
                let slot = latest_zero.entry((p, edge.to)).or_insert((i, e));
                if i > slot.0 {
                    *slot = (i, e);
                }
            } else if pw.map_or(true, |(q, _)| q != p) {
                leaving.push((e, p, i));
            }
        }
        if let Some((p, j)) = pw {
            if !on {
                let slot = earliest_zero.entry((p, edge.from)).or_insert((j, e));
                if j < slot.0 {
                    *slot = (j, e);
                }
            } else if include_symmetric && pv.map_or(true, |(q, _)| q != p) {
                entering.push((e, p, j));
            }
        }
    }
    index.finish_shortcuts();

    let point = point_of(solution);
    let mut report = SeparationReport::new(stats);
    for (e, p, i) in leaving {
        let w = instance.lifted_edge(e).to;
        let path = &index.paths[p];
        let case = match latest_zero.get(&(p, w)) {
            Some(&(u, _)) if u >= i => CutCase::Strengthened(u),
            _ => CutCase::Plain(i + path[i..].partition_point(|&u| instance.reaches(u, w)) - 1),
        };
        let c = match case {
            CutCase::Strengthened(u) => build_lifted_path_induced_cut(instance, e, &index.extract(instance, p, i, u), true)?,
            CutCase::Plain(u) => build_lifted_path_induced_cut(instance, e, &index.extract(instance, p, i, u), false)?,
        };
        report.push(c, &point);
    }
    for (e, p, j) in entering {
        let v = instance.lifted_edge(e).from;
        let path = &index.paths[p];
        let case = match earliest_zero.get(&(p, v)) {
            Some(&(u, _)) if u <= j => CutCase::Strengthened(u),
            _ => CutCase::Plain(path[..=j].partition_point(|&u| !instance.reaches(v, u))),
        };
        let c = match case {
            CutCase::Strengthened(u) => {
                build_symmetric_cut(instance, e, &index.extract(instance, p, u, j), SymVariant::Strengthened)?
            }
            CutCase::Plain(u) => build_symmetric_cut(instance, e, &index.extract(instance, p, u, j), SymVariant::Lifted)?,
        };
        report.push(c, &point);
    }
    Ok(report)
}

/// Both separators; the cut separator includes the symmetric forms when asked.
pub fn separate_all<T: Scalar>(
    instance: &Instance<T>,
    solution: &FlowSolution<T>,
    include_symmetric: bool,
) -> Result<(SeparationReport<T>, SeparationReport<T>), SeparationError> {
    Ok((separate_lifted_path(instance, solution)?, separate_lifted_cut(instance, solution, include_symmetric)?))
}
