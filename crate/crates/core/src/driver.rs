//! Cutting-plane loop: solve the master ILP over the current cut pool,
//! separate lifted inequalities at its solution, repeat until the lifted
//! labels agree with the flow.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::constraints::{all_flow_conservation, all_single_node_cuts, build_lifted_flow_inequalities, CutPool};
use crate::instance::{evaluate_objective, FlowError, FlowSolution, Instance, NodeId};
use crate::milp::{solve_binary_from, BinaryStatus, BnbOptions, Family, LpError, VarValues, VariableSpace};
use crate::scalar::Scalar;
use crate::separation::{separate_all, SeparationError};

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub max_cut_rounds: usize,
    /// Branch-and-bound node budget of each master solve.
    pub ilp_node_limit: usize,
    pub include_symmetric: bool,
    /// `None` adds lifted flow inequalities exactly when frames are present.
    pub include_lifted_flow: Option<bool>,
    pub time_limit: Option<Duration>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_cut_rounds: 100,
            ilp_node_limit: 100_000,
            include_symmetric: true,
            include_lifted_flow: None,
            time_limit: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    RoundLimit,
    TimeLimit,
    /// A master solve ran out of branch-and-bound nodes.
    NodeLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::RoundLimit => "round_limit",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::NodeLimit => "node_limit",
        })
    }
}

/// One line of the round trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTrace {
    pub round: usize,
    #[serde(serialize_with = "nine_digits")]
    pub master_objective: f64,
    pub cuts_added_by_family: BTreeMap<String, usize>,
}

fn nine_digits<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(crate::scalar::format_sig(*v).parse().unwrap_or(*v))
}

#[derive(Clone, Debug)]
pub struct SolveOutcome<T> {
    /// Always a feasible labeling. Below optimality it is the last master
    /// solution with its lifted labels recomputed from the flow.
    pub solution: FlowSolution<T>,
    pub status: SolveStatus,
    pub rounds_used: usize,
    pub trace: Vec<RoundTrace>,
    /// Separated constraints per family, summed over rounds.
    pub added_by_family: BTreeMap<Family, usize>,
    /// Certification of the last master solution as returned by the ILP.
    pub diagnostics: Certificate,
    pub pool: CutPool<T>,
}

impl<T: Scalar> SolveOutcome<T> {
    /// JSON-lines rendering of the round trace.
    pub fn trace_json_lines(&self) -> String {
        self.trace.iter().map(|r| serde_json::to_string(r).expect("trace serializes") + "\n").collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("master problem infeasible (constraint {0:?})")]
    MasterInfeasible(Option<usize>),
    #[error("master solution is not a valid flow: {0}")]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Separation(#[from] SeparationError),
    #[error("round {0} found violated constraints that were all already in the pool")]
    Stalled(usize),
}

/// The constraints every master problem starts from.
pub fn initial_pool<T: Scalar>(instance: &Instance<T>, config: &SolveConfig) -> CutPool<T> {
    let mut pool = CutPool::new();
    pool.extend(all_flow_conservation(instance));
    pool.extend(all_single_node_cuts(instance));
    if config.include_lifted_flow.unwrap_or(instance.frames().is_some()) {
        if let Ok(cs) = build_lifted_flow_inequalities(instance) {
            pool.extend(cs);
        }
    }
    pool
}

pub fn solve<T: Scalar>(instance: &Instance<T>, config: &SolveConfig) -> Result<SolveOutcome<T>, SolveError> {
    solve_with_pool(instance, config, initial_pool(instance, config))
}

/// Runs the loop starting from `pool` instead of the initial constraints.
pub fn solve_with_pool<T: Scalar>(
    instance: &Instance<T>,
    config: &SolveConfig,
    mut pool: CutPool<T>,
) -> Result<SolveOutcome<T>, SolveError> {
    assert!(config.max_cut_rounds >= 1, "at least one round");
    let start = Instant::now();
    let space = VariableSpace::for_instance(instance);
    let objective = VariableSpace::objective(instance);
    let options = BnbOptions { node_limit: config.ilp_node_limit, ..BnbOptions::default() };
    let mut trace = Vec::new();
    let mut added_by_family: BTreeMap<Family, usize> = BTreeMap::new();
    let mut last: Option<FlowSolution<T>> = None;
    let mut status = SolveStatus::RoundLimit;
    let mut warm = None;

    for round in 1..=config.max_cut_rounds {
        if config.time_limit.is_some_and(|limit| start.elapsed() > limit) && last.is_some() {
            status = SolveStatus::TimeLimit;
            break;
        }
        let res = solve_binary_from(&space, &objective, pool.constraints(), &options, warm.take())?;
        warm = res.root_basis.clone();
        let values = match (res.status, res.values) {
            (BinaryStatus::Infeasible, _) | (_, None) if res.status != BinaryStatus::NodeLimit => {
                return Err(SolveError::MasterInfeasible(res.infeasible_constraint))
            }
            (_, Some(v)) => v,
            (_, None) => {
                status = SolveStatus::NodeLimit;
                break;
            }
        };
        let mut master = FlowSolution::from_values(instance, &values.x, &values.y, &values.y_lifted)?;
        master.objective = evaluate_objective(instance, &master);
        log::debug!(
            "round {round}: master objective {}, {} branch-and-bound nodes, {} rows",
            master.objective,
            res.nodes,
            pool.constraints().len()
        );

        let (paths, cuts) = separate_all(instance, &master, config.include_symmetric)?;
        let mut added: BTreeMap<Family, usize> = BTreeMap::new();
        let found = paths.constraints.len() + cuts.constraints.len();
        for (f, k) in pool.extend(paths.constraints.into_iter().chain(cuts.constraints)) {
            added.insert(f, k);
            *added_by_family.entry(f).or_default() += k;
        }
        trace.push(RoundTrace {
            round,
            master_objective: master.objective.as_f64(),
            cuts_added_by_family: added.iter().map(|(f, &k)| (f.name().to_string(), k)).collect(),
        });
        last = Some(master);
        if res.status == BinaryStatus::NodeLimit {
            status = SolveStatus::NodeLimit;
            break;
        }
        if found == 0 {
            status = SolveStatus::Optimal;
            break;
        }
        if added.is_empty() {
            return Err(SolveError::Stalled(round));
        }
    }

    let master = match last {
        Some(m) => m,
        None => FlowSolution::empty(instance),
    };
    let diagnostics = certify(instance, &master);
    let solution = if status == SolveStatus::Optimal { master } else { repair(instance, &master) };
    Ok(SolveOutcome { solution, status, rounds_used: trace.len(), trace, added_by_family, diagnostics, pool })
}

/// The flow of `master` with lifted labels recomputed from it. Flow
/// conservation holds in every master solution, so this is feasible.
fn repair<T: Scalar>(instance: &Instance<T>, master: &FlowSolution<T>) -> FlowSolution<T> {
    let mut sol = master.clone();
    sol.y_lifted = active_connectivity(instance, &sol.y);
    sol.objective = evaluate_objective(instance, &sol);
    sol
}

/// One reason a labeling is not a feasible lifted disjoint paths solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Conservation { node: NodeId, inflow: usize, outflow: usize, x: bool },
    NotIntegral { variable: String },
    LiftedLabel { edge: usize, from: NodeId, to: NodeId, found: bool, expected: bool },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Conservation { node, inflow, outflow, x } => {
                write!(f, "conservation at node {node}: in {inflow}, out {outflow}, x {}", u8::from(*x))
            }
            Violation::NotIntegral { variable } => write!(f, "{variable} is fractional"),
            Violation::LiftedLabel { from, to, found, expected, .. } => {
                write!(f, "lifted label y'[{from},{to}] is {}, flow implies {}", u8::from(*found), u8::from(*expected))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Certificate {
    pub violations: Vec<Violation>,
}

impl Certificate {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `y'_vw` for every lifted edge, read as reachability over active base edges.
fn active_connectivity<T: Scalar>(instance: &Instance<T>, y: &[bool]) -> Vec<bool> {
    let n = instance.inner_count();
    // reach sets in reverse topological order over active edges
    let mut reach: Vec<Vec<bool>> = vec![Vec::new(); n];
    for &v in instance.topological_order().iter().rev() {
        let Some(i) = v.inner_index() else { continue };
        let mut row = vec![false; n];
        row[i] = true;
        for &e in instance.out_base(v) {
            if let (true, Some(j)) = (y[e], instance.base_edge(e).to.inner_index()) {
                for (k, r) in reach[j].iter().enumerate() {
                    if *r {
                        row[k] = true;
                    }
                }
            }
        }
        reach[i] = row;
    }
    instance
        .lifted_edges()
        .iter()
        .map(|e| reach[e.from.inner_index().unwrap()][e.to.inner_index().unwrap()])
        .collect()
}

/// Checks flow conservation, node-disjointness and lifted label consistency;
/// lists every violated node and every wrong lifted label.
pub fn certify<T: Scalar>(instance: &Instance<T>, solution: &FlowSolution<T>) -> Certificate {
    let mut violations = Vec::new();
    for v in instance.inner_nodes() {
        let i = v.inner_index().unwrap();
        let inflow = instance.in_base(v).iter().filter(|&&e| solution.y[e]).count();
        let outflow = instance.out_base(v).iter().filter(|&&e| solution.y[e]).count();
        let x = solution.x[i];
        let want = usize::from(x);
        if inflow != want || outflow != want {
            violations.push(Violation::Conservation { node: v, inflow, outflow, x });
        }
    }
    let expected = active_connectivity(instance, &solution.y);
    for (e, (&found, &exp)) in solution.y_lifted.iter().zip(&expected).enumerate() {
        if found != exp {
            let edge = instance.lifted_edge(e);
            violations.push(Violation::LiftedLabel { edge: e, from: edge.from, to: edge.to, found, expected: exp });
        }
    }
    Certificate { violations }
}

/// [`certify`] for possibly fractional values: fractional variables are
/// reported and the rest is checked after rounding.
pub fn certify_values<T: Scalar>(instance: &Instance<T>, values: &VarValues<T>) -> Certificate {
    let space = VariableSpace::for_instance(instance);
    let dense = values.flatten();
    let mut frac = Vec::new();
    for (col, &v) in dense.iter().enumerate() {
        if (v - v.round()).abs() > T::integrality_tol() {
            frac.push(Violation::NotIntegral { variable: space.handle(col).name(instance) });
        }
    }
    let b = |vs: &[T]| -> Vec<bool> { vs.iter().map(|&v| v > T::lit(0.5)).collect() };
    let sol = FlowSolution { x: b(&values.x), y: b(&values.y), y_lifted: b(&values.y_lifted), objective: T::zero() };
    let mut cert = certify(instance, &sol);
    frac.append(&mut cert.violations);
    Certificate { violations: frac }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{solution_from_paths, InstanceBuilder};
    use crate::oracle::brute_force_optimum;
    use crate::random::{random_instance, RandomInstanceParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn n(k: usize) -> NodeId {
        NodeId::inner(k)
    }

    #[test]
    fn zero_lifted_costs_reduce_to_flow() {
        let mut b = InstanceBuilder::new(4);
        b.base(NodeId::SOURCE, n(1), -1.0)
            .base(NodeId::SOURCE, n(2), 0.5)
            .base(n(1), n(3), -1.0)
            .base(n(2), n(3), -2.0)
            .base(n(2), n(4), 0.0)
            .base(n(3), NodeId::SINK, 0.0)
            .base(n(4), NodeId::SINK, -1.0)
            .lifted(n(1), n(3), 0.0)
            .lifted(n(2), n(3), 0.0);
        let inst = b.build().unwrap();
        let out = solve(&inst, &SolveConfig::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.solution.objective, brute_force_optimum(&inst, 10_000).unwrap().objective);
        assert!(certify(&inst, &out.solution).is_feasible());
    }

    #[test]
    fn matches_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let p = RandomInstanceParams { max_nodes: 8, max_base: 20, max_lifted: 8, ..RandomInstanceParams::default() };
        for _ in 0..40 {
            let inst = random_instance(&mut rng, &p);
            let out = solve(&inst, &SolveConfig::default()).unwrap();
            assert_eq!(out.status, SolveStatus::Optimal);
            let opt = brute_force_optimum(&inst, 1_000_000).unwrap();
            assert!((out.solution.objective - opt.objective).abs() <= 1e-9);
            assert!(out.diagnostics.is_feasible());
            for w in out.trace.windows(2) {
                assert!(w[1].master_objective >= w[0].master_objective - 1e-9);
            }
            for r in &out.trace[..out.trace.len() - 1] {
                assert!(r.cuts_added_by_family.values().sum::<usize>() > 0);
            }
            let again = solve_with_pool(&inst, &SolveConfig::default(), out.pool.clone()).unwrap();
            assert!((again.trace[0].master_objective - opt.objective).abs() <= 1e-9);
            assert_eq!(again.solution.objective, out.solution.objective);
        }
    }

    #[test]
    fn certify_reports_each_problem() {
        let mut b = InstanceBuilder::new(3);
        b.base(NodeId::SOURCE, n(1), 0.0)
            .base(n(1), n(2), 0.0)
            .base(n(2), n(3), 0.0)
            .base(n(3), NodeId::SINK, 0.0)
            .lifted(n(1), n(3), 0.0)
            .lifted(n(1), n(2), 0.0);
        let inst = b.build().unwrap();
        let sol = solution_from_paths(&inst, &[vec![n(1), n(2), n(3)]]).unwrap();
        assert!(certify(&inst, &sol).is_feasible());

        let mut flipped = sol.clone();
        flipped.y_lifted[0] = false;
        let c = certify(&inst, &flipped);
        assert_eq!(c.violations.len(), 1);
        assert!(matches!(c.violations[0], Violation::LiftedLabel { edge: 0, .. }));

        let mut broken = sol.clone();
        broken.y[inst.find_base(n(2), n(3)).unwrap()] = false;
        let c = certify(&inst, &broken);
        assert!(c.violations.iter().any(|v| matches!(v, Violation::Conservation { node, .. } if *node == n(2))));

        let mut vals = VarValues::from_solution(&sol);
        vals.x[0] = 0.5;
        assert!(matches!(certify_values(&inst, &vals).violations[0], Violation::NotIntegral { .. }));
    }

    #[test]
    fn trace_is_json_lines() {
        let mut b = InstanceBuilder::new(2);
        b.base(NodeId::SOURCE, n(1), -1.0).base(n(1), n(2), -1.0).base(n(2), NodeId::SINK, 0.0).lifted(n(1), n(2), 1.0);
        let inst = b.build().unwrap();
        let out = solve(&inst, &SolveConfig::default()).unwrap();
        let text = out.trace_json_lines();
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("round").is_some() && v.get("master_objective").is_some());
        }
        assert_eq!(out.solution.objective, -1.0);
    }
}
