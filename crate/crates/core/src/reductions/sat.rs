//! 3-SAT to lifted disjoint paths: one layer of literal nodes per clause,
//! consistent literal sequences are the cheap s-t paths.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use super::{on_st_paths, FormatError};
use crate::driver::{solve, SolveConfig, SolveStatus};
use crate::instance::{Instance, InstanceBuilder, NodeId};
use crate::scalar::format_sig;

use super::DecideError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    /// 1-based variable index.
    pub var: u32,
    pub positive: bool,
}

impl Literal {
    pub fn from_dimacs(x: i64) -> Option<Literal> {
        (x != 0).then(|| Literal { var: x.unsigned_abs() as u32, positive: x > 0 })
    }

    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }

    pub fn contradicts(self, other: Literal) -> bool {
        self.var == other.var && self.positive != other.positive
    }

    pub fn holds(self, assignment: &[bool]) -> bool {
        assignment[self.var as usize - 1] == self.positive
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", if self.positive { "" } else { "!" }, self.var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("formula has no clauses")]
    Empty,
    #[error("clause {clause} contains {var} and its negation")]
    Complementary { clause: usize, var: u32 },
    #[error("variable {var} exceeds the declared {vars} variables")]
    VarRange { var: u32, vars: usize },
}

/// A conjunction of clauses with exactly three literals each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    vars: usize,
    clauses: Vec<[Literal; 3]>,
}

impl CnfFormula {
    pub fn new(vars: usize, clauses: Vec<[Literal; 3]>) -> Result<Self, SatError> {
        if clauses.is_empty() {
            return Err(SatError::Empty);
        }
        for (i, c) in clauses.iter().enumerate() {
            for a in c {
                if a.var == 0 || a.var as usize > vars {
                    return Err(SatError::VarRange { var: a.var, vars });
                }
                if c.iter().any(|b| a.contradicts(*b)) {
                    return Err(SatError::Complementary { clause: i + 1, var: a.var });
                }
            }
        }
        Ok(CnfFormula { vars, clauses })
    }

    /// Builds from signed DIMACS-style literals.
    pub fn from_ints(vars: usize, clauses: &[[i64; 3]]) -> Result<Self, SatError> {
        let mut out = Vec::with_capacity(clauses.len());
        for c in clauses {
            let mut lits = [Literal { var: 0, positive: true }; 3];
            for (l, &x) in lits.iter_mut().zip(c) {
                *l = Literal::from_dimacs(x).ok_or(SatError::VarRange { var: 0, vars })?;
            }
            out.push(lits);
        }
        CnfFormula::new(vars, out)
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn clauses(&self) -> &[[Literal; 3]] {
        &self.clauses
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| l.holds(assignment)))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.vars, self.clauses.len());
        for c in &self.clauses {
            out.push_str(&format!("{} {} {} 0\n", c[0].to_dimacs(), c[1].to_dimacs(), c[2].to_dimacs()));
        }
        out
    }
}

/// Parses DIMACS CNF restricted to one three-literal clause per line.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, FormatError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('c') || t == "%" {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields[0] == "p" {
            if header.is_some() {
                return Err(FormatError::new(line, "duplicate header"));
            }
            if fields.len() != 4 || fields[1] != "cnf" {
                return Err(FormatError::new(line, "header must be `p cnf <vars> <clauses>`"));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| FormatError::new(line, format!("invalid count `{s}`")));
            header = Some((num(fields[2])?, num(fields[3])?));
            continue;
        }
        let Some((vars, _)) = header else {
            return Err(FormatError::new(line, "clause before the `p cnf` header"));
        };
        let lits = fields
            .iter()
            .map(|s| s.parse::<i64>().map_err(|_| FormatError::new(line, format!("invalid literal `{s}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        if lits.len() != 4 || lits[3] != 0 || lits[..3].contains(&0) {
            return Err(FormatError::new(line, "expected three nonzero literals followed by 0"));
        }
        for &x in &lits[..3] {
            if x.unsigned_abs() as usize > vars {
                return Err(FormatError::new(line, format!("literal {x} exceeds {vars} variables")));
            }
        }
        clauses.push((line, [lits[0], lits[1], lits[2]]));
    }
    let (vars, count) = header.ok_or_else(|| FormatError::new(1, "missing `p cnf` header"))?;
    if count != clauses.len() {
        return Err(FormatError::new(1, format!("header declares {count} clauses, found {}", clauses.len())));
    }
    let last = clauses.last().map_or(1, |c| c.0);
    let ints: Vec<[i64; 3]> = clauses.iter().map(|c| c.1).collect();
    CnfFormula::from_ints(vars, &ints).map_err(|e| {
        let line = match e {
            SatError::Complementary { clause, .. } => clauses[clause - 1].0,
            _ => last,
        };
        FormatError::new(line, e.to_string())
    })
}

/// A satisfying assignment by exhaustive search, if one exists.
pub fn brute_force_sat(formula: &CnfFormula) -> Option<Vec<bool>> {
    assert!(formula.vars < 32, "brute force is for small formulas");
    (0u32..1 << formula.vars)
        .map(|m| (0..formula.vars).map(|i| m >> i & 1 == 1).collect::<Vec<bool>>())
        .find(|a| formula.satisfied_by(a))
}

/// The reduced instance together with the clause literal behind each node.
#[derive(Clone, Debug)]
pub struct SatReduction {
    pub instance: Instance<f64>,
    /// `(clause index, literal)` of inner node `i + 1`.
    pub nodes: Vec<(usize, Literal)>,
}

impl SatReduction {
    /// Instance text with the literal of every node in comments.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, (layer, lit)) in self.nodes.iter().enumerate() {
            out.push_str(&format!("# node {} clause {} literal {}\n", i + 1, layer + 1, lit));
        }
        out + &crate::instance::serialize_instance(&self.instance)
    }
}

/// Builds the layered instance. Literal nodes that lie on no s-t path and
/// lifted pairs that no path joins are dropped, so the result always
/// validates.
pub fn reduce_3sat(formula: &CnfFormula) -> SatReduction {
    let k = formula.clauses.len();
    let all: Vec<(usize, Literal)> =
        formula.clauses.iter().enumerate().flat_map(|(i, c)| c.iter().map(move |&l| (i, l))).collect();
    let succ = |a: usize| -> Vec<usize> {
        let (i, l) = all[a];
        (0..all.len()).filter(|&b| all[b].0 == i + 1 && !l.contradicts(all[b].1)).collect()
    };
    let keep = on_st_paths(all.len(), |a| all[a].0 == 0, |a| all[a].0 == k - 1, succ);
    let mut id = vec![None; all.len()];
    let mut nodes = Vec::new();
    for a in 0..all.len() {
        if keep[a] {
            nodes.push(all[a]);
            id[a] = Some(NodeId::inner(nodes.len()));
        }
    }
    let mut b = InstanceBuilder::new(nodes.len());
    for a in 0..all.len() {
        let Some(va) = id[a] else { continue };
        let i = all[a].0;
        if i == 0 {
            b.base(NodeId::SOURCE, va, 0.0);
        }
        if i == k - 1 {
            b.base(va, NodeId::SINK, 0.0);
        }
        for c in succ(a) {
            if let Some(vc) = id[c] {
                b.base(va, vc, -1.0);
            }
        }
    }
    // contradicting pairs no path joins can never be active together
    let skeleton = b.clone().build().expect("layered base graph validates");
    let cost_k = k as f64;
    for a in 0..all.len() {
        let Some(va) = id[a] else { continue };
        let (i, l) = all[a];
        for c in 0..all.len() {
            if let Some(vc) = id[c] {
                if all[c].0 > i + 1 && l.contradicts(all[c].1) && skeleton.reaches(va, vc) {
                    b.lifted(va, vc, cost_k);
                }
            }
        }
    }
    let instance = b.build().expect("reduced 3-SAT instance validates");
    SatReduction { instance, nodes }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SatDecision {
    pub satisfiable: bool,
    pub optimum: f64,
    /// Read off a consistent path; variables not on it are false.
    pub assignment: Option<Vec<bool>>,
}

/// Satisfiable iff the optimum is at most `-(k - 1)`.
pub fn decide_3sat(formula: &CnfFormula, config: &SolveConfig) -> Result<SatDecision, DecideError> {
    let red = reduce_3sat(formula);
    let out = solve(&red.instance, config)?;
    if out.status != SolveStatus::Optimal {
        return Err(DecideError::Limit(out.status));
    }
    let k = formula.clauses.len() as f64;
    let optimum = out.solution.objective;
    let satisfiable = optimum <= -(k - 1.0) + 1e-9;
    log::debug!("3-SAT optimum {} against threshold {}", format_sig(optimum), format_sig(-(k - 1.0)));
    let assignment = satisfiable.then(|| {
        let paths = crate::instance::active_st_paths(&red.instance, &out.solution).expect("solver output is a flow");
        let consistent: Vec<NodeId> = paths
            .into_iter()
            .find(|p| {
                p.len() == formula.clauses.len()
                    && p.iter().all(|a| p.iter().all(|b| !red.nodes[a.inner_index().unwrap()].1.contradicts(red.nodes[b.inner_index().unwrap()].1)))
            })
            // one clause: the empty flow already meets the threshold of 0
            .unwrap_or_else(|| vec![NodeId::inner(1)]);
        let mut assignment = vec![false; formula.vars];
        for v in &consistent {
            let lit = red.nodes[v.inner_index().unwrap()].1;
            assignment[lit.var as usize - 1] = lit.positive;
        }
        assignment
    });
    Ok(SatDecision { satisfiable, optimum, assignment })
}

/// A random formula with `1..=max_vars` variables and `1..=max_clauses`
/// clauses, never repeating a variable with both signs in one clause.
pub fn random_formula(rng: &mut impl Rng, max_vars: usize, max_clauses: usize) -> CnfFormula {
    let vars = rng.gen_range(1..=max_vars);
    let k = rng.gen_range(1..=max_clauses);
    let clauses = (0..k)
        .map(|_| {
            let mut c = [Literal { var: 1, positive: true }; 3];
            for j in 0..3 {
                loop {
                    let l = Literal { var: rng.gen_range(1..=vars as u32), positive: rng.gen_bool(0.5) };
                    if !c[..j].iter().any(|o| o.contradicts(l)) {
                        c[j] = l;
                        break;
                    }
                }
            }
            c
        })
        .collect();
    CnfFormula::new(vars, clauses).expect("generator avoids complementary literals")
}

/// The formula `(a ∨ b ∨ ¬c) ∧ (a ∨ c ∨ ¬d) ∧ (¬a ∨ c ∨ e) ∧ (¬a ∨ c ∨ ¬e)`
/// with variables a..e numbered 1..5.
pub fn four_clause_example() -> CnfFormula {
    CnfFormula::from_ints(5, &[[1, 2, -3], [1, 3, -4], [-1, 3, 5], [-1, 3, -5]]).expect("valid formula")
}

/// All eight sign patterns over three variables: unsatisfiable.
pub fn all_eight_clauses() -> CnfFormula {
    let clauses: Vec<[i64; 3]> = (0..8)
        .map(|m| [1, 2, 3].map(|v| if m >> (v - 1) & 1 == 1 { -v } else { v }))
        .collect();
    CnfFormula::from_ints(3, &clauses).expect("valid formula")
}
