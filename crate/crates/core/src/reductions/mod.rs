//! Instance generators from the two hardness constructions, with decision
//! wrappers that run the solver on the reduced instance.

pub mod mcf;
pub mod sat;

use thiserror::Error;

use crate::driver::{SolveError, SolveStatus};

pub use mcf::{brute_force_mcf, decide_mcf, parse_mcf, reduce_mcf, Commodity, McfDecision, McfError, McfProblem, McfReduction};
pub use sat::{brute_force_sat, decide_3sat, parse_dimacs, reduce_3sat, CnfFormula, Literal, SatDecision, SatError, SatReduction};

/// Input file error at a 1-based line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

impl FormatError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        FormatError { line, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecideError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("solver stopped with status {0}")]
    Limit(SolveStatus),
}

/// Marks the items lying on some path from a start item to an end item.
pub(crate) fn on_st_paths(
    n: usize,
    is_start: impl Fn(usize) -> bool,
    is_end: impl Fn(usize) -> bool,
    succ: impl Fn(usize) -> Vec<usize>,
) -> Vec<bool> {
    let adj: Vec<Vec<usize>> = (0..n).map(&succ).collect();
    let mut fwd = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&a| is_start(a)).collect();
    for &a in &stack {
        fwd[a] = true;
    }
    while let Some(a) = stack.pop() {
        for &b in &adj[a] {
            if !fwd[b] {
                fwd[b] = true;
                stack.push(b);
            }
        }
    }
    let mut pred = vec![Vec::new(); n];
    for (a, bs) in adj.iter().enumerate() {
        for &b in bs {
            pred[b].push(a);
        }
    }
    let mut bwd = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&a| is_end(a)).collect();
    for &a in &stack {
        bwd[a] = true;
    }
    while let Some(a) = stack.pop() {
        for &b in &pred[a] {
            if !bwd[b] {
                bwd[b] = true;
                stack.push(b);
            }
        }
    }
    (0..n).map(|a| fwd[a] && bwd[a]).collect()
}
