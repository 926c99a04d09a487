//! Binary integer programs over instance variables: LP relaxation by simplex
//! and exact 0/1 solutions by branch-and-bound.

mod bnb;
mod model;
mod simplex;

use thiserror::Error;

use crate::scalar::Scalar;

pub(crate) use bnb::solve_binary_from;
pub use bnb::{solve_binary, solve_binary_with, BinaryResult, BinaryStatus, BnbOptions};
pub use model::{ConstraintKey, Family, LinearConstraint, MissingHandle, Sense, VarHandle, VarKind, VarValues, VariableSpace};

pub(crate) use simplex::Basis;
use simplex::{LpProblem, Outcome, Row};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("simplex iteration limit of {0} exceeded")]
    IterationLimit(usize),
    #[error("objective has {got} coefficients, variable space has {expected}")]
    ObjectiveLength { expected: usize, got: usize },
    #[error("constraint {constraint} references {handle} outside the variable space")]
    UnknownHandle { constraint: usize, handle: VarHandle },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult<T> {
    pub status: LpStatus,
    pub objective: T,
    pub values: VarValues<T>,
    /// For infeasible problems: index of the constraint carrying the largest
    /// phase-one residual, a witness for where the system breaks.
    pub infeasible_constraint: Option<usize>,
    pub iterations: usize,
}

/// Default simplex iteration cap per LP.
pub const DEFAULT_ITERATION_LIMIT: usize = 1_000_000;

/// Solves the LP relaxation with every variable boxed to `[0, 1]`.
pub fn solve_lp<T: Scalar>(
    space: &VariableSpace,
    objective: &[T],
    constraints: &[LinearConstraint<T>],
) -> Result<LpResult<T>, LpError> {
    let n = space.len();
    solve_lp_bounded(space, objective, constraints, &vec![T::zero(); n], &vec![T::one(); n])
}

/// Solves the LP with explicit per-variable bounds (dense, in space order).
pub fn solve_lp_bounded<T: Scalar>(
    space: &VariableSpace,
    objective: &[T],
    constraints: &[LinearConstraint<T>],
    lower: &[T],
    upper: &[T],
) -> Result<LpResult<T>, LpError> {
    let compiled = Compiled::new(space, objective, constraints)?;
    compiled.solve(space, lower, upper, DEFAULT_ITERATION_LIMIT, None).map(|(r, _)| r)
}

/// Constraint system translated to column indices once, reused across
/// branch-and-bound nodes.
pub(crate) struct Compiled<T> {
    cost: Vec<T>,
    rows: Vec<Row<T>>,
    /// original constraint index of every kept row
    origin: Vec<usize>,
    /// an empty constraint that can never hold
    contradiction: Option<usize>,
}

impl<T: Scalar> Compiled<T> {
    pub(crate) fn new(
        space: &VariableSpace,
        objective: &[T],
        constraints: &[LinearConstraint<T>],
    ) -> Result<Self, LpError> {
        if objective.len() != space.len() {
            return Err(LpError::ObjectiveLength { expected: space.len(), got: objective.len() });
        }
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        let mut rows = Vec::with_capacity(constraints.len());
        let mut origin = Vec::with_capacity(constraints.len());
        let mut contradiction = None;
        for (k, c) in constraints.iter().enumerate() {
            if !c.rhs().is_finite() || c.terms().iter().any(|(_, a)| !a.is_finite()) {
                return Err(LpError::NonFinite(format!("constraint {k}")));
            }
            if c.terms().is_empty() {
                if contradiction.is_none() && c.violation_of_lhs(T::zero()) > T::feasibility_tol() {
                    contradiction = Some(k);
                }
                continue;
            }
            let mut terms = Vec::with_capacity(c.terms().len());
            for &(h, a) in c.terms() {
                let j = space.column(h).ok_or(LpError::UnknownHandle { constraint: k, handle: h })?;
                terms.push((j, a));
            }
            rows.push(Row { terms, sense: c.sense(), rhs: c.rhs() });
            origin.push(k);
        }
        Ok(Compiled { cost: objective.to_vec(), rows, origin, contradiction })
    }

    /// Solves under the given bounds, restarting from `warm` when given.
    /// Optimal solves also return their final basis.
    pub(crate) fn solve(
        &self,
        space: &VariableSpace,
        lower: &[T],
        upper: &[T],
        max_iterations: usize,
        warm: Option<&Basis>,
    ) -> Result<(LpResult<T>, Option<Basis>), LpError> {
        let infeasible = |row: Option<usize>| LpResult {
            status: LpStatus::Infeasible,
            objective: T::infinity(),
            values: space.zeros(),
            infeasible_constraint: row,
            iterations: 0,
        };
        if let Some(k) = self.contradiction {
            return Ok((infeasible(Some(k)), None));
        }
        let lp = LpProblem { cost: self.cost.clone(), lower: lower.to_vec(), upper: upper.to_vec(), rows: self.rows.clone() };
        let outcome = match warm {
            Some(basis) => simplex::solve_from(&lp, basis, max_iterations),
            None => simplex::solve(&lp, max_iterations),
        };
        match outcome.map_err(|_| LpError::IterationLimit(max_iterations))? {
            Outcome::Optimal { x, objective, iterations, basis } => Ok((
                LpResult {
                    status: LpStatus::Optimal,
                    objective,
                    values: space.unflatten(&x),
                    infeasible_constraint: None,
                    iterations,
                },
                Some(basis),
            )),
            Outcome::Infeasible { row } => Ok((infeasible(row.map(|r| self.origin[r])), None)),
            Outcome::Unbounded => Ok((
                LpResult {
                    status: LpStatus::Unbounded,
                    objective: T::neg_infinity(),
                    values: space.zeros(),
                    infeasible_constraint: None,
                    iterations: 0,
                },
                None,
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lifted_space(n: usize) -> VariableSpace {
        VariableSpace::new(0, 0, n)
    }

    #[test]
    fn minimize_negative_single_variable() {
        let space = lifted_space(1);
        let res = solve_lp::<f64>(&space, &[-1.0], &[]).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.objective, -1.0);
        assert_eq!(res.values.get(VarHandle::lifted(0)), Some(1.0));
    }

    #[test]
    fn infeasible_pair_reports_constraint() {
        let space = lifted_space(1);
        let h = VarHandle::lifted(0);
        let cons = vec![
            LinearConstraint::new(Family::Custom, [(h, 1.0)], Sense::Le, 0.0),
            LinearConstraint::new(Family::Custom, [(h, 1.0)], Sense::Ge, 1.0),
        ];
        let res = solve_lp(&space, &[0.0], &cons).unwrap();
        assert_eq!(res.status, LpStatus::Infeasible);
        assert!(res.infeasible_constraint.is_some());
    }

    #[test]
    fn empty_constraints_are_dropped_or_contradict() {
        let space = lifted_space(1);
        let ok = LinearConstraint::new(Family::Custom, [], Sense::Le, 0.0);
        let bad = LinearConstraint::new(Family::Custom, [], Sense::Ge, 1.0);
        assert_eq!(solve_lp(&space, &[-1.0], &[ok.clone()]).unwrap().objective, -1.0);
        let res = solve_lp(&space, &[-1.0], &[ok, bad]).unwrap();
        assert_eq!(res.status, LpStatus::Infeasible);
        assert_eq!(res.infeasible_constraint, Some(1));
    }

    /// Dense Gaussian elimination with partial pivoting; `None` when singular.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let m = b.len();
        for c in 0..m {
            let p = (c..m).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
            if a[p][c].abs() < 1e-10 {
                return None;
            }
            a.swap(c, p);
            b.swap(c, p);
            for r in 0..m {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    if f != 0.0 {
                        for k in c..m {
                            a[r][k] -= f * a[c][k];
                        }
                        b[r] -= f * b[c];
                    }
                }
            }
        }
        Some((0..m).map(|i| b[i] / a[i][i]).collect())
    }

    /// Minimum over all basic solutions of `A x + s = b`, `0 <= x <= 1`,
    /// `s >= 0`: every split into basic and at-bound nonbasic columns.
    fn vertex_enumeration(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
        let m = b.len();
        let n = c.len();
        let total = n + m;
        let mut best: Option<f64> = None;
        let mut basis: Vec<usize> = (0..m).collect();
        loop {
            let nonbasic_struct: Vec<usize> = (0..n).filter(|j| !basis.contains(j)).collect();
            for mask in 0u32..(1 << nonbasic_struct.len()) {
                let mut xs = vec![0.0; n];
                for (bit, &j) in nonbasic_struct.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        xs[j] = 1.0;
                    }
                }
                let rhs: Vec<f64> =
                    (0..m).map(|i| b[i] - (0..n).map(|j| a[i][j] * xs[j]).sum::<f64>()).collect();
                let mat: Vec<Vec<f64>> = (0..m)
                    .map(|i| basis.iter().map(|&j| if j < n { a[i][j] } else if j - n == i { 1.0 } else { 0.0 }).collect())
                    .collect();
                let Some(sol) = dense_solve(mat, rhs) else { continue };
                let mut ok = true;
                for (k, &j) in basis.iter().enumerate() {
                    let v = sol[k];
                    if j < n {
                        ok &= (-1e-9..=1.0 + 1e-9).contains(&v);
                        xs[j] = v;
                    } else {
                        ok &= v >= -1e-9;
                    }
                }
                if ok {
                    let obj: f64 = (0..n).map(|j| c[j] * xs[j]).sum();
                    best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                }
            }
            // next combination of m basic columns out of `total`
            let mut i = m;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if basis[i] < total - m + i {
                    basis[i] += 1;
                    for k in i + 1..m {
                        basis[k] = basis[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = 10;
            let m = rng.gen_range(1..=3);
            let a: Vec<Vec<f64>> =
                (0..m).map(|_| (0..n).map(|_| rng.gen_range(-4..=4) as f64 * 0.5).collect()).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-2..=6) as f64 * 0.5).collect();
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=4) as f64 * 0.5).collect();
            let space = lifted_space(n);
            let cons: Vec<_> = (0..m)
                .map(|i| {
                    LinearConstraint::new(
                        Family::Custom,
                        (0..n).map(|j| (VarHandle::lifted(j), a[i][j])),
                        Sense::Le,
                        b[i],
                    )
                })
                .collect();
            let res = solve_lp(&space, &c, &cons).unwrap();
            match vertex_enumeration(&a, &b, &c) {
                Some(opt) => {
                    assert_eq!(res.status, LpStatus::Optimal);
                    assert!((res.objective - opt).abs() < 1e-7, "{} vs {}", res.objective, opt);
                    for con in &cons {
                        assert!(con.violation(&res.values).unwrap() <= 1e-9);
                    }
                }
                None => assert_eq!(res.status, LpStatus::Infeasible),
            }
        }
    }

    #[test]
    fn adding_constraints_never_lowers_the_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = 8;
            let space = lifted_space(n);
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
            let mut cons = Vec::new();
            let mut last = solve_lp(&space, &c, &cons).unwrap().objective;
            for _ in 0..6 {
                let mut terms = Vec::new();
                for j in 0..n {
                    if rng.gen_bool(0.5) {
                        terms.push((VarHandle::lifted(j), rng.gen_range(-2..=2) as f64));
                    }
                }
                let sense = if rng.gen_bool(0.5) { Sense::Le } else { Sense::Ge };
                cons.push(LinearConstraint::new(Family::Custom, terms, sense, rng.gen_range(-1..=2) as f64));
                let res = solve_lp(&space, &c, &cons).unwrap();
                if res.status == LpStatus::Infeasible {
                    break;
                }
                assert!(res.objective >= last - 1e-9);
                last = res.objective;
            }
        }
    }

    #[test]
    fn restarts_agree_with_cold_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut warm_used = 0;
        for _ in 0..60 {
            let n = 12;
            let space = lifted_space(n);
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
            let mut cons = Vec::new();
            let random_row = |rng: &mut ChaCha8Rng| {
                let mut terms = Vec::new();
                for j in 0..n {
                    if rng.gen_bool(0.5) {
                        terms.push((VarHandle::lifted(j), rng.gen_range(-2..=2) as f64));
                    }
                }
                let sense = [Sense::Le, Sense::Ge, Sense::Eq][rng.gen_range(0..3)];
                LinearConstraint::new(Family::Custom, terms, sense, rng.gen_range(-1..=3) as f64)
            };
            for _ in 0..3 {
                cons.push(random_row(&mut rng));
            }
            let (lower, mut upper) = (vec![0.0; n], vec![1.0; n]);
            let compiled = Compiled::new(&space, &c, &cons).unwrap();
            let (_, Some(mut basis)) = compiled.solve(&space, &lower, &upper, 10_000, None).unwrap() else {
                continue;
            };
            for step in 0..4 {
                if step % 2 == 0 {
                    cons.push(random_row(&mut rng));
                } else {
                    upper[rng.gen_range(0..n)] = 0.0;
                }
                let compiled = Compiled::new(&space, &c, &cons).unwrap();
                let (cold, _) = compiled.solve(&space, &lower, &upper, 10_000, None).unwrap();
                let (warm, next) = compiled.solve(&space, &lower, &upper, 10_000, Some(&basis)).unwrap();
                assert_eq!(warm.status, cold.status);
                if cold.status != LpStatus::Optimal {
                    break;
                }
                assert!((warm.objective - cold.objective).abs() < 1e-9, "{} vs {}", warm.objective, cold.objective);
                for con in &cons {
                    assert!(con.violation(&warm.values).unwrap() <= 1e-9);
                }
                warm_used += 1;
                basis = next.unwrap();
            }
        }
        assert!(warm_used > 20);
    }

    #[test]
    fn f32_backend() {
        let space = VariableSpace::new(0, 0, 2);
        let cons = vec![LinearConstraint::new(
            Family::Custom,
            [(VarHandle::lifted(0), 1.0f32), (VarHandle::lifted(1), 1.0)],
            Sense::Le,
            1.5,
        )];
        let res = solve_lp::<f32>(&space, &[-1.0, -2.0], &cons).unwrap();
        assert!((res.objective + 2.5).abs() < 1e-5);
    }
}
