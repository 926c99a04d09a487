//! Bounded-variable revised simplex with a product-form inverse: primal
//! phases from a slack basis, dual phase from a previous basis.

use crate::scalar::Scalar;

use super::Sense;

/// Column-indexed LP: minimize `cost . x` s.t. rows, `lower <= x <= upper`.
#[derive(Clone, Debug)]
pub(crate) struct LpProblem<T> {
    pub cost: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub rows: Vec<Row<T>>,
}

#[derive(Clone, Debug)]
pub(crate) struct Row<T> {
    pub terms: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Outcome<T> {
    Optimal { x: Vec<T>, objective: T, iterations: usize, basis: Basis },
    /// Row with the largest residual infeasibility, if any row is to blame.
    Infeasible { row: Option<usize> },
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct IterationLimit;

const REINVERT_EVERY: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

/// Final basis of an optimal solve: structural columns, then one slack per
/// row. Restarting from it stays valid when bounds change or rows are
/// appended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Basis(Vec<State>);

struct Eta<T> {
    row: usize,
    pivot: T,
    others: Vec<(usize, T)>,
}

struct Simplex<T> {
    m: usize,
    n_struct: usize,
    cols: Vec<Vec<(usize, T)>>,
    cost: Vec<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    b: Vec<T>,
    x: Vec<T>,
    state: Vec<State>,
    head: Vec<usize>,
    etas: Vec<Eta<T>>,
    fresh_etas: usize,
    iterations: usize,
    max_iterations: usize,
}

/// Structural and slack columns with their bounds.
fn columns<T: Scalar>(lp: &LpProblem<T>) -> (Vec<Vec<(usize, T)>>, Vec<T>, Vec<T>) {
    let n = lp.cost.len();
    let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.terms {
            cols[j].push((i, a));
        }
    }
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    let inf = T::infinity();
    for (i, row) in lp.rows.iter().enumerate() {
        let (lo, hi) = match row.sense {
            Sense::Le => (T::zero(), inf),
            Sense::Ge => (-inf, T::zero()),
            Sense::Eq => (T::zero(), T::zero()),
        };
        cols.push(vec![(i, T::one())]);
        lower.push(lo);
        upper.push(hi);
    }
    (cols, lower, upper)
}

fn at_bound<T: Scalar>(lower: T, upper: T, prefer_upper: bool) -> (State, T) {
    if (prefer_upper && upper.is_finite()) || !lower.is_finite() {
        (State::Upper, upper)
    } else {
        (State::Lower, lower)
    }
}

pub(crate) fn solve<T: Scalar>(lp: &LpProblem<T>, max_iterations: usize) -> Result<Outcome<T>, IterationLimit> {
    let n = lp.cost.len();
    let m = lp.rows.len();
    if (0..n).any(|j| lp.lower[j] > lp.upper[j] + T::feasibility_tol()) {
        return Ok(Outcome::Infeasible { row: None });
    }
    let (mut cols, mut lower, mut upper) = columns(lp);
    let mut x = Vec::with_capacity(n + 2 * m);
    let mut state = Vec::with_capacity(n + 2 * m);
    for j in 0..n {
        assert!(lower[j].is_finite() || upper[j].is_finite(), "free structural variables are not supported");
        let (st, v) = at_bound(lower[j], upper[j], false);
        x.push(v);
        state.push(st);
    }

    // residual of each row with every structural at its starting bound
    let mut resid: Vec<T> = lp.rows.iter().map(|r| r.rhs).collect();
    for (j, col) in cols[..n].iter().enumerate() {
        if !x[j].is_zero() {
            for &(i, a) in col {
                resid[i] = resid[i] - a * x[j];
            }
        }
    }

    let mut head = vec![usize::MAX; m];
    for i in 0..m {
        let (lo, hi) = (lower[n + i], upper[n + i]);
        let r = resid[i];
        if r >= lo && r <= hi {
            x.push(r);
            state.push(State::Basic);
            head[i] = n + i;
        } else if r < lo {
            x.push(lo);
            state.push(State::Lower);
        } else {
            x.push(hi);
            state.push(State::Upper);
        }
    }
    let inf = T::infinity();
    let mut artificial = Vec::new();
    let mut etas = Vec::new();
    for i in 0..m {
        if head[i] != usize::MAX {
            continue;
        }
        let d = resid[i] - x[n + i];
        let sign = if d >= T::zero() { T::one() } else { -T::one() };
        let j = cols.len();
        cols.push(vec![(i, sign)]);
        lower.push(T::zero());
        upper.push(inf);
        x.push(d.abs());
        state.push(State::Basic);
        head[i] = j;
        artificial.push(j);
        if sign < T::zero() {
            etas.push(Eta { row: i, pivot: sign, others: Vec::new() });
        }
    }

    let total = cols.len();
    let mut sx = Simplex {
        m,
        n_struct: n,
        cols,
        cost: vec![T::zero(); total],
        lower,
        upper,
        b: lp.rows.iter().map(|r| r.rhs).collect(),
        x,
        state,
        head,
        fresh_etas: 0,
        etas,
        iterations: 0,
        max_iterations,
    };

    if !artificial.is_empty() {
        for &j in &artificial {
            sx.cost[j] = T::one();
        }
        if !sx.run()? {
            unreachable!("phase one is bounded below by zero");
        }
        let infeas: T = artificial.iter().map(|&j| sx.x[j]).sum();
        if infeas > T::feasibility_tol() {
            let &worst = artificial
                .iter()
                .max_by(|&&a, &&b| sx.x[a].partial_cmp(&sx.x[b]).unwrap_or(std::cmp::Ordering::Equal))
                .expect("nonempty");
            let row = sx.cols[worst][0].0;
            return Ok(Outcome::Infeasible { row: Some(row) });
        }
        for &j in &artificial {
            sx.cost[j] = T::zero();
            sx.upper[j] = T::zero();
            if sx.state[j] != State::Basic {
                sx.x[j] = T::zero();
                sx.state[j] = State::Lower;
            }
        }
    }
    sx.cost[..n].copy_from_slice(&lp.cost);
    if !sx.run()? {
        return Ok(Outcome::Unbounded);
    }
    Ok(sx.optimal(lp))
}

/// Re-solves from `basis`, which must come from an optimal solve of an LP
/// with the same costs and columns whose rows are a prefix of `lp`'s. Falls
/// back to [`solve`] when the basis is unusable.
pub(crate) fn solve_from<T: Scalar>(
    lp: &LpProblem<T>,
    basis: &Basis,
    max_iterations: usize,
) -> Result<Outcome<T>, IterationLimit> {
    let n = lp.cost.len();
    let m = lp.rows.len();
    if basis.0.len() < n || basis.0.len() > n + m || (0..n).any(|j| lp.lower[j] > lp.upper[j] + T::feasibility_tol()) {
        return solve(lp, max_iterations);
    }
    let (cols, lower, upper) = columns(lp);
    let mut x = Vec::with_capacity(n + m);
    let mut state = Vec::with_capacity(n + m);
    let mut candidates = Vec::new();
    for j in 0..n + m {
        match basis.0.get(j).copied().unwrap_or(State::Basic) {
            State::Basic => {
                x.push(T::zero());
                state.push(State::Basic);
                candidates.push(j);
            }
            st => {
                let (st, v) = at_bound(lower[j], upper[j], st == State::Upper);
                x.push(v);
                state.push(st);
            }
        }
    }
    let mut cost = lp.cost.clone();
    cost.resize(n + m, T::zero());
    let mut sx = Simplex {
        m,
        n_struct: n,
        cols,
        cost,
        lower,
        upper,
        b: lp.rows.iter().map(|r| r.rhs).collect(),
        x,
        state,
        head: vec![usize::MAX; m],
        fresh_etas: 0,
        etas: Vec::new(),
        iterations: 0,
        max_iterations,
    };
    sx.factor(candidates);
    match sx.dual() {
        Some(true) => {}
        Some(false) => return Ok(Outcome::Infeasible { row: None }),
        None => return solve(lp, max_iterations),
    }
    match sx.run() {
        Ok(true) => Ok(sx.optimal(lp)),
        Ok(false) => Ok(Outcome::Unbounded),
        Err(IterationLimit) => solve(lp, max_iterations),
    }
}

impl<T: Scalar> Simplex<T> {
    fn ftran(&self, a: &mut [T]) {
        for eta in &self.etas {
            let ar = a[eta.row];
            if ar.is_zero() {
                continue;
            }
            a[eta.row] = ar * eta.pivot;
            for &(i, v) in &eta.others {
                a[i] = a[i] + v * ar;
            }
        }
    }

    fn btran(&self, y: &mut [T]) {
        for eta in self.etas.iter().rev() {
            let mut s = y[eta.row] * eta.pivot;
            for &(i, v) in &eta.others {
                s = s + y[i] * v;
            }
            y[eta.row] = s;
        }
    }

    fn column(&self, j: usize) -> Vec<T> {
        let mut a = vec![T::zero(); self.m];
        for &(i, v) in &self.cols[j] {
            a[i] = v;
        }
        self.ftran(&mut a);
        a
    }

    fn push_eta(&mut self, row: usize, alpha: &[T]) {
        let pivot = T::one() / alpha[row];
        let others = alpha
            .iter()
            .enumerate()
            .filter(|&(i, v)| i != row && !v.is_zero())
            .map(|(i, &v)| (i, -v * pivot))
            .collect();
        self.etas.push(Eta { row, pivot, others });
    }

    /// Rebuilds the eta file from the current basis and recomputes basic values.
    fn reinvert(&mut self) {
        self.factor(self.head.clone());
    }

    /// Factors a basis chosen from `basics`; columns that do not fit become
    /// nonbasic and uncovered rows take their slack.
    fn factor(&mut self, basics: Vec<usize>) {
        self.etas.clear();
        let mut claimed = vec![false; self.m];
        let mut new_head = vec![usize::MAX; self.m];
        // logical columns first, each on its own row
        let mut rest = Vec::new();
        for &j in &basics {
            if j >= self.n_struct {
                let (i, sign) = self.cols[j][0];
                if !claimed[i] {
                    claimed[i] = true;
                    new_head[i] = j;
                    if sign != T::one() {
                        self.etas.push(Eta { row: i, pivot: T::one() / sign, others: Vec::new() });
                    }
                    continue;
                }
            }
            rest.push(j);
        }
        let mut dropped = Vec::new();
        for j in rest {
            let alpha = self.column(j);
            let best = (0..self.m)
                .filter(|&i| !claimed[i])
                .max_by(|&a, &b| alpha[a].abs().partial_cmp(&alpha[b].abs()).unwrap_or(std::cmp::Ordering::Equal));
            match best {
                Some(r) if alpha[r].abs() > T::pivot_tol() => {
                    claimed[r] = true;
                    new_head[r] = j;
                    self.push_eta(r, &alpha);
                }
                _ => dropped.push(j),
            }
        }
        // singular basis: replace dropped columns by slacks of unclaimed rows
        for j in dropped {
            log::debug!("reinversion dropped column {j}");
            let up = self.upper[j].is_finite() && (self.x[j] - self.upper[j]).abs() < (self.x[j] - self.lower[j]).abs();
            if up || !self.lower[j].is_finite() {
                self.state[j] = State::Upper;
                self.x[j] = self.upper[j];
            } else {
                self.state[j] = State::Lower;
                self.x[j] = self.lower[j];
            }
        }
        for i in 0..self.m {
            if !claimed[i] {
                let j = self.n_struct + i;
                new_head[i] = j;
                self.state[j] = State::Basic;
            }
        }
        self.head = new_head;
        self.fresh_etas = self.etas.len();
        self.recompute_basics();
    }

    fn recompute_basics(&mut self) {
        let mut r = self.b.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.state[j] != State::Basic && !self.x[j].is_zero() {
                for &(i, a) in col {
                    r[i] = r[i] - a * self.x[j];
                }
            }
        }
        self.ftran(&mut r);
        for (i, &j) in self.head.iter().enumerate() {
            self.x[j] = r[i];
        }
    }

    /// Runs primal simplex on the current cost vector. Returns `false` when
    /// the objective is unbounded.
    fn run(&mut self) -> Result<bool, IterationLimit> {
        let degenerate_cap = 3 * (self.m + self.cols.len());
        let mut degenerate = 0usize;
        let mut clean = false;
        loop {
            if self.etas.len() >= REINVERT_EVERY + self.fresh_etas {
                self.reinvert();
            }
            let bland = degenerate > degenerate_cap;
            let Some((q, dir)) = self.price(bland) else {
                if clean {
                    return Ok(true);
                }
                // confirm optimality on a fresh factorization
                self.reinvert();
                clean = true;
                continue;
            };
            clean = false;
            if self.iterations >= self.max_iterations {
                return Err(IterationLimit);
            }
            self.iterations += 1;

            let alpha = self.column(q);
            let range = self.upper[q] - self.lower[q];
            let mut t = range;
            let mut leave: Option<usize> = None;
            let tol = T::pivot_tol();
            let tie = T::feasibility_tol() * T::lit(1e-3);
            for i in 0..self.m {
                let a = alpha[i];
                if a.abs() <= tol {
                    continue;
                }
                let j = self.head[i];
                // basic value moves by -dir * a * t
                let slope = -dir * a;
                let limit = if slope < T::zero() {
                    if !self.lower[j].is_finite() {
                        continue;
                    }
                    ((self.x[j] - self.lower[j]) / -slope).max(T::zero())
                } else {
                    if !self.upper[j].is_finite() {
                        continue;
                    }
                    ((self.upper[j] - self.x[j]) / slope).max(T::zero())
                };
                let better = match leave {
                    None => limit < t,
                    Some(l) => {
                        if (limit - t).abs() <= tie {
                            if bland {
                                j < self.head[l]
                            } else {
                                a.abs() > alpha[l].abs()
                            }
                        } else {
                            limit < t
                        }
                    }
                };
                if better {
                    t = limit;
                    leave = Some(i);
                }
            }
            if !t.is_finite() {
                return Ok(false);
            }
            if t <= T::feasibility_tol() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.x[q] = self.x[q] + dir * t;
            for i in 0..self.m {
                if !alpha[i].is_zero() {
                    let j = self.head[i];
                    self.x[j] = self.x[j] - dir * alpha[i] * t;
                }
            }
            match leave {
                None => {
                    // bound flip
                    if dir > T::zero() {
                        self.state[q] = State::Upper;
                        self.x[q] = self.upper[q];
                    } else {
                        self.state[q] = State::Lower;
                        self.x[q] = self.lower[q];
                    }
                }
                Some(r) => {
                    let j = self.head[r];
                    let slope = -dir * alpha[r];
                    if slope < T::zero() {
                        self.state[j] = State::Lower;
                        self.x[j] = self.lower[j];
                    } else {
                        self.state[j] = State::Upper;
                        self.x[j] = self.upper[j];
                    }
                    self.state[q] = State::Basic;
                    self.head[r] = q;
                    self.push_eta(r, &alpha);
                }
            }
        }
    }

    fn optimal(&self, lp: &LpProblem<T>) -> Outcome<T> {
        let n = self.n_struct;
        let x: Vec<T> =
            self.x[..n].iter().zip(lp.lower.iter().zip(&lp.upper)).map(|(&v, (&lo, &hi))| v.max(lo).min(hi)).collect();
        let objective = x.iter().zip(&lp.cost).map(|(&v, &c)| v * c).sum();
        Outcome::Optimal { x, objective, iterations: self.iterations, basis: Basis(self.state[..n + self.m].to_vec()) }
    }

    fn reduced_cost(&self, y: &[T], j: usize) -> T {
        let mut d = self.cost[j];
        for &(i, a) in &self.cols[j] {
            d = d - y[i] * a;
        }
        d
    }

    /// Dual simplex from a dual feasible basis. `Some(true)` once primal
    /// feasible, `Some(false)` when the rows admit no solution, `None` when
    /// the start is not dual feasible or progress stalls.
    fn dual(&mut self) -> Option<bool> {
        let tol = T::feasibility_tol();
        let dtol = T::optimality_tol();
        let total = self.cols.len();
        let mut y: Vec<T> = self.head.iter().map(|&j| self.cost[j]).collect();
        self.btran(&mut y);
        for j in 0..total {
            let d = self.reduced_cost(&y, j);
            let bad = match self.state[j] {
                State::Basic => false,
                _ if self.upper[j] - self.lower[j] <= tol => false,
                State::Lower => d < -dtol,
                State::Upper => d > dtol,
            };
            if bad {
                return None;
            }
        }
        let mut confirmed = false;
        loop {
            if self.etas.len() >= REINVERT_EVERY + self.fresh_etas {
                self.reinvert();
            }
            // leaving row: largest bound violation
            let mut leave: Option<(usize, T, bool)> = None;
            for (i, &j) in self.head.iter().enumerate() {
                let (below, above) = (self.lower[j] - self.x[j], self.x[j] - self.upper[j]);
                let (viol, to_lower) = if below > above { (below, true) } else { (above, false) };
                if viol > tol && leave.is_none_or(|(_, v, _)| viol > v) {
                    leave = Some((i, viol, to_lower));
                }
            }
            let Some((r, _, to_lower)) = leave else {
                return Some(true);
            };
            if self.iterations >= self.max_iterations {
                return None;
            }
            let mut rho = vec![T::zero(); self.m];
            rho[r] = T::one();
            self.btran(&mut rho);
            let mut y: Vec<T> = self.head.iter().map(|&j| self.cost[j]).collect();
            self.btran(&mut y);
            let ptol = T::pivot_tol();
            let mut enter: Option<(usize, T, T)> = None;
            for j in 0..total {
                let st = self.state[j];
                if st == State::Basic || self.upper[j] - self.lower[j] <= tol {
                    continue;
                }
                let mut a = T::zero();
                for &(i, v) in &self.cols[j] {
                    a = a + rho[i] * v;
                }
                if a.abs() <= ptol {
                    continue;
                }
                // x_r moves by -a per unit increase of x_j
                let eligible = match (st, to_lower) {
                    (State::Lower, true) | (State::Upper, false) => a < T::zero(),
                    _ => a > T::zero(),
                };
                if !eligible {
                    continue;
                }
                let ratio = self.reduced_cost(&y, j).abs() / a.abs();
                let better = match enter {
                    None => true,
                    Some((_, best, ba)) => ratio < best - dtol || (ratio <= best + dtol && a.abs() > ba),
                };
                if better {
                    enter = Some((j, ratio, a.abs()));
                }
            }
            let Some((q, _, _)) = enter else {
                if confirmed {
                    return Some(false);
                }
                self.reinvert();
                confirmed = true;
                continue;
            };
            confirmed = false;
            self.iterations += 1;
            let alpha = self.column(q);
            let jr = self.head[r];
            let target = if to_lower { self.lower[jr] } else { self.upper[jr] };
            let step = (self.x[jr] - target) / alpha[r];
            self.x[q] = self.x[q] + step;
            for i in 0..self.m {
                if !alpha[i].is_zero() {
                    let j = self.head[i];
                    self.x[j] = self.x[j] - alpha[i] * step;
                }
            }
            self.x[jr] = target;
            self.state[jr] = if to_lower { State::Lower } else { State::Upper };
            self.state[q] = State::Basic;
            self.head[r] = q;
            self.push_eta(r, &alpha);
        }
    }

    /// Entering variable and direction (+1 increase, -1 decrease).
    fn price(&self, bland: bool) -> Option<(usize, T)> {
        let mut y: Vec<T> = self.head.iter().map(|&j| self.cost[j]).collect();
        self.btran(&mut y);
        let tol = T::optimality_tol();
        let mut best: Option<(usize, T, T)> = None;
        for (j, col) in self.cols.iter().enumerate() {
            let st = self.state[j];
            if st == State::Basic || self.upper[j] - self.lower[j] <= T::feasibility_tol() {
                continue;
            }
            let mut d = self.cost[j];
            for &(i, a) in col {
                d = d - y[i] * a;
            }
            let dir = match st {
                State::Lower if d < -tol => T::one(),
                State::Upper if d > tol => -T::one(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, bd)| d.abs() > bd) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(terms: &[(usize, f64)], sense: Sense, rhs: f64) -> Row<f64> {
        Row { terms: terms.to_vec(), sense, rhs }
    }

    fn boxed(cost: Vec<f64>, rows: Vec<Row<f64>>) -> LpProblem<f64> {
        let n = cost.len();
        LpProblem { cost, lower: vec![0.0; n], upper: vec![1.0; n], rows }
    }

    fn optimum(lp: &LpProblem<f64>) -> f64 {
        match solve(lp, 10_000).unwrap() {
            Outcome::Optimal { objective, .. } => objective,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_variable() {
        let lp = boxed(vec![-1.0], vec![]);
        match solve(&lp, 100).unwrap() {
            Outcome::Optimal { x, objective, .. } => {
                assert_eq!(x, vec![1.0]);
                assert_eq!(objective, -1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x0 + 2 x1 + 3 x2, x0 + x1 + x2 = 1.5, x1 + x2 >= 1
        let lp = boxed(
            vec![1.0, 2.0, 3.0],
            vec![row(&[(0, 1.0), (1, 1.0), (2, 1.0)], Sense::Eq, 1.5), row(&[(1, 1.0), (2, 1.0)], Sense::Ge, 1.0)],
        );
        assert!((optimum(&lp) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_pair() {
        let lp = boxed(vec![0.0], vec![row(&[(0, 1.0)], Sense::Le, 0.0), row(&[(0, 1.0)], Sense::Ge, 1.0)]);
        assert!(matches!(solve(&lp, 100).unwrap(), Outcome::Infeasible { .. }));
    }

    #[test]
    fn unbounded_detected() {
        let lp = LpProblem {
            cost: vec![-1.0],
            lower: vec![0.0],
            upper: vec![f64::INFINITY],
            rows: vec![row(&[(0, 1.0)], Sense::Ge, 0.0)],
        };
        assert_eq!(solve(&lp, 100).unwrap(), Outcome::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // many redundant rows through the same vertex
        let mut rows = Vec::new();
        for k in 1..=12 {
            let kf = k as f64;
            rows.push(row(&[(0, kf), (1, 1.0), (2, -kf)], Sense::Le, 0.0));
            rows.push(row(&[(0, 1.0), (1, -kf), (2, 1.0)], Sense::Le, 0.0));
        }
        let lp = boxed(vec![-1.0, -1.0, 0.5], rows);
        let v = optimum(&lp);
        assert!(v.is_finite());
    }

    #[test]
    fn bounds_respected_with_nonzero_lower() {
        let lp = LpProblem {
            cost: vec![1.0, -1.0],
            lower: vec![1.0, 0.0],
            upper: vec![1.0, 1.0],
            rows: vec![row(&[(0, 1.0), (1, 1.0)], Sense::Le, 1.5)],
        };
        assert!((optimum(&lp) - 0.5).abs() < 1e-12);
    }
}
