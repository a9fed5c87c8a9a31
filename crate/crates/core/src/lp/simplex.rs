//! Bounded-variable revised primal simplex on a dense explicit basis inverse.
//!
//! Two phases: artificial columns are added only for rows whose initial
//! residual cannot be absorbed by a slack. Pricing is Dantzig's rule; after
//! `bland_after` consecutive degenerate pivots it switches to Bland's rule
//! until the objective moves again. The inverse is updated in product form
//! and rebuilt from scratch every `refactor_period` pivots.

use nalgebra::{DMatrix, DVector};

use super::{LpEngine, LpError, LpProblem, LpSolution, LpStatus, LpTolerances};
use crate::scalar::Real;

/// The built-in engine.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSimplex;

impl<T: Real> LpEngine<T> for DenseSimplex {
    fn solve(&self, problem: &LpProblem<T>, tol: &LpTolerances) -> Result<LpSolution<T>, LpError> {
        problem.check()?;
        Tableau::new(problem, tol).run()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Free nonbasic variable parked at zero.
    Zero,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

struct Tableau<'a, T: Real> {
    tol: &'a LpTolerances,
    n: usize,
    m_eq: usize,
    m: usize,
    /// Structural columns of all rows, equalities first.
    a: DMatrix<T>,
    rhs: DVector<T>,
    /// Row and sign of each artificial column.
    art: Vec<(usize, T)>,
    objective_coeffs: Vec<T>,
    /// Cost vector of the current phase over all columns.
    cost: Vec<T>,
    lo: Vec<T>,
    hi: Vec<T>,
    x: Vec<T>,
    state: Vec<State>,
    basis: Vec<usize>,
    binv: DMatrix<T>,
    iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
}

impl<'a, T: Real> Tableau<'a, T> {
    fn new(p: &LpProblem<T>, tol: &'a LpTolerances) -> Self {
        let n = p.n_vars();
        let m_eq = p.a_eq.nrows();
        let m_le = p.a_le.nrows();
        let m = m_eq + m_le;
        let mut a = DMatrix::zeros(m, n);
        a.rows_mut(0, m_eq).copy_from(&p.a_eq);
        a.rows_mut(m_eq, m_le).copy_from(&p.a_le);
        let rhs = DVector::from_iterator(m, p.b_eq.iter().chain(&p.b_le).copied());

        let mut lo: Vec<T> = p.lower.clone();
        let mut hi: Vec<T> = p.upper.clone();
        let mut x = Vec::with_capacity(n + m);
        let mut state = Vec::with_capacity(n + m);
        for j in 0..n {
            let (l, u) = (p.lower[j], p.upper[j]);
            if l.is_finite_real() {
                x.push(l);
                state.push(State::Lower);
            } else if u.is_finite_real() {
                x.push(u);
                state.push(State::Upper);
            } else {
                x.push(T::zero());
                state.push(State::Zero);
            }
        }
        let ax = &a * DVector::from_column_slice(&x);
        let resid = &rhs - ax;

        // Slacks for inequality rows.
        for _ in 0..m_le {
            lo.push(T::zero());
            hi.push(T::infinity());
            x.push(T::zero());
            state.push(State::Lower);
        }
        let mut basis = vec![usize::MAX; m];
        let mut art = Vec::new();
        for i in 0..m {
            let r = resid[i];
            if i >= m_eq && r >= T::zero() {
                let s = n + (i - m_eq);
                basis[i] = s;
                x[s] = r;
                state[s] = State::Basic;
            } else {
                let sign = if r >= T::zero() { T::one() } else { -T::one() };
                let j = n + m_le + art.len();
                art.push((i, sign));
                lo.push(T::zero());
                hi.push(T::infinity());
                x.push(r.abs());
                state.push(State::Basic);
                basis[i] = j;
            }
        }
        let mut binv = DMatrix::identity(m, m);
        for &(row, sign) in &art {
            binv[(row, row)] = sign;
        }
        let total = x.len();
        Self {
            tol,
            n,
            m_eq,
            m,
            a,
            rhs,
            art,
            objective_coeffs: p.objective.clone(),
            cost: vec![T::zero(); total],
            lo,
            hi,
            x,
            state,
            basis,
            binv,
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
        }
    }

    fn n_slack(&self) -> usize {
        self.m - self.m_eq
    }

    /// `B⁻¹ A_j`.
    fn ftran(&self, j: usize) -> DVector<T> {
        if j < self.n {
            &self.binv * self.a.column(j)
        } else if j < self.n + self.n_slack() {
            self.binv.column(self.m_eq + (j - self.n)).clone_owned()
        } else {
            let (row, sign) = self.art[j - self.n - self.n_slack()];
            self.binv.column(row) * sign
        }
    }

    /// `y·A_j`.
    fn dot_column(&self, y: &DVector<T>, j: usize) -> T {
        if j < self.n {
            self.a.column(j).dot(y)
        } else if j < self.n + self.n_slack() {
            y[self.m_eq + (j - self.n)]
        } else {
            let (row, sign) = self.art[j - self.n - self.n_slack()];
            y[row] * sign
        }
    }

    /// Simplex multipliers `y = B⁻ᵀ c_B`.
    fn multipliers(&self) -> DVector<T> {
        let cb = DVector::from_iterator(self.m, self.basis.iter().map(|&j| self.cost[j]));
        self.binv.tr_mul(&cb)
    }

    fn reduced_cost(&self, y: &DVector<T>, j: usize) -> T {
        self.cost[j] - self.dot_column(y, j)
    }

    fn run(mut self) -> Result<LpSolution<T>, LpError> {
        let has_artificials = !self.art.is_empty();
        if has_artificials {
            for k in 0..self.art.len() {
                let j = self.n + self.n_slack() + k;
                self.cost[j] = T::one();
            }
            match self.optimize()? {
                Some(LpStatus::IterationLimit) => return Ok(self.primal_only(LpStatus::IterationLimit)),
                // Phase one is bounded below by zero.
                Some(_) | None => {}
            }
            let infeasibility = (self.n + self.n_slack()..self.x.len())
                .fold(T::zero(), |acc, j| acc + self.x[j]);
            let scale = 1.0 + self.rhs.iter().fold(0.0_f64, |acc, v| acc.max(v.as_f64().abs()));
            if infeasibility.as_f64() > self.tol.feasibility * scale {
                return Ok(self.primal_only(LpStatus::Infeasible));
            }
            self.retire_artificials()?;
        }
        for j in 0..self.cost.len() {
            self.cost[j] = if j < self.n { self.objective_coeffs[j] } else { T::zero() };
        }
        Ok(match self.optimize()? {
            None => self.finish(),
            Some(status) => self.primal_only(status),
        })
    }

    /// Runs simplex iterations under the current cost vector. Returns `None`
    /// at optimality, otherwise the terminating status.
    fn optimize(&mut self) -> Result<Option<LpStatus>, LpError> {
        loop {
            if self.iterations >= self.tol.max_iterations {
                return Ok(Some(LpStatus::IterationLimit));
            }
            match self.step()? {
                Step::Optimal => return Ok(None),
                Step::Unbounded => return Ok(Some(LpStatus::Unbounded)),
                Step::Moved => {}
            }
        }
    }

    fn step(&mut self) -> Result<Step, LpError> {
        let y = self.multipliers();
        let opt = T::lit(self.tol.optimality);
        // (column, direction, |reduced cost|)
        let mut entering: Option<(usize, T, T)> = None;
        for j in 0..self.x.len() {
            let s = self.state[j];
            if s == State::Basic || self.lo[j] == self.hi[j] {
                continue;
            }
            let d = self.reduced_cost(&y, j);
            let dir = match s {
                State::Lower | State::Zero if d < -opt => T::one(),
                State::Upper | State::Zero if d > opt => -T::one(),
                _ => continue,
            };
            if self.bland {
                entering = Some((j, dir, d.abs()));
                break;
            }
            if entering.map_or(true, |(_, _, best)| d.abs() > best) {
                entering = Some((j, dir, d.abs()));
            }
        }
        let Some((j, dir, _)) = entering else {
            return Ok(Step::Optimal);
        };

        let alpha = self.ftran(j);
        let piv = T::lit(self.tol.pivot);
        let mut best_t = if self.lo[j].is_finite_real() && self.hi[j].is_finite_real() {
            self.hi[j] - self.lo[j]
        } else {
            T::infinity()
        };
        let mut leave: Option<(usize, T)> = None; // (row, |alpha|)
        let tie = T::lit(1e-12);
        for i in 0..self.m {
            let a = alpha[i];
            if a.abs() < piv {
                continue;
            }
            let b = self.basis[i];
            let delta = -dir * a;
            let t = if delta < T::zero() {
                if !self.lo[b].is_finite_real() {
                    continue;
                }
                (self.x[b] - self.lo[b]) / -delta
            } else {
                if !self.hi[b].is_finite_real() {
                    continue;
                }
                (self.hi[b] - self.x[b]) / delta
            };
            let t = t.max(T::zero());
            let better = match leave {
                None => t <= best_t,
                Some((r, mag)) => {
                    let bar = tie * (T::one() + best_t.abs());
                    if t < best_t - bar {
                        true
                    } else if t <= best_t + bar {
                        if self.bland {
                            b < self.basis[r]
                        } else {
                            a.abs() > mag
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                best_t = t;
                leave = Some((i, a.abs()));
            }
        }
        if !best_t.is_finite_real() {
            return Ok(Step::Unbounded);
        }
        self.iterations += 1;
        let t = best_t;

        if t <= T::lit(1e-12) {
            self.degenerate_run += 1;
            if self.degenerate_run >= self.tol.bland_after {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }

        // Move along the edge.
        for i in 0..self.m {
            let b = self.basis[i];
            self.x[b] -= dir * alpha[i] * t;
        }
        self.x[j] += dir * t;

        match leave {
            None => {
                // Bound flip.
                if dir > T::zero() {
                    self.x[j] = self.hi[j];
                    self.state[j] = State::Upper;
                } else {
                    self.x[j] = self.lo[j];
                    self.state[j] = State::Lower;
                }
            }
            Some((r, _)) => {
                let out = self.basis[r];
                let delta = -dir * alpha[r];
                if delta < T::zero() {
                    self.x[out] = self.lo[out];
                    self.state[out] = State::Lower;
                } else {
                    self.x[out] = self.hi[out];
                    self.state[out] = State::Upper;
                }
                self.pivot(r, j, &alpha)?;
            }
        }
        Ok(Step::Moved)
    }

    /// Replaces the basic variable of row `r` with column `j`.
    fn pivot(&mut self, r: usize, j: usize, alpha: &DVector<T>) -> Result<(), LpError> {
        let p = alpha[r];
        let m = self.m;
        for k in 0..m {
            let v = self.binv[(r, k)] / p;
            if v == T::zero() {
                self.binv[(r, k)] = v;
                continue;
            }
            for i in 0..m {
                if i != r {
                    let ai = alpha[i];
                    if ai != T::zero() {
                        self.binv[(i, k)] -= ai * v;
                    }
                }
            }
            self.binv[(r, k)] = v;
        }
        self.basis[r] = j;
        self.state[j] = State::Basic;
        self.since_refactor += 1;
        if self.since_refactor >= self.tol.refactor_period {
            self.refactor()?;
        }
        Ok(())
    }

    /// Rebuilds `B⁻¹` from the basis columns and recomputes basic values.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = DMatrix::zeros(m, m);
        for (r, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                b.set_column(r, &self.a.column(j));
            } else if j < self.n + self.n_slack() {
                b[(self.m_eq + (j - self.n), r)] = T::one();
            } else {
                let (row, sign) = self.art[j - self.n - self.n_slack()];
                b[(row, r)] = sign;
            }
        }
        let lu = b.lu();
        let u = lu.u();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for k in 0..m {
            let d = u[(k, k)].as_f64().abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        if m > 0 && ratio < 1e-14 {
            return Err(LpError::SingularBasis { pivot_ratio: ratio });
        }
        self.binv = lu.try_inverse().ok_or(LpError::SingularBasis { pivot_ratio: ratio })?;
        self.since_refactor = 0;
        self.recompute_basics();
        Ok(())
    }

    fn recompute_basics(&mut self) {
        let mut r = self.rhs.clone();
        for j in 0..self.x.len() {
            if self.state[j] == State::Basic || self.x[j] == T::zero() {
                continue;
            }
            let xj = self.x[j];
            if j < self.n {
                r.axpy(-xj, &self.a.column(j), T::one());
            } else if j < self.n + self.n_slack() {
                r[self.m_eq + (j - self.n)] -= xj;
            } else {
                let (row, sign) = self.art[j - self.n - self.n_slack()];
                r[row] -= sign * xj;
            }
        }
        let xb = &self.binv * r;
        for (i, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[i];
        }
    }

    /// After phase one: pivot basic artificials out where possible, then fix
    /// every artificial to zero.
    fn retire_artificials(&mut self) -> Result<(), LpError> {
        let first_art = self.n + self.n_slack();
        for r in 0..self.m {
            if self.basis[r] < first_art {
                continue;
            }
            let row = self.binv.row(r).transpose();
            let mut best: Option<(usize, T)> = None;
            for j in 0..first_art {
                if self.state[j] == State::Basic {
                    continue;
                }
                let v = self.dot_column(&row, j).abs();
                if v > T::lit(1e-7) && best.map_or(true, |(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                let alpha = self.ftran(j);
                let out = self.basis[r];
                self.x[out] = T::zero();
                self.state[out] = State::Lower;
                self.pivot(r, j, &alpha)?;
            }
        }
        for j in first_art..self.x.len() {
            self.hi[j] = T::zero();
            if self.state[j] != State::Basic {
                self.x[j] = T::zero();
                self.state[j] = State::Lower;
            }
        }
        self.refactor()?;
        self.degenerate_run = 0;
        self.bland = false;
        Ok(())
    }

    fn structural_x(&self) -> Vec<T> {
        self.x[..self.n].to_vec()
    }

    fn objective(&self, c: &[T]) -> T {
        c.iter().zip(&self.x).fold(T::zero(), |acc, (&c, &x)| acc + c * x)
    }

    fn primal_only(&self, status: LpStatus) -> LpSolution<T> {
        let obj = self.objective(&self.objective_coeffs);
        LpSolution::without_duals(status, self.structural_x(), obj, self.iterations)
    }

    fn finish(mut self) -> LpSolution<T> {
        if self.since_refactor > 0 {
            // Clean basic values before reporting; a singular basis here would
            // have been caught on the last pivot.
            let _ = self.refactor();
        }
        let y = self.multipliers();
        let m_eq = self.m_eq;
        let y_eq: Vec<T> = (0..m_eq).map(|i| -y[i]).collect();
        let y_le: Vec<T> = (0..self.n_slack())
            .map(|k| {
                let s = self.n + k;
                if self.state[s] == State::Basic {
                    T::zero()
                } else {
                    (-y[m_eq + k]).max(T::zero())
                }
            })
            .collect();
        let mut bound_lower = vec![T::zero(); self.n];
        let mut bound_upper = vec![T::zero(); self.n];
        for j in 0..self.n {
            if self.state[j] == State::Basic {
                continue;
            }
            let d = self.reduced_cost(&y, j);
            match self.state[j] {
                State::Lower if self.lo[j] != self.hi[j] => bound_lower[j] = d.max(T::zero()),
                State::Upper if self.lo[j] != self.hi[j] => bound_upper[j] = (-d).max(T::zero()),
                State::Lower | State::Upper => {
                    bound_lower[j] = d.max(T::zero());
                    bound_upper[j] = (-d).max(T::zero());
                }
                _ => {}
            }
        }
        let x = self.structural_x();
        let objective = self.objective(&self.objective_coeffs);
        LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            y_eq,
            y_le,
            bound_lower,
            bound_upper,
            iterations: self.iterations,
        }
    }
}

