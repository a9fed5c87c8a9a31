//! Brute-force LP solver by vertex enumeration.
//!
//! Every variable needs at least one finite bound, which makes the feasible
//! set pointed: it is non-empty exactly when it has a vertex, and an optimum,
//! if one exists, is attained at a vertex. Unboundedness is decided the same
//! way on the recession cone sliced by `c·d = −1`.

use nalgebra::{DMatrix, DVector};

use super::{LpError, LpProblem, LpSolution, LpStatus};
use crate::scalar::Real;

pub const ORACLE_MAX_VARIABLES: usize = 12;
/// Row limit (equalities plus inequalities; bounds are not counted).
pub const ORACLE_MAX_CONSTRAINTS: usize = 20;
const MAX_SUBSETS: u128 = 20_000_000;

/// Exact optimum by enumerating basic feasible points. Test oracle only:
/// no duals are produced.
pub fn vertex_enumeration_oracle<T: Real>(problem: &LpProblem<T>) -> Result<LpSolution<T>, LpError> {
    problem.check()?;
    let n = problem.n_vars();
    let rows = problem.a_eq.nrows() + problem.a_le.nrows();
    if n > ORACLE_MAX_VARIABLES || rows > ORACLE_MAX_CONSTRAINTS {
        return Err(LpError::SizeLimit(format!(
            "{n} variables, {rows} rows (limits {ORACLE_MAX_VARIABLES}, {ORACLE_MAX_CONSTRAINTS})"
        )));
    }
    for j in 0..n {
        if !problem.lower[j].is_finite_real() && !problem.upper[j].is_finite_real() {
            return Err(LpError::SizeLimit(format!("variable {j} is free; the oracle needs a finite bound")));
        }
    }

    let f = |v: T| v.as_f64();
    let mut feasible = Halfspaces::new(n);
    let mut cone = Halfspaces::new(n);
    for i in 0..problem.a_eq.nrows() {
        let a: Vec<f64> = problem.a_eq.row(i).iter().map(|&v| f(v)).collect();
        feasible.eq(a.clone(), f(problem.b_eq[i]));
        cone.eq(a, 0.0);
    }
    for i in 0..problem.a_le.nrows() {
        let a: Vec<f64> = problem.a_le.row(i).iter().map(|&v| f(v)).collect();
        feasible.le(a.clone(), f(problem.b_le[i]));
        cone.le(a, 0.0);
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let (lo, hi) = (f(problem.lower[j]), f(problem.upper[j]));
        if lo.is_finite() {
            feasible.le(e.iter().map(|v| -v).collect(), -lo);
            cone.le(e.iter().map(|v| -v).collect(), 0.0);
        }
        if hi.is_finite() {
            feasible.le(e.clone(), hi);
            cone.le(e, 0.0);
        }
    }
    let c: Vec<f64> = problem.objective.iter().map(|&v| f(v)).collect();
    cone.eq(c.clone(), -1.0);

    let best = feasible.best_vertex(&c)?;
    let Some((x, obj)) = best else {
        return Ok(LpSolution::without_duals(LpStatus::Infeasible, vec![T::zero(); n], T::zero(), 0));
    };
    let to_t = |v: &[f64]| v.iter().map(|&v| T::lit(v)).collect::<Vec<T>>();
    if cone.best_vertex(&vec![0.0; n])?.is_some() {
        return Ok(LpSolution::without_duals(LpStatus::Unbounded, to_t(&x), T::lit(obj), 0));
    }
    Ok(LpSolution::without_duals(LpStatus::Optimal, to_t(&x), T::lit(obj), 0))
}

struct Halfspaces {
    n: usize,
    rows: Vec<(Vec<f64>, f64, bool)>,
}

impl Halfspaces {
    fn new(n: usize) -> Self {
        Self { n, rows: Vec::new() }
    }

    fn eq(&mut self, a: Vec<f64>, b: f64) {
        self.rows.push((a, b, true));
    }

    fn le(&mut self, a: Vec<f64>, b: f64) {
        self.rows.push((a, b, false));
    }

    fn feasible(&self, x: &[f64]) -> bool {
        self.rows.iter().all(|(a, b, is_eq)| {
            let v: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
            let tol = 1e-9 * (1.0 + b.abs() + a.iter().map(|a| a.abs()).fold(0.0, f64::max));
            if *is_eq {
                (v - b).abs() <= tol
            } else {
                v <= b + tol
            }
        })
    }

    /// Minimizes `c·x` over all vertices; `None` when there are none.
    /// Among equal objectives the first vertex in enumeration order wins.
    fn best_vertex(&self, c: &[f64]) -> Result<Option<(Vec<f64>, f64)>, LpError> {
        let n = self.n;
        let m = self.rows.len();
        if n == 0 {
            return Ok(self.feasible(&[]).then(|| (Vec::new(), 0.0)));
        }
        if m < n {
            return Ok(None);
        }
        if binomial(m, n) > MAX_SUBSETS {
            return Err(LpError::SizeLimit(format!("C({m}, {n}) active sets")));
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut subset: Vec<usize> = (0..n).collect();
        loop {
            let a = DMatrix::from_fn(n, n, |r, col| self.rows[subset[r]].0[col]);
            let b = DVector::from_fn(n, |r, _| self.rows[subset[r]].1);
            let lu = a.lu();
            let u = lu.u();
            let scale = (0..n).map(|k| u[(k, k)].abs()).fold(0.0, f64::max);
            let nonsingular = (0..n).all(|k| u[(k, k)].abs() > 1e-10 * scale.max(1.0));
            if nonsingular {
                if let Some(x) = lu.solve(&b) {
                    let x: Vec<f64> = x.iter().copied().collect();
                    if self.feasible(&x) {
                        let obj: f64 = c.iter().zip(&x).map(|(c, x)| c * x).sum();
                        if best.as_ref().map_or(true, |(_, o)| obj < *o - 1e-12 * (1.0 + o.abs())) {
                            best = Some((x, obj));
                        }
                    }
                }
            }
            if !next_combination(&mut subset, m) {
                break;
            }
        }
        Ok(best)
    }
}

fn binomial(m: usize, k: usize) -> u128 {
    let k = k.min(m - k);
    (0..k).fold(1u128, |acc, i| acc * (m - i) as u128 / (i + 1) as u128)
}

fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < m - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
