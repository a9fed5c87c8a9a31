//! Dense linear programming kernel with dual recovery.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    c·x
//! subject to  A_eq·x  = b_eq
//!             A_le·x ≤ b_le
//!             lower ≤ x ≤ upper
//! ```
//!
//! Duals follow the Lagrangian
//! `c·x + y_eq·(A_eq x − b_eq) + y_le·(A_le x − b_le) + η̲·(lower − x) + η̄·(x − upper)`
//! with `y_le, η̲, η̄ ≥ 0`, so stationarity reads
//! `c + A_eqᵀ y_eq + A_leᵀ y_le − η̲ + η̄ = 0`. For a cost-minimizing balance
//! row `Σx = d` this makes `y_eq` the *negative* marginal cost.

mod oracle;
mod simplex;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::scalar::Real;

pub use oracle::{vertex_enumeration_oracle, ORACLE_MAX_CONSTRAINTS, ORACLE_MAX_VARIABLES};
pub use simplex::DenseSimplex;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<T: Real> {
    pub objective: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub a_eq: DMatrix<T>,
    pub b_eq: Vec<T>,
    pub a_le: DMatrix<T>,
    pub b_le: Vec<T>,
}

impl<T: Real> LpProblem<T> {
    /// A problem with `n` variables bounded to `[0, ∞)` and no rows.
    pub fn new(objective: Vec<T>) -> Self {
        let n = objective.len();
        Self {
            objective,
            lower: vec![T::zero(); n],
            upper: vec![T::infinity(); n],
            a_eq: DMatrix::zeros(0, n),
            b_eq: Vec::new(),
            a_le: DMatrix::zeros(0, n),
            b_le: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_bounds(mut self, lower: Vec<T>, upper: Vec<T>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_eq(mut self, a: DMatrix<T>, b: Vec<T>) -> Self {
        self.a_eq = a;
        self.b_eq = b;
        self
    }

    pub fn with_le(mut self, a: DMatrix<T>, b: Vec<T>) -> Self {
        self.a_le = a;
        self.b_le = b;
        self
    }

    pub fn check(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        let dim = |what: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(LpError::Dimension(format!("{what}: got {got}, expected {want}")))
            }
        };
        dim("lower bounds", self.lower.len(), n)?;
        dim("upper bounds", self.upper.len(), n)?;
        dim("A_eq columns", self.a_eq.ncols(), n)?;
        dim("b_eq", self.b_eq.len(), self.a_eq.nrows())?;
        dim("A_le columns", self.a_le.ncols(), n)?;
        dim("b_le", self.b_le.len(), self.a_le.nrows())?;
        for j in 0..n {
            if !(self.lower[j] <= self.upper[j]) {
                return Err(LpError::InvalidBounds { var: j });
            }
            if !self.objective[j].is_finite_real() {
                return Err(LpError::NonFinite(format!("objective[{j}]")));
            }
        }
        let finite_rows = self.a_eq.iter().chain(self.a_le.iter()).all(|v| v.is_finite_real())
            && self.b_eq.iter().chain(&self.b_le).all(|v| v.is_finite_real());
        if !finite_rows {
            return Err(LpError::NonFinite("constraint data".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T: Real> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub objective: T,
    pub y_eq: Vec<T>,
    pub y_le: Vec<T>,
    /// Multipliers of `x ≥ lower`.
    pub bound_lower: Vec<T>,
    /// Multipliers of `x ≤ upper`.
    pub bound_upper: Vec<T>,
    pub iterations: usize,
}

impl<T: Real> LpSolution<T> {
    pub(crate) fn without_duals(status: LpStatus, x: Vec<T>, objective: T, iterations: usize) -> Self {
        let n = x.len();
        Self {
            status,
            x,
            objective,
            y_eq: Vec::new(),
            y_le: Vec::new(),
            bound_lower: vec![T::zero(); n],
            bound_upper: vec![T::zero(); n],
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpTolerances {
    pub feasibility: f64,
    pub complementarity: f64,
    pub gap: f64,
    /// Smallest pivot magnitude accepted in the ratio test.
    pub pivot: f64,
    /// Reduced-cost threshold for optimality.
    pub optimality: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    /// Pivots between explicit re-inversions of the basis.
    pub refactor_period: usize,
}

impl Default for LpTolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-7,
            complementarity: 1e-6,
            gap: 1e-7,
            pivot: 1e-9,
            optimality: 1e-9,
            max_iterations: 100_000,
            bland_after: 50,
            refactor_period: 128,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable {var}: lower bound exceeds upper bound")]
    InvalidBounds { var: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("numerically singular basis (pivot ratio {pivot_ratio:.3e})")]
    SingularBasis { pivot_ratio: f64 },
    #[error("problem too large for vertex enumeration: {0}")]
    SizeLimit(String),
}

/// Seam for plugging in a different LP engine. Everything in this crate uses
/// [`DenseSimplex`] by default.
pub trait LpEngine<T: Real>: Send + Sync {
    fn solve(&self, problem: &LpProblem<T>, tol: &LpTolerances) -> Result<LpSolution<T>, LpError>;
}

/// Solves `problem` with the built-in bounded-variable primal simplex.
pub fn solve_lp<T: Real>(problem: &LpProblem<T>, tol: &LpTolerances) -> Result<LpSolution<T>, LpError> {
    DenseSimplex.solve(problem, tol)
}

/// Residuals of the optimality conditions for a solved problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// Largest violation of any row or bound.
    pub primal_residual: f64,
    /// Largest stationarity residual `|c + Aᵀy − η̲ + η̄|`.
    pub stationarity: f64,
    /// Most negative multiplier that must be non-negative (reported as a
    /// positive magnitude; zero when all signs are right).
    pub dual_sign: f64,
    /// Largest complementarity product `multiplier × slack`.
    pub complementarity: f64,
    /// `|c·x − dual objective| / (1 + |c·x|)`.
    pub relative_gap: f64,
}

impl KktReport {
    pub fn satisfies(&self, tol: &LpTolerances) -> bool {
        self.primal_residual <= tol.feasibility
            && self.complementarity <= tol.complementarity
            && self.relative_gap <= tol.gap
            && self.dual_sign <= tol.complementarity
            && self.stationarity <= tol.complementarity
    }
}

/// Evaluates primal feasibility, dual feasibility, complementary slackness and
/// the duality gap in `f64`.
pub fn kkt_report<T: Real>(problem: &LpProblem<T>, sol: &LpSolution<T>) -> KktReport {
    let f = |v: T| v.as_f64();
    let n = problem.n_vars();
    let x: Vec<f64> = sol.x.iter().map(|&v| f(v)).collect();
    let mut primal: f64 = 0.0;
    let mut comp: f64 = 0.0;
    let mut sign: f64 = 0.0;
    let mut dual_obj = 0.0;

    let row_value = |a: &DMatrix<T>, i: usize| (0..n).map(|j| f(a[(i, j)]) * x[j]).sum::<f64>();

    for i in 0..problem.a_eq.nrows() {
        let b = f(problem.b_eq[i]);
        primal = primal.max((row_value(&problem.a_eq, i) - b).abs());
        dual_obj -= f(sol.y_eq[i]) * b;
    }
    for i in 0..problem.a_le.nrows() {
        let b = f(problem.b_le[i]);
        let slack = b - row_value(&problem.a_le, i);
        let y = f(sol.y_le[i]);
        primal = primal.max(-slack);
        sign = sign.max(-y);
        comp = comp.max((y * slack).abs());
        dual_obj -= y * b;
    }
    let mut stat: f64 = 0.0;
    for j in 0..n {
        let lo = f(problem.lower[j]);
        let hi = f(problem.upper[j]);
        let eta_lo = f(sol.bound_lower[j]);
        let eta_hi = f(sol.bound_upper[j]);
        sign = sign.max(-eta_lo).max(-eta_hi);
        if lo.is_finite() {
            primal = primal.max(lo - x[j]);
            comp = comp.max((eta_lo * (x[j] - lo)).abs());
            dual_obj += eta_lo * lo;
        } else {
            sign = sign.max(eta_lo.abs());
        }
        if hi.is_finite() {
            primal = primal.max(x[j] - hi);
            comp = comp.max((eta_hi * (hi - x[j])).abs());
            dual_obj -= eta_hi * hi;
        } else {
            sign = sign.max(eta_hi.abs());
        }
        let mut g = f(problem.objective[j]) - eta_lo + eta_hi;
        for i in 0..problem.a_eq.nrows() {
            g += f(problem.a_eq[(i, j)]) * f(sol.y_eq[i]);
        }
        for i in 0..problem.a_le.nrows() {
            g += f(problem.a_le[(i, j)]) * f(sol.y_le[i]);
        }
        stat = stat.max(g.abs());
    }
    let primal_obj: f64 = (0..n).map(|j| f(problem.objective[j]) * x[j]).sum();
    KktReport {
        primal_residual: primal.max(0.0),
        stationarity: stat,
        dual_sign: sign,
        complementarity: comp,
        relative_gap: (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs()),
    }
}
