//! Single-period DC optimal power flow in PTDF form, with the price vectors
//! derived from its duals.
//!
//! The exported congestion dual is `mu = φ̲ − φ̄`, where `φ̄` and `φ̲` are the
//! non-negative multipliers of the upper and lower flow limits. With that
//! choice the nodal prices are `LMP = λ_slack + PTDFᵀ·mu` and
//! `NCP = PTDFᵀ·diag(mu)`, and a generator's stationarity condition reads
//! `C_g − λ_slack − [PTDFᵀ·mu]_{bus(g)} − η̲_g + η̄_g = 0`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{kkt_report, DenseSimplex, KktReport, LpEngine, LpError, LpProblem, LpStatus, LpTolerances};
use crate::model::Grid;
use crate::ptdf::PtdfMatrix;
use crate::scalar::Real;

/// Relative distance to the limit below which a line counts as binding.
pub const CONGESTION_REL_TOL: f64 = 1e-6;
/// Congestion duals below this magnitude are treated as zero.
pub const MU_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DcOpfError {
    #[error("DC-OPF is infeasible (demand cannot be served within limits)")]
    Infeasible,
    #[error("DC-OPF is unbounded")]
    Unbounded,
    #[error("DC-OPF did not converge within the iteration limit")]
    IterationLimit,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

impl DcOpfError {
    /// Numerical trouble rather than a property of the model.
    pub fn is_numerical(&self) -> bool {
        matches!(self, DcOpfError::IterationLimit | DcOpfError::Lp(_))
    }
}

/// Everything the LP needs, for either the full or an aggregated network.
#[derive(Debug, Clone, Copy)]
pub struct OpfNetwork<'a, T: Real> {
    /// Lines × nodes sensitivity matrix.
    pub ptdf: &'a DMatrix<T>,
    pub demand: &'a [T],
    pub limits: &'a [T],
    pub generator_node: &'a [usize],
    pub cost: &'a [T],
    pub p_max: &'a [T],
}

impl<'a, T: Real> OpfNetwork<'a, T> {
    fn check(&self) -> Result<(), DcOpfError> {
        let (l, n) = self.ptdf.shape();
        let g = self.generator_node.len();
        let bad = |what: String| Err(DcOpfError::Dimension(what));
        if self.demand.len() != n {
            return bad(format!("demand has {} entries for {n} nodes", self.demand.len()));
        }
        if self.limits.len() != l {
            return bad(format!("{} limits for {l} lines", self.limits.len()));
        }
        if self.cost.len() != g || self.p_max.len() != g {
            return bad("generator vectors differ in length".into());
        }
        if let Some(&bad_node) = self.generator_node.iter().find(|&&k| k >= n) {
            return bad(format!("generator at node {bad_node} of {n}"));
        }
        Ok(())
    }

    /// Net nodal injection `Γ·p − D`.
    pub fn injections(&self, dispatch: &[T]) -> Vec<T> {
        let mut inj: Vec<T> = self.demand.iter().map(|&d| -d).collect();
        for (&k, &p) in self.generator_node.iter().zip(dispatch) {
            inj[k] += p;
        }
        inj
    }

    pub fn flows(&self, dispatch: &[T]) -> Vec<T> {
        let inj = nalgebra::DVector::from_vec(self.injections(dispatch));
        (self.ptdf * inj).iter().copied().collect()
    }

    /// The LP: balance row first, then an upper and a lower flow row per line
    /// (rows `2l` and `2l + 1`).
    pub fn lp(&self) -> LpProblem<T> {
        let (l, _) = self.ptdf.shape();
        let g = self.generator_node.len();
        let total = self.demand.iter().fold(T::zero(), |a, &d| a + d);
        let base: Vec<T> = self.flows(&vec![T::zero(); g]); // −PTDF·D
        let mut a_le = DMatrix::zeros(2 * l, g);
        let mut b_le = Vec::with_capacity(2 * l);
        for line in 0..l {
            for (gi, &k) in self.generator_node.iter().enumerate() {
                let s = self.ptdf[(line, k)];
                a_le[(2 * line, gi)] = s;
                a_le[(2 * line + 1, gi)] = -s;
            }
            b_le.push(self.limits[line] - base[line]);
            b_le.push(self.limits[line] + base[line]);
        }
        LpProblem::new(self.cost.to_vec())
            .with_bounds(vec![T::zero(); g], self.p_max.to_vec())
            .with_eq(DMatrix::from_element(1, g, T::one()), vec![total])
            .with_le(a_le, b_le)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcOpfSolution<T: Real> {
    /// Total cost in $.
    pub z: T,
    pub p: Vec<T>,
    pub f: Vec<T>,
    pub lambda_slack: T,
    /// Congestion dual per line, `φ̲ − φ̄`.
    pub mu: Vec<T>,
    pub eta_lower: Vec<T>,
    pub eta_upper: Vec<T>,
    pub congested: Vec<bool>,
    /// Optimality residuals of the underlying LP.
    pub kkt: KktReport,
    pub iterations: usize,
}

impl<T: Real> DcOpfSolution<T> {
    pub fn congested_lines(&self) -> Vec<usize> {
        self.congested.iter().enumerate().filter(|(_, &c)| c).map(|(l, _)| l).collect()
    }

    pub fn n_congested(&self) -> usize {
        self.congested.iter().filter(|&&c| c).count()
    }
}

pub fn solve_network<T: Real>(
    net: &OpfNetwork<'_, T>,
    engine: &dyn LpEngine<T>,
    tol: &LpTolerances,
) -> Result<DcOpfSolution<T>, DcOpfError> {
    net.check()?;
    let problem = net.lp();
    let sol = engine.solve(&problem, tol)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(DcOpfError::Infeasible),
        LpStatus::Unbounded => return Err(DcOpfError::Unbounded),
        LpStatus::IterationLimit => return Err(DcOpfError::IterationLimit),
    }
    let kkt = kkt_report(&problem, &sol);
    let f = net.flows(&sol.x);
    let rel = T::lit(CONGESTION_REL_TOL);
    let zero_tol = T::lit(MU_ZERO_TOL);
    let mut mu = Vec::with_capacity(f.len());
    let mut congested = Vec::with_capacity(f.len());
    for (l, &flow) in f.iter().enumerate() {
        let upper = sol.y_le[2 * l];
        let lower = sol.y_le[2 * l + 1];
        let m = lower - upper;
        let limit = net.limits[l];
        let binding = flow.abs() >= limit - rel * limit;
        let active = binding && m.abs() >= zero_tol;
        mu.push(if active { m } else { T::zero() });
        congested.push(active);
    }
    Ok(DcOpfSolution {
        z: sol.objective,
        p: sol.x,
        f,
        lambda_slack: -sol.y_eq[0],
        mu,
        eta_lower: sol.bound_lower,
        eta_upper: sol.bound_upper,
        congested,
        kkt,
        iterations: sol.iterations,
    })
}

/// Solves the full-grid DC-OPF with the built-in simplex and default
/// tolerances.
pub fn solve_dcopf<T: Real>(grid: &Grid<T>, ptdf: &PtdfMatrix<T>) -> Result<DcOpfSolution<T>, DcOpfError> {
    solve_dcopf_with(grid, ptdf, &DenseSimplex, &LpTolerances::default())
}

pub fn solve_dcopf_with<T: Real>(
    grid: &Grid<T>,
    ptdf: &PtdfMatrix<T>,
    engine: &dyn LpEngine<T>,
    tol: &LpTolerances,
) -> Result<DcOpfSolution<T>, DcOpfError> {
    let demand = grid.demand();
    let limits = grid.limits();
    let nodes = grid.generator_buses();
    let cost: Vec<T> = grid.generators.iter().map(|g| g.cost).collect();
    let p_max: Vec<T> = grid.generators.iter().map(|g| g.p_max).collect();
    let net = OpfNetwork {
        ptdf: &ptdf.values,
        demand: &demand,
        limits: &limits,
        generator_node: &nodes,
        cost: &cost,
        p_max: &p_max,
    };
    solve_network(&net, engine, tol)
}

/// Nodal prices `λ_slack + PTDFᵀ·mu`.
pub fn lmp<T: Real>(solution: &DcOpfSolution<T>, ptdf: &PtdfMatrix<T>) -> Vec<T> {
    let n = ptdf.n_buses();
    (0..n)
        .map(|bus| {
            let congestion = solution
                .mu
                .iter()
                .enumerate()
                .filter(|(_, &m)| m != T::zero())
                .fold(T::zero(), |acc, (l, &m)| acc + ptdf.values[(l, bus)] * m);
            solution.lambda_slack + congestion
        })
        .collect()
}

/// Network congestion prices: one column per line, `PTDFᵀ·diag(mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NcpMatrix<T: Real> {
    pub values: DMatrix<T>,
}

pub fn ncp<T: Real>(solution: &DcOpfSolution<T>, ptdf: &PtdfMatrix<T>) -> NcpMatrix<T> {
    let mut values = ptdf.values.transpose();
    for (l, &m) in solution.mu.iter().enumerate() {
        values.column_mut(l).scale_mut(m);
    }
    NcpMatrix { values }
}

/// Largest generator stationarity residual
/// `|C_g − λ_slack − [PTDFᵀ·mu]_{bus(g)} − η̲_g + η̄_g|`.
pub fn stationarity_residual<T: Real>(grid: &Grid<T>, ptdf: &PtdfMatrix<T>, solution: &DcOpfSolution<T>) -> f64 {
    let prices = lmp(solution, ptdf);
    grid.generators
        .iter()
        .enumerate()
        .map(|(g, gen)| {
            (gen.cost - prices[gen.bus] - solution.eta_lower[g] + solution.eta_upper[g])
                .as_f64()
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Solution file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub z: f64,
    pub p: Vec<f64>,
    pub f: Vec<f64>,
    pub lambda_slack: f64,
    pub mu: Vec<f64>,
    pub congested: Vec<bool>,
    pub lmp: Vec<f64>,
}

impl SolutionDocument {
    pub fn new<T: Real>(solution: &DcOpfSolution<T>, ptdf: &PtdfMatrix<T>) -> Self {
        let v = |xs: &[T]| xs.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        Self {
            z: solution.z.as_f64(),
            p: v(&solution.p),
            f: v(&solution.f),
            lambda_slack: solution.lambda_slack.as_f64(),
            mu: v(&solution.mu),
            congested: solution.congested.clone(),
            lmp: v(&lmp(solution, ptdf)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::vertex_enumeration_oracle;
    use crate::model::fixtures::*;
    use crate::ptdf::build_ptdf;

    fn solve(grid: &Grid<f64>) -> (PtdfMatrix<f64>, DcOpfSolution<f64>) {
        let ptdf = build_ptdf(grid).unwrap();
        let sol = solve_dcopf(grid, &ptdf).unwrap();
        (ptdf, sol)
    }

    #[test]
    fn two_bus_uncongested() {
        let g = two_bus(100.0);
        let (ptdf, s) = solve(&g);
        assert!((s.p[0] - 50.0).abs() < 1e-9 && s.p[1].abs() < 1e-9);
        assert!((s.z - 500.0).abs() < 1e-9);
        assert_eq!(s.mu, vec![0.0]);
        assert_eq!(s.congested, vec![false]);
        for price in lmp(&s, &ptdf) {
            assert!((price - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn two_bus_congested_prices() {
        let g = two_bus(30.0);
        let (ptdf, s) = solve(&g);
        assert!((s.p[0] - 30.0).abs() < 1e-9 && (s.p[1] - 20.0).abs() < 1e-9);
        assert!((s.z - 1300.0).abs() < 1e-9);
        assert!((s.f[0] - 30.0).abs() < 1e-9);
        assert!(s.congested[0]);
        // Flow at its upper limit: φ̄ = 40, so mu = −40.
        assert!((s.mu[0] + 40.0).abs() < 1e-9, "mu = {}", s.mu[0]);
        let prices = lmp(&s, &ptdf);
        assert!((prices[0] - 10.0).abs() < 1e-9 && (prices[1] - 50.0).abs() < 1e-9);
        assert!(stationarity_residual(&g, &ptdf, &s) < 1e-9);
        let oracle = vertex_enumeration_oracle(&OpfNetwork {
            ptdf: &ptdf.values,
            demand: &g.demand(),
            limits: &g.limits(),
            generator_node: &g.generator_buses(),
            cost: &[10.0, 50.0],
            p_max: &[100.0, 100.0],
        }
        .lp())
        .unwrap();
        assert!((oracle.objective - 1300.0).abs() < 1e-9);
    }

    #[test]
    fn ncp_columns_and_row_sums() {
        let g = two_bus(30.0);
        let (ptdf, s) = solve(&g);
        let ncp = ncp(&s, &ptdf);
        let prices = lmp(&s, &ptdf);
        for bus in 0..2 {
            let row: f64 = ncp.values.row(bus).sum();
            assert!((s.lambda_slack + row - prices[bus]).abs() < 1e-12);
        }
        let (_, s) = solve(&two_bus(100.0));
        assert!(super::ncp(&s, &ptdf).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn infeasible_without_capacity() {
        let mut g = two_bus(30.0);
        g.generators[1].p_max = 5.0;
        let ptdf = build_ptdf(&g).unwrap();
        assert_eq!(solve_dcopf(&g, &ptdf).unwrap_err(), DcOpfError::Infeasible);
    }

    #[test]
    fn network_dimension_checked() {
        let ptdf = DMatrix::<f64>::zeros(1, 2);
        let net = OpfNetwork {
            ptdf: &ptdf,
            demand: &[1.0],
            limits: &[1.0],
            generator_node: &[0],
            cost: &[1.0],
            p_max: &[1.0],
        };
        assert!(matches!(
            solve_network(&net, &DenseSimplex, &LpTolerances::default()),
            Err(DcOpfError::Dimension(_))
        ));
    }
}
