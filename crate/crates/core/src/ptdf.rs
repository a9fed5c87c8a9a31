//! Power transfer distribution factors and line flows.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::Grid;
use crate::scalar::Real;

/// Entries smaller than this in magnitude are stored as exact zeros.
pub const PTDF_SNAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PtdfError {
    #[error("reduced susceptance matrix is singular; the grid is disconnected")]
    Singular,
    #[error("injections do not balance (sum {0:e})")]
    Unbalanced(f64),
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
}

/// Dense L×N sensitivity matrix with an all-zero slack column.
#[derive(Debug, Clone, PartialEq)]
pub struct PtdfMatrix<T: Real> {
    pub values: DMatrix<T>,
    pub slack_bus: usize,
}

impl<T: Real> PtdfMatrix<T> {
    pub fn n_lines(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_buses(&self) -> usize {
        self.values.ncols()
    }

    /// `PTDF · injections`.
    pub fn apply(&self, injections: &[T]) -> Vec<T> {
        let v = &self.values * DVector::from_column_slice(injections);
        v.iter().copied().collect()
    }

    /// Line flows `PTDF·(Γ·p − D)` for a generator dispatch. Any imbalance is
    /// absorbed at the slack bus.
    pub fn flows(&self, grid: &Grid<T>, dispatch: &[T]) -> Vec<T> {
        self.apply(&grid.net_injections(dispatch))
    }

    /// `PTDF·Γ`: sensitivity of every line to every generator (L×G).
    pub fn generator_sensitivities(&self, generator_bus: &[usize]) -> DMatrix<T> {
        DMatrix::from_fn(self.n_lines(), generator_bus.len(), |l, g| {
            self.values[(l, generator_bus[g])]
        })
    }
}

/// Builds the slack-adjusted PTDF
/// `diag(b)·K_sba·(K_sbaᵀ·diag(b)·K_sba)⁻¹` and re-inserts a zero slack column.
pub fn build_ptdf<T: Real>(grid: &Grid<T>) -> Result<PtdfMatrix<T>, PtdfError> {
    let n = grid.n_buses();
    let l = grid.n_lines();
    let k_sba = grid.slack_adjusted_incidence();
    let b: Vec<T> = grid.lines.iter().map(|line| line.susceptance).collect();
    // diag(b)·K_sba
    let mut bk = k_sba.clone();
    for (row, &bl) in b.iter().enumerate() {
        bk.row_mut(row).scale_mut(bl);
    }
    let reduced = k_sba.tr_mul(&bk);
    let inverse = if n > 1 {
        reduced
            .cholesky()
            .ok_or(PtdfError::Singular)?
            .inverse()
    } else {
        DMatrix::zeros(0, 0)
    };
    let sba = bk * inverse;
    let snap = T::lit(PTDF_SNAP);
    let mut values = DMatrix::zeros(l, n);
    for col in 0..n.saturating_sub(1) {
        let target = if col < grid.slack_bus { col } else { col + 1 };
        for row in 0..l {
            let v = sba[(row, col)];
            values[(row, target)] = if v.abs() < snap { T::zero() } else { v };
        }
    }
    Ok(PtdfMatrix { values, slack_bus: grid.slack_bus })
}

/// Flows from the bus-angle formulation: solve `B'θ = P` with the slack angle
/// fixed at zero, then `f = diag(b)·K·θ`. The susceptance matrix is stamped
/// line by line and solved by LU, independently of [`build_ptdf`].
pub fn angle_flow_oracle<T: Real>(grid: &Grid<T>, injections: &[T]) -> Result<Vec<T>, PtdfError> {
    let n = grid.n_buses();
    if injections.len() != n {
        return Err(PtdfError::Length { expected: n, got: injections.len() });
    }
    let total = injections.iter().fold(T::zero(), |a, &x| a + x);
    let scale = injections.iter().fold(T::one(), |a, &x| a + x.abs());
    if total.abs() > T::lit(1e-9) * scale {
        return Err(PtdfError::Unbalanced(total.as_f64()));
    }
    let s = grid.slack_bus;
    let idx = |bus: usize| if bus < s { Some(bus) } else if bus == s { None } else { Some(bus - 1) };
    let mut bmat = DMatrix::<T>::zeros(n - 1, n - 1);
    for line in &grid.lines {
        let b = line.susceptance;
        let (i, j) = (idx(line.from_bus), idx(line.to_bus));
        if let Some(i) = i {
            bmat[(i, i)] += b;
        }
        if let Some(j) = j {
            bmat[(j, j)] += b;
        }
        if let (Some(i), Some(j)) = (i, j) {
            bmat[(i, j)] -= b;
            bmat[(j, i)] -= b;
        }
    }
    let rhs = DVector::from_iterator(n - 1, (0..n).filter(|&k| k != s).map(|k| injections[k]));
    let theta_red = if n > 1 {
        bmat.lu().solve(&rhs).ok_or(PtdfError::Singular)?
    } else {
        DVector::zeros(0)
    };
    let theta = |bus: usize| idx(bus).map_or(T::zero(), |i| theta_red[i]);
    Ok(grid
        .lines
        .iter()
        .map(|line| line.susceptance * (theta(line.from_bus) - theta(line.to_bus)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    #[test]
    fn two_bus_ptdf() {
        let p = build_ptdf(&two_bus(30.0)).unwrap();
        assert_eq!(p.values, DMatrix::from_row_slice(1, 2, &[0.0, -1.0]));
    }

    #[test]
    fn ring_column_for_bus_one() {
        let g = three_ring();
        let p = build_ptdf(&g).unwrap();
        // Unit injection at bus 1 withdrawn at the slack, from the angle oracle.
        let oracle = angle_flow_oracle(&g, &[-1.0, 1.0, 0.0]).unwrap();
        let expected = [-2.0 / 3.0, 1.0 / 3.0, -1.0 / 3.0];
        for l in 0..3 {
            assert!((oracle[l] - expected[l]).abs() < 1e-12);
            assert!((p.values[(l, 1)] - expected[l]).abs() < 1e-12);
            assert_eq!(p.values[(l, 0)], 0.0);
        }
    }

    #[test]
    fn two_bus_flow() {
        let g = two_bus(30.0);
        let p = build_ptdf(&g).unwrap();
        assert_eq!(p.flows(&g, &[50.0, 0.0]), vec![50.0]);
        assert_eq!(angle_flow_oracle(&g, &[50.0, -50.0]).unwrap(), vec![50.0]);
    }

    #[test]
    fn ring_injection_flows() {
        let g = three_ring();
        let p = build_ptdf(&g).unwrap();
        let f = p.apply(&[-30.0, 30.0, 0.0]);
        for (got, want) in f.iter().zip([-20.0, 10.0, -10.0]) {
            assert!((got - want).abs() < 1e-12, "{f:?}");
        }
    }

    #[test]
    fn zero_injection_zero_flow() {
        let g = three_ring();
        assert_eq!(angle_flow_oracle(&g, &[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert!(build_ptdf(&g).unwrap().apply(&[0.0; 3]).iter().all(|&f| f == 0.0));
    }

    #[test]
    fn disconnected_grid_is_singular() {
        let mut g = three_ring();
        g.buses.push(bus(3, 0.0));
        assert_eq!(build_ptdf(&g).unwrap_err(), PtdfError::Singular);
        assert_eq!(angle_flow_oracle(&g, &[0.0; 4]).unwrap_err(), PtdfError::Singular);
    }

    #[test]
    fn unbalanced_oracle_input_rejected() {
        assert!(matches!(
            angle_flow_oracle(&three_ring(), &[1.0, 0.0, 0.0]),
            Err(PtdfError::Unbalanced(_))
        ));
    }

    #[test]
    fn radial_grid_entries_are_unit() {
        let mut g = three_ring();
        g.lines.pop();
        let p = build_ptdf(&g).unwrap();
        for v in p.values.iter() {
            assert!([-1.0, 0.0, 1.0].iter().any(|u| (u - v).abs() < 1e-12), "{v}");
        }
    }

    #[test]
    fn single_precision_ptdf() {
        let g: Grid<f32> = three_ring().cast();
        let p = build_ptdf(&g).unwrap();
        assert!((p.values[(0, 1)] + 2.0 / 3.0).abs() < 1e-6);
    }
}
