//! Spectral clustering on an LMP-difference affinity.

use nalgebra::{DMatrix, SymmetricEigen};

use super::kmeans::kmeans_labels;
use super::{check_rows, Method, PartitionError, PartitionResult};
use crate::model::Grid;
use crate::scalar::Real;

pub const DEFAULT_RHO_CAP: f64 = 1e6;

/// Per-line affinity `1 / max(|ΔLMP|, 1/rho_cap)`.
pub fn spectral_rho<T: Real>(grid: &Grid<T>, lmps: &[f64], rho_cap: f64) -> Vec<f64> {
    grid.lines
        .iter()
        .map(|l| 1.0 / (lmps[l.from_bus] - lmps[l.to_bus]).abs().max(1.0 / rho_cap))
        .collect()
}

pub fn spectral_partition<T: Real>(
    grid: &Grid<T>,
    lmps: &[f64],
    n_clusters: usize,
    seed: u64,
    rho_cap: f64,
) -> Result<PartitionResult, PartitionError> {
    let labels = spectral_labels(grid, lmps, n_clusters, seed, rho_cap)?;
    PartitionResult::from_labels(grid, &labels, Some(Method::LmpSc), seed, false)
}

pub(crate) fn spectral_labels<T: Real>(
    grid: &Grid<T>,
    lmps: &[f64],
    k: usize,
    seed: u64,
    rho_cap: f64,
) -> Result<Vec<usize>, PartitionError> {
    let n = grid.n_buses();
    check_rows(lmps.len(), n)?;
    if k < 2 {
        return Err(PartitionError::SpectralSingleCluster);
    }
    if k > n {
        return Err(PartitionError::ClusterCount { requested: k, n });
    }
    let rho = spectral_rho(grid, lmps, rho_cap);
    let mut affinity = DMatrix::<f64>::zeros(n, n);
    for (line, &r) in grid.lines.iter().zip(&rho) {
        affinity[(line.from_bus, line.to_bus)] += r;
        affinity[(line.to_bus, line.from_bus)] += r;
    }
    let degree: Vec<f64> = (0..n).map(|i| affinity.row(i).sum()).collect();
    if degree.iter().any(|&d| d <= 0.0) {
        return Err(PartitionError::Disconnected);
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    let laplacian = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - inv_sqrt[i] * affinity[(i, j)] * inv_sqrt[j]
    });
    let eig = SymmetricEigen::try_new(laplacian, 1e-14, 0).ok_or(PartitionError::Eigen)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let mut embedding = DMatrix::<f64>::zeros(n, k);
    for (col, &e) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(e);
        // Deterministic sign: the largest-magnitude entry is positive.
        let pivot = (0..n).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            embedding[(i, col)] = sign * v[i] * inv_sqrt[i];
        }
    }
    kmeans_labels(&embedding, k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::partition::canonical_labels;

    #[test]
    fn rho_of_two_bus_line() {
        let g = two_bus(10.0);
        assert_eq!(spectral_rho(&g, &[10.0, 20.0], DEFAULT_RHO_CAP), vec![0.1]);
        assert_eq!(spectral_rho(&g, &[7.0, 7.0], DEFAULT_RHO_CAP), vec![1e6]);
    }

    #[test]
    fn single_cluster_rejected() {
        let g = three_ring();
        assert_eq!(
            spectral_labels(&g, &[1.0, 2.0, 3.0], 1, 1, DEFAULT_RHO_CAP),
            Err(PartitionError::SpectralSingleCluster)
        );
    }

    #[test]
    fn path_splits_at_price_jump() {
        let mut g = three_ring();
        g.lines.pop();
        let l = spectral_labels(&g, &[10.0, 10.5, 40.0], 2, 1, DEFAULT_RHO_CAP).unwrap();
        assert_eq!(canonical_labels(&l), vec![0, 0, 1]);
    }
}
