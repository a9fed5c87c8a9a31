//! Adjacent node agglomerative clustering.
//!
//! Starting from singletons, the closest pair of adjacent clusters (Euclidean
//! distance between their feature rows) is merged until one cluster is left.
//! Non-adjacent pairs are pushed out of reach by a penalty larger than every
//! distance, so merges only ever join neighbours and clusters stay connected.
//! A merged row is `(1 − 1/s)·x_keep + (1/s)·x_absorbed`, `s` being the new
//! cluster size. The power flow is not re-solved between merges.

use super::{check_rows, FeatureMatrix, Method, Metric, PartitionError, PartitionResult};
use crate::model::Grid;
use crate::scalar::Real;

/// Complete merge sequence for one feature matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnacHistory {
    pub n_buses: usize,
    /// `(kept, absorbed)` by lowest bus id of each cluster, in merge order.
    pub merges: Vec<(usize, usize)>,
}

impl AnacHistory {
    /// Labels after the first `N − k` merges.
    pub fn labels(&self, k: usize) -> Result<Vec<usize>, PartitionError> {
        let n = self.n_buses;
        if k == 0 || k > n || n - k > self.merges.len() {
            return Err(PartitionError::ClusterCount { requested: k, n });
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(keep, absorbed) in &self.merges[..n - k] {
            let a = find(&mut parent, absorbed);
            let b = find(&mut parent, keep);
            parent[a] = b;
        }
        Ok((0..n).map(|b| find(&mut parent, b)).collect())
    }
}

/// Runs every merge from `N` clusters down to one.
pub fn anac_history<T: Real>(grid: &Grid<T>, features: &FeatureMatrix) -> Result<AnacHistory, PartitionError> {
    let n = grid.n_buses();
    check_rows(features.n_rows(), n)?;
    let x = features.compact();
    let f = x.ncols();
    // Active clusters, ordered by lowest bus id.
    let mut reps: Vec<usize> = (0..n).collect();
    let mut rows: Vec<Vec<f64>> = (0..n).map(|r| x.row(r).iter().copied().collect()).collect();
    let mut sizes = vec![1usize; n];
    let mut adjacent = vec![vec![false; n]; n];
    for (i, row) in adjacent.iter_mut().enumerate() {
        row[i] = true;
    }
    for line in &grid.lines {
        adjacent[line.from_bus][line.to_bus] = true;
        adjacent[line.to_bus][line.from_bus] = true;
    }
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut dist = vec![vec![0.0f64; n]; n];
    while reps.len() > 1 {
        let c = reps.len();
        let mut max_d: f64 = 0.0;
        for i in 0..c {
            for j in i + 1..c {
                let mut s = 0.0;
                for k in 0..f {
                    let d = rows[i][k] - rows[j][k];
                    s += d * d;
                }
                let d = s.sqrt();
                dist[i][j] = d;
                dist[j][i] = d;
                max_d = max_d.max(d);
            }
        }
        let eps = max_d * (1.0 + 1e-6) + 1.0;
        let weight = |i: usize, j: usize| dist[i][j] + if adjacent[i][j] { 0.0 } else { eps };
        let mut min = f64::INFINITY;
        for i in 0..c {
            for j in i + 1..c {
                min = min.min(weight(i, j));
            }
        }
        // Near-equal weights are ties, resolved by the first pair, so that
        // rounding from shifted or rescaled features cannot reorder merges.
        let tie = 1e-9 * max_d;
        let (keep, absorbed) = (0..c)
            .flat_map(|i| (i + 1..c).map(move |j| (i, j)))
            .find(|&(i, j)| weight(i, j) <= min + tie)
            .expect("at least two clusters");
        let w = weight(keep, absorbed);
        if w >= eps {
            return Err(PartitionError::Disconnected);
        }
        merges.push((reps[keep], reps[absorbed]));
        sizes[keep] += sizes[absorbed];
        let weight = 1.0 / sizes[keep] as f64;
        let absorbed_row = rows.remove(absorbed);
        for (v, a) in rows[keep].iter_mut().zip(&absorbed_row) {
            *v = (1.0 - weight) * *v + weight * a;
        }
        let absorbed_adj = adjacent.remove(absorbed);
        for (v, a) in adjacent[keep].iter_mut().zip(&absorbed_adj) {
            *v |= a;
        }
        for row in adjacent.iter_mut() {
            let a = row.remove(absorbed);
            row[keep] |= a;
        }
        reps.remove(absorbed);
        sizes.remove(absorbed);
        dist.pop();
    }
    Ok(AnacHistory { n_buses: n, merges })
}

pub fn anac_partition<T: Real>(
    grid: &Grid<T>,
    features: &FeatureMatrix,
    n_clusters: usize,
) -> Result<PartitionResult, PartitionError> {
    let labels = anac_history(grid, features)?.labels(n_clusters)?;
    let method = match features.metric {
        Metric::Lmp => Method::LmpAnac,
        Metric::Ncp => Method::NcpAnac,
    };
    PartitionResult::from_labels(grid, &labels, Some(method), 0, false)
}
