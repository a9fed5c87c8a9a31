//! Lloyd's algorithm with k-means++ seeding and restarts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FeatureMatrix, Method, PartitionError, PartitionResult};
use crate::model::Grid;
use crate::scalar::Real;

pub const KMEANS_N_INIT: usize = 10;
const MAX_ITER: usize = 300;

/// KMeans partition of the feature rows. The grid is only needed for the
/// line map.
pub fn kmeans_partition<T: Real>(
    grid: &Grid<T>,
    features: &FeatureMatrix,
    n_clusters: usize,
    seed: u64,
) -> Result<PartitionResult, PartitionError> {
    let labels = kmeans_labels(&features.values, n_clusters, seed)?;
    let method = match features.metric {
        super::Metric::Lmp => Method::LmpKmeans,
        super::Metric::Ncp => Method::NcpKmeans,
    };
    PartitionResult::from_labels(grid, &labels, Some(method), seed, false)
}

/// Raw cluster labels (not canonicalized). Deterministic for a given seed.
pub fn kmeans_labels(values: &DMatrix<f64>, k: usize, seed: u64) -> Result<Vec<usize>, PartitionError> {
    let n = values.nrows();
    if k == 0 || k > n {
        return Err(PartitionError::ClusterCount { requested: k, n });
    }
    let x = super::FeatureMatrix { values: values.clone(), metric: super::Metric::Ncp }.compact();
    let points: Vec<Vec<f64>> = (0..n).map(|r| x.row(r).iter().copied().collect()).collect();
    let tie = tie_tolerance(&x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_N_INIT {
        let centers = plus_plus(&points, k, &mut rng);
        let (inertia, labels) = lloyd(&points, centers, tie);
        if best.as_ref().map_or(true, |(b, _)| inertia < *b - n as f64 * tie) {
            best = Some((inertia, labels));
        }
    }
    Ok(best.expect("at least one restart").1)
}

/// Squared distances closer than this count as equal, so rounding noise from
/// shifting or rescaling the features cannot change a tie-break. Relative to
/// the squared spread of the data, hence translation invariant.
fn tie_tolerance(x: &DMatrix<f64>) -> f64 {
    let spread2: f64 = x
        .column_iter()
        .map(|c| {
            let d = c.max() - c.min();
            d * d
        })
        .sum();
    1e-10 * spread2
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++: first center uniform, then proportional to squared distance.
/// When every point coincides with a center, the lowest unused index is taken.
fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    acc += d;
                    pick = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            pick.expect("positive total")
        } else {
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        chosen[pick] = true;
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &points[pick]));
        }
    }
    centers
}

/// Nearest center; ties keep the current cluster, otherwise the lowest index.
fn nearest(p: &[f64], centers: &[Vec<f64>], current: Option<usize>, tie: f64) -> (usize, f64) {
    let d: Vec<f64> = centers.iter().map(|c| dist2(p, c)).collect();
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    if let Some(cur) = current {
        if d[cur] <= min + tie {
            return (cur, d[cur]);
        }
    }
    let c = d.iter().position(|&v| v <= min + tie).expect("at least one center");
    (c, d[c])
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, tie: f64) -> (f64, Vec<usize>) {
    let n = points.len();
    let k = centers.len();
    let dim = points[0].len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centers, None, tie).0).collect();
    for _ in 0..MAX_ITER {
        repair_empty(points, &mut centers, &mut labels, tie);
        centers = means(points, &labels, k, dim);
        let mut changed = false;
        for i in 0..n {
            let (c, _) = nearest(&points[i], &centers, Some(labels[i]), tie);
            if c != labels[i] {
                labels[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    repair_empty(points, &mut centers, &mut labels, tie);
    let centers = means(points, &labels, k, dim);
    let inertia = points.iter().zip(&labels).map(|(p, &c)| dist2(p, &centers[c])).sum();
    (inertia, labels)
}

fn means(points: &[Vec<f64>], labels: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(labels) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &cnt) in sums.iter_mut().zip(&counts) {
        if cnt > 0 {
            s.iter_mut().for_each(|v| *v /= cnt as f64);
        }
    }
    sums
}

/// Gives every empty cluster the point of the largest cluster that lies
/// farthest from that cluster's mean.
fn repair_empty(points: &[Vec<f64>], centers: &mut [Vec<f64>], labels: &mut [usize], tie: f64) {
    let k = centers.len();
    let dim = points[0].len();
    loop {
        let mut counts = vec![0usize; k];
        for &c in labels.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let largest = (0..k).fold(0, |best, c| if counts[c] > counts[best] { c } else { best });
        let mean = &means(points, labels, k, dim)[largest];
        let d: Vec<f64> =
            points.iter().zip(labels.iter()).map(|(p, &c)| if c == largest { dist2(p, mean) } else { -1.0 }).collect();
        let max = d.iter().copied().fold(-1.0, f64::max);
        let far = d.iter().position(|&v| v >= 0.0 && v >= max - tie).expect("largest cluster is non-empty");
        labels[far] = empty;
        centers[empty] = points[far].clone();
    }
}

#[cfg(test)]
mod tests {
    use super::super::canonical_labels;
    use super::*;

    fn labels(v: &[f64], k: usize, seed: u64) -> Vec<usize> {
        canonical_labels(&kmeans_labels(&DMatrix::from_column_slice(v.len(), 1, v), k, seed).unwrap())
    }

    #[test]
    fn separated_pairs() {
        assert_eq!(labels(&[10.0, 10.0, 50.0, 50.0], 2, 1), vec![0, 0, 1, 1]);
    }

    #[test]
    fn one_cluster_and_singletons() {
        assert_eq!(labels(&[3.0, 1.0, 2.0], 1, 5), vec![0, 0, 0]);
        assert_eq!(labels(&[3.0, 1.0, 2.0], 3, 5), vec![0, 1, 2]);
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let l = labels(&[1.0; 5], 5, 3);
        assert_eq!(l, vec![0, 1, 2, 3, 4]);
        let l = labels(&[1.0, 1.0, 1.0, 9.0], 3, 3);
        assert_eq!(l.iter().max(), Some(&2));
    }

    #[test]
    fn reproducible_for_seed() {
        let v: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64 + 0.1 * i as f64).collect();
        assert_eq!(labels(&v, 6, 9), labels(&v, 6, 9));
    }

    #[test]
    fn rejects_bad_counts() {
        let m = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        assert!(kmeans_labels(&m, 0, 1).is_err());
        assert!(kmeans_labels(&m, 3, 1).is_err());
    }
}
