//! Grid partitioning: the five metric × algorithm combinations, and the
//! node/line mapping matrices that describe a partition.

mod anac;
mod kmeans;
mod spectral;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dcopf::{lmp, ncp, DcOpfSolution};
use crate::model::Grid;
use crate::ptdf::PtdfMatrix;
use crate::scalar::Real;

pub use anac::{anac_history, anac_partition, AnacHistory};
pub use kmeans::{kmeans_labels, kmeans_partition, KMEANS_N_INIT};
pub use spectral::{spectral_partition, spectral_rho, DEFAULT_RHO_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Lmp,
    Ncp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    KMeans,
    Spectral,
    Anac,
}

/// The five supported metric × algorithm combinations, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "lmp-kmeans")]
    LmpKmeans,
    #[serde(rename = "lmp-sc")]
    LmpSc,
    #[serde(rename = "lmp-anac")]
    LmpAnac,
    #[serde(rename = "ncp-kmeans")]
    NcpKmeans,
    #[serde(rename = "ncp-anac")]
    NcpAnac,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::LmpKmeans,
        Method::LmpSc,
        Method::LmpAnac,
        Method::NcpKmeans,
        Method::NcpAnac,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::LmpKmeans => "lmp-kmeans",
            Method::LmpSc => "lmp-sc",
            Method::LmpAnac => "lmp-anac",
            Method::NcpKmeans => "ncp-kmeans",
            Method::NcpAnac => "ncp-anac",
        }
    }

    pub fn metric(self) -> Metric {
        match self {
            Method::LmpKmeans | Method::LmpSc | Method::LmpAnac => Metric::Lmp,
            Method::NcpKmeans | Method::NcpAnac => Metric::Ncp,
        }
    }

    pub fn algorithm(self) -> Algorithm {
        match self {
            Method::LmpKmeans | Method::NcpKmeans => Algorithm::KMeans,
            Method::LmpSc => Algorithm::Spectral,
            Method::LmpAnac | Method::NcpAnac => Algorithm::Anac,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| PartitionError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("unknown method '{0}' (expected lmp-kmeans, lmp-sc, lmp-anac, ncp-kmeans or ncp-anac)")]
    UnknownMethod(String),
    #[error("{requested} clusters requested for {n} buses")]
    ClusterCount { requested: usize, n: usize },
    #[error("spectral clustering needs at least two clusters")]
    SpectralSingleCluster,
    #[error("feature matrix has {rows} rows for {n} buses")]
    FeatureRows { rows: usize, n: usize },
    #[error("grid is not connected")]
    Disconnected,
    #[error("eigen-decomposition failed")]
    Eigen,
    #[error("invalid partition: {0}")]
    Invalid(String),
}

/// One row per bus: the LMP (one column) or the NCP row (one column per line).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: DMatrix<f64>,
    pub metric: Metric,
}

impl FeatureMatrix {
    pub fn lmp(prices: &[f64]) -> Self {
        Self { values: DMatrix::from_column_slice(prices.len(), 1, prices), metric: Metric::Lmp }
    }

    pub fn ncp(values: DMatrix<f64>) -> Self {
        Self { values, metric: Metric::Ncp }
    }

    pub fn from_solution<T: Real>(metric: Metric, solution: &DcOpfSolution<T>, ptdf: &PtdfMatrix<T>) -> Self {
        match metric {
            Metric::Lmp => {
                let prices: Vec<f64> = lmp(solution, ptdf).iter().map(|v| v.as_f64()).collect();
                Self::lmp(&prices)
            }
            Metric::Ncp => Self::ncp(ncp(solution, ptdf).values.map(|v| v.as_f64())),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    /// Drops columns that are constant down the rows. Row distances are
    /// unchanged; NCP matrices are mostly zero columns.
    pub(crate) fn compact(&self) -> DMatrix<f64> {
        let keep: Vec<usize> = (0..self.values.ncols())
            .filter(|&c| {
                let col = self.values.column(c);
                col.iter().any(|&v| v != col[0])
            })
            .collect();
        DMatrix::from_fn(self.values.nrows(), keep.len(), |r, k| self.values[(r, keep[k])])
    }
}

/// A partition of the buses into clusters, with the lines kept between them.
///
/// Clusters are numbered by their lowest bus id. The node map `M^nc` is
/// `Ñ×N` with `M[c, b] = 1` iff bus `b` is in cluster `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    pub method: Option<Method>,
    pub seed: u64,
    /// Cluster of every bus.
    pub assignment: Vec<usize>,
    pub n_clusters: usize,
    /// Rows of the line map.
    pub line_groups: Vec<LineGroup>,
    pub merge_parallel: bool,
}

/// One retained (aggregated) line: signed members and the summed limit
/// applies. Without parallel merging every group has a single `+1` member.
#[derive(Debug, Clone, PartialEq)]
pub struct LineGroup {
    pub members: Vec<(usize, f64)>,
}

impl PartitionResult {
    /// Builds a partition from raw labels, renumbering clusters canonically and
    /// deriving the line map.
    pub fn from_labels<T: Real>(
        grid: &Grid<T>,
        labels: &[usize],
        method: Option<Method>,
        seed: u64,
        merge_parallel: bool,
    ) -> Result<Self, PartitionError> {
        if labels.len() != grid.n_buses() {
            return Err(PartitionError::Invalid(format!(
                "{} labels for {} buses",
                labels.len(),
                grid.n_buses()
            )));
        }
        let assignment = canonical_labels(labels);
        let n_clusters = assignment.iter().max().map_or(0, |&m| m + 1);
        let line_groups = derive_line_groups(grid, &assignment, merge_parallel);
        Ok(Self { method, seed, assignment, n_clusters, line_groups, merge_parallel })
    }

    pub fn identity<T: Real>(grid: &Grid<T>) -> Self {
        let labels: Vec<usize> = (0..grid.n_buses()).collect();
        Self::from_labels(grid, &labels, None, 0, false).expect("label count matches")
    }

    pub fn n_buses(&self) -> usize {
        self.assignment.len()
    }

    /// Bus ids per cluster, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (bus, &c) in self.assignment.iter().enumerate() {
            out[c].push(bus);
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Original lines that appear in the line map, in order.
    pub fn retained_lines(&self) -> Vec<usize> {
        self.line_groups.iter().flat_map(|g| g.members.iter().map(|&(l, _)| l)).collect()
    }

    /// `M^nc` (Ñ×N).
    pub fn node_map(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_clusters, self.n_buses());
        for (bus, &c) in self.assignment.iter().enumerate() {
            m[(c, bus)] = 1.0;
        }
        m
    }

    /// `M^l` (L̃×L). Entries are `±1` only when parallel lines are merged.
    pub fn line_map(&self, n_lines: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.line_groups.len(), n_lines);
        for (row, group) in self.line_groups.iter().enumerate() {
            for &(l, s) in &group.members {
                m[(row, l)] = s;
            }
        }
        m
    }

    /// Checks the structural invariants against `grid`.
    pub fn validate<T: Real>(&self, grid: &Grid<T>) -> Result<(), PartitionError> {
        let invalid = |msg: String| Err(PartitionError::Invalid(msg));
        if self.assignment.len() != grid.n_buses() {
            return invalid(format!("{} buses assigned, grid has {}", self.assignment.len(), grid.n_buses()));
        }
        if self.cluster_sizes().iter().any(|&s| s == 0) {
            return invalid("empty cluster".into());
        }
        if self.assignment.iter().any(|&c| c >= self.n_clusters) {
            return invalid("cluster label out of range".into());
        }
        if self.line_groups != derive_line_groups(grid, &self.assignment, self.merge_parallel) {
            return invalid("line map does not match the clusters".into());
        }
        Ok(())
    }

    /// Whether every cluster induces a connected subgraph.
    pub fn is_contiguous<T: Real>(&self, grid: &Grid<T>) -> bool {
        clusters_are_connected(grid, &self.assignment, self.n_clusters)
    }

    pub fn to_document(&self) -> PartitionDocument {
        PartitionDocument {
            method: self.method.map(|m| m.as_str().to_string()),
            n_clusters: self.n_clusters,
            seed: self.seed,
            clusters: self.clusters(),
            retained_lines: self.retained_lines(),
            merge_parallel: self.merge_parallel,
        }
    }

    pub fn from_document<T: Real>(grid: &Grid<T>, doc: &PartitionDocument) -> Result<Self, PartitionError> {
        let method = doc.method.as_deref().map(str::parse).transpose()?;
        let n = grid.n_buses();
        let mut labels = vec![usize::MAX; n];
        for (c, members) in doc.clusters.iter().enumerate() {
            if members.is_empty() {
                return Err(PartitionError::Invalid(format!("cluster {c} is empty")));
            }
            for &bus in members {
                if bus >= n {
                    return Err(PartitionError::Invalid(format!("bus {bus} does not exist")));
                }
                if labels[bus] != usize::MAX {
                    return Err(PartitionError::Invalid(format!("bus {bus} appears twice")));
                }
                labels[bus] = c;
            }
        }
        if let Some(bus) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(PartitionError::Invalid(format!("bus {bus} is not assigned")));
        }
        if doc.n_clusters != doc.clusters.len() {
            return Err(PartitionError::Invalid(format!(
                "n_clusters is {} but {} clusters are listed",
                doc.n_clusters,
                doc.clusters.len()
            )));
        }
        let result = Self::from_labels(grid, &labels, method, doc.seed, doc.merge_parallel)?;
        if result.retained_lines() != doc.retained_lines {
            return Err(PartitionError::Invalid("retained_lines do not match the clusters".into()));
        }
        Ok(result)
    }
}

/// Partition file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDocument {
    pub method: Option<String>,
    pub n_clusters: usize,
    pub seed: u64,
    pub clusters: Vec<Vec<usize>>,
    pub retained_lines: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub merge_parallel: bool,
}

/// Renumbers labels so clusters are ordered by their lowest bus id.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Line map rows for a given assignment. Lines inside a cluster are dropped;
/// every other line is kept in original order. With `merge_parallel`, lines
/// joining the same pair of clusters share one row, signed by orientation
/// relative to the first of them.
pub fn derive_line_groups<T: Real>(grid: &Grid<T>, assignment: &[usize], merge_parallel: bool) -> Vec<LineGroup> {
    let mut groups: Vec<LineGroup> = Vec::new();
    let mut by_pair: BTreeMap<(usize, usize), (usize, (usize, usize))> = BTreeMap::new();
    for (l, line) in grid.lines.iter().enumerate() {
        let (a, b) = (assignment[line.from_bus], assignment[line.to_bus]);
        if a == b {
            continue;
        }
        if merge_parallel {
            let key = (a.min(b), a.max(b));
            if let Some(&(row, dir)) = by_pair.get(&key) {
                let sign = if dir == (a, b) { 1.0 } else { -1.0 };
                groups[row].members.push((l, sign));
                continue;
            }
            by_pair.insert(key, (groups.len(), (a, b)));
        }
        groups.push(LineGroup { members: vec![(l, 1.0)] });
    }
    groups
}

/// `M^l` for a node map given as an assignment vector, without merging.
pub fn derive_line_map<T: Real>(grid: &Grid<T>, assignment: &[usize]) -> DMatrix<f64> {
    let groups = derive_line_groups(grid, assignment, false);
    let mut m = DMatrix::zeros(groups.len(), grid.n_lines());
    for (row, g) in groups.iter().enumerate() {
        m[(row, g.members[0].0)] = 1.0;
    }
    m
}

pub(crate) fn clusters_are_connected<T: Real>(grid: &Grid<T>, assignment: &[usize], k: usize) -> bool {
    let adj = grid.adjacency();
    let mut seen = vec![false; assignment.len()];
    let mut roots = vec![false; k];
    for start in 0..assignment.len() {
        if seen[start] {
            continue;
        }
        let c = assignment[start];
        if roots[c] {
            return false;
        }
        roots[c] = true;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] && assignment[w] == c {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    true
}

/// Options shared by [`partition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionOptions {
    pub seed: u64,
    pub rho_cap: f64,
    pub merge_parallel: bool,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self { seed: 1, rho_cap: DEFAULT_RHO_CAP, merge_parallel: false }
    }
}

/// Runs `method` from full-model results. Spectral clustering with a single
/// cluster returns the trivial one-cluster partition.
pub fn partition<T: Real>(
    grid: &Grid<T>,
    ptdf: &PtdfMatrix<T>,
    solution: &DcOpfSolution<T>,
    method: Method,
    n_clusters: usize,
    options: &PartitionOptions,
) -> Result<PartitionResult, PartitionError> {
    let features = FeatureMatrix::from_solution(method.metric(), solution, ptdf);
    partition_features(grid, &features, method, n_clusters, options)
}

pub fn partition_features<T: Real>(
    grid: &Grid<T>,
    features: &FeatureMatrix,
    method: Method,
    n_clusters: usize,
    options: &PartitionOptions,
) -> Result<PartitionResult, PartitionError> {
    let n = grid.n_buses();
    if n_clusters == 0 || n_clusters > n {
        return Err(PartitionError::ClusterCount { requested: n_clusters, n });
    }
    let labels = match method.algorithm() {
        Algorithm::KMeans => kmeans_labels(&features.values, n_clusters, options.seed)?,
        Algorithm::Spectral if n_clusters == 1 => vec![0; n],
        Algorithm::Spectral => {
            let prices: Vec<f64> = features.values.column(0).iter().copied().collect();
            spectral::spectral_labels(grid, &prices, n_clusters, options.seed, options.rho_cap)?
        }
        Algorithm::Anac => anac_history(grid, features)?.labels(n_clusters)?,
    };
    PartitionResult::from_labels(grid, &labels, Some(method), options.seed, options.merge_parallel)
}

fn check_rows(rows: usize, n: usize) -> Result<(), PartitionError> {
    if rows != n {
        return Err(PartitionError::FeatureRows { rows, n });
    }
    Ok(())
}
