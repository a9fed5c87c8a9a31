//! Aggregation quality: full model, aggregated model, flows of the aggregated
//! dispatch on the full grid, and the resulting error metrics.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::build_aggregated;
use crate::dcopf::{solve_dcopf_with, DcOpfError, DcOpfSolution};
use crate::lp::{DenseSimplex, LpTolerances};
use crate::model::Grid;
use crate::partition::{
    anac_history, partition_features, Algorithm, FeatureMatrix, Method, PartitionError, PartitionOptions,
    PartitionResult,
};
use crate::ptdf::{build_ptdf, PtdfError, PtdfMatrix};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("objective must be positive for a relative error, got {0}")]
    NonPositiveObjective(f64),
    #[error("cluster range {from}..{to} is invalid for {n} buses")]
    Range { from: usize, to: usize, n: usize },
    #[error("full model: {0}")]
    FullModel(DcOpfError),
    #[error("aggregated model ({method}, {n_clusters} clusters): {source}")]
    AggregatedModel { method: Method, n_clusters: usize, source: DcOpfError },
    #[error(transparent)]
    Ptdf(#[from] PtdfError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Flows on the full grid induced by a dispatch, `PTDF·(Γ·p − D)`.
pub fn map_flows<T: Real>(full_ptdf: &PtdfMatrix<T>, grid: &Grid<T>, dispatch: &[T]) -> Vec<T> {
    full_ptdf.flows(grid, dispatch)
}

/// Signed relative objective error `(z_agg − z_full)/z_full`.
pub fn rove(z_full: f64, z_agg: f64) -> Result<f64, EvaluateError> {
    if !(z_full > 0.0) {
        return Err(EvaluateError::NonPositiveObjective(z_full));
    }
    Ok((z_agg - z_full) / z_full)
}

/// Largest relative excess of a flow over its limit, or zero.
pub fn mrllv<T: Real>(flows: &[T], limits: &[T]) -> f64 {
    flows
        .iter()
        .zip(limits)
        .map(|(f, t)| {
            let (f, t) = (f.as_f64(), t.as_f64());
            ((f.abs() - t) / t).max(0.0)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    AggInfeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub method: Method,
    pub n_clusters: usize,
    pub z_full: f64,
    pub z_agg: Option<f64>,
    pub rove: Option<f64>,
    pub mrllv: Option<f64>,
    pub gpt_seconds: f64,
    pub status: RecordStatus,
    /// Full-grid lines whose mapped flow exceeds the limit.
    pub overloaded_lines: Vec<usize>,
    /// Lines congested in the aggregated solution (original line ids).
    pub agg_congested_lines: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub partition: PartitionOptions,
    pub tolerances: LpTolerances,
    /// Repetitions of each timed partitioning call; the median is reported.
    pub timing_repeats: usize,
    /// Worker threads for the aggregated-model solves.
    pub jobs: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { partition: PartitionOptions::default(), tolerances: LpTolerances::default(), timing_repeats: 3, jobs: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub full: DcOpfSolution<f64>,
    pub records: Vec<EvaluationRecord>,
}

/// Cluster counts from `from` down to `to`, both inclusive.
pub fn cluster_range(from: usize, to: usize, n: usize) -> Result<Vec<usize>, EvaluateError> {
    let (hi, lo) = (from.max(to), from.min(to));
    if lo == 0 || hi > n {
        return Err(EvaluateError::Range { from, to, n });
    }
    Ok((lo..=hi).rev().collect())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn timed<R>(repeats: usize, mut f: impl FnMut() -> R) -> (R, f64) {
    let mut times = Vec::with_capacity(repeats.max(1));
    let mut out = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let r = f();
        times.push(start.elapsed().as_secs_f64());
        out = Some(r);
    }
    (out.expect("at least one run"), median(times))
}

/// Partitions for every (method, Ñ), timed serially, in output order.
fn partitions(
    grid: &Grid<f64>,
    ptdf: &PtdfMatrix<f64>,
    full: &DcOpfSolution<f64>,
    methods: &[Method],
    counts: &[usize],
    options: &SweepOptions,
) -> Result<Vec<(Method, usize, PartitionResult, f64)>, EvaluateError> {
    let mut out = Vec::new();
    let part = &options.partition;
    for &method in methods {
        if method.algorithm() == Algorithm::Anac {
            let (history, gpt) = timed(options.timing_repeats, || {
                let features = FeatureMatrix::from_solution(method.metric(), full, ptdf);
                anac_history(grid, &features)
            });
            let history = history?;
            for &k in counts {
                let labels = history.labels(k)?;
                let p = PartitionResult::from_labels(grid, &labels, Some(method), part.seed, part.merge_parallel)?;
                out.push((method, k, p, gpt));
            }
        } else {
            for &k in counts {
                let (p, gpt) = timed(options.timing_repeats, || {
                    let features = FeatureMatrix::from_solution(method.metric(), full, ptdf);
                    partition_features(grid, &features, method, k, part)
                });
                out.push((method, k, p?, gpt));
            }
        }
    }
    Ok(out)
}

fn evaluate_cell(
    grid: &Grid<f64>,
    ptdf: &PtdfMatrix<f64>,
    full: &DcOpfSolution<f64>,
    cell: &(Method, usize, PartitionResult, f64),
    tol: &LpTolerances,
) -> Result<EvaluationRecord, EvaluateError> {
    let (method, k, partition, gpt) = cell;
    let am = build_aggregated(grid, ptdf, partition)?;
    let mut record = EvaluationRecord {
        method: *method,
        n_clusters: *k,
        z_full: full.z,
        z_agg: None,
        rove: None,
        mrllv: None,
        gpt_seconds: *gpt,
        status: RecordStatus::AggInfeasible,
        overloaded_lines: Vec::new(),
        agg_congested_lines: Vec::new(),
    };
    let solution = match am.solve_with(grid, &DenseSimplex, tol) {
        Ok(s) => s,
        Err(DcOpfError::Infeasible) => return Ok(record),
        Err(source) => {
            return Err(EvaluateError::AggregatedModel { method: *method, n_clusters: *k, source })
        }
    };
    let flows = map_flows(ptdf, grid, &solution.p);
    let limits = grid.limits();
    record.z_agg = Some(solution.z);
    record.rove = Some(rove(full.z, solution.z)?);
    record.mrllv = Some(mrllv(&flows, &limits));
    record.status = RecordStatus::Ok;
    record.overloaded_lines = flows
        .iter()
        .zip(&limits)
        .enumerate()
        .filter(|(_, (f, t))| f.abs() > **t * (1.0 + 1e-9))
        .map(|(l, _)| l)
        .collect();
    record.agg_congested_lines = solution
        .congested_lines()
        .into_iter()
        .flat_map(|row| partition.line_groups[row].members.iter().map(|&(l, _)| l))
        .collect();
    Ok(record)
}

/// Full pipeline over methods × cluster counts. Rows are method-major in the
/// order given, cluster counts in the order given. The full model is solved
/// once; partitioning and timing run serially, aggregated solves on
/// `options.jobs` threads.
pub fn sweep(
    grid: &Grid<f64>,
    methods: &[Method],
    counts: &[usize],
    options: &SweepOptions,
) -> Result<SweepReport, EvaluateError> {
    let ptdf = build_ptdf(grid)?;
    let full = solve_dcopf_with(grid, &ptdf, &DenseSimplex, &options.tolerances).map_err(EvaluateError::FullModel)?;
    let cells = partitions(grid, &ptdf, &full, methods, counts, options)?;
    let jobs = options.jobs.max(1).min(cells.len().max(1));
    let records: Vec<Result<EvaluationRecord, EvaluateError>> = if jobs == 1 {
        cells.iter().map(|c| evaluate_cell(grid, &ptdf, &full, c, &options.tolerances)).collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<EvaluationRecord, EvaluateError>>>> =
            Mutex::new((0..cells.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= cells.len() {
                        break;
                    }
                    let r = evaluate_cell(grid, &ptdf, &full, &cells[i], &options.tolerances);
                    slots.lock().expect("no poisoned workers")[i] = Some(r);
                });
            }
        });
        slots
            .into_inner()
            .expect("no poisoned workers")
            .into_iter()
            .map(|r| r.expect("every cell evaluated"))
            .collect()
    };
    let records = records.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(SweepReport { full, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    #[test]
    fn metric_arithmetic() {
        assert!((rove(100.0, 140.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(rove(100.0, 100.0).unwrap(), 0.0);
        assert!(rove(0.0, 1.0).is_err());
        assert!((mrllv(&[36.0], &[30.0]) - 0.2).abs() < 1e-15);
        assert_eq!(mrllv(&[-10.0, 29.0], &[30.0, 30.0]), 0.0);
    }

    #[test]
    fn copper_plate_flows_on_two_bus() {
        let g = two_bus(30.0);
        let ptdf = build_ptdf(&g).unwrap();
        assert_eq!(map_flows(&ptdf, &g, &[50.0, 0.0]), vec![50.0]);
        assert!((mrllv(&[50.0], &[30.0]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_bus_sweep() {
        let g = two_bus(30.0);
        let opts = SweepOptions { timing_repeats: 1, ..Default::default() };
        let r = sweep(&g, &[Method::LmpKmeans, Method::NcpAnac], &[2, 1], &opts).unwrap();
        assert_eq!(r.records.len(), 4);
        let identity = &r.records[0];
        assert_eq!((identity.method, identity.n_clusters), (Method::LmpKmeans, 2));
        assert_eq!(identity.rove, Some(0.0));
        assert!(identity.mrllv.unwrap() < 1e-9);
        let one = &r.records[1];
        assert!((one.z_agg.unwrap() - 500.0).abs() < 1e-9);
        assert_eq!(one.overloaded_lines, vec![0]);
        let threaded = sweep(&g, &[Method::LmpKmeans, Method::NcpAnac], &[2, 1], &SweepOptions { jobs: 3, ..opts })
            .unwrap();
        for (a, b) in r.records.iter().zip(&threaded.records) {
            assert_eq!((a.method, a.n_clusters, a.z_agg, a.mrllv), (b.method, b.n_clusters, b.z_agg, b.mrllv));
        }
    }

    #[test]
    fn range_is_descending() {
        assert_eq!(cluster_range(1, 3, 5).unwrap(), vec![3, 2, 1]);
        assert!(cluster_range(0, 3, 5).is_err());
        assert!(cluster_range(6, 3, 5).is_err());
    }
}
