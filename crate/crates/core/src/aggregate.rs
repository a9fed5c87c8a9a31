//! Aggregated (reduced) network model built from a partition.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dcopf::{solve_network, DcOpfError, DcOpfSolution, OpfNetwork};
use crate::lp::{DenseSimplex, LpEngine, LpTolerances};
use crate::model::Grid;
use crate::partition::{PartitionError, PartitionResult};
use crate::ptdf::PtdfMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedModel<T: Real> {
    pub n_clusters: usize,
    /// `M^l·PTDF·M^ncᵀ·(M^nc·M^ncᵀ)⁻¹` (L̃×Ñ).
    pub reduced_ptdf: DMatrix<T>,
    pub demand: Vec<T>,
    pub generator_cluster: Vec<usize>,
    pub line_limits: Vec<T>,
    pub partition: PartitionResult,
}

/// Builds the reduced model. Columns of the reduced PTDF are cluster averages
/// of the full columns; rows are the retained lines (summed with their signs
/// when parallel lines are merged).
pub fn build_aggregated<T: Real>(
    grid: &Grid<T>,
    ptdf: &PtdfMatrix<T>,
    partition: &PartitionResult,
) -> Result<AggregatedModel<T>, PartitionError> {
    partition.validate(grid)?;
    let k = partition.n_clusters;
    let sizes = partition.cluster_sizes();
    let clusters = partition.clusters();
    let groups = &partition.line_groups;
    let mut reduced = DMatrix::zeros(groups.len(), k);
    let mut limits = Vec::with_capacity(groups.len());
    for (row, group) in groups.iter().enumerate() {
        let mut limit = T::zero();
        for &(l, sign) in &group.members {
            let s = T::lit(sign);
            for (c, members) in clusters.iter().enumerate() {
                let sum = members.iter().fold(T::zero(), |acc, &b| acc + ptdf.values[(l, b)]);
                reduced[(row, c)] += s * sum;
            }
            limit += grid.lines[l].limit;
        }
        limits.push(limit);
    }
    for (c, &size) in sizes.iter().enumerate() {
        if size > 1 {
            let inv = T::one() / T::from_usize_lossy(size);
            reduced.column_mut(c).scale_mut(inv);
        }
    }
    let mut demand = vec![T::zero(); k];
    for (bus, &c) in partition.assignment.iter().enumerate() {
        demand[c] += grid.buses[bus].demand;
    }
    let generator_cluster = grid.generators.iter().map(|g| partition.assignment[g.bus]).collect();
    Ok(AggregatedModel {
        n_clusters: k,
        reduced_ptdf: reduced,
        demand,
        generator_cluster,
        line_limits: limits,
        partition: partition.clone(),
    })
}

impl<T: Real> AggregatedModel<T> {
    /// Solves the aggregated DC-OPF for the grid's generators. Dispatch is
    /// per original generator; flows are on the retained lines.
    pub fn solve(&self, grid: &Grid<T>) -> Result<DcOpfSolution<T>, DcOpfError> {
        self.solve_with(grid, &DenseSimplex, &LpTolerances::default())
    }

    pub fn solve_with(
        &self,
        grid: &Grid<T>,
        engine: &dyn LpEngine<T>,
        tol: &LpTolerances,
    ) -> Result<DcOpfSolution<T>, DcOpfError> {
        let cost: Vec<T> = grid.generators.iter().map(|g| g.cost).collect();
        let p_max: Vec<T> = grid.generators.iter().map(|g| g.p_max).collect();
        let net = OpfNetwork {
            ptdf: &self.reduced_ptdf,
            demand: &self.demand,
            limits: &self.line_limits,
            generator_node: &self.generator_cluster,
            cost: &cost,
            p_max: &p_max,
        };
        solve_network(&net, engine, tol)
    }
}

/// Solves an aggregated model; free-function form of [`AggregatedModel::solve`].
pub fn solve_aggregated<T: Real>(am: &AggregatedModel<T>, grid: &Grid<T>) -> Result<DcOpfSolution<T>, DcOpfError> {
    am.solve(grid)
}

/// Aggregated-model file layout: the case fields of the reduced network plus
/// the reduced PTDF rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedDocument {
    pub name: String,
    pub n_clusters: usize,
    pub clusters: Vec<Vec<usize>>,
    pub buses: Vec<AggregatedBus>,
    pub lines: Vec<AggregatedLine>,
    pub generators: Vec<AggregatedGenerator>,
    pub reduced_ptdf: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedBus {
    pub id: usize,
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedLine {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub limit: f64,
    /// Original lines in this row, signed by orientation.
    pub members: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedGenerator {
    pub id: usize,
    pub bus: usize,
    pub cost: f64,
    pub p_max: f64,
    pub kind: crate::model::GeneratorKind,
}

impl AggregatedDocument {
    pub fn new<T: Real>(grid: &Grid<T>, am: &AggregatedModel<T>) -> Self {
        let part = &am.partition;
        Self {
            name: format!("{} (aggregated to {})", grid.name, am.n_clusters),
            n_clusters: am.n_clusters,
            clusters: part.clusters(),
            buses: am
                .demand
                .iter()
                .enumerate()
                .map(|(id, d)| AggregatedBus { id, demand: d.as_f64() })
                .collect(),
            lines: part
                .line_groups
                .iter()
                .zip(&am.line_limits)
                .enumerate()
                .map(|(id, (group, limit))| {
                    let first = &grid.lines[group.members[0].0];
                    AggregatedLine {
                        id,
                        from: part.assignment[first.from_bus],
                        to: part.assignment[first.to_bus],
                        limit: limit.as_f64(),
                        members: group.members.clone(),
                    }
                })
                .collect(),
            generators: grid
                .generators
                .iter()
                .zip(&am.generator_cluster)
                .map(|(g, &c)| AggregatedGenerator {
                    id: g.id,
                    bus: c,
                    cost: g.cost.as_f64(),
                    p_max: g.p_max.as_f64(),
                    kind: g.kind,
                })
                .collect(),
            reduced_ptdf: am
                .reduced_ptdf
                .row_iter()
                .map(|r| r.iter().map(|v| v.as_f64()).collect())
                .collect(),
        }
    }
}
