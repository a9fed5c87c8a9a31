//! Network data model: buses, lines, generators, validation and the scenario
//! transformations used to build congested test cases.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Bus<T> {
    pub id: usize,
    /// Active demand in MW.
    pub demand: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Line<T> {
    pub id: usize,
    #[serde(rename = "from")]
    pub from_bus: usize,
    #[serde(rename = "to")]
    pub to_bus: usize,
    /// Series susceptance in per unit (reciprocal of reactance).
    pub susceptance: T,
    /// Thermal limit in MW, applied symmetrically to both flow directions.
    pub limit: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Thermal,
    Wind,
    Backup,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::Thermal => "thermal",
            GeneratorKind::Wind => "wind",
            GeneratorKind::Backup => "backup",
        })
    }
}

/// A dispatchable unit. Minimum output is always zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Generator<T> {
    pub id: usize,
    pub bus: usize,
    /// Marginal cost in $/MWh.
    pub cost: T,
    /// Capacity in MW.
    pub p_max: T,
    pub kind: GeneratorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Grid<T> {
    #[serde(default)]
    pub name: String,
    pub slack_bus: usize,
    pub buses: Vec<Bus<T>>,
    pub lines: Vec<Line<T>>,
    pub generators: Vec<Generator<T>>,
}

impl<T: Real> Grid<T> {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn demand(&self) -> Vec<T> {
        self.buses.iter().map(|b| b.demand).collect()
    }

    pub fn total_demand(&self) -> T {
        self.buses.iter().fold(T::zero(), |acc, b| acc + b.demand)
    }

    pub fn limits(&self) -> Vec<T> {
        self.lines.iter().map(|l| l.limit).collect()
    }

    /// Bus index of each generator (the column structure of the generator
    /// to node mapping).
    pub fn generator_buses(&self) -> Vec<usize> {
        self.generators.iter().map(|g| g.bus).collect()
    }

    /// Net injection per bus for a dispatch: `Γ·p − D`.
    pub fn net_injections(&self, dispatch: &[T]) -> Vec<T> {
        let mut inj: Vec<T> = self.buses.iter().map(|b| -b.demand).collect();
        for (g, &p) in self.generators.iter().zip(dispatch) {
            inj[g.bus] += p;
        }
        inj
    }

    /// Adjacency lists of the undirected bus graph; parallel lines appear once
    /// per line.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_buses()];
        for line in &self.lines {
            if line.from_bus < adj.len() && line.to_bus < adj.len() {
                adj[line.from_bus].push(line.to_bus);
                adj[line.to_bus].push(line.from_bus);
            }
        }
        adj
    }

    /// Line-node incidence matrix `K` (L×N): `+1` at the from bus, `−1` at the
    /// to bus.
    pub fn incidence_matrix(&self) -> DMatrix<T> {
        let mut k = DMatrix::zeros(self.n_lines(), self.n_buses());
        for (l, line) in self.lines.iter().enumerate() {
            k[(l, line.from_bus)] = T::one();
            k[(l, line.to_bus)] = -T::one();
        }
        k
    }

    /// Incidence matrix with the slack column removed (L×(N−1)).
    pub fn slack_adjusted_incidence(&self) -> DMatrix<T> {
        self.incidence_matrix().remove_column(self.slack_bus)
    }

    /// Converts every real field to another scalar type.
    pub fn cast<U: Real>(&self) -> Grid<U> {
        let c = |x: T| U::lit(x.as_f64());
        Grid {
            name: self.name.clone(),
            slack_bus: self.slack_bus,
            buses: self
                .buses
                .iter()
                .map(|b| Bus { id: b.id, demand: c(b.demand) })
                .collect(),
            lines: self
                .lines
                .iter()
                .map(|l| Line {
                    id: l.id,
                    from_bus: l.from_bus,
                    to_bus: l.to_bus,
                    susceptance: c(l.susceptance),
                    limit: c(l.limit),
                })
                .collect(),
            generators: self
                .generators
                .iter()
                .map(|g| Generator {
                    id: g.id,
                    bus: g.bus,
                    cost: c(g.cost),
                    p_max: c(g.p_max),
                    kind: g.kind,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoBuses,
    BusIdMismatch { index: usize, id: usize },
    NegativeDemand { bus: usize },
    LineIdMismatch { index: usize, id: usize },
    LineEndpoint { line: usize, bus: usize },
    SelfLoop { line: usize },
    NonPositiveSusceptance { line: usize },
    NonPositiveLimit { line: usize },
    GeneratorIdMismatch { index: usize, id: usize },
    GeneratorBus { generator: usize, bus: usize },
    NegativeCapacity { generator: usize },
    NonFiniteCost { generator: usize },
    SlackBus { bus: usize },
    Disconnected { unreachable: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoBuses => write!(f, "grid has no buses"),
            Violation::BusIdMismatch { index, id } => {
                write!(f, "bus at position {index} has id {id}")
            }
            Violation::NegativeDemand { bus } => write!(f, "bus {bus}: negative demand"),
            Violation::LineIdMismatch { index, id } => {
                write!(f, "line at position {index} has id {id}")
            }
            Violation::LineEndpoint { line, bus } => {
                write!(f, "line {line}: unknown endpoint bus {bus}")
            }
            Violation::SelfLoop { line } => write!(f, "line {line}: self-loop"),
            Violation::NonPositiveSusceptance { line } => {
                write!(f, "line {line}: susceptance must be positive")
            }
            Violation::NonPositiveLimit { line } => write!(f, "line {line}: limit must be positive"),
            Violation::GeneratorIdMismatch { index, id } => {
                write!(f, "generator at position {index} has id {id}")
            }
            Violation::GeneratorBus { generator, bus } => {
                write!(f, "generator {generator}: unknown bus {bus}")
            }
            Violation::NegativeCapacity { generator } => {
                write!(f, "generator {generator}: negative capacity")
            }
            Violation::NonFiniteCost { generator } => {
                write!(f, "generator {generator}: non-finite cost")
            }
            Violation::SlackBus { bus } => write!(f, "slack bus {bus} does not exist"),
            Violation::Disconnected { unreachable } => write!(
                f,
                "disconnected: {} bus(es) unreachable from the slack, first {}",
                unreachable.len(),
                unreachable[0]
            ),
        }
    }
}

impl Violation {
    /// Short machine-friendly category.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::NoBuses => "empty",
            Violation::BusIdMismatch { .. }
            | Violation::LineIdMismatch { .. }
            | Violation::GeneratorIdMismatch { .. } => "index",
            Violation::NegativeDemand { .. } => "negative-demand",
            Violation::LineEndpoint { .. } | Violation::GeneratorBus { .. } => "dangling-reference",
            Violation::SelfLoop { .. } => "self-loop",
            Violation::NonPositiveSusceptance { .. } => "susceptance",
            Violation::NonPositiveLimit { .. } => "limit",
            Violation::NegativeCapacity { .. } => "capacity",
            Violation::NonFiniteCost { .. } => "cost",
            Violation::SlackBus { .. } => "slack",
            Violation::Disconnected { .. } => "disconnected",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: &str) -> bool {
        self.violations.iter().any(|v| v.kind() == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks index integrity, parameter signs and connectivity from the slack.
pub fn validate<T: Real>(grid: &Grid<T>) -> ValidationReport {
    let mut violations = Vec::new();
    let n = grid.n_buses();
    if n == 0 {
        violations.push(Violation::NoBuses);
    }
    for (i, b) in grid.buses.iter().enumerate() {
        if b.id != i {
            violations.push(Violation::BusIdMismatch { index: i, id: b.id });
        }
        if b.demand < T::zero() || !b.demand.is_finite_real() {
            violations.push(Violation::NegativeDemand { bus: i });
        }
    }
    for (i, l) in grid.lines.iter().enumerate() {
        if l.id != i {
            violations.push(Violation::LineIdMismatch { index: i, id: l.id });
        }
        for bus in [l.from_bus, l.to_bus] {
            if bus >= n {
                violations.push(Violation::LineEndpoint { line: i, bus });
            }
        }
        if l.from_bus == l.to_bus {
            violations.push(Violation::SelfLoop { line: i });
        }
        if !(l.susceptance > T::zero()) || !l.susceptance.is_finite_real() {
            violations.push(Violation::NonPositiveSusceptance { line: i });
        }
        if !(l.limit > T::zero()) || !l.limit.is_finite_real() {
            violations.push(Violation::NonPositiveLimit { line: i });
        }
    }
    for (i, g) in grid.generators.iter().enumerate() {
        if g.id != i {
            violations.push(Violation::GeneratorIdMismatch { index: i, id: g.id });
        }
        if g.bus >= n {
            violations.push(Violation::GeneratorBus { generator: i, bus: g.bus });
        }
        if g.p_max < T::zero() || !g.p_max.is_finite_real() {
            violations.push(Violation::NegativeCapacity { generator: i });
        }
        if !g.cost.is_finite_real() {
            violations.push(Violation::NonFiniteCost { generator: i });
        }
    }
    if grid.slack_bus >= n {
        violations.push(Violation::SlackBus { bus: grid.slack_bus });
    } else {
        let adj = grid.adjacency();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([grid.slack_bus]);
        seen[grid.slack_bus] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        let unreachable: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();
        if !unreachable.is_empty() {
            violations.push(Violation::Disconnected { unreachable });
        }
    }
    ValidationReport { violations }
}

/// Scenario modifications applied to a base case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub demand_scale: f64,
    pub wind_scale: f64,
    /// Upper end of the additive cost offsets for thermal units; zero disables
    /// perturbation.
    pub cost_perturb_magnitude: f64,
    /// Adds one backup unit per bus when set. Use [`TransformSpec::with_default_backups`]
    /// for the default cost.
    pub backup_cost: Option<f64>,
    /// Wind units appended as `(bus, capacity MW)`, after scaling.
    pub wind_additions: Vec<(usize, f64)>,
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self::identity()
    }
}

impl TransformSpec {
    pub fn identity() -> Self {
        Self {
            demand_scale: 1.0,
            wind_scale: 1.0,
            cost_perturb_magnitude: 0.0,
            backup_cost: None,
            wind_additions: Vec::new(),
        }
    }

    /// Backup cost set to ten times the largest thermal cost of `grid`.
    pub fn with_default_backups<T: Real>(mut self, grid: &Grid<T>) -> Self {
        self.backup_cost = Some(default_backup_cost(grid));
        self
    }
}

pub fn default_backup_cost<T: Real>(grid: &Grid<T>) -> f64 {
    let max_thermal = grid
        .generators
        .iter()
        .filter(|g| g.kind == GeneratorKind::Thermal)
        .map(|g| g.cost.as_f64())
        .fold(0.0_f64, f64::max);
    10.0 * max_thermal
}

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("{field} must be a finite non-negative number, got {value}")]
    NegativeParameter { field: &'static str, value: f64 },
    #[error("wind addition references unknown bus {0}")]
    UnknownBus(usize),
}

/// Applies `spec` to `grid`, returning a new grid.
///
/// Thermal cost offsets are distinct multiples of `magnitude / G_thermal`,
/// assigned by a seeded shuffle, so they always lie in `(0, magnitude]`.
/// If a shuffle happens to make two costs collide, further shuffles are drawn
/// and, as a last resort, offsets are assigned in cost order, which cannot
/// collide.
pub fn transform<T: Real>(
    grid: &Grid<T>,
    spec: &TransformSpec,
    seed: u64,
) -> Result<Grid<T>, TransformError> {
    let check = |field: &'static str, value: f64| {
        if value.is_finite() && value >= 0.0 {
            Ok(())
        } else {
            Err(TransformError::NegativeParameter { field, value })
        }
    };
    check("demand_scale", spec.demand_scale)?;
    check("wind_scale", spec.wind_scale)?;
    check("cost_perturb_magnitude", spec.cost_perturb_magnitude)?;
    if let Some(c) = spec.backup_cost {
        check("backup_cost", c)?;
    }
    for &(bus, cap) in &spec.wind_additions {
        check("wind capacity", cap)?;
        if bus >= grid.n_buses() {
            return Err(TransformError::UnknownBus(bus));
        }
    }

    let mut out = grid.clone();
    if spec.demand_scale != 1.0 {
        let s = T::lit(spec.demand_scale);
        for b in &mut out.buses {
            b.demand *= s;
        }
    }
    if spec.wind_scale != 1.0 {
        let s = T::lit(spec.wind_scale);
        for g in out.generators.iter_mut().filter(|g| g.kind == GeneratorKind::Wind) {
            g.p_max *= s;
        }
    }
    if spec.cost_perturb_magnitude > 0.0 {
        perturb_thermal_costs(&mut out, spec.cost_perturb_magnitude, seed);
    }
    for &(bus, cap) in &spec.wind_additions {
        let id = out.generators.len();
        out.generators.push(Generator {
            id,
            bus,
            cost: T::zero(),
            p_max: T::lit(cap),
            kind: GeneratorKind::Wind,
        });
    }
    if let Some(cost) = spec.backup_cost {
        let cap = out.total_demand();
        for bus in 0..out.n_buses() {
            let id = out.generators.len();
            out.generators.push(Generator {
                id,
                bus,
                cost: T::lit(cost),
                p_max: cap,
                kind: GeneratorKind::Backup,
            });
        }
    }
    Ok(out)
}

const MAX_SHUFFLES: usize = 64;

fn perturb_thermal_costs<T: Real>(grid: &mut Grid<T>, magnitude: f64, seed: u64) {
    let thermal: Vec<usize> = grid
        .generators
        .iter()
        .enumerate()
        .filter(|(_, g)| g.kind == GeneratorKind::Thermal)
        .map(|(i, _)| i)
        .collect();
    let count = thermal.len();
    if count == 0 {
        return;
    }
    let step = magnitude / count as f64;
    let offsets: Vec<T> = (1..=count).map(|k| T::lit(step * k as f64)).collect();
    let base: Vec<T> = thermal.iter().map(|&i| grid.generators[i].cost).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..count).collect();
    let mut chosen = None;
    for _ in 0..MAX_SHUFFLES {
        order.shuffle(&mut rng);
        let costs: Vec<T> = (0..count).map(|j| base[j] + offsets[order[j]]).collect();
        if all_distinct(&costs) {
            chosen = Some(costs);
            break;
        }
    }
    let costs = chosen.unwrap_or_else(|| {
        // Monotone assignment: cheaper (or equal, earlier) units get smaller
        // offsets, so c_i ≤ c_j and o_i < o_j give strictly ordered sums.
        let mut by_cost: Vec<usize> = (0..count).collect();
        by_cost.sort_by(|&a, &b| base[a].partial_cmp(&base[b]).unwrap().then(a.cmp(&b)));
        let mut costs = base.clone();
        for (rank, &j) in by_cost.iter().enumerate() {
            costs[j] = base[j] + offsets[rank];
        }
        costs
    });
    for (j, &i) in thermal.iter().enumerate() {
        grid.generators[i].cost = costs[j];
    }
}

fn all_distinct<T: Real>(xs: &[T]) -> bool {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.windows(2).all(|w| w[0] != w[1])
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn bus(id: usize, demand: f64) -> Bus<f64> {
        Bus { id, demand }
    }

    pub fn line(id: usize, from: usize, to: usize, b: f64, limit: f64) -> Line<f64> {
        Line { id, from_bus: from, to_bus: to, susceptance: b, limit }
    }

    pub fn gen(id: usize, bus: usize, cost: f64, p_max: f64) -> Generator<f64> {
        Generator { id, bus, cost, p_max, kind: GeneratorKind::Thermal }
    }

    /// Two buses, cheap unit at the slack, expensive unit at the load.
    pub fn two_bus(limit: f64) -> Grid<f64> {
        Grid {
            name: "two-bus".into(),
            slack_bus: 0,
            buses: vec![bus(0, 0.0), bus(1, 50.0)],
            lines: vec![line(0, 0, 1, 1.0, limit)],
            generators: vec![gen(0, 0, 10.0, 100.0), gen(1, 1, 50.0, 100.0)],
        }
    }

    pub fn three_ring() -> Grid<f64> {
        Grid {
            name: "ring".into(),
            slack_bus: 0,
            buses: vec![bus(0, 0.0), bus(1, 0.0), bus(2, 0.0)],
            lines: vec![
                line(0, 0, 1, 1.0, 100.0),
                line(1, 1, 2, 1.0, 100.0),
                line(2, 0, 2, 1.0, 100.0),
            ],
            generators: vec![gen(0, 0, 10.0, 100.0)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn minimal_grid_is_valid() {
        assert!(validate(&two_bus(100.0)).is_valid());
    }

    #[test]
    fn self_loop_is_reported() {
        let mut g = three_ring();
        g.lines[1].to_bus = 1;
        let report = validate(&g);
        assert!(report.has("self-loop"), "{report}");
    }

    #[test]
    fn isolated_bus_is_reported() {
        let mut g = three_ring();
        g.buses.push(bus(3, 5.0));
        let report = validate(&g);
        assert!(report.has("disconnected"));
        assert_eq!(
            report.violations,
            vec![Violation::Disconnected { unreachable: vec![3] }]
        );
    }

    #[test]
    fn bad_parameters_are_reported() {
        let mut g = three_ring();
        g.lines[0].susceptance = 0.0;
        g.lines[2].limit = -1.0;
        g.generators[0].bus = 9;
        g.slack_bus = 7;
        let report = validate(&g);
        for kind in ["susceptance", "limit", "dangling-reference", "slack"] {
            assert!(report.has(kind), "missing {kind}: {report}");
        }
    }

    #[test]
    fn incidence_two_bus() {
        let g = two_bus(30.0);
        assert_eq!(g.incidence_matrix(), DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
        assert_eq!(g.slack_adjusted_incidence(), DMatrix::from_row_slice(1, 1, &[-1.0]));
    }

    #[test]
    fn incidence_ring() {
        let k = three_ring().incidence_matrix();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0, 1.0, 0.0, -1.0],
        );
        assert_eq!(k, expected);
        for row in k.row_iter() {
            assert_eq!(row.sum(), 0.0);
        }
    }

    #[test]
    fn identity_transform_is_noop() {
        let g = two_bus(30.0);
        assert_eq!(transform(&g, &TransformSpec::identity(), 3).unwrap(), g);
    }

    #[test]
    fn demand_scale_doubles_every_bus() {
        let g = two_bus(30.0);
        let spec = TransformSpec { demand_scale: 2.0, ..TransformSpec::identity() };
        let t = transform(&g, &spec, 1).unwrap();
        for (a, b) in g.buses.iter().zip(&t.buses) {
            assert_eq!(b.demand, 2.0 * a.demand);
        }
    }

    #[test]
    fn negative_scale_is_rejected() {
        let spec = TransformSpec { wind_scale: -1.0, ..TransformSpec::identity() };
        assert!(matches!(
            transform(&two_bus(1.0), &spec, 0),
            Err(TransformError::NegativeParameter { field: "wind_scale", .. })
        ));
    }

    #[test]
    fn backups_and_wind_are_appended() {
        let mut g = two_bus(30.0);
        g.generators.push(Generator {
            id: 2,
            bus: 1,
            cost: 0.0,
            p_max: 20.0,
            kind: GeneratorKind::Wind,
        });
        let spec = TransformSpec {
            wind_scale: 2.0,
            wind_additions: vec![(0, 15.0)],
            ..TransformSpec::identity()
        }
        .with_default_backups(&g);
        let t = transform(&g, &spec, 0).unwrap();
        assert_eq!(t.generators.len(), 3 + 1 + 2);
        assert_eq!(t.generators[2].p_max, 40.0);
        assert_eq!(t.generators[3].kind, GeneratorKind::Wind);
        assert_eq!(t.generators[3].p_max, 15.0);
        for (bus, gen) in t.generators[4..].iter().enumerate() {
            assert_eq!(gen.kind, GeneratorKind::Backup);
            assert_eq!(gen.bus, bus);
            assert_eq!(gen.cost, 500.0);
            assert_eq!(gen.p_max, 50.0);
        }
        assert!(validate(&t).is_valid());
        for (i, g) in t.generators.iter().enumerate() {
            assert_eq!(g.id, i);
        }
    }

    #[test]
    fn perturbation_falls_back_to_monotone_assignment() {
        // Base costs spaced exactly one offset step apart collide under many
        // permutations; the result must still be strictly distinct.
        let mut g = two_bus(30.0);
        g.generators = (0..6).map(|i| gen(i, 0, i as f64 * 0.5, 10.0)).collect();
        let spec = TransformSpec { cost_perturb_magnitude: 3.0, ..TransformSpec::identity() };
        for seed in 0..20 {
            let t = transform(&g, &spec, seed).unwrap();
            let costs: Vec<f64> = t.generators.iter().map(|g| g.cost).collect();
            assert!(all_distinct(&costs), "seed {seed}: {costs:?}");
        }
    }

    #[test]
    fn cast_round_trip() {
        let g = three_ring();
        let h: Grid<f32> = g.cast();
        assert_eq!(h.cast::<f64>(), g);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn perturbed_costs_are_distinct_and_reproducible(
                costs in proptest::collection::vec(prop_oneof![Just(20.0), Just(40.0), 0.0..100.0f64], 1..40),
                magnitude in 0.001..10.0f64,
                seed in any::<u64>(),
            ) {
                let mut g = two_bus(30.0);
                g.generators = costs.iter().enumerate().map(|(i, &c)| gen(i, i % 2, c, 10.0)).collect();
                let spec = TransformSpec { cost_perturb_magnitude: magnitude, ..TransformSpec::identity() };
                let a = transform(&g, &spec, seed).unwrap();
                let b = transform(&g, &spec, seed).unwrap();
                prop_assert_eq!(&a, &b);
                let new: Vec<f64> = a.generators.iter().map(|g| g.cost).collect();
                prop_assert!(all_distinct(&new));
                for (o, n) in costs.iter().zip(&new) {
                    let d = n - o;
                    prop_assert!(d > 0.0 && d <= magnitude * (1.0 + 1e-12), "offset {} outside (0, {}]", d, magnitude);
                }
            }
        }
    }
}
