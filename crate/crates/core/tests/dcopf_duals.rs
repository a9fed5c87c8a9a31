mod common;

use common::{load, random_grid};
use gridagg_core::dcopf::{lmp, ncp, solve_dcopf, stationarity_residual};
use gridagg_core::lp::{solve_lp, LpProblem, LpStatus, LpTolerances};
use gridagg_core::model::Grid;
use gridagg_core::ptdf::build_ptdf;
use nalgebra::DMatrix;

/// Angle formulation: variables `[p; θ]`, nodal balance rows, flow limits on
/// `b·(θ_from − θ_to)`, slack angle pinned to zero.
fn angle_lp_objective(grid: &Grid<f64>) -> f64 {
    let (g, n, l) = (grid.n_generators(), grid.n_buses(), grid.n_lines());
    let mut c = vec![0.0; g + n];
    let mut lower = vec![0.0; g + n];
    let mut upper = vec![0.0; g + n];
    for (i, gen) in grid.generators.iter().enumerate() {
        c[i] = gen.cost;
        upper[i] = gen.p_max;
    }
    for b in 0..n {
        if b != grid.slack_bus {
            lower[g + b] = f64::NEG_INFINITY;
            upper[g + b] = f64::INFINITY;
        }
    }
    let mut a_eq = DMatrix::zeros(n, g + n);
    for (i, gen) in grid.generators.iter().enumerate() {
        a_eq[(gen.bus, i)] = 1.0;
    }
    let mut a_le = DMatrix::zeros(2 * l, g + n);
    let mut b_le = Vec::new();
    for (k, line) in grid.lines.iter().enumerate() {
        let (f, t, b) = (line.from_bus, line.to_bus, line.susceptance);
        a_eq[(f, g + f)] -= b;
        a_eq[(f, g + t)] += b;
        a_eq[(t, g + t)] -= b;
        a_eq[(t, g + f)] += b;
        a_le[(2 * k, g + f)] = b;
        a_le[(2 * k, g + t)] = -b;
        a_le[(2 * k + 1, g + f)] = -b;
        a_le[(2 * k + 1, g + t)] = b;
        b_le.extend([line.limit, line.limit]);
    }
    let p = LpProblem::new(c).with_bounds(lower, upper).with_eq(a_eq, grid.demand()).with_le(a_le, b_le);
    let s = solve_lp(&p, &LpTolerances::default()).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    s.objective
}

fn corpus() -> Vec<Grid<f64>> {
    let mut grids: Vec<Grid<f64>> = (0..40).map(|s| random_grid(s, 4 + (s as usize % 20), 3)).collect();
    grids.push(load("rts24_raw.json"));
    grids.push(load("rts24.json"));
    grids
}

#[test]
fn optimality_conditions_hold_on_corpus() {
    let tol = LpTolerances::default();
    let mut congested_cases = 0;
    for grid in corpus() {
        let ptdf = build_ptdf(&grid).unwrap();
        let s = solve_dcopf(&grid, &ptdf).unwrap();
        assert!(s.kkt.primal_residual <= 1e-7, "{}: {:?}", grid.name, s.kkt);
        assert!(s.kkt.complementarity <= 1e-6, "{}: {:?}", grid.name, s.kkt);
        assert!(s.kkt.relative_gap <= 1e-7, "{}: {:?}", grid.name, s.kkt);
        assert!(s.kkt.satisfies(&tol));
        assert!(stationarity_residual(&grid, &ptdf, &s) <= 1e-6, "{}", grid.name);
        if s.n_congested() > 0 {
            congested_cases += 1;
        }
    }
    assert!(congested_cases >= 5, "corpus should exercise congestion, got {congested_cases}");
}

#[test]
fn objective_matches_angle_formulation() {
    for grid in corpus() {
        let ptdf = build_ptdf(&grid).unwrap();
        let z = solve_dcopf(&grid, &ptdf).unwrap().z;
        let oracle = angle_lp_objective(&grid);
        assert!((z - oracle).abs() <= 1e-7 * (1.0 + oracle.abs()), "{}: {z} vs {oracle}", grid.name);
    }
}

#[test]
fn prices_split_into_energy_and_congestion() {
    for grid in corpus() {
        let ptdf = build_ptdf(&grid).unwrap();
        let s = solve_dcopf(&grid, &ptdf).unwrap();
        let prices = lmp(&s, &ptdf);
        let n = ncp(&s, &ptdf);
        for (b, &p) in prices.iter().enumerate() {
            let row: f64 = n.values.row(b).iter().sum();
            assert!((p - s.lambda_slack - row).abs() <= 1e-9, "{} bus {b}", grid.name);
        }
        if s.n_congested() == 0 {
            assert!(n.values.iter().all(|&v| v == 0.0));
            assert!(prices.iter().all(|&p| p == s.lambda_slack));
        }
        for (l, &c) in s.congested.iter().enumerate() {
            assert_eq!(c, s.mu[l] != 0.0);
            if c {
                assert!(s.f[l].abs() >= grid.lines[l].limit * (1.0 - 1e-6));
            }
        }
    }
}

#[test]
fn single_precision_solves_track_double() {
    let grid = load("rts24.json");
    let s64 = solve_dcopf(&grid, &build_ptdf(&grid).unwrap()).unwrap();
    let g32 = grid.cast::<f32>();
    let s32 = solve_dcopf(&g32, &build_ptdf(&g32).unwrap()).unwrap();
    assert!(((s32.z as f64) - s64.z).abs() <= 1e-4 * s64.z);
}

#[test]
fn loose_limits_remove_congestion() {
    let mut grid = load("rts24.json");
    for line in &mut grid.lines {
        line.limit *= 10.0;
    }
    let ptdf = build_ptdf(&grid).unwrap();
    let s = solve_dcopf(&grid, &ptdf).unwrap();
    assert_eq!(s.n_congested(), 0);
    let prices = lmp(&s, &ptdf);
    assert!(prices.iter().all(|&p| p == prices[0]));
}

#[test]
fn northern_pocket_prices_below_southern_area() {
    let grid = load("rts24.json");
    let ptdf = build_ptdf(&grid).unwrap();
    let s = solve_dcopf(&grid, &ptdf).unwrap();
    let prices = lmp(&s, &ptdf);
    let north = (15..=23).map(|b| prices[b - 1]).fold(f64::MIN, f64::max);
    let south = [1, 2, 4, 5, 6, 8, 9, 10, 11, 12, 13, 14].map(|b| prices[b - 1]);
    assert!(south.iter().all(|&p| p > north), "north max {north}, south {south:?}");
}
