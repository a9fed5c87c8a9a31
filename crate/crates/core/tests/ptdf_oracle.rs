mod common;

use common::{load, random_grid};
use gridagg_core::model::Grid;
use gridagg_core::ptdf::{angle_flow_oracle, build_ptdf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative ∞-norm distance between PTDF flows and angle-formulation flows for
/// a random balanced injection.
fn flow_error(grid: &Grid<f64>, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inj: Vec<f64> = (0..grid.n_buses()).map(|_| rng.gen_range(-100.0..100.0)).collect();
    let total: f64 = inj.iter().sum();
    inj[grid.slack_bus] -= total;
    let ptdf = build_ptdf(grid).unwrap();
    let via_ptdf = ptdf.apply(&inj);
    let oracle = angle_flow_oracle(grid, &inj).unwrap();
    let scale = oracle.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    via_ptdf.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn random_grids_match_angle_oracle() {
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let n = rng.gen_range(2..=30);
        let grid = random_grid(seed, n, n / 2);
        let err = flow_error(&grid, seed);
        assert!(err <= 1e-8, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn shipped_cases_match_angle_oracle() {
    for name in ["rts24_raw.json", "rts24.json", "ieee300_mod.json"] {
        let grid = load(name);
        let err = flow_error(&grid, 7);
        assert!(err <= 1e-8, "{name}: relative error {err:e}");
    }
}

#[test]
fn slack_column_is_zero_and_columns_sum_like_transfers() {
    let grid = load("rts24.json");
    let ptdf = build_ptdf(&grid).unwrap();
    assert!(ptdf.values.column(grid.slack_bus).iter().all(|&v| v == 0.0));
    // Injecting at a bus and withdrawing at the slack moves at most one unit
    // over any line.
    assert!(ptdf.values.iter().all(|v| v.abs() <= 1.0 + 1e-12));
}

#[test]
fn single_precision_tracks_double() {
    let grid = load("rts24.json");
    let p64 = build_ptdf(&grid).unwrap();
    let p32 = build_ptdf(&grid.cast::<f32>()).unwrap();
    let worst = p64.values.iter().zip(p32.values.iter()).map(|(a, &b)| (a - b as f64).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}
