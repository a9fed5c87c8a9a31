#![allow(dead_code)]

use std::path::PathBuf;

use gridagg_core::case_io::read_json_case;
use gridagg_core::model::{Bus, Generator, GeneratorKind, Grid, Line};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn load(name: &str) -> Grid<f64> {
    read_json_case(&std::fs::read_to_string(data_file(name)).unwrap()).unwrap()
}

/// Random connected grid: a random spanning tree plus `extra` chords, loads on
/// most buses, and enough cheap-to-expensive capacity to cover demand twice.
/// Tight limits make congestion likely.
pub fn random_grid(seed: u64, n: usize, extra: usize) -> Grid<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let buses: Vec<Bus<f64>> = (0..n)
        .map(|id| Bus { id, demand: if rng.gen_bool(0.7) { rng.gen_range(5.0..60.0_f64).round() } else { 0.0 } })
        .collect();
    let mut edges = Vec::new();
    for b in 1..n {
        edges.push((rng.gen_range(0..b), b));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.push((a.min(b), a.max(b)));
        }
    }
    let lines = edges
        .iter()
        .enumerate()
        .map(|(id, &(f, t))| Line {
            id,
            from_bus: f,
            to_bus: t,
            susceptance: rng.gen_range(2.0..20.0_f64),
            limit: rng.gen_range(20.0..120.0_f64).round(),
        })
        .collect();
    let total: f64 = buses.iter().map(|b| b.demand).sum();
    let n_gen = (n / 3).max(2);
    let mut generators: Vec<Generator<f64>> = (0..n_gen)
        .map(|id| Generator {
            id,
            bus: rng.gen_range(0..n),
            cost: 5.0 + 3.0 * id as f64 + rng.gen_range(0.0..1.0),
            p_max: (2.0 * total / n_gen as f64).ceil() + 10.0,
            kind: GeneratorKind::Thermal,
        })
        .collect();
    // Expensive backup everywhere keeps the problem feasible under any limits.
    for b in 0..n {
        let id = generators.len();
        generators.push(Generator { id, bus: b, cost: 500.0, p_max: 1000.0, kind: GeneratorKind::Backup });
    }
    Grid { name: format!("random-{seed}"), slack_bus: rng.gen_range(0..n), buses, lines, generators }
}
