//! Regenerates the shipped scenario files in `crates/core/data`.
//!
//! ```text
//! cargo run --release -p gridagg-core --example build_scenarios [-- --check]
//! ```
//!
//! * `rts24_raw.json`: single-period snapshot of the updated 24-bus RTS
//!   (peak hour system load 2650.5 MW, six 200 MW wind farms at partial
//!   availability).
//! * `rts24.json`: demand and wind doubled, thermal costs perturbed, backup
//!   units at every bus.
//! * `ieee300_mod.json`: reconstruction of a congested 300-bus scenario from
//!   the MATPOWER case300 file. The source file has no branch ratings, so
//!   ratings are derived from the base-case dispatch; 23 wind units are sized
//!   to their adjacent line ratings. This is one concrete choice, not a copy of
//!   any published data set.
//!
//! With `--check` the files are regenerated in memory and compared with the
//! ones on disk.

use std::path::{Path, PathBuf};

use gridagg_core::case_io::{
    parse_matpower, read_json_case, to_grid, write_json_case, NegativeLoadMode, ReactanceMode, ToGridOptions,
};
use gridagg_core::dcopf::{lmp, solve_dcopf};
use gridagg_core::model::{transform, Bus, Generator, GeneratorKind, Grid, Line, TransformSpec};
use gridagg_core::ptdf::build_ptdf;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const RTS_SYSTEM_LOAD_MW: f64 = 2650.5;

/// (bus, share of system load in %).
const RTS_LOADS: [(usize, f64); 17] = [
    (1, 3.8),
    (2, 3.4),
    (3, 6.3),
    (4, 2.6),
    (5, 2.5),
    (6, 4.8),
    (7, 4.4),
    (8, 6.0),
    (9, 6.1),
    (10, 6.8),
    (13, 9.3),
    (14, 6.8),
    (15, 11.1),
    (16, 3.5),
    (18, 11.7),
    (19, 6.4),
    (20, 4.5),
];

/// (from, to, reactance p.u., capacity MW).
const RTS_LINES: [(usize, usize, f64, f64); 34] = [
    (1, 2, 0.0146, 175.0),
    (1, 3, 0.2253, 175.0),
    (1, 5, 0.0907, 350.0),
    (2, 4, 0.1356, 175.0),
    (2, 6, 0.205, 175.0),
    (3, 9, 0.1271, 175.0),
    (3, 24, 0.084, 400.0),
    (4, 9, 0.111, 175.0),
    (5, 10, 0.094, 350.0),
    (6, 10, 0.0642, 175.0),
    (7, 8, 0.0652, 350.0),
    (8, 9, 0.1762, 175.0),
    (8, 10, 0.1762, 175.0),
    (9, 11, 0.084, 400.0),
    (9, 12, 0.084, 400.0),
    (10, 11, 0.084, 400.0),
    (10, 12, 0.084, 400.0),
    (11, 13, 0.0488, 500.0),
    (11, 14, 0.0426, 500.0),
    (12, 13, 0.0488, 500.0),
    (12, 23, 0.0985, 500.0),
    (13, 23, 0.0884, 250.0),
    (14, 16, 0.0594, 250.0),
    (15, 16, 0.0172, 500.0),
    (15, 21, 0.0249, 400.0),
    (15, 24, 0.0529, 500.0),
    (16, 17, 0.0263, 500.0),
    (16, 19, 0.0234, 500.0),
    (17, 18, 0.0143, 500.0),
    (17, 22, 0.1069, 500.0),
    (18, 21, 0.0132, 1000.0),
    (19, 20, 0.0203, 1000.0),
    (20, 23, 0.0112, 1000.0),
    (21, 22, 0.0692, 500.0),
];

/// (bus, capacity MW, cost $/MWh).
const RTS_UNITS: [(usize, f64, f64); 12] = [
    (1, 152.0, 13.32),
    (2, 152.0, 13.32),
    (7, 350.0, 20.7),
    (13, 591.0, 20.93),
    (15, 60.0, 26.11),
    (15, 155.0, 10.52),
    (16, 155.0, 10.52),
    (18, 400.0, 6.02),
    (21, 400.0, 5.47),
    (22, 300.0, 0.0),
    (23, 310.0, 10.52),
    (23, 350.0, 10.89),
];

/// (bus, available output in MW) of the 200 MW farms in the evening peak hour.
const RTS_WIND: [(usize, f64); 6] = [(3, 150.0), (5, 50.0), (7, 150.0), (15, 200.0), (21, 100.0), (23, 200.0)];

const RTS_SEED: u64 = 24;
const RTS_COST_PERTURBATION: f64 = 0.1;

fn rts24_raw() -> Grid<f64> {
    let mut demand = [0.0; 24];
    for (bus, share) in RTS_LOADS {
        demand[bus - 1] = RTS_SYSTEM_LOAD_MW * share / 100.0;
    }
    let buses = (0..24).map(|id| Bus { id, demand: demand[id] }).collect();
    let lines = RTS_LINES
        .iter()
        .enumerate()
        .map(|(id, &(f, t, x, cap))| Line { id, from_bus: f - 1, to_bus: t - 1, susceptance: 1.0 / x, limit: cap })
        .collect();
    let thermal = RTS_UNITS.iter().map(|&(bus, cap, cost)| (bus, cap, cost, GeneratorKind::Thermal));
    let wind = RTS_WIND.iter().map(|&(bus, cap)| (bus, cap, 0.0, GeneratorKind::Wind));
    let generators = thermal
        .chain(wind)
        .enumerate()
        .map(|(id, (bus, p_max, cost, kind))| Generator { id, bus: bus - 1, cost, p_max, kind })
        .collect();
    Grid { name: "rts24-peak".into(), slack_bus: 12, buses, lines, generators }
}

fn rts24(raw: &Grid<f64>) -> Grid<f64> {
    let spec = TransformSpec {
        demand_scale: 2.0,
        wind_scale: 2.0,
        cost_perturb_magnitude: RTS_COST_PERTURBATION,
        ..TransformSpec::identity()
    }
    .with_default_backups(raw);
    let mut g = transform(raw, &spec, RTS_SEED).expect("valid transform");
    g.name = "rts24-congested".into();
    g
}

const CASE300_RATING_FACTOR: f64 = 1.5;
const CASE300_RATING_FLOOR_MW: f64 = 200.0;
const CASE300_WIND_UNITS: usize = 23;
const CASE300_WIND_SHARE: f64 = 1.0;
const CASE300_SEED: u64 = 4;
const CASE300_COST_PERTURBATION: f64 = 5.0;

struct Case300Params {
    rating_factor: f64,
    rating_floor: f64,
    wind_share: f64,
    seed: u64,
}

fn ieee300(source: &str, p: &Case300Params) -> Grid<f64> {
    let doc = parse_matpower(source).expect("case300 parses");
    let options = ToGridOptions {
        linearize_costs: true,
        reactance: ReactanceMode::Absolute,
        negative_load: NegativeLoadMode::Clamp,
        ..Default::default()
    };
    let mut grid = to_grid(&doc, &options).expect("case300 converts");
    // Base-case flows of the published dispatch set the ratings.
    let dispatch: Vec<f64> = doc.gen.iter().filter(|r| r[7] > 0.0).map(|r| r[1].max(0.0)).collect();
    let ptdf = build_ptdf(&grid).expect("connected");
    let flows = ptdf.flows(&grid, &dispatch);
    for (line, f) in grid.lines.iter_mut().zip(&flows) {
        line.limit = (p.rating_factor * f.abs()).max(p.rating_floor).round();
    }
    // Wind at buses without generation, sized to the largest adjacent rating.
    let has_gen: Vec<bool> = {
        let mut v = vec![false; grid.n_buses()];
        for g in &grid.generators {
            v[g.bus] = true;
        }
        v
    };
    let mut candidates: Vec<usize> = (0..grid.n_buses()).filter(|&b| !has_gen[b] && b != grid.slack_bus).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    candidates.shuffle(&mut rng);
    let mut sites: Vec<usize> = candidates.into_iter().take(CASE300_WIND_UNITS).collect();
    sites.sort_unstable();
    let wind_additions = sites
        .iter()
        .map(|&b| {
            let adjacent = grid
                .lines
                .iter()
                .filter(|l| l.from_bus == b || l.to_bus == b)
                .map(|l| l.limit)
                .fold(0.0, f64::max);
            (b, (p.wind_share * adjacent).round())
        })
        .collect();
    let spec = TransformSpec {
        demand_scale: 1.2,
        wind_scale: 1.0,
        cost_perturb_magnitude: CASE300_COST_PERTURBATION,
        wind_additions,
        ..TransformSpec::identity()
    }
    .with_default_backups(&grid);
    let mut g = transform(&grid, &spec, p.seed).expect("valid transform");
    g.name = "ieee300-congested-reconstruction".into();
    g
}

fn summary(name: &str, g: &Grid<f64>) {
    let ptdf = build_ptdf(g).expect("connected");
    let s = solve_dcopf(g, &ptdf).expect("solvable");
    let prices = lmp(&s, &ptdf);
    let (lo, hi) = prices.iter().fold((f64::MAX, f64::MIN), |(a, b), &p| (a.min(p), b.max(p)));
    let backup: f64 = g
        .generators
        .iter()
        .zip(&s.p)
        .filter(|(gen, _)| gen.kind == GeneratorKind::Backup)
        .map(|(_, p)| p)
        .sum();
    let congested: Vec<String> = s
        .congested_lines()
        .iter()
        .map(|&l| format!("{}-{}", g.lines[l].from_bus + 1, g.lines[l].to_bus + 1))
        .collect();
    println!(
        "{name}: N={} L={} G={} z={:.1} congested={} [{}] lmp=[{lo:.2}, {hi:.2}] backup={backup:.1} MW",
        g.n_buses(),
        g.n_lines(),
        g.n_generators(),
        s.z,
        congested.len(),
        congested.join(" ")
    );
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let check = args.iter().any(|a| a == "--check");
    let arg = |name: &str, default: f64| {
        args.iter()
            .position(|a| a == name)
            .and_then(|i| args.get(i + 1))
            .map_or(default, |v| v.parse().expect("numeric argument"))
    };
    let params = Case300Params {
        rating_factor: arg("--rating-factor", CASE300_RATING_FACTOR),
        rating_floor: arg("--rating-floor", CASE300_RATING_FLOOR_MW),
        wind_share: arg("--wind-share", CASE300_WIND_SHARE),
        seed: arg("--seed", CASE300_SEED as f64) as u64,
    };
    let dir = data_dir();
    let source = std::fs::read_to_string(dir.join("case300.m")).expect("case300.m present");
    let raw = rts24_raw();
    let files = [
        ("rts24_raw.json", raw.clone()),
        ("rts24.json", rts24(&raw)),
        ("ieee300_mod.json", ieee300(&source, &params)),
    ];
    for (file, grid) in &files {
        summary(file, grid);
        let text = write_json_case(grid);
        let path = dir.join(file);
        if check {
            let on_disk = std::fs::read_to_string(&path).expect("scenario file present");
            assert_eq!(read_json_case(&on_disk).expect("valid file"), *grid, "{file} is stale");
        } else if !args.iter().any(|a| a == "--dry-run") {
            std::fs::write(&path, text).expect("write scenario");
        }
    }
}
