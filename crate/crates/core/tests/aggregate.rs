mod common;

use common::{load, random_grid};
use gridagg_core::aggregate::{build_aggregated, AggregatedDocument};
use gridagg_core::dcopf::solve_dcopf;
use gridagg_core::evaluate::{map_flows, mrllv, rove};
use gridagg_core::model::Grid;
use gridagg_core::partition::{partition, Method, PartitionOptions, PartitionResult};
use gridagg_core::ptdf::build_ptdf;

/// Cheapest dispatch ignoring the network.
fn merit_order_cost(grid: &Grid<f64>) -> f64 {
    let mut units: Vec<(f64, f64)> = grid.generators.iter().map(|g| (g.cost, g.p_max)).collect();
    units.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut left = grid.total_demand();
    let mut cost = 0.0;
    for (c, cap) in units {
        let take = left.min(cap);
        cost += c * take;
        left -= take;
    }
    assert!(left <= 1e-9);
    cost
}

#[test]
fn reduced_ptdf_matches_matrix_product() {
    for (seed, merge_parallel) in [(1, false), (2, true), (3, false), (4, true)] {
        let grid = random_grid(seed, 18, 8);
        let ptdf = build_ptdf(&grid).unwrap();
        let sol = solve_dcopf(&grid, &ptdf).unwrap();
        let opts = PartitionOptions { merge_parallel, ..Default::default() };
        for method in Method::ALL {
            for k in [2, 5, 11] {
                let p = partition(&grid, &ptdf, &sol, method, k, &opts).unwrap();
                let am = build_aggregated(&grid, &ptdf, &p).unwrap();
                let m_nc = p.node_map();
                let m_l = p.line_map(grid.n_lines());
                let gram_inv = (&m_nc * m_nc.transpose()).try_inverse().unwrap();
                let expected = &m_l * &ptdf.values * m_nc.transpose() * gram_inv;
                assert_eq!(expected.shape(), am.reduced_ptdf.shape());
                let err = (&expected - &am.reduced_ptdf).abs().max();
                assert!(err <= 1e-12, "seed {seed} {method} k={k}: {err:e}");
                let limits: Vec<f64> = (0..m_l.nrows())
                    .map(|r| (0..grid.n_lines()).map(|l| m_l[(r, l)].abs() * grid.lines[l].limit).sum())
                    .collect();
                assert_eq!(am.line_limits, limits);
                let total: f64 = am.demand.iter().sum();
                assert!((total - grid.total_demand()).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn identity_partition_reproduces_full_model() {
    for name in ["rts24.json", "ieee300_mod.json"] {
        let grid = load(name);
        let ptdf = build_ptdf(&grid).unwrap();
        let full = solve_dcopf(&grid, &ptdf).unwrap();
        let am = build_aggregated(&grid, &ptdf, &PartitionResult::identity(&grid)).unwrap();
        assert_eq!(am.reduced_ptdf, ptdf.values);
        let agg = am.solve(&grid).unwrap();
        assert!(rove(full.z, agg.z).unwrap().abs() <= 1e-9, "{name}");
        let flows = map_flows(&ptdf, &grid, &agg.p);
        assert!(mrllv(&flows, &grid.limits()) <= 1e-9, "{name}");
    }
}

#[test]
fn single_cluster_is_copper_plate() {
    let grid = load("rts24.json");
    let ptdf = build_ptdf(&grid).unwrap();
    let labels = vec![0; grid.n_buses()];
    let p = PartitionResult::from_labels(&grid, &labels, None, 0, false).unwrap();
    let am = build_aggregated(&grid, &ptdf, &p).unwrap();
    assert_eq!(am.reduced_ptdf.nrows(), 0);
    let agg = am.solve(&grid).unwrap();
    let z_full = solve_dcopf(&grid, &ptdf).unwrap().z;
    assert!((agg.z - merit_order_cost(&grid)).abs() <= 1e-6 * agg.z);
    assert!(agg.z <= z_full + 1e-6);
}

#[test]
fn document_lists_every_cluster_and_line() {
    let grid = load("rts24.json");
    let ptdf = build_ptdf(&grid).unwrap();
    let sol = solve_dcopf(&grid, &ptdf).unwrap();
    let p = partition(&grid, &ptdf, &sol, Method::NcpAnac, 5, &PartitionOptions::default()).unwrap();
    let am = build_aggregated(&grid, &ptdf, &p).unwrap();
    let doc = AggregatedDocument::new(&grid, &am);
    let value = serde_json::to_value(&doc).unwrap();
    assert_eq!(value["n_clusters"], 5);
    assert_eq!(value["clusters"].as_array().unwrap().len(), 5);
    assert_eq!(value["lines"].as_array().unwrap().len(), am.line_limits.len());
    assert_eq!(value["generators"].as_array().unwrap().len(), grid.n_generators());
}
