mod common;

use common::{data_file, load};
use gridagg_core::case_io::{
    parse_matpower, print_matpower, read_json_case, read_report_csv, to_grid, write_json_case, write_report_csv,
    CaseIoError, NegativeLoadMode, ReactanceMode, ToGridOptions,
};
use gridagg_core::evaluate::{sweep, SweepOptions};
use gridagg_core::model::{validate, GeneratorKind};
use gridagg_core::partition::Method;

fn case300_source() -> String {
    std::fs::read_to_string(data_file("case300.m")).unwrap()
}

#[test]
fn case300_tables() {
    let doc = parse_matpower(&case300_source()).unwrap();
    assert_eq!(doc.bus.len(), 300);
    assert_eq!(doc.branch.len(), 411);
    assert_eq!(doc.gen.len(), doc.gencost.len());
    assert_eq!(doc.base_mva, 100.0);
}

#[test]
fn case300_print_parse_identity() {
    let doc = parse_matpower(&case300_source()).unwrap();
    let again = parse_matpower(&print_matpower(&doc)).unwrap();
    assert_eq!(again, doc);
}

#[test]
fn case300_needs_explicit_repairs() {
    let doc = parse_matpower(&case300_source()).unwrap();
    assert!(matches!(to_grid(&doc, &ToGridOptions::default()), Err(CaseIoError::Table { .. })));
    let opts = ToGridOptions {
        linearize_costs: true,
        reactance: ReactanceMode::Absolute,
        negative_load: NegativeLoadMode::Clamp,
        ..Default::default()
    };
    let grid = to_grid(&doc, &opts).unwrap();
    assert_eq!(grid.n_buses(), 300);
    assert_eq!(grid.n_lines(), 411);
    assert!(validate(&grid).is_valid());
}

#[test]
fn shipped_json_cases() {
    let raw = load("rts24_raw.json");
    assert_eq!((raw.n_buses(), raw.n_lines()), (24, 34));
    assert_eq!(raw.generators.iter().filter(|g| g.kind == GeneratorKind::Wind).count(), 6);
    assert!((raw.total_demand() - 2650.5).abs() < 1e-9);
    let rts = load("rts24.json");
    assert_eq!((rts.n_buses(), rts.n_lines()), (24, 34));
    assert!((rts.total_demand() - 2.0 * raw.total_demand()).abs() < 1e-9);
    let big = load("ieee300_mod.json");
    assert_eq!((big.n_buses(), big.n_lines()), (300, 411));
    assert_eq!(big.generators.iter().filter(|g| g.kind == GeneratorKind::Wind).count(), 23);
    for grid in [raw, rts, big] {
        assert_eq!(read_json_case(&write_json_case(&grid)).unwrap(), grid);
    }
}

#[test]
fn schema_errors_carry_pointers() {
    let mut value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data_file("rts24.json")).unwrap()).unwrap();
    value["lines"][3]["limit"] = serde_json::json!(-1.0);
    match read_json_case(&value.to_string()) {
        Err(CaseIoError::Schema { pointer, .. }) => assert_eq!(pointer, "/lines/3/limit"),
        other => panic!("{other:?}"),
    }
    value["lines"][3]["limit"] = serde_json::json!(10.0);
    value["generators"][0]["kind"] = serde_json::json!("nuclear");
    match read_json_case(&value.to_string()) {
        Err(CaseIoError::Schema { pointer, .. }) => assert_eq!(pointer, "/generators/0/kind"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn report_round_trip_from_sweep() {
    let grid = load("rts24.json");
    let opts = SweepOptions { timing_repeats: 1, ..Default::default() };
    let report = sweep(&grid, &Method::ALL, &[24, 12, 5, 1], &opts).unwrap();
    let mut buf = Vec::new();
    write_report_csv(&report.records, &mut buf).unwrap();
    let rows = read_report_csv(&buf[..]).unwrap();
    assert_eq!(rows.len(), 20);
    for (row, rec) in rows.iter().zip(&report.records) {
        assert_eq!(row.method, rec.method.as_str());
        assert_eq!(row.n_clusters, rec.n_clusters);
        assert_eq!(row.rove, rec.rove);
    }
}
