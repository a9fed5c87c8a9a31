//! Case ingestion (MATPOWER text and the native JSON schema) and result
//! files.

mod json;
mod matpower;
mod report;

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{validate, Bus, Generator, GeneratorKind, Grid, Line, ValidationReport};

pub use json::{read_json_case, write_json_case};
pub use matpower::{parse_matpower, print_matpower, CaseDocument, MatValue};
pub use report::{read_report_csv, write_report_csv, ReportRow, REPORT_HEADER};

/// Limit used for branches whose rating is 0 ("unlimited").
pub const UNLIMITED_RATING_MW: f64 = 1e4;

#[derive(Debug, Error)]
pub enum CaseIoError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("missing table mpc.{0}")]
    MissingTable(String),
    #[error("{table} row {row}: {message}")]
    Table { table: &'static str, row: usize, message: String },
    #[error("no slack bus (bus type 3)")]
    NoSlack,
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("invalid grid: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How to treat a non-positive branch reactance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReactanceMode {
    #[default]
    Reject,
    /// Use `|x|`; series-compensated branches become ordinary ones.
    Absolute,
}

/// How to treat a negative bus load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativeLoadMode {
    #[default]
    Reject,
    /// Set the load to zero.
    Clamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToGridOptions {
    /// Drop quadratic (and higher) cost terms instead of rejecting them.
    pub linearize_costs: bool,
    pub unlimited_rating: f64,
    pub reactance: ReactanceMode,
    pub negative_load: NegativeLoadMode,
    /// Higher-order cost coefficients below this magnitude count as zero.
    pub cost_tolerance: f64,
}

impl Default for ToGridOptions {
    fn default() -> Self {
        Self {
            linearize_costs: false,
            unlimited_rating: UNLIMITED_RATING_MW,
            reactance: ReactanceMode::Reject,
            negative_load: NegativeLoadMode::Reject,
            cost_tolerance: 1e-9,
        }
    }
}

fn col(row: &[f64], i: usize, table: &'static str, r: usize) -> Result<f64, CaseIoError> {
    row.get(i).copied().ok_or_else(|| CaseIoError::Table {
        table,
        row: r,
        message: format!("needs at least {} columns", i + 1),
    })
}

/// Converts a parsed case to a grid: dense bus numbering, `b = 1/x`, limits
/// from rateA, linear cost from gencost, slack from the type-3 bus.
/// Out-of-service branches and generators are dropped.
pub fn to_grid(doc: &CaseDocument, options: &ToGridOptions) -> Result<Grid<f64>, CaseIoError> {
    let mut index = HashMap::new();
    let mut buses = Vec::with_capacity(doc.bus.len());
    let mut slack = None;
    for (r, row) in doc.bus.iter().enumerate() {
        let id = col(row, 0, "bus", r)?;
        let kind = col(row, 1, "bus", r)?;
        let mut demand = col(row, 2, "bus", r)?;
        if index.insert(id.to_bits(), r).is_some() {
            return Err(CaseIoError::Table { table: "bus", row: r, message: format!("duplicate bus {id}") });
        }
        if kind == 3.0 && slack.is_none() {
            slack = Some(r);
        }
        if demand < 0.0 {
            match options.negative_load {
                NegativeLoadMode::Reject => {
                    return Err(CaseIoError::Table { table: "bus", row: r, message: format!("negative load {demand}") })
                }
                NegativeLoadMode::Clamp => demand = 0.0,
            }
        }
        buses.push(Bus { id: r, demand });
    }
    let slack_bus = slack.ok_or(CaseIoError::NoSlack)?;
    let lookup = |id: f64, table: &'static str, r: usize| {
        index.get(&id.to_bits()).copied().ok_or_else(|| CaseIoError::Table {
            table,
            row: r,
            message: format!("unknown bus {id}"),
        })
    };

    let mut lines = Vec::new();
    for (r, row) in doc.branch.iter().enumerate() {
        let status = row.get(10).copied().unwrap_or(1.0);
        if status == 0.0 {
            continue;
        }
        let from = lookup(col(row, 0, "branch", r)?, "branch", r)?;
        let to = lookup(col(row, 1, "branch", r)?, "branch", r)?;
        let mut x = col(row, 3, "branch", r)?;
        if x <= 0.0 {
            match options.reactance {
                ReactanceMode::Absolute if x < 0.0 => x = -x,
                _ => {
                    return Err(CaseIoError::Table {
                        table: "branch",
                        row: r,
                        message: format!("non-positive reactance {x}"),
                    })
                }
            }
        }
        let rate = col(row, 5, "branch", r)?;
        let limit = if rate == 0.0 { options.unlimited_rating } else { rate };
        lines.push(Line { id: lines.len(), from_bus: from, to_bus: to, susceptance: 1.0 / x, limit });
    }

    if doc.gencost.len() < doc.gen.len() {
        return Err(CaseIoError::Table {
            table: "gencost",
            row: doc.gencost.len(),
            message: format!("{} cost rows for {} generators", doc.gencost.len(), doc.gen.len()),
        });
    }
    let mut generators = Vec::new();
    for (r, row) in doc.gen.iter().enumerate() {
        let status = row.get(7).copied().unwrap_or(1.0);
        if status <= 0.0 {
            continue;
        }
        let bus = lookup(col(row, 0, "gen", r)?, "gen", r)?;
        let p_max = col(row, 8, "gen", r)?;
        let cost = linear_cost(&doc.gencost[r], r, options)?;
        generators.push(Generator { id: generators.len(), bus, cost, p_max, kind: GeneratorKind::Thermal });
    }
    Ok(Grid { name: doc.name.clone(), slack_bus, buses, lines, generators })
}

fn linear_cost(row: &[f64], r: usize, options: &ToGridOptions) -> Result<f64, CaseIoError> {
    let err = |message: String| CaseIoError::Table { table: "gencost", row: r, message };
    let model = col(row, 0, "gencost", r)?;
    if model != 2.0 {
        return Err(err(format!("cost model {model} is not polynomial")));
    }
    let n = col(row, 3, "gencost", r)? as usize;
    if row.len() < 4 + n {
        return Err(err(format!("{n} coefficients declared, {} present", row.len() - 4)));
    }
    let coeffs = &row[4..4 + n];
    // Highest order first; the linear term is second to last.
    let linear = if n >= 2 { coeffs[n - 2] } else { 0.0 };
    if n > 2 {
        if let Some(&q) = coeffs[..n - 2].iter().find(|c| c.abs() > options.cost_tolerance) {
            if !options.linearize_costs {
                return Err(err(format!("nonlinear cost coefficient {q}")));
            }
        }
    }
    Ok(linear)
}

/// Fails with the validation report if the grid is not usable.
pub fn ensure_valid(grid: &Grid<f64>) -> Result<(), CaseIoError> {
    let report = validate(grid);
    if report.is_valid() {
        Ok(())
    } else {
        Err(CaseIoError::Invalid(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> CaseDocument {
        parse_matpower(
            "mpc.bus = [7012 3 0; 5 1 40; 9 1 10];
             mpc.gen = [7012 0 0 0 0 1 100 1 100; 9 0 0 0 0 1 100 0 50];
             mpc.branch = [7012 5 0 0.25 0 0 0 0 0 0 1; 5 9 0 0.5 0 30 0 0 0 0 1; 7012 9 0 1 0 30 0 0 0 0 0];
             mpc.gencost = [2 0 0 3 0 20 0; 2 0 0 2 7 0 0];",
        )
        .unwrap()
    }

    #[test]
    fn converts_with_renumbering() {
        let g = to_grid(&doc(), &ToGridOptions::default()).unwrap();
        assert_eq!(g.slack_bus, 0);
        assert_eq!(g.lines.len(), 2);
        assert_eq!(g.lines[0].susceptance, 4.0);
        assert_eq!(g.lines[0].limit, UNLIMITED_RATING_MW);
        assert_eq!((g.lines[1].from_bus, g.lines[1].to_bus, g.lines[1].limit), (1, 2, 30.0));
        assert_eq!(g.generators.len(), 1);
        assert_eq!(g.generators[0].cost, 20.0);
        assert!(ensure_valid(&g).is_ok());
    }

    #[test]
    fn quadratic_cost_needs_linearization() {
        let mut d = doc();
        d.gencost[0][4] = 0.01;
        assert!(to_grid(&d, &ToGridOptions::default()).is_err());
        let g = to_grid(&d, &ToGridOptions { linearize_costs: true, ..Default::default() }).unwrap();
        assert_eq!(g.generators[0].cost, 20.0);
    }

    #[test]
    fn reactance_and_load_modes() {
        let mut d = doc();
        d.branch[1][3] = -0.5;
        d.bus[2][2] = -3.0;
        assert!(to_grid(&d, &ToGridOptions::default()).is_err());
        let opts = ToGridOptions {
            reactance: ReactanceMode::Absolute,
            negative_load: NegativeLoadMode::Clamp,
            ..Default::default()
        };
        let g = to_grid(&d, &opts).unwrap();
        assert_eq!(g.lines[1].susceptance, 2.0);
        assert_eq!(g.buses[2].demand, 0.0);
        d.branch[1][3] = 0.0;
        assert!(to_grid(&d, &opts).is_err());
    }

    #[test]
    fn missing_slack() {
        let mut d = doc();
        d.bus[0][1] = 2.0;
        assert!(matches!(to_grid(&d, &ToGridOptions::default()), Err(CaseIoError::NoSlack)));
    }
}
