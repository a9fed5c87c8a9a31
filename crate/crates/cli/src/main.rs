//! `gridagg`: solve, transform, partition, aggregate and evaluate grid cases.
//!
//! Exit codes: 0 success, 1 unreadable or malformed input, 2 infeasible
//! model, 3 numerical failure, 64 usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gridagg_core::aggregate::{build_aggregated, AggregatedDocument};
use gridagg_core::case_io::{
    parse_matpower, read_json_case, to_grid, write_json_case, write_report_csv, CaseIoError, NegativeLoadMode,
    ReactanceMode, ToGridOptions, UNLIMITED_RATING_MW,
};
use gridagg_core::dcopf::{solve_dcopf_with, DcOpfError, SolutionDocument};
use gridagg_core::evaluate::{cluster_range, sweep, EvaluateError, SweepOptions};
use gridagg_core::lp::{DenseSimplex, LpTolerances};
use gridagg_core::model::{transform, TransformSpec};
use gridagg_core::partition::{
    partition, Method, PartitionDocument, PartitionError, PartitionOptions, PartitionResult, DEFAULT_RHO_CAP,
};
use gridagg_core::ptdf::build_ptdf;
use gridagg_core::Grid;

const EXIT_INPUT: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "gridagg", version, about = "Congestion-sensitive grid aggregation for DC optimal power flow")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Case file (native JSON or MATPOWER `.m`).
    #[arg(long, global = true)]
    case: Option<PathBuf>,
    /// Case format; inferred from the extension when omitted.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Main output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    /// Primal feasibility tolerance of the LP solver.
    #[arg(long, global = true)]
    tol_feas: Option<f64>,
    /// Worker threads for aggregated-model solves.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// MATPOWER input: drop quadratic cost terms.
    #[arg(long, global = true)]
    linearize_costs: bool,
    /// MATPOWER input: use |x| for negative branch reactances.
    #[arg(long, global = true)]
    abs_reactance: bool,
    /// MATPOWER input: set negative bus loads to zero.
    #[arg(long, global = true)]
    clamp_negative_loads: bool,
    /// MATPOWER input: limit for branches with rating 0.
    #[arg(long, global = true, default_value_t = UNLIMITED_RATING_MW)]
    unlimited_rating: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Matpower,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the full DC-OPF and report dispatch, flows and prices.
    Solve,
    /// Apply the scenario transformation and write a JSON case.
    Transform(TransformArgs),
    /// Partition the grid with one method.
    Partition(PartitionArgs),
    /// Build the aggregated model for a partition file.
    Aggregate(AggregateArgs),
    /// Sweep methods and cluster counts, writing the report CSV.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[arg(long, default_value_t = 1.0)]
    demand_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    wind_scale: f64,
    /// Largest additive thermal cost offset.
    #[arg(long = "perturb-costs", visible_alias = "perturb", default_value_t = 0.0)]
    perturb: f64,
    /// Add a backup unit at every bus (cost defaults to 10× the largest
    /// thermal cost).
    #[arg(long)]
    backups: bool,
    #[arg(long, requires = "backups")]
    backup_cost: Option<f64>,
    /// Extra wind unit as `bus:capacity`; repeatable.
    #[arg(long = "add-wind", value_parser = parse_wind)]
    add_wind: Vec<(usize, f64)>,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[arg(long)]
    method: Method,
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = DEFAULT_RHO_CAP)]
    rho_cap: f64,
    /// Merge parallel inter-cluster lines into one row with summed limits.
    #[arg(long)]
    merge_parallel: bool,
}

#[derive(Args, Debug)]
struct AggregateArgs {
    /// Partition JSON written by `gridagg partition`.
    #[arg(long)]
    partition: PathBuf,
    /// Also solve the aggregated model and print its objective.
    #[arg(long)]
    solve: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Comma-separated methods, or `all` (the default).
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Vec<Option<Method>>,
    /// Largest cluster count (default: number of buses).
    #[arg(long)]
    from: Option<usize>,
    /// Smallest cluster count.
    #[arg(long, default_value_t = 1)]
    to: usize,
    #[arg(long, default_value_t = DEFAULT_RHO_CAP)]
    rho_cap: f64,
    #[arg(long)]
    merge_parallel: bool,
    /// Repetitions of each timed partitioning call.
    #[arg(long, default_value_t = 3)]
    timing_repeats: usize,
}

/// `None` stands for `all`.
fn parse_method(s: &str) -> std::result::Result<Option<Method>, String> {
    if s == "all" {
        Ok(None)
    } else {
        s.parse::<Method>().map(Some).map_err(|e| e.to_string())
    }
}

fn parse_wind(s: &str) -> std::result::Result<(usize, f64), String> {
    let (bus, cap) = s.split_once(':').ok_or("expected bus:capacity")?;
    Ok((bus.trim().parse().map_err(|e| format!("{e}"))?, cap.trim().parse().map_err(|e| format!("{e}"))?))
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self { code, error: error.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = if error.is::<DcOpfError>() {
            match error.downcast_ref::<DcOpfError>() {
                Some(DcOpfError::Infeasible) | Some(DcOpfError::Unbounded) => EXIT_INFEASIBLE,
                _ => EXIT_NUMERICAL,
            }
        } else if let Some(e) = error.downcast_ref::<EvaluateError>() {
            match e {
                EvaluateError::FullModel(DcOpfError::Infeasible | DcOpfError::Unbounded) => EXIT_INFEASIBLE,
                EvaluateError::FullModel(_) | EvaluateError::AggregatedModel { .. } | EvaluateError::Ptdf(_) => {
                    EXIT_NUMERICAL
                }
                EvaluateError::Range { .. } | EvaluateError::Partition(PartitionError::ClusterCount { .. }) => {
                    EXIT_USAGE
                }
                _ => EXIT_NUMERICAL,
            }
        } else if let Some(e) = error.downcast_ref::<PartitionError>() {
            match e {
                PartitionError::ClusterCount { .. }
                | PartitionError::SpectralSingleCluster
                | PartitionError::UnknownMethod(_) => EXIT_USAGE,
                PartitionError::Invalid(_) | PartitionError::FeatureRows { .. } => EXIT_INPUT,
                _ => EXIT_NUMERICAL,
            }
        } else if error.is::<gridagg_core::ptdf::PtdfError>() {
            EXIT_NUMERICAL
        } else {
            EXIT_INPUT
        };
        Self { code, error }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Solve => cmd_solve(common),
        Command::Transform(args) => cmd_transform(common, args),
        Command::Partition(args) => cmd_partition(common, args),
        Command::Aggregate(args) => cmd_aggregate(common, args),
        Command::Evaluate(args) => cmd_evaluate(common, args),
    }
}

fn load_case(common: &Common) -> Result<Grid> {
    let path = common.case.as_ref().ok_or_else(|| Failure::new(EXIT_USAGE, anyhow!("--case is required")))?;
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let format = common.format.unwrap_or_else(|| {
        if path.extension().is_some_and(|e| e == "m") {
            Format::Matpower
        } else {
            Format::Json
        }
    });
    let grid = match format {
        Format::Json => read_json_case(&text),
        Format::Matpower => parse_matpower(&text).and_then(|doc| {
            let options = ToGridOptions {
                linearize_costs: common.linearize_costs,
                unlimited_rating: common.unlimited_rating,
                reactance: if common.abs_reactance { ReactanceMode::Absolute } else { ReactanceMode::Reject },
                negative_load: if common.clamp_negative_loads {
                    NegativeLoadMode::Clamp
                } else {
                    NegativeLoadMode::Reject
                },
                ..Default::default()
            };
            let grid = to_grid(&doc, &options)?;
            gridagg_core::case_io::ensure_valid(&grid)?;
            Ok(grid)
        }),
    };
    grid.map_err(|e: CaseIoError| {
        let err = match repair_hint(&e) {
            Some(flag) => anyhow!("{}: {e} (rerun with {flag})", path.display()),
            None => anyhow!(e).context(path.display().to_string()),
        };
        Failure::new(EXIT_INPUT, err)
    })
}

/// The MATPOWER repair flag that would accept the rejected row, if any.
fn repair_hint(e: &CaseIoError) -> Option<&'static str> {
    let CaseIoError::Table { message, .. } = e else { return None };
    [("negative load", "--clamp-negative-loads"), ("non-positive reactance -", "--abs-reactance"), ("nonlinear cost", "--linearize-costs")]
        .into_iter()
        .find(|(prefix, _)| message.starts_with(prefix))
        .map(|(_, flag)| flag)
}

fn tolerances(common: &Common) -> Result<LpTolerances> {
    let mut tol = LpTolerances::default();
    if let Some(f) = common.tol_feas {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Failure::new(EXIT_USAGE, anyhow!("--tol-feas must be positive")));
        }
        tol.feasibility = f;
    }
    Ok(tol)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).context("cannot write to stdout")?;
            if !text.ends_with('\n') {
                out.write_all(b"\n").context("cannot write to stdout")?;
            }
        }
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value).context("serialization failed")?)
}

fn cmd_solve(common: &Common) -> Result<()> {
    let grid = load_case(common)?;
    let ptdf = build_ptdf(&grid).map_err(anyhow::Error::from)?;
    let solution =
        solve_dcopf_with(&grid, &ptdf, &DenseSimplex, &tolerances(common)?).map_err(anyhow::Error::from)?;
    let doc = SolutionDocument::new(&solution, &ptdf);
    let text = to_json(&doc)?;
    if let Some(p) = &common.json_out {
        emit(Some(p), &text)?;
    }
    if common.out.is_some() || common.json_out.is_none() {
        emit(common.out.as_deref(), &text)?;
    }
    let (lo, hi) = doc.lmp.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
    eprintln!(
        "objective {:.6}  congested lines {}  LMP range [{lo:.4}, {hi:.4}]",
        doc.z,
        solution.n_congested()
    );
    Ok(())
}

fn cmd_transform(common: &Common, args: &TransformArgs) -> Result<()> {
    let grid = load_case(common)?;
    let mut spec = TransformSpec {
        demand_scale: args.demand_scale,
        wind_scale: args.wind_scale,
        cost_perturb_magnitude: args.perturb,
        backup_cost: None,
        wind_additions: args.add_wind.clone(),
    };
    if args.backups {
        spec = spec.with_default_backups(&grid);
        if let Some(c) = args.backup_cost {
            spec.backup_cost = Some(c);
        }
    }
    let out = transform(&grid, &spec, common.seed).map_err(|e| Failure::new(EXIT_USAGE, e))?;
    let text = write_json_case(&out);
    emit(common.out.as_deref(), &text)?;
    if let Some(p) = &common.json_out {
        emit(Some(p), &text)?;
    }
    Ok(())
}

fn cmd_partition(common: &Common, args: &PartitionArgs) -> Result<()> {
    let grid = load_case(common)?;
    let ptdf = build_ptdf(&grid).map_err(anyhow::Error::from)?;
    let solution =
        solve_dcopf_with(&grid, &ptdf, &DenseSimplex, &tolerances(common)?).map_err(anyhow::Error::from)?;
    let options = PartitionOptions { seed: common.seed, rho_cap: args.rho_cap, merge_parallel: args.merge_parallel };
    let result = partition(&grid, &ptdf, &solution, args.method, args.clusters, &options)
        .map_err(anyhow::Error::from)?;
    let text = to_json(&result.to_document())?;
    emit(common.out.as_deref(), &text)?;
    if let Some(p) = &common.json_out {
        emit(Some(p), &text)?;
    }
    Ok(())
}

fn cmd_aggregate(common: &Common, args: &AggregateArgs) -> Result<()> {
    let grid = load_case(common)?;
    let text = fs::read_to_string(&args.partition)
        .with_context(|| format!("cannot read {}", args.partition.display()))?;
    let doc: PartitionDocument = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a partition file", args.partition.display()))?;
    let part = PartitionResult::from_document(&grid, &doc)
        .map_err(|e| Failure::new(EXIT_INPUT, anyhow!(e).context(args.partition.display().to_string())))?;
    let ptdf = build_ptdf(&grid).map_err(anyhow::Error::from)?;
    let am = build_aggregated(&grid, &ptdf, &part).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    let text = to_json(&AggregatedDocument::new(&grid, &am))?;
    emit(common.out.as_deref(), &text)?;
    if let Some(p) = &common.json_out {
        emit(Some(p), &text)?;
    }
    if args.solve {
        let s = am
            .solve_with(&grid, &DenseSimplex, &tolerances(common)?)
            .map_err(anyhow::Error::from)?;
        eprintln!("aggregated objective {:.6}", s.z);
    }
    Ok(())
}

fn cmd_evaluate(common: &Common, args: &EvaluateArgs) -> Result<()> {
    let grid = load_case(common)?;
    let methods: Vec<Method> = if args.methods.is_empty() || args.methods.contains(&None) {
        Method::ALL.to_vec()
    } else {
        args.methods.iter().flatten().copied().collect()
    };
    let from = args.from.unwrap_or(grid.n_buses());
    let counts = cluster_range(from, args.to, grid.n_buses()).map_err(|e| Failure::new(EXIT_USAGE, e))?;
    let options = SweepOptions {
        partition: PartitionOptions { seed: common.seed, rho_cap: args.rho_cap, merge_parallel: args.merge_parallel },
        tolerances: tolerances(common)?,
        timing_repeats: args.timing_repeats.max(1),
        jobs: common.jobs.max(1),
    };
    let report = sweep(&grid, &methods, &counts, &options).map_err(anyhow::Error::from)?;
    let mut csv = Vec::new();
    write_report_csv(&report.records, &mut csv).map_err(anyhow::Error::from)?;
    emit(common.out.as_deref(), &String::from_utf8(csv).context("report is UTF-8")?)?;
    eprintln!("{} records, seed {}", report.records.len(), common.seed);
    if let Some(p) = &common.json_out {
        let json = serde_json::json!({
            "seed": common.seed,
            "z_full": report.full.z,
            "congested_lines": report.full.congested_lines(),
            "records": report.records,
        });
        emit(Some(p), &to_json(&json)?)?;
    }
    Ok(())
}
