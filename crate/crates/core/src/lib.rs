//! Congestion-sensitive grid aggregation for DC optimal power flow.
//!
//! The numeric core (`model`, `lp`, `ptdf`, `dcopf`, `aggregate`) is generic
//! over [`scalar::Real`] (`f32` or `f64`). Clustering, evaluation and file I/O
//! work in `f64`; the aliases below fix the scalar for everyday use.

pub mod aggregate;
pub mod case_io;
pub mod dcopf;
pub mod evaluate;
pub mod lp;
pub mod model;
pub mod partition;
pub mod ptdf;
pub mod scalar;

pub use scalar::Real;

pub type Grid = model::Grid<f64>;
pub type Bus = model::Bus<f64>;
pub type Line = model::Line<f64>;
pub type Generator = model::Generator<f64>;
pub type PtdfMatrix = ptdf::PtdfMatrix<f64>;
pub type DcOpfSolution = dcopf::DcOpfSolution<f64>;
pub type AggregatedModel = aggregate::AggregatedModel<f64>;
pub type LpProblem = lp::LpProblem<f64>;
pub type LpSolution = lp::LpSolution<f64>;

pub type Grid32 = model::Grid<f32>;
pub type PtdfMatrix32 = ptdf::PtdfMatrix<f32>;
pub type DcOpfSolution32 = dcopf::DcOpfSolution<f32>;
