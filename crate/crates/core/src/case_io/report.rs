//! Sweep report CSV.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::CaseIoError;
use crate::evaluate::EvaluationRecord;

pub const REPORT_HEADER: [&str; 7] = ["method", "n_clusters", "z_full", "z_agg", "rove", "mrllv", "gpt_seconds"];

/// One CSV row. Metric fields are empty when the aggregated model was
/// infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub n_clusters: usize,
    pub z_full: f64,
    pub z_agg: Option<f64>,
    pub rove: Option<f64>,
    pub mrllv: Option<f64>,
    pub gpt_seconds: f64,
}

impl From<&EvaluationRecord> for ReportRow {
    fn from(r: &EvaluationRecord) -> Self {
        Self {
            method: r.method.as_str().to_string(),
            n_clusters: r.n_clusters,
            z_full: r.z_full,
            z_agg: r.z_agg,
            rove: r.rove,
            mrllv: r.mrllv,
            gpt_seconds: r.gpt_seconds,
        }
    }
}

pub fn write_report_csv<W: Write>(records: &[EvaluationRecord], out: W) -> Result<(), CaseIoError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(ReportRow::from(r))?;
    }
    if records.is_empty() {
        w.write_record(REPORT_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<ReportRow>, CaseIoError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != REPORT_HEADER {
        return Err(CaseIoError::Schema { pointer: "header".into(), message: format!("unexpected header {header:?}") });
    }
    Ok(r.deserialize().collect::<Result<Vec<ReportRow>, _>>()?)
}
