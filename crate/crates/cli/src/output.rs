//! Result documents and tables written by the commands.

use std::io::{Read, Write};

use pplasso::covariance::RiskEntry;
use pplasso::pplasso::BicRecord;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub command: String,
    pub data: DataSummary,
    pub settings: FitSettingsDoc,
    pub pplasso: Option<PPLassoDoc>,
    pub baselines: Vec<BaselineDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub biomarkers_in_file: usize,
    pub biomarkers_used: usize,
    pub response: String,
    pub treatment: String,
    /// Coefficients refer to biomarkers scaled to mean 0, variance 1.
    pub standardized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettingsDoc {
    pub seed: u64,
    pub delta: f64,
    pub lambda_grid: usize,
    pub sigma: String,
    pub top_variance: Option<usize>,
    pub methods: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub estimator: String,
    pub hyperparameters: String,
    pub risk: f64,
}

impl From<&RiskEntry> for RiskRow {
    fn from(e: &RiskEntry) -> Self {
        RiskRow {
            estimator: e.candidate.name().to_string(),
            hyperparameters: format_hyperparameters(&e.candidate),
            risk: e.risk,
        }
    }
}

pub fn format_hyperparameters(c: &pplasso::EstimatorCandidate) -> String {
    c.hyperparameters()
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicRow {
    pub lambda: f64,
    pub mse: f64,
    pub k: usize,
    pub bic: f64,
    pub converged: bool,
    pub ridge_refit: bool,
}

impl From<&BicRecord> for BicRow {
    fn from(r: &BicRecord) -> Self {
        BicRow {
            lambda: r.lambda,
            mse: r.mse,
            k: r.k,
            bic: r.bic,
            converged: r.converged,
            ridge_refit: r.ridge_refit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefRow {
    pub biomarker: String,
    pub beta1: f64,
    pub beta2: f64,
    pub beta2_minus_beta1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PPLassoDoc {
    pub covariance_estimator: String,
    pub covariance_risk: Vec<RiskRow>,
    pub lambda: f64,
    pub lambda_index: usize,
    pub k: [usize; 2],
    pub m: [usize; 2],
    pub alpha: [f64; 2],
    pub prognostic: Vec<String>,
    pub predictive: Vec<String>,
    /// Biomarkers with a nonzero coefficient in either arm.
    pub coefficients: Vec<CoefRow>,
    pub bic_table: Vec<BicRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineDoc {
    pub method: String,
    pub tuning: String,
    /// Elastic-Net mixing weight (1 for the Lasso variants).
    pub mixing: f64,
    pub lambda: f64,
    pub cv_error: f64,
    pub alpha: [f64; 2],
    pub prognostic: Vec<String>,
    pub predictive: Vec<String>,
    pub coefficients: Vec<CoefRow>,
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, doc: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut w, doc)
        .map_err(|e| CliError::validation(format!("cannot write result: {e}")))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_fit_document<R: Read>(r: R) -> CliResult<FitDocument> {
    serde_json::from_reader(r).map_err(|e| CliError::validation(format!("bad result document: {e}")))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::validation(format!("csv: {e}"))
}

/// `estimator,hyperparameters,risk`, in the given (already sorted) order.
pub fn write_risk_table<W: Write>(w: W, rows: &[RiskRow]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["estimator", "hyperparameters", "risk"]).map_err(csv_error)?;
    for r in rows {
        out.write_record([r.estimator.as_str(), r.hyperparameters.as_str(), &r.risk.to_string()])
            .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_risk_table<R: Read>(r: R) -> CliResult<Vec<RiskRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(String::from).collect();
    if header != ["estimator", "hyperparameters", "risk"] {
        return Err(CliError::validation("unexpected risk table header"));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(csv_error)?;
            let risk = rec[2]
                .parse()
                .map_err(|_| CliError::validation(format!("bad risk '{}'", &rec[2])))?;
            Ok(RiskRow { estimator: rec[0].to_string(), hyperparameters: rec[1].to_string(), risk })
        })
        .collect()
}
