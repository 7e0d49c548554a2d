//! CSV ingestion. Errors name the file line (the header is line 1).

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use pplasso::{CovarianceModel, TrialData};

use crate::error::{CliError, CliResult};

/// A CSV file with a header, every row checked for length.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCsv {
    pub headers: Vec<String>,
    /// (file line, cells)
    pub rows: Vec<(u64, Vec<String>)>,
}

impl RawCsv {
    pub fn read<R: Read>(reader: R) -> CliResult<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| CliError::validation(format!("line 1: {e}")))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if headers.iter().all(|h| h.is_empty()) {
            return Err(CliError::validation("line 1: missing header row"));
        }
        for (j, h) in headers.iter().enumerate() {
            if h.is_empty() {
                return Err(CliError::validation(format!("line 1: column {} has an empty name", j + 1)));
            }
            if headers[..j].contains(h) {
                return Err(CliError::validation(format!("line 1: duplicate column '{h}'")));
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                CliError::validation(format!("line {line}: {e}"))
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != headers.len() {
                return Err(CliError::validation(format!(
                    "line {line}: expected {} fields, found {}",
                    headers.len(),
                    rec.len()
                )));
            }
            rows.push((line, rec.iter().map(|c| c.trim().to_string()).collect()));
        }
        if rows.is_empty() {
            return Err(CliError::validation("no data rows"));
        }
        Ok(RawCsv { headers, rows })
    }

    pub fn open(path: &Path) -> CliResult<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| CliError::validation(format!("cannot open {}: {e}", path.display())))?;
        Self::read(std::io::BufReader::new(file))
    }

    pub fn column(&self, name: &str) -> CliResult<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::validation(format!("no column named '{name}'")))
    }

    fn number(&self, row: usize, col: usize) -> CliResult<f64> {
        let (line, cells) = &self.rows[row];
        let cell = &cells[col];
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(CliError::validation(format!(
                "line {line}, column '{}': '{cell}' is not a finite number",
                self.headers[col]
            ))),
        }
    }

    /// Numeric matrix of the given columns.
    pub fn matrix(&self, cols: &[usize]) -> CliResult<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.rows.len(), cols.len());
        for i in 0..self.rows.len() {
            for (k, &c) in cols.iter().enumerate() {
                m[(i, k)] = self.number(i, c)?;
            }
        }
        Ok(m)
    }
}

/// Builds trial data from the designated response and treatment columns; all
/// other columns are biomarkers.
pub fn trial_from_csv(raw: &RawCsv, response: &str, treatment: &str) -> CliResult<TrialData> {
    let rc = raw.column(response)?;
    let tc = raw.column(treatment)?;
    if rc == tc {
        return Err(CliError::validation("response and treatment must be different columns"));
    }
    let bio: Vec<usize> = (0..raw.headers.len()).filter(|&j| j != rc && j != tc).collect();
    if bio.is_empty() {
        return Err(CliError::validation("no biomarker columns"));
    }
    let arms = treatment_labels(raw, tc)?;
    let y = DVector::from_iterator(
        raw.rows.len(),
        (0..raw.rows.len()).map(|i| raw.number(i, rc)).collect::<CliResult<Vec<_>>>()?,
    );
    let x = raw.matrix(&bio)?;
    let names = bio.iter().map(|&j| raw.headers[j].clone()).collect();
    Ok(TrialData::new(y, arms, x, names)?)
}

/// Treatment labels of every row; each arm needs at least 2 patients.
pub fn treatment_labels(raw: &RawCsv, tc: usize) -> CliResult<Vec<u8>> {
    let mut arms = Vec::with_capacity(raw.rows.len());
    for (i, (line, cells)) in raw.rows.iter().enumerate() {
        let t = &cells[tc];
        let arm = match t.parse::<f64>() {
            Ok(v) if v == 1.0 => 1u8,
            Ok(v) if v == 2.0 => 2u8,
            _ => {
                return Err(CliError::validation(format!(
                    "line {line} (data row {}): treatment value '{t}' is not 1 or 2",
                    i + 1
                )))
            }
        };
        arms.push(arm);
    }
    for arm in [1u8, 2] {
        let count = arms.iter().filter(|&&a| a == arm).count();
        if count < 2 {
            return Err(CliError::validation(format!(
                "treatment arm {arm} has {count} patient(s); at least 2 are required"
            )));
        }
    }
    Ok(arms)
}

/// Indices of the `count` highest-variance columns, in their original order.
/// Ties go to the earlier column.
pub fn top_variance_columns(x: &DMatrix<f64>, count: usize) -> Vec<usize> {
    let p = x.ncols();
    if count >= p {
        return (0..p).collect();
    }
    let var: Vec<f64> = (0..p).map(|j| x.column(j).variance()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| var[b].total_cmp(&var[a]));
    let mut keep = order[..count].to_vec();
    keep.sort_unstable();
    keep
}

/// Replaces a zero-variance column index by the biomarker name.
pub fn name_columns(err: pplasso::Error, names: &[String]) -> CliError {
    match err {
        pplasso::Error::ZeroVariance { column } if column < names.len() => {
            CliError::validation(format!("biomarker '{}' has zero variance", names[column]))
        }
        e => e.into(),
    }
}

/// Reads a correlation matrix whose header names the biomarkers, and reorders
/// it to match `names`.
pub fn read_oracle_sigma(path: &Path, names: &[String], floor_ratio: f64) -> CliResult<CovarianceModel> {
    let raw = RawCsv::open(path)?;
    let p = raw.headers.len();
    if raw.rows.len() != p {
        return Err(CliError::validation(format!(
            "{}: correlation matrix must be square, got {} rows for {p} columns",
            path.display(),
            raw.rows.len()
        )));
    }
    let full = raw.matrix(&(0..p).collect::<Vec<_>>())?;
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            raw.column(n).map_err(|_| {
                CliError::validation(format!("{}: biomarker '{n}' is missing", path.display()))
            })
        })
        .collect::<CliResult<_>>()?;
    let sigma = full.select_rows(&idx).select_columns(&idx);
    let mut model = pplasso::covariance::symmetric_roots(&sigma, floor_ratio)?;
    model.estimator_tag = "oracle".into();
    Ok(model)
}
