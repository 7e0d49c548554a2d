//! Trial data and the two design-matrix layouts.
//!
//! Columns of both layouts are `[arm-1 indicator, arm-2 indicator, first
//! biomarker block (p), second biomarker block (p)]`.
//!
//! * [`Layout::Block`]: arm-1 rows carry their biomarkers in the first block
//!   and zeros in the second, arm-2 rows the other way round. Coefficients are
//!   `(α₁, α₂, β₁, β₂)`.
//! * [`Layout::Star`]: every row carries its biomarkers in the first block and
//!   arm-2 rows repeat them in the second. Coefficients are
//!   `(α₁, α₂, β₁, β₂ − β₁)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrialData {
    response: DVector<f64>,
    treatment: Vec<u8>,
    biomarkers: DMatrix<f64>,
    names: Vec<String>,
    n1: usize,
    /// Position of each (reordered) row in the caller's input.
    source_rows: Vec<usize>,
}

impl TrialData {
    /// Validates and stores trial data. Rows are stably reordered so that all
    /// arm-1 patients come first.
    pub fn new(
        response: DVector<f64>,
        treatment: Vec<u8>,
        biomarkers: DMatrix<f64>,
        names: Vec<String>,
    ) -> Result<Self> {
        let n = response.len();
        if treatment.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: treatment.len() });
        }
        if biomarkers.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: biomarkers.nrows() });
        }
        if names.len() != biomarkers.ncols() {
            return Err(Error::DimensionMismatch {
                expected: biomarkers.ncols(),
                found: names.len(),
            });
        }
        if let Some(row) = treatment.iter().position(|&t| t != 1 && t != 2) {
            return Err(Error::InvalidInput(format!(
                "treatment label {} in row {row} is not 1 or 2",
                treatment[row]
            )));
        }
        if let Some(row) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("response in row {row} is not finite")));
        }
        if let Some(idx) = biomarkers.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "biomarker value at row {}, column {} is not finite",
                idx % n,
                idx / n
            )));
        }

        let mut order: Vec<usize> = (0..n).filter(|&i| treatment[i] == 1).collect();
        let n1 = order.len();
        order.extend((0..n).filter(|&i| treatment[i] == 2));
        if n1 == 0 || n1 == n {
            return Err(Error::InvalidInput("both treatment arms need at least one patient".into()));
        }

        let response = DVector::from_iterator(n, order.iter().map(|&i| response[i]));
        let biomarkers = biomarkers.select_rows(&order);
        let treatment = order.iter().map(|&i| treatment[i]).collect();
        Ok(TrialData { response, treatment, biomarkers, names, n1, source_rows: order })
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n() - self.n1
    }

    pub fn p(&self) -> usize {
        self.biomarkers.ncols()
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    pub fn biomarkers(&self) -> &DMatrix<f64> {
        &self.biomarkers
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    /// Biomarker rows of one arm (`1` or `2`).
    pub fn arm_biomarkers(&self, arm: u8) -> DMatrix<f64> {
        let (start, len) = self.arm_range(arm);
        self.biomarkers.rows(start, len).into_owned()
    }

    pub fn arm_response(&self, arm: u8) -> DVector<f64> {
        let (start, len) = self.arm_range(arm);
        self.response.rows(start, len).into_owned()
    }

    fn arm_range(&self, arm: u8) -> (usize, usize) {
        match arm {
            1 => (0, self.n1),
            2 => (self.n1, self.n2()),
            _ => panic!("arm must be 1 or 2, got {arm}"),
        }
    }

    /// Biomarker columns centered within each arm, stacked. This is the input
    /// used for correlation estimation, so arm-level shifts do not leak into
    /// the correlation estimate.
    pub fn arm_centered_biomarkers(&self) -> DMatrix<f64> {
        let mut x = self.biomarkers.clone();
        for (start, len) in [self.arm_range(1), self.arm_range(2)] {
            for j in 0..x.ncols() {
                let mut block = x.view_mut((start, j), (len, 1));
                let mean = block.mean();
                block.add_scalar_mut(-mean);
            }
        }
        x
    }

    /// Copy with every biomarker column scaled to pooled mean 0 and sample
    /// variance 1.
    pub fn standardized(&self) -> Result<Self> {
        let n = self.n();
        if n < 2 {
            return Err(Error::InvalidInput("need at least two patients".into()));
        }
        let mut x = self.biomarkers.clone();
        for j in 0..x.ncols() {
            let mut col = x.column_mut(j);
            let mean = col.mean();
            col.add_scalar_mut(-mean);
            let var = col.norm_squared() / (n - 1) as f64;
            if !(var > 0.0) || var.sqrt() <= 1e-12 * (1.0 + mean.abs()) {
                return Err(Error::ZeroVariance { column: j });
            }
            col.scale_mut(1.0 / var.sqrt());
        }
        Ok(TrialData { biomarkers: x, ..self.clone() })
    }

    /// Restricts to a subset of biomarker columns, in the given order.
    pub fn select_biomarkers(&self, columns: &[usize]) -> Self {
        TrialData {
            biomarkers: self.biomarkers.select_columns(columns),
            names: columns.iter().map(|&j| self.names[j].clone()).collect(),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Block,
    Star,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    pub matrix: DMatrix<f64>,
    pub layout: Layout,
    pub n1: usize,
    pub p: usize,
}

impl DesignMatrix {
    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn build_design(data: &TrialData, layout: Layout) -> DesignMatrix {
    let (n, n1, p) = (data.n(), data.n1(), data.p());
    let x = data.biomarkers();
    let mut m = DMatrix::zeros(n, 2 * p + 2);
    for i in 0..n {
        let arm2 = i >= n1;
        m[(i, usize::from(arm2))] = 1.0;
        for j in 0..p {
            let v = x[(i, j)];
            match (layout, arm2) {
                (Layout::Block, false) | (Layout::Star, false) => m[(i, 2 + j)] = v,
                (Layout::Block, true) => m[(i, 2 + p + j)] = v,
                (Layout::Star, true) => {
                    m[(i, 2 + j)] = v;
                    m[(i, 2 + p + j)] = v;
                }
            }
        }
    }
    DesignMatrix { matrix: m, layout, n1, p }
}

/// Converts star coefficients `(α₁, α₂, β₁, β₂ − β₁)` to block coefficients
/// `(α₁, α₂, β₁, β₂)`.
pub fn star_to_block(theta: &DVector<f64>, p: usize) -> DVector<f64> {
    let mut out = theta.clone();
    for j in 0..p {
        out[2 + p + j] = theta[2 + j] + theta[2 + p + j];
    }
    out
}

pub fn block_to_star(gamma: &DVector<f64>, p: usize) -> DVector<f64> {
    let mut out = gamma.clone();
    for j in 0..p {
        out[2 + p + j] = gamma[2 + p + j] - gamma[2 + j];
    }
    out
}
