//! Correlation estimation for the p ≫ n regime.
//!
//! Every estimator works on the correlation scale and returns a symmetric
//! matrix with unit diagonal. [`cv_select`] picks among candidates by held-out
//! Frobenius risk and [`symmetric_roots`] produces the whitening factors.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::parallel::Execution;

pub const DEFAULT_FLOOR_RATIO: f64 = 1e-8;
pub const DEFAULT_FOLDS: usize = 5;

/// A correlation matrix together with its symmetric square root and inverse
/// square root.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceModel {
    pub sigma: DMatrix<f64>,
    pub sqrt: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    pub estimator_tag: String,
    /// Number of eigenvalues raised to the floor.
    pub floored: usize,
}

impl CovarianceModel {
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn identity(p: usize) -> Self {
        CovarianceModel {
            sigma: DMatrix::identity(p, p),
            sqrt: DMatrix::identity(p, p),
            inv_sqrt: DMatrix::identity(p, p),
            estimator_tag: "identity".into(),
            floored: 0,
        }
    }

    /// `sqrt · sqrt`, the matrix actually used after eigenvalue flooring.
    pub fn effective_sigma(&self) -> DMatrix<f64> {
        &self.sqrt * &self.sqrt
    }
}

/// Eigen-decomposes `sigma`, floors eigenvalues below `floor_ratio · max`, and
/// forms `Σ^{1/2}` and `Σ^{-1/2}`.
pub fn symmetric_roots(sigma: &DMatrix<f64>, floor_ratio: f64) -> Result<CovarianceModel> {
    if !sigma.is_square() {
        return Err(Error::DimensionMismatch { expected: sigma.nrows(), found: sigma.ncols() });
    }
    if !(floor_ratio > 0.0 && floor_ratio < 1.0) {
        return Err(Error::InvalidInput(format!("floor ratio must lie in (0, 1), got {floor_ratio}")));
    }
    let asym = linalg::max_asymmetry(sigma);
    if asym > 1e-8 {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let mut sym = sigma.clone();
    linalg::symmetrize(&mut sym);
    let (values, vectors) = linalg::symmetric_eigen(&sym);
    let top = values.max();
    if !(top > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let floor = floor_ratio * top;
    let floored = values.iter().filter(|&&d| d < floor).count();
    let values = values.map(|d| d.max(floor));
    let sqrt = linalg::spectral_apply(&values, &vectors, f64::sqrt);
    let inv_sqrt = linalg::spectral_apply(&values, &vectors, |d| 1.0 / d.sqrt());
    Ok(CovarianceModel { sigma: sym, sqrt, inv_sqrt, estimator_tag: "given".into(), floored })
}

/// Pearson correlation of the columns of `data`.
pub fn sample_correlation(data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 rows, got {n}")));
    }
    let mut z = data.clone();
    for j in 0..p {
        let mut col = z.column_mut(j);
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        if !(norm > 1e-12 * (1.0 + mean.abs()) * (n as f64).sqrt()) {
            return Err(Error::ZeroVariance { column: j });
        }
        col.scale_mut(1.0 / norm);
    }
    let mut r = z.transpose() * &z;
    linalg::symmetrize(&mut r);
    for j in 0..p {
        r[(j, j)] = 1.0;
    }
    r.apply(|v| *v = v.clamp(-1.0, 1.0));
    Ok(r)
}

/// Columns scaled to mean 0 and unit (1/n) variance.
fn standardize(data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = data.nrows() as f64;
    let mut z = data.clone();
    for j in 0..z.ncols() {
        let mut col = z.column_mut(j);
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / n).sqrt();
        if !(sd > 0.0) {
            return Err(Error::ZeroVariance { column: j });
        }
        col.scale_mut(1.0 / sd);
    }
    Ok(z)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EstimatorCandidate {
    /// Pearson correlation.
    Sample,
    /// Shrinkage toward the identity with analytic (Ledoit–Wolf) intensity.
    LinearShrinkLw,
    /// Shrinkage toward the equicorrelation matrix with the mean off-diagonal
    /// sample correlation.
    DenseLinearShrink,
    /// Off-diagonal entries with `|r| < gamma` set to zero.
    HardThreshold { gamma: f64 },
    /// Top-`k` principal part plus hard-thresholded (at `lambda`) residual.
    Poet { k: usize, lambda: f64 },
}

impl EstimatorCandidate {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorCandidate::Sample => "sample",
            EstimatorCandidate::LinearShrinkLw => "linear_shrink_lw",
            EstimatorCandidate::DenseLinearShrink => "dense_linear_shrink",
            EstimatorCandidate::HardThreshold { .. } => "threshold",
            EstimatorCandidate::Poet { .. } => "poet",
        }
    }

    pub fn hyperparameters(&self) -> Vec<(&'static str, f64)> {
        match *self {
            EstimatorCandidate::HardThreshold { gamma } => vec![("gamma", gamma)],
            EstimatorCandidate::Poet { k, lambda } => vec![("lambda", lambda), ("k", k as f64)],
            _ => Vec::new(),
        }
    }

    /// Checks hyperparameter ranges for data with `n` rows and `p` columns.
    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        match *self {
            EstimatorCandidate::HardThreshold { gamma } if !(0.0..=1.0).contains(&gamma) => Err(
                Error::InvalidHyperparameter(format!("threshold gamma must lie in [0, 1], got {gamma}")),
            ),
            EstimatorCandidate::Poet { k, lambda } => {
                if k < 1 || k >= n.min(p) {
                    Err(Error::InvalidHyperparameter(format!(
                        "poet factor count must satisfy 1 <= k < min(n, p) = {}, got {k}",
                        n.min(p)
                    )))
                } else if !(lambda >= 0.0) {
                    Err(Error::InvalidHyperparameter(format!("poet lambda must be >= 0, got {lambda}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Parses `sample`, `lw`, `dense`, `threshold:<gamma>` or
    /// `poet:<k>:<lambda>`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.trim().split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidHyperparameter(format!("'{s}' is not a number in '{text}'")))
        };
        match parts.as_slice() {
            ["sample"] => Ok(EstimatorCandidate::Sample),
            ["lw"] | ["linear_shrink_lw"] => Ok(EstimatorCandidate::LinearShrinkLw),
            ["dense"] | ["dense_linear_shrink"] => Ok(EstimatorCandidate::DenseLinearShrink),
            ["threshold", g] => Ok(EstimatorCandidate::HardThreshold { gamma: num(g)? }),
            ["poet", k, l] => {
                let k = k
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidHyperparameter(format!("'{k}' is not a factor count")))?;
                Ok(EstimatorCandidate::Poet { k, lambda: num(l)? })
            }
            _ => Err(Error::InvalidHyperparameter(format!("unknown estimator '{text}'"))),
        }
    }
}

impl fmt::Display for EstimatorCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        for (k, v) in self.hyperparameters() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// The candidate grid mirrored from the usual comparison table: sample,
/// both linear shrinkages, thresholding at 0.2 and 0.4, POET with k ∈ {1, 2}
/// and λ ∈ {0.1, 0.2}.
pub fn default_candidates() -> Vec<EstimatorCandidate> {
    use EstimatorCandidate::*;
    vec![
        Sample,
        LinearShrinkLw,
        DenseLinearShrink,
        HardThreshold { gamma: 0.2 },
        HardThreshold { gamma: 0.4 },
        Poet { k: 1, lambda: 0.1 },
        Poet { k: 1, lambda: 0.2 },
        Poet { k: 2, lambda: 0.1 },
        Poet { k: 2, lambda: 0.2 },
    ]
}

/// `(1 − ρ) r + ρ target`.
pub fn shrink_toward(r: &DMatrix<f64>, target: &DMatrix<f64>, intensity: f64) -> DMatrix<f64> {
    r * (1.0 - intensity) + target * intensity
}

/// Sum over rows of `‖zᵢ zᵢᵀ − R‖²_F`, divided by n². This is the estimated
/// variance of the sample correlation entries that drives analytic shrinkage.
fn entry_variance(z: &DMatrix<f64>, r: &DMatrix<f64>) -> f64 {
    let n = z.nrows();
    // ‖zzᵀ − R‖² = ‖z‖⁴ − 2 zᵀRz + ‖R‖²
    let r_norm2 = r.norm_squared();
    let zr = z * r;
    let mut total = 0.0;
    for i in 0..n {
        let row = z.row(i);
        let sq = row.norm_squared();
        let quad = row.dot(&zr.row(i));
        total += sq * sq - 2.0 * quad + r_norm2;
    }
    total / (n as f64 * n as f64)
}

pub fn ledoit_wolf_intensity(data: &DMatrix<f64>) -> Result<f64> {
    let z = standardize(data)?;
    let n = z.nrows() as f64;
    let r = z.transpose() * &z / n;
    let p = r.nrows();
    let target = DMatrix::identity(p, p);
    let dist = (&r - target).norm_squared();
    if dist <= 0.0 {
        return Ok(0.0);
    }
    Ok((entry_variance(&z, &r) / dist).clamp(0.0, 1.0))
}

pub fn dense_target(r: &DMatrix<f64>) -> DMatrix<f64> {
    let p = r.nrows();
    let mean_off = if p > 1 {
        (r.sum() - r.trace()) / (p * (p - 1)) as f64
    } else {
        0.0
    };
    DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { mean_off })
}

pub fn dense_shrink_intensity(data: &DMatrix<f64>) -> Result<f64> {
    let z = standardize(data)?;
    let n = z.nrows() as f64;
    let r = z.transpose() * &z / n;
    let target = dense_target(&r);
    let dist = (&r - target).norm_squared();
    if dist <= 0.0 {
        return Ok(0.0);
    }
    Ok((entry_variance(&z, &r) / dist).clamp(0.0, 1.0))
}

fn hard_threshold(r: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let mut out = r.clone();
    let p = r.nrows();
    for j in 0..p {
        for i in 0..p {
            if i != j && out[(i, j)].abs() < gamma {
                out[(i, j)] = 0.0;
            }
        }
    }
    out
}

fn poet(r: &DMatrix<f64>, k: usize, lambda: f64) -> DMatrix<f64> {
    let (values, vectors) = linalg::symmetric_eigen(r);
    let p = r.nrows();
    let mut low_rank = DMatrix::zeros(p, p);
    for idx in (p - k)..p {
        let u = vectors.column(idx);
        low_rank += values[idx] * &u * u.transpose();
    }
    let residual = r - &low_rank;
    let mut out = low_rank + hard_threshold(&residual, lambda);
    linalg::symmetrize(&mut out);
    for j in 0..p {
        out[(j, j)] = 1.0;
    }
    out
}

/// Applies one estimator to `data` (rows are observations).
pub fn estimate(candidate: &EstimatorCandidate, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 rows, got {n}")));
    }
    candidate.validate(n, p)?;
    let r = sample_correlation(data)?;
    Ok(match *candidate {
        EstimatorCandidate::Sample => r,
        EstimatorCandidate::LinearShrinkLw => {
            let rho = ledoit_wolf_intensity(data)?;
            shrink_toward(&r, &DMatrix::identity(p, p), rho)
        }
        EstimatorCandidate::DenseLinearShrink => {
            let rho = dense_shrink_intensity(data)?;
            shrink_toward(&r, &dense_target(&r), rho)
        }
        EstimatorCandidate::HardThreshold { gamma } => hard_threshold(&r, gamma),
        EstimatorCandidate::Poet { k, lambda } => poet(&r, k, lambda),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiskEntry {
    pub candidate: EstimatorCandidate,
    pub risk: f64,
}

/// Fold index of every row, shuffled deterministically from `seed`.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    for (pos, r) in rows.into_iter().enumerate() {
        fold_of[r] = pos * folds / n;
    }
    fold_of
}

/// Cross-validated estimator choice.
///
/// The risk of a candidate is the mean over folds of
/// `‖estimate(train) − sample_correlation(validation)‖²_F`. Returns the
/// winner and the risk table sorted ascending; ties keep the input order, so
/// the first-listed of equally good candidates wins.
pub fn cv_select(
    candidates: &[EstimatorCandidate],
    data: &DMatrix<f64>,
    folds: usize,
    seed: u64,
    exec: Execution,
) -> Result<(EstimatorCandidate, Vec<RiskEntry>)> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let n = data.nrows();
    if folds < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    if n < 2 * folds {
        return Err(Error::InvalidInput(format!(
            "{n} rows are too few for {folds} folds of at least 2 rows"
        )));
    }
    let fold_of = fold_assignment(n, folds, seed);
    let splits: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..folds)
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
            let valid: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
            (data.select_rows(&train), data.select_rows(&valid))
        })
        .collect();
    let targets: Vec<DMatrix<f64>> = splits
        .iter()
        .map(|(_, v)| sample_correlation(v))
        .collect::<Result<_>>()?;

    let risks: Vec<Result<f64>> = exec.map(candidates.len(), |c| {
        let mut total = 0.0;
        for ((train, _), target) in splits.iter().zip(&targets) {
            let est = estimate(&candidates[c], train)?;
            total += (est - target).norm_squared();
        }
        Ok(total / folds as f64)
    });

    let mut table = Vec::with_capacity(candidates.len());
    for (candidate, risk) in candidates.iter().zip(risks) {
        table.push(RiskEntry { candidate: *candidate, risk: risk? });
    }
    table.sort_by(|a, b| a.risk.total_cmp(&b.risk));
    Ok((table[0].candidate, table))
}

/// Chooses an estimator by cross-validation, applies it to all of `data`, and
/// returns its roots.
pub fn estimate_model(
    candidates: &[EstimatorCandidate],
    data: &DMatrix<f64>,
    seed: u64,
    floor_ratio: f64,
    exec: Execution,
) -> Result<(CovarianceModel, Vec<RiskEntry>)> {
    let (best, table) = if candidates.len() == 1 {
        (candidates[0], Vec::new())
    } else {
        cv_select(candidates, data, DEFAULT_FOLDS, seed, exec)?
    };
    let sigma = estimate(&best, data)?;
    let mut model = symmetric_roots(&sigma, floor_ratio)?;
    model.estimator_tag = best.to_string();
    Ok((model, table))
}

/// Whitened copy `x Σ^{-1/2}` of a data matrix.
pub fn whiten(x: &DMatrix<f64>, model: &CovarianceModel) -> Result<DMatrix<f64>> {
    if x.ncols() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: x.ncols() });
    }
    Ok(x * &model.inv_sqrt)
}

/// Squared Frobenius distance, used in risk tables and tests.
pub fn frobenius_sq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm_squared()
}

pub fn spectrum(m: &DMatrix<f64>) -> DVector<f64> {
    linalg::symmetric_eigen(m).0
}
