//! Weighted ℓ₁/ℓ₂ penalized least squares by cyclic coordinate descent.
//!
//! Every solver here minimizes
//!
//! ```text
//! ½‖y − Aγ‖² + Σⱼ l1ⱼ |γⱼ| + ½ Σⱼ l2ⱼ γⱼ²
//! ```
//!
//! on the raw (not 1/n-scaled) loss. Coordinates with `l1ⱼ = l2ⱼ = 0` are
//! unpenalized; the two treatment intercepts are always set up that way.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::design::{DesignMatrix, Layout};
use crate::error::{Error, Result};
use crate::linalg;

/// Ratio between the smallest and the largest value of a penalty grid.
pub const GRID_FLOOR_RATIO: f64 = 1e-3;
pub const DEFAULT_GRID_SIZE: usize = 100;
/// Absolute cap on adaptive-Lasso weights.
pub const ADAPTIVE_WEIGHT_CAP: f64 = 1e6;
/// Ridge penalty of the adaptive-Lasso initial fit, relative to the Lasso λ_max.
pub const ADAPTIVE_RIDGE_RATIO: f64 = 1e-3;
/// Active-set sweeps before trying an exact solve on the active set.
const POLISH_AFTER: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdSettings {
    /// Stop once no coordinate moved by more than this in a full sweep.
    pub tol: f64,
    /// Maximum number of sweeps (full and active-set sweeps both count).
    pub max_iter: usize,
}

impl Default for CdSettings {
    fn default() -> Self {
        CdSettings { tol: 1e-7, max_iter: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdOutcome {
    pub coefficients: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Per-coordinate penalties of the split-penalty problem on a
/// `2 + 2p`-column design.
#[derive(Clone, Debug, PartialEq)]
pub struct PenaltySpec {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Absolute ℓ₁ weight of each coordinate: `0, 0, λ₁ (p times), λ₂ (p times)`.
    pub penalty_factor: DVector<f64>,
}

impl PenaltySpec {
    pub fn split(p: usize, lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "penalties must be nonnegative, got λ₁={lambda1}, λ₂={lambda2}"
            )));
        }
        let mut pf = DVector::zeros(2 * p + 2);
        pf.rows_mut(2, p).fill(lambda1);
        pf.rows_mut(2 + p, p).fill(lambda2);
        Ok(PenaltySpec { lambda1, lambda2, penalty_factor: pf })
    }
}

/// Relative penalty factors for a two-block design: intercepts free, first
/// block 1, second block `ratio`.
pub fn split_factors(p: usize, ratio: f64) -> Vec<f64> {
    let mut pf = vec![0.0; 2 * p + 2];
    pf[2..2 + p].fill(1.0);
    pf[2 + p..].fill(ratio);
    pf
}

/// Cyclic coordinate-descent state over one design matrix.
///
/// Keeps the residual `y − Aγ` up to date so each coordinate update costs one
/// pass over a column. Penalties may be changed between runs, which is how
/// warm-started paths are computed.
pub struct CoordinateDescent<'a> {
    design: &'a DMatrix<f64>,
    col_sq: Vec<f64>,
    coef: Vec<f64>,
    resid: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl<'a> CoordinateDescent<'a> {
    pub fn new(design: &'a DMatrix<f64>, response: &DVector<f64>, start: &DVector<f64>) -> Self {
        let m = design.ncols();
        assert_eq!(design.nrows(), response.len(), "design and response row counts differ");
        assert_eq!(start.len(), m, "start vector length differs from column count");
        let col_sq = design.column_iter().map(|c| c.norm_squared()).collect();
        let resid = (response - design * start).as_slice().to_vec();
        CoordinateDescent {
            design,
            col_sq,
            coef: start.as_slice().to_vec(),
            resid,
            l1: vec![0.0; m],
            l2: vec![0.0; m],
        }
    }

    pub fn set_penalty(&mut self, l1: &[f64], l2: &[f64]) {
        assert_eq!(l1.len(), self.coef.len());
        assert_eq!(l2.len(), self.coef.len());
        self.l1.copy_from_slice(l1);
        self.l2.copy_from_slice(l2);
    }

    pub fn coefficients(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coef)
    }

    pub fn objective(&self) -> f64 {
        let loss = 0.5 * self.resid.iter().map(|r| r * r).sum::<f64>();
        let pen: f64 = self
            .coef
            .iter()
            .zip(self.l1.iter().zip(&self.l2))
            .map(|(&g, (&a, &b))| a * g.abs() + 0.5 * b * g * g)
            .sum();
        loss + pen
    }

    #[inline]
    fn update(&mut self, j: usize) -> f64 {
        let cs = self.col_sq[j];
        if cs == 0.0 {
            return 0.0;
        }
        let n = self.resid.len();
        let col = &self.design.as_slice()[j * n..(j + 1) * n];
        let old = self.coef[j];
        let grad: f64 = col.iter().zip(&self.resid).map(|(a, r)| a * r).sum();
        let z = grad + cs * old;
        let new = soft_threshold(z, self.l1[j]) / (cs + self.l2[j]);
        let delta = new - old;
        if delta != 0.0 {
            for (r, a) in self.resid.iter_mut().zip(col) {
                *r -= delta * a;
            }
            self.coef[j] = new;
        }
        delta.abs()
    }

    /// One pass over every coordinate; returns the largest coefficient change.
    pub fn sweep(&mut self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.coef.len() {
            worst = worst.max(self.update(j));
        }
        worst
    }

    fn sweep_active(&mut self, active: &[usize]) -> f64 {
        let mut worst = 0.0f64;
        for &j in active {
            worst = worst.max(self.update(j));
        }
        worst
    }

    /// Moves toward the exact minimizer on the current active set and sign
    /// pattern. If a coefficient would change sign the step stops where it
    /// hits zero, that coordinate leaves the set and the solve is repeated.
    /// The objective is a convex quadratic along each step, so it never
    /// increases.
    fn polish(&mut self, active: &[usize]) {
        let mut set: Vec<usize> = active.iter().copied().filter(|&j| self.coef[j] != 0.0).collect();
        while !set.is_empty() {
            if set.len() > self.resid.len() && set.iter().all(|&j| self.l2[j] == 0.0) {
                return;
            }
            let a = self.design.select_columns(&set);
            let old = DVector::from_iterator(set.len(), set.iter().map(|&j| self.coef[j]));
            let r = DVector::from_column_slice(&self.resid);
            let gram = a.transpose() * &a;
            let mut rhs = a.transpose() * r + &gram * &old;
            let mut lhs = gram;
            for (k, &j) in set.iter().enumerate() {
                lhs[(k, k)] += self.l2[j];
                rhs[k] -= self.l1[j] * old[k].signum();
            }
            let Some(chol) = lhs.cholesky() else { return };
            let target = chol.solve(&rhs);
            if target.iter().any(|v| !v.is_finite()) {
                return;
            }
            let mut t = 1.0;
            let mut hit = None;
            for k in 0..set.len() {
                if target[k].signum() != old[k].signum() || target[k] == 0.0 {
                    let tk = old[k] / (old[k] - target[k]);
                    if tk < t {
                        t = tk;
                        hit = Some(k);
                    }
                }
            }
            let mut next = &old + (&target - &old) * t;
            if let Some(k) = hit {
                next[k] = 0.0;
            }
            let step = a * (&next - &old);
            for (r, s) in self.resid.iter_mut().zip(step.iter()) {
                *r -= s;
            }
            for (k, &j) in set.iter().enumerate() {
                self.coef[j] = next[k];
            }
            match hit {
                None => return,
                Some(k) => {
                    set.remove(k);
                }
            }
        }
    }

    /// Runs full sweeps, each followed by active-set sweeps until the active
    /// coordinates settle, until a full sweep moves nothing by more than `tol`.
    pub fn run(&mut self, settings: CdSettings) -> (bool, usize) {
        let mut iterations = 0;
        let mut active = Vec::new();
        while iterations < settings.max_iter {
            let change = self.sweep();
            iterations += 1;
            if change < settings.tol {
                return (true, iterations);
            }
            active.clear();
            active.extend((0..self.coef.len()).filter(|&j| self.coef[j] != 0.0));
            let mut inner = 0;
            while iterations < settings.max_iter {
                let change = self.sweep_active(&active);
                iterations += 1;
                inner += 1;
                if change < settings.tol {
                    break;
                }
                if inner % POLISH_AFTER == 0 {
                    self.polish(&active);
                }
            }
        }
        (false, iterations)
    }
}

#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Weighted Lasso / elastic-net solve with explicit per-coordinate penalties.
pub fn solve_weighted(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    l1: &[f64],
    l2: &[f64],
    start: &DVector<f64>,
    settings: CdSettings,
) -> CdOutcome {
    let mut cd = CoordinateDescent::new(design, response, start);
    cd.set_penalty(l1, l2);
    let (converged, iterations) = cd.run(settings);
    CdOutcome { coefficients: cd.coefficients(), converged, iterations }
}

/// Lasso with absolute per-coordinate penalties from `penalty`.
pub fn coordinate_descent(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    penalty: &PenaltySpec,
    start: &DVector<f64>,
    settings: CdSettings,
) -> Result<CdOutcome> {
    check_dims(design, response, penalty.penalty_factor.len())?;
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let zeros = vec![0.0; design.ncols()];
    Ok(solve_weighted(design, response, penalty.penalty_factor.as_slice(), &zeros, start, settings))
}

fn check_dims(design: &DMatrix<f64>, response: &DVector<f64>, factors: usize) -> Result<()> {
    if design.nrows() != response.len() {
        return Err(Error::DimensionMismatch { expected: design.nrows(), found: response.len() });
    }
    if design.ncols() != factors {
        return Err(Error::DimensionMismatch { expected: design.ncols(), found: factors });
    }
    Ok(())
}

/// Largest KKT violation of a Lasso solution with absolute penalties `l1`.
pub fn kkt_violation(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    coef: &DVector<f64>,
    l1: &[f64],
) -> f64 {
    let grad = design.transpose() * (response - design * coef);
    (0..coef.len())
        .map(|j| {
            if coef[j] == 0.0 {
                (grad[j].abs() - l1[j]).max(0.0)
            } else {
                (grad[j] - l1[j] * coef[j].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Coefficients of the least-squares fit on the unpenalized columns alone,
/// embedded in a full-length vector.
fn unpenalized_fit(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    factors: &[f64],
) -> Result<DVector<f64>> {
    let free: Vec<usize> = (0..factors.len()).filter(|&j| factors[j] == 0.0).collect();
    let mut out = DVector::zeros(design.ncols());
    if free.is_empty() {
        return Ok(out);
    }
    let sub = design.select_columns(&free);
    let coef = linalg::least_squares(&sub, response)
        .ok_or_else(|| Error::Singular("unpenalized columns are collinear".into()))?;
    for (k, &j) in free.iter().enumerate() {
        out[j] = coef[k];
    }
    Ok(out)
}

/// Smallest λ for which every penalized coordinate is zero, for penalties
/// `l1ⱼ = λ·α·factorⱼ`, together with the corresponding (intercept-only)
/// solution.
pub fn lambda_max(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    factors: &[f64],
    alpha: f64,
) -> Result<(f64, DVector<f64>)> {
    check_dims(design, response, factors.len())?;
    let base = unpenalized_fit(design, response, factors)?;
    let resid = response - design * &base;
    let grad = design.transpose() * resid;
    let lmax = (0..factors.len())
        .filter(|&j| factors[j] > 0.0)
        .map(|j| grad[j].abs() / (alpha * factors[j]))
        .fold(0.0, f64::max);
    // Headroom for rounding differences between this residual and the one the
    // solver carries.
    Ok(((lmax * (1.0 + 1e-9)).max(f64::MIN_POSITIVE), base))
}

/// Log-spaced grid from `lmax` down to `lmax · GRID_FLOOR_RATIO`.
pub fn log_grid(lmax: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![lmax];
    }
    (0..size)
        .map(|k| lmax * GRID_FLOOR_RATIO.powf(k as f64 / (size - 1) as f64))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PenalizedFit {
    /// Decreasing penalty levels.
    pub lambda_grid: Vec<f64>,
    pub coefficients: Vec<DVector<f64>>,
    pub converged: Vec<bool>,
    pub iterations: Vec<usize>,
}

impl PenalizedFit {
    pub fn len(&self) -> usize {
        self.lambda_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_grid.is_empty()
    }
}

/// Warm-started path for penalties `l1ⱼ = λ α fⱼ`, `l2ⱼ = λ (1 − α) fⱼ` over
/// the given decreasing grid, or over a default grid from λ_max when `grid`
/// is `None`.
pub fn weighted_path(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    factors: &[f64],
    alpha: f64,
    grid: Option<Vec<f64>>,
    grid_size: usize,
    settings: CdSettings,
) -> Result<PenalizedFit> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("mixing alpha must lie in (0, 1], got {alpha}")));
    }
    if factors.iter().any(|&f| !(f >= 0.0)) {
        return Err(Error::InvalidInput("penalty factors must be nonnegative".into()));
    }
    let (lmax, start) = lambda_max(design, response, factors, alpha)?;
    let grid = match grid {
        Some(g) => g,
        None => {
            if grid_size < 1 {
                return Err(Error::InvalidInput("grid size must be at least 1".into()));
            }
            log_grid(lmax, grid_size)
        }
    };

    let mut cd = CoordinateDescent::new(design, response, &start);
    let mut fit = PenalizedFit {
        lambda_grid: grid.clone(),
        coefficients: Vec::with_capacity(grid.len()),
        converged: Vec::with_capacity(grid.len()),
        iterations: Vec::with_capacity(grid.len()),
    };
    let mut l1 = vec![0.0; factors.len()];
    let mut l2 = vec![0.0; factors.len()];
    for &lambda in &grid {
        for j in 0..factors.len() {
            l1[j] = lambda * alpha * factors[j];
            l2[j] = lambda * (1.0 - alpha) * factors[j];
        }
        cd.set_penalty(&l1, &l2);
        let (converged, iterations) = cd.run(settings);
        fit.coefficients.push(cd.coefficients());
        fit.converged.push(converged);
        fit.iterations.push(iterations);
    }
    Ok(fit)
}

/// Split-penalty Lasso path on a two-block design with `λ₂ = ratio · λ₁`.
///
/// The reported grid holds λ₁ values.
pub fn fit_path(
    design: &DesignMatrix,
    response: &DVector<f64>,
    penalty_ratio: f64,
    grid_size: usize,
) -> Result<PenalizedFit> {
    fit_path_with(design, response, penalty_ratio, grid_size, CdSettings::default())
}

pub fn fit_path_with(
    design: &DesignMatrix,
    response: &DVector<f64>,
    penalty_ratio: f64,
    grid_size: usize,
    settings: CdSettings,
) -> Result<PenalizedFit> {
    if grid_size < 2 {
        return Err(Error::InvalidInput(format!("grid size must be at least 2, got {grid_size}")));
    }
    if !(penalty_ratio > 0.0) {
        return Err(Error::InvalidInput(format!("penalty ratio must be positive, got {penalty_ratio}")));
    }
    let factors = split_factors(design.p, penalty_ratio);
    weighted_path(&design.matrix, response, &factors, 1.0, None, grid_size, settings)
}

/// Elastic net at one λ:
/// `½‖y − Aγ‖² + λ Σⱼ fⱼ (α|γⱼ| + (1 − α)/2 γⱼ²)`.
pub fn elastic_net(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    lambda: f64,
    alpha: f64,
    factors: &[f64],
    settings: CdSettings,
) -> Result<CdOutcome> {
    check_dims(design, response, factors.len())?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("mixing alpha must lie in (0, 1], got {alpha}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be nonnegative, got {lambda}")));
    }
    let l1: Vec<f64> = factors.iter().map(|f| lambda * alpha * f).collect();
    let l2: Vec<f64> = factors.iter().map(|f| lambda * (1.0 - alpha) * f).collect();
    let start = DVector::zeros(design.ncols());
    Ok(solve_weighted(design, response, &l1, &l2, &start, settings))
}

/// Adaptive weights `fⱼ / |initⱼ|^γ`, capped at [`ADAPTIVE_WEIGHT_CAP`] times
/// the factor. Unpenalized coordinates stay unpenalized.
pub fn adaptive_factors(factors: &[f64], initial: &DVector<f64>, gamma_w: f64) -> Vec<f64> {
    factors
        .iter()
        .zip(initial.iter())
        .map(|(&f, &g)| {
            if f == 0.0 {
                0.0
            } else {
                let w = 1.0 / g.abs().powf(gamma_w);
                f * w.min(ADAPTIVE_WEIGHT_CAP)
            }
        })
        .collect()
}

/// Initial ridge estimate used to build adaptive weights.
pub fn adaptive_initial(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    factors: &[f64],
) -> Result<DVector<f64>> {
    let (lmax, _) = lambda_max(design, response, factors, 1.0)?;
    linalg::ridge(design, response, ADAPTIVE_RIDGE_RATIO * lmax, factors)
}

/// Two-stage adaptive Lasso at one λ: ridge initial fit, then weighted Lasso.
pub fn adaptive_lasso(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    lambda: f64,
    gamma_w: f64,
    factors: &[f64],
    settings: CdSettings,
) -> Result<CdOutcome> {
    if !(gamma_w > 0.0) {
        return Err(Error::InvalidInput(format!("adaptive exponent must be positive, got {gamma_w}")));
    }
    let init = adaptive_initial(design, response, factors)?;
    let weighted = adaptive_factors(factors, &init, gamma_w);
    elastic_net(design, response, lambda, 1.0, &weighted, settings)
}

/// Adaptive-Lasso path over the default grid of the weighted problem.
pub fn adaptive_lasso_path(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    gamma_w: f64,
    factors: &[f64],
    grid_size: usize,
    settings: CdSettings,
) -> Result<PenalizedFit> {
    if !(gamma_w > 0.0) {
        return Err(Error::InvalidInput(format!("adaptive exponent must be positive, got {gamma_w}")));
    }
    let init = adaptive_initial(design, response, factors)?;
    let weighted = adaptive_factors(factors, &init, gamma_w);
    weighted_path(design, response, &weighted, 1.0, None, grid_size, settings)
}

/// λ chosen by K-fold cross-validation on prediction error.
#[derive(Clone, Debug, PartialEq)]
pub struct CvChoice {
    pub lambda: f64,
    pub index: usize,
    pub cv_error: Vec<f64>,
    pub fit: PenalizedFit,
}

/// K-fold cross-validation of a weighted path. Folds are assigned within each
/// arm so every training split keeps both intercept columns populated.
#[allow(clippy::too_many_arguments)]
pub fn cv_path(
    design: &DesignMatrix,
    response: &DVector<f64>,
    factors: &[f64],
    alpha: f64,
    grid_size: usize,
    folds: usize,
    seed: u64,
    settings: CdSettings,
) -> Result<CvChoice> {
    let n = response.len();
    if folds < 2 || n < 2 * folds {
        return Err(Error::InvalidInput(format!("cannot split {n} rows into {folds} folds")));
    }
    let full = weighted_path(&design.matrix, response, factors, alpha, None, grid_size, settings)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; n];
    for (start, end) in [(0, design.n1), (design.n1, n)] {
        let mut rows: Vec<usize> = (start..end).collect();
        rows.shuffle(&mut rng);
        for (k, r) in rows.into_iter().enumerate() {
            fold_of[r] = k % folds;
        }
    }
    let mut err = vec![0.0; full.len()];
    for f in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        let a_tr = design.matrix.select_rows(&train);
        let y_tr = DVector::from_iterator(train.len(), train.iter().map(|&i| response[i]));
        let a_te = design.matrix.select_rows(&test);
        let y_te = DVector::from_iterator(test.len(), test.iter().map(|&i| response[i]));
        let fit = weighted_path(
            &a_tr,
            &y_tr,
            factors,
            alpha,
            Some(full.lambda_grid.clone()),
            grid_size,
            settings,
        )?;
        for (k, coef) in fit.coefficients.iter().enumerate() {
            err[k] += (&y_te - &a_te * coef).norm_squared() / n as f64;
        }
    }
    let index = argmin_first(&err);
    Ok(CvChoice { lambda: full.lambda_grid[index], index, cv_error: err, fit: full })
}

pub(crate) fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Star-layout check used by callers that accept either layout.
pub(crate) fn require_star(design: &DesignMatrix) -> Result<()> {
    match design.layout {
        Layout::Star => Ok(()),
        Layout::Block => Err(Error::InvalidInput("expected the star design layout".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_problem(n: usize, m: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        (a, y)
    }

    #[test]
    fn unpenalized_limit_is_ols() {
        let (a, y) = random_problem(30, 6, 1);
        let pen = PenaltySpec { lambda1: 0.0, lambda2: 0.0, penalty_factor: DVector::zeros(6) };
        let out = coordinate_descent(&a, &y, &pen, &DVector::zeros(6), CdSettings { tol: 1e-12, max_iter: 100_000 })
            .unwrap();
        let ols = linalg::least_squares(&a, &y).unwrap();
        assert!(out.converged);
        assert!((out.coefficients - ols).amax() < 1e-6);
    }

    #[test]
    fn lambda_above_max_gives_zero() {
        let (a, y) = random_problem(20, 5, 2);
        let lmax = (a.transpose() * &y).amax();
        let pen = PenaltySpec { lambda1: lmax, lambda2: lmax, penalty_factor: DVector::from_element(5, lmax) };
        let out = coordinate_descent(&a, &y, &pen, &DVector::zeros(5), CdSettings::default()).unwrap();
        assert!(out.coefficients.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn objective_never_increases() {
        let (a, y) = random_problem(25, 12, 3);
        let mut cd = CoordinateDescent::new(&a, &y, &DVector::zeros(12));
        cd.set_penalty(&[0.8; 12], &[0.1; 12]);
        let mut last = cd.objective();
        for _ in 0..50 {
            cd.sweep();
            let now = cd.objective();
            assert!(now <= last + 1e-12, "{now} > {last}");
            last = now;
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let (a, y) = random_problem(20, 8, 4);
        let out = solve_weighted(&a, &y, &[0.01; 8], &[0.0; 8], &DVector::zeros(8), CdSettings { tol: 1e-300, max_iter: 3 });
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn split_penalty_layout() {
        let pen = PenaltySpec::split(2, 0.5, 1.5).unwrap();
        assert_eq!(pen.penalty_factor.as_slice(), &[0.0, 0.0, 0.5, 0.5, 1.5, 1.5]);
        assert!(PenaltySpec::split(2, -1.0, 1.0).is_err());
    }

    #[test]
    fn elastic_net_alpha_one_is_lasso() {
        let (a, y) = random_problem(30, 10, 5);
        let f = vec![1.0; 10];
        let en = elastic_net(&a, &y, 0.5, 1.0, &f, CdSettings::default()).unwrap();
        let pen = PenaltySpec { lambda1: 0.5, lambda2: 0.5, penalty_factor: DVector::from_element(10, 0.5) };
        let lasso = coordinate_descent(&a, &y, &pen, &DVector::zeros(10), CdSettings::default()).unwrap();
        assert!((en.coefficients - lasso.coefficients).amax() < 1e-8);
    }

    #[test]
    fn elastic_net_zero_lambda_is_ols() {
        let (a, y) = random_problem(30, 5, 6);
        let en = elastic_net(&a, &y, 0.0, 0.5, &[1.0; 5], CdSettings { tol: 1e-12, max_iter: 100_000 }).unwrap();
        let ols = linalg::least_squares(&a, &y).unwrap();
        assert!((en.coefficients - ols).amax() < 1e-6);
    }

    #[test]
    fn elastic_net_rejects_bad_alpha() {
        let (a, y) = random_problem(5, 2, 7);
        assert!(elastic_net(&a, &y, 1.0, 0.0, &[1.0; 2], CdSettings::default()).is_err());
        assert!(elastic_net(&a, &y, 1.0, 1.5, &[1.0; 2], CdSettings::default()).is_err());
    }

    #[test]
    fn constant_adaptive_weights_rescale_lambda() {
        let (a, y) = random_problem(30, 6, 8);
        let init = DVector::from_vec(vec![0.5, -0.5, 0.5, 0.5, -0.5, 0.5]);
        let weighted = adaptive_factors(&[1.0; 6], &init, 1.0);
        assert!(weighted.iter().all(|&w| (w - 2.0).abs() < 1e-15));
        let adaptive = elastic_net(&a, &y, 0.7, 1.0, &weighted, CdSettings::default()).unwrap();
        let uniform = elastic_net(&a, &y, 1.4, 1.0, &[1.0; 6], CdSettings::default()).unwrap();
        assert!((adaptive.coefficients - uniform.coefficients).amax() < 1e-10);
    }

    #[test]
    fn zero_initial_estimate_hits_cap() {
        let init = DVector::from_vec(vec![0.0, 1.0]);
        let w = adaptive_factors(&[1.0, 1.0], &init, 1.0);
        assert_eq!(w, vec![ADAPTIVE_WEIGHT_CAP, 1.0]);

        let (a, y) = random_problem(30, 2, 9);
        let out = elastic_net(&a, &y, 1.0, 1.0, &w, CdSettings::default()).unwrap();
        assert_eq!(out.coefficients[0], 0.0);
    }

    #[test]
    fn path_shape_and_lambda_max() {
        let (x, y) = random_problem(30, 8, 10);
        let mut a = DMatrix::zeros(30, 10);
        for i in 0..30 {
            a[(i, usize::from(i >= 15))] = 1.0;
        }
        a.view_mut((0, 2), (30, 8)).copy_from(&x);
        let design = DesignMatrix { matrix: a, layout: Layout::Star, n1: 15, p: 4 };
        let fit = fit_path(&design, &y, 1.0, 2).unwrap();
        assert_eq!(fit.len(), 2);
        assert!(fit.coefficients[0].rows(2, 8).iter().all(|&c| c == 0.0));
        assert!(fit.coefficients[1].rows(2, 8).iter().any(|&c| c != 0.0));
        assert!((fit.lambda_grid[1] / fit.lambda_grid[0] - GRID_FLOOR_RATIO).abs() < 1e-12);
        assert!(fit_path(&design, &y, 1.0, 1).is_err());
    }
}
