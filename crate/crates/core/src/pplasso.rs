//! The prognostic/predictive selection pipeline.
//!
//! For every λ on the path:
//!
//! 1. Fit the split-penalty Lasso. Minimizing the whitened objective over the
//!    whitened coefficients `γ̃ = Σ^{1/2}γ` is the same problem as the
//!    split-penalty Lasso on the star design, so the fit is done there and
//!    mapped: `β̃ᵢ₀ = Σ^{1/2} β̂ᵢ`.
//! 2. In whitened coordinates keep the Top-Kᵢ entries of `β̃ᵢ₀` and give every
//!    other entry the Kᵢ-th largest magnitude (with its own sign).
//! 3. Map back with `Σ^{-1/2}`, keep the Top-Mᵢ entries and zero the rest.
//! 4. K and M come from the δ-ratio rule on residual sums of squares.
//!
//! λ is then chosen by BIC. Prognostic biomarkers are the support of the final
//! `β̂₁`, predictive ones the support of `β̂₂ − β̂₁`.

use nalgebra::{DMatrix, DVector};

use crate::covariance::{self, CovarianceModel, EstimatorCandidate, RiskEntry};
use crate::design::{build_design, star_to_block, DesignMatrix, Layout, TrialData};
use crate::error::{Error, Result};
use crate::linalg;
use crate::parallel::Execution;
use crate::solver::{self, CdSettings, PenalizedFit};

/// How the K/M ranges are scanned.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KSearch {
    /// Scan 1..=min(p, 2n).
    Capped,
    /// Scan 1..=p.
    Full,
    /// Skip the δ-ratio rule and use these counts (clamped to p).
    Fixed { k1: usize, k2: usize, m1: usize, m2: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PPLassoConfig {
    pub delta: f64,
    pub lambda_grid_size: usize,
    /// λ₁ = λ₂ when set; otherwise λ₂ = `penalty_ratio` · λ₁.
    pub equal_lambdas: bool,
    pub penalty_ratio: f64,
    pub k_search: KSearch,
    pub floor_ratio: f64,
    pub solver: CdSettings,
    /// Seed for the covariance cross-validation folds.
    pub seed: u64,
    pub exec: Execution,
}

impl Default for PPLassoConfig {
    fn default() -> Self {
        PPLassoConfig {
            delta: 0.95,
            lambda_grid_size: solver::DEFAULT_GRID_SIZE,
            equal_lambdas: true,
            penalty_ratio: 1.0,
            k_search: KSearch::Capped,
            floor_ratio: covariance::DEFAULT_FLOOR_RATIO,
            solver: CdSettings::default(),
            seed: 0,
            exec: Execution::default(),
        }
    }
}

impl PPLassoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.5 && self.delta < 1.0) {
            return Err(Error::InvalidInput(format!("delta must lie in (0.5, 1), got {}", self.delta)));
        }
        if self.lambda_grid_size < 2 {
            return Err(Error::InvalidInput(format!(
                "lambda grid size must be at least 2, got {}",
                self.lambda_grid_size
            )));
        }
        if !self.equal_lambdas && !(self.penalty_ratio > 0.0) {
            return Err(Error::InvalidInput("penalty ratio must be positive".into()));
        }
        Ok(())
    }

    fn ratio(&self) -> f64 {
        if self.equal_lambdas {
            1.0
        } else {
            self.penalty_ratio
        }
    }
}

// ---------------------------------------------------------------------------
// Thresholding operators

/// Indices sorted by decreasing magnitude; equal magnitudes keep the lower
/// index first.
pub fn rank_by_magnitude(v: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    order
}

pub fn top_k(v: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut order = rank_by_magnitude(v);
    order.truncate(k);
    order
}

#[inline]
fn sign_or_plus(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Keeps the Top-K entries and sets every other entry to the K-th largest
/// magnitude, carrying the entry's own sign (zero entries count as positive).
pub fn threshold_replace(v: &DVector<f64>, k: usize) -> DVector<f64> {
    assert!(k >= 1 && k <= v.len(), "K must lie in 1..=p");
    let order = rank_by_magnitude(v);
    let level = v[order[k - 1]].abs();
    let mut out = v.clone();
    for &j in &order[k..] {
        out[j] = sign_or_plus(v[j]) * level;
    }
    out
}

/// Keeps the Top-M entries and zeroes the rest.
pub fn threshold_zero(v: &DVector<f64>, m: usize) -> DVector<f64> {
    assert!(m >= 1 && m <= v.len(), "M must lie in 1..=p");
    let order = rank_by_magnitude(v);
    let mut out = v.clone();
    for &j in &order[m..] {
        out[j] = 0.0;
    }
    out
}

/// Whitened-space correction applied to both coefficient blocks.
pub fn threshold_whitened(
    beta_tilde0: (&DVector<f64>, &DVector<f64>),
    k1: usize,
    k2: usize,
) -> (DVector<f64>, DVector<f64>) {
    (threshold_replace(beta_tilde0.0, k1), threshold_replace(beta_tilde0.1, k2))
}

/// Final zeroing applied to both mapped-back coefficient blocks.
pub fn threshold_final(
    beta1_0: &DVector<f64>,
    beta2_0: &DVector<f64>,
    m1: usize,
    m2: usize,
) -> (DVector<f64>, DVector<f64>) {
    (threshold_zero(beta1_0, m1), threshold_zero(beta2_0, m2))
}

pub fn map_back(
    beta_tilde: (&DVector<f64>, &DVector<f64>),
    cov: &CovarianceModel,
) -> (DVector<f64>, DVector<f64>) {
    (&cov.inv_sqrt * beta_tilde.0, &cov.inv_sqrt * beta_tilde.1)
}

// ---------------------------------------------------------------------------
// δ-ratio rule

#[inline]
fn ratio_reached(next: f64, current: f64, delta: f64) -> bool {
    if current <= 0.0 {
        return true;
    }
    next / current >= delta
}

/// Smallest `k ≥ 1` with `mse(k + 1) / mse(k) ≥ δ`, scanning up to `kmax`
/// (returned when the ratio never reaches δ).
pub fn delta_rule(mse: impl Fn(usize) -> f64, kmax: usize, delta: f64) -> usize {
    let mut current = mse(1);
    for k in 1..kmax {
        let next = mse(k + 1);
        if ratio_reached(next, current, delta) {
            return k;
        }
        current = next;
    }
    kmax
}

/// Two-level δ-ratio rule: for each first count the second is chosen by
/// [`delta_rule`], then the first count is chosen by the same rule applied to
/// `g(k₁) = surface(k₁, k̂₂(k₁))`.
pub fn select_pair(
    surface: impl Fn(usize, usize) -> f64,
    kmax1: usize,
    kmax2: usize,
    delta: f64,
) -> (usize, usize) {
    let inner = |k1: usize| delta_rule(|k2| surface(k1, k2), kmax2, delta);
    let mut k2 = inner(1);
    let mut current = surface(1, k2);
    for k1 in 1..kmax1 {
        let k2_next = inner(k1 + 1);
        let next = surface(k1 + 1, k2_next);
        if ratio_reached(next, current, delta) {
            return (k1, k2);
        }
        k2 = k2_next;
        current = next;
    }
    (kmax1, k2)
}

/// [`select_pair`] over a tabulated surface; entry `(i, j)` holds the value at
/// counts `(i + 1, j + 1)`.
pub fn select_k(mse_surface: &DMatrix<f64>, delta: f64) -> (usize, usize) {
    select_pair(
        |a, b| mse_surface[(a - 1, b - 1)],
        mse_surface.nrows(),
        mse_surface.ncols(),
        delta,
    )
}

/// Residual sums of squares `‖target − X v⁽ᴷ⁾‖²` for `K = 1..=kmax`, where
/// `v⁽ᴷ⁾` is `threshold_replace(v, K)` (`replace = true`) or
/// `threshold_zero(v, K)`. Each step updates the fitted values in O(n).
pub fn threshold_rss(
    x: &DMatrix<f64>,
    target: &DVector<f64>,
    v: &DVector<f64>,
    kmax: usize,
    replace: bool,
) -> Vec<f64> {
    let n = x.nrows();
    let order = rank_by_magnitude(v);
    let data = x.as_slice();
    let mut kept = vec![0.0; n];
    // Sum of sign-weighted columns outside the Top set.
    let mut rest = vec![0.0; n];
    if replace {
        for (j, &vj) in v.iter().enumerate() {
            let s = sign_or_plus(vj);
            for (r, a) in rest.iter_mut().zip(&data[j * n..(j + 1) * n]) {
                *r += s * a;
            }
        }
    }
    let mut out = Vec::with_capacity(kmax);
    for &j in order.iter().take(kmax) {
        let col = &data[j * n..(j + 1) * n];
        let vj = v[j];
        let s = sign_or_plus(vj);
        for i in 0..n {
            kept[i] += vj * col[i];
            if replace {
                rest[i] -= s * col[i];
            }
        }
        let level = if replace { vj.abs() } else { 0.0 };
        let rss: f64 = (0..n)
            .map(|i| {
                let r = target[i] - kept[i] - level * rest[i];
                r * r
            })
            .sum();
        out.push(rss);
    }
    out
}

// ---------------------------------------------------------------------------
// Whitened fit

/// The arm-wise pieces every per-λ stage needs.
#[derive(Clone, Debug)]
pub struct WhitenedProblem<'a> {
    pub cov: &'a CovarianceModel,
    x1: DMatrix<f64>,
    x2: DMatrix<f64>,
    xt1: DMatrix<f64>,
    xt2: DMatrix<f64>,
    y1: DVector<f64>,
    y2: DVector<f64>,
    kmax: usize,
}

impl<'a> WhitenedProblem<'a> {
    pub fn new(data: &TrialData, cov: &'a CovarianceModel, k_search: KSearch) -> Result<Self> {
        if cov.dim() != data.p() {
            return Err(Error::DimensionMismatch { expected: data.p(), found: cov.dim() });
        }
        let x1 = data.arm_biomarkers(1);
        let x2 = data.arm_biomarkers(2);
        let xt1 = covariance::whiten(&x1, cov)?;
        let xt2 = covariance::whiten(&x2, cov)?;
        let p = data.p();
        let kmax = match k_search {
            KSearch::Capped => p.min(2 * data.n()),
            KSearch::Full | KSearch::Fixed { .. } => p,
        };
        Ok(WhitenedProblem {
            cov,
            x1,
            x2,
            xt1,
            xt2,
            y1: data.arm_response(1),
            y2: data.arm_response(2),
            kmax,
        })
    }

    pub fn whitened_arms(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.xt1, &self.xt2)
    }
}

/// Per-λ output of the first stage.
#[derive(Clone, Debug, PartialEq)]
pub struct WhitenedFit {
    pub lambdas: Vec<f64>,
    pub penalty_ratio: f64,
    /// Block-layout estimates `(α₁, α₂, β₁, β₂)` of the split-penalty Lasso.
    pub gamma_hat: Vec<DVector<f64>>,
    /// `(α̃₁, α̃₂, β̃₁₀, β̃₂₀) = Σ^{1/2}`-image of `gamma_hat`.
    pub gamma_tilde0: Vec<DVector<f64>>,
    pub converged: Vec<bool>,
}

/// Solves the whitened split-penalty problem along the λ grid.
pub fn whiten_fit(
    data: &TrialData,
    cov: &CovarianceModel,
    config: &PPLassoConfig,
) -> Result<WhitenedFit> {
    config.validate()?;
    if cov.dim() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), found: cov.dim() });
    }
    let design = build_design(data, Layout::Star);
    let path = solver::fit_path_with(
        &design,
        data.response(),
        config.ratio(),
        config.lambda_grid_size,
        config.solver,
    )?;
    Ok(whitened_from_path(&path, cov, data.p(), config.ratio()))
}

/// Maps a star-layout path to block and whitened coordinates.
pub fn whitened_from_path(
    path: &PenalizedFit,
    cov: &CovarianceModel,
    p: usize,
    penalty_ratio: f64,
) -> WhitenedFit {
    let mut gamma_hat = Vec::with_capacity(path.len());
    let mut gamma_tilde0 = Vec::with_capacity(path.len());
    for theta in &path.coefficients {
        let gamma = star_to_block(theta, p);
        let mut tilde = gamma.clone();
        tilde.rows_mut(2, p).copy_from(&(&cov.sqrt * gamma.rows(2, p)));
        tilde.rows_mut(2 + p, p).copy_from(&(&cov.sqrt * gamma.rows(2 + p, p)));
        gamma_hat.push(gamma);
        gamma_tilde0.push(tilde);
    }
    WhitenedFit {
        lambdas: path.lambda_grid.clone(),
        penalty_ratio,
        gamma_hat,
        gamma_tilde0,
        converged: path.converged.clone(),
    }
}

/// Split-penalty objective on the block design:
/// `½‖y − Xγ‖² + λ₁‖β₁‖₁ + λ₂‖β₂ − β₁‖₁`.
pub fn block_objective(
    design: &DesignMatrix,
    y: &DVector<f64>,
    gamma: &DVector<f64>,
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    let p = design.p;
    let loss = 0.5 * (y - &design.matrix * gamma).norm_squared();
    let b1 = gamma.rows(2, p);
    let b2 = gamma.rows(2 + p, p);
    loss + lambda1 * b1.lp_norm(1) + lambda2 * (b2 - b1).lp_norm(1)
}

/// Full `(2p + 2)`-square block matrix `diag(1, 1, M, M)`.
pub fn block_diag(m: &DMatrix<f64>) -> DMatrix<f64> {
    let p = m.nrows();
    let mut out = DMatrix::zeros(2 * p + 2, 2 * p + 2);
    out[(0, 0)] = 1.0;
    out[(1, 1)] = 1.0;
    out.view_mut((2, 2), (p, p)).copy_from(m);
    out.view_mut((2 + p, 2 + p), (p, p)).copy_from(m);
    out
}

/// Whitened objective evaluated literally:
/// `½‖y − X̃γ̃‖² + λ₁‖[0 0 D₁; 0 0 (λ₂/λ₁)D₂] Σ^{-1/2} γ̃‖₁` with
/// `X̃ = XΣ^{-1/2}`, `D₁ = [I 0]`, `D₂ = [−I I]`.
pub fn whitened_objective(
    design: &DesignMatrix,
    y: &DVector<f64>,
    gamma_tilde: &DVector<f64>,
    cov: &CovarianceModel,
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    let p = design.p;
    let inv = block_diag(&cov.inv_sqrt);
    let x_tilde = &design.matrix * &inv;
    let loss = 0.5 * (y - x_tilde * gamma_tilde).norm_squared();
    let mut d = DMatrix::zeros(2 * p, 2 * p + 2);
    let ratio = if lambda1 > 0.0 { lambda2 / lambda1 } else { 0.0 };
    for j in 0..p {
        d[(j, 2 + j)] = 1.0;
        d[(p + j, 2 + j)] = -ratio;
        d[(p + j, 2 + p + j)] = ratio;
    }
    let pen = (d * inv * gamma_tilde).lp_norm(1);
    if lambda1 > 0.0 {
        loss + lambda1 * pen
    } else {
        // λ₁ = 0 leaves only the second block penalized.
        let b = &cov.inv_sqrt * gamma_tilde.rows(2, p);
        let b2 = &cov.inv_sqrt * gamma_tilde.rows(2 + p, p);
        loss + lambda2 * (b2 - b).lp_norm(1)
    }
}

// ---------------------------------------------------------------------------
// Per-λ stages

#[derive(Clone, Debug, PartialEq)]
pub struct StageEstimates {
    pub lambda: f64,
    pub converged: bool,
    pub alpha: (f64, f64),
    pub beta_tilde0: (DVector<f64>, DVector<f64>),
    pub beta_tilde_thresh: (DVector<f64>, DVector<f64>),
    pub beta_mapped: (DVector<f64>, DVector<f64>),
    pub beta_final: (DVector<f64>, DVector<f64>),
    pub k: (usize, usize),
    pub m: (usize, usize),
    /// `‖y − Xγ̂‖²` at the final estimate.
    pub rss: f64,
}

impl StageEstimates {
    pub fn prognostic(&self) -> Vec<usize> {
        support(&self.beta_final.0)
    }

    pub fn predictive(&self) -> Vec<usize> {
        support(&(&self.beta_final.1 - &self.beta_final.0))
    }
}

pub fn support(v: &DVector<f64>) -> Vec<usize> {
    (0..v.len()).filter(|&j| v[j] != 0.0).collect()
}

/// Runs thresholding, mapping and K/M selection for one first-stage estimate.
pub fn stage_estimates(
    problem: &WhitenedProblem<'_>,
    lambda: f64,
    converged: bool,
    gamma_tilde0: &DVector<f64>,
    config: &PPLassoConfig,
) -> StageEstimates {
    let p = problem.cov.dim();
    let alpha = (gamma_tilde0[0], gamma_tilde0[1]);
    let bt1 = gamma_tilde0.rows(2, p).into_owned();
    let bt2 = gamma_tilde0.rows(2 + p, p).into_owned();
    let t1 = problem.y1.add_scalar(-alpha.0);
    let t2 = problem.y2.add_scalar(-alpha.1);

    let (k1, k2) = match config.k_search {
        KSearch::Fixed { k1, k2, .. } => (k1.clamp(1, p), k2.clamp(1, p)),
        _ => {
            let r1 = threshold_rss(&problem.xt1, &t1, &bt1, problem.kmax, true);
            let r2 = threshold_rss(&problem.xt2, &t2, &bt2, problem.kmax, true);
            select_pair(|a, b| r1[a - 1] + r2[b - 1], problem.kmax, problem.kmax, config.delta)
        }
    };
    let (tt1, tt2) = threshold_whitened((&bt1, &bt2), k1, k2);
    let (b10, b20) = map_back((&tt1, &tt2), problem.cov);

    let (m1, m2) = match config.k_search {
        KSearch::Fixed { m1, m2, .. } => (m1.clamp(1, p), m2.clamp(1, p)),
        _ => {
            let r1 = threshold_rss(&problem.x1, &t1, &b10, problem.kmax, false);
            let r2 = threshold_rss(&problem.x2, &t2, &b20, problem.kmax, false);
            select_pair(|a, b| r1[a - 1] + r2[b - 1], problem.kmax, problem.kmax, config.delta)
        }
    };
    let (f1, f2) = threshold_final(&b10, &b20, m1, m2);
    let rss = (&t1 - &problem.x1 * &f1).norm_squared() + (&t2 - &problem.x2 * &f2).norm_squared();

    StageEstimates {
        lambda,
        converged,
        alpha,
        beta_tilde0: (bt1, bt2),
        beta_tilde_thresh: (tt1, tt2),
        beta_mapped: (b10, b20),
        beta_final: (f1, f2),
        k: (k1, k2),
        m: (m1, m2),
        rss,
    }
}

// ---------------------------------------------------------------------------
// BIC

/// Ridge penalty used when the OLS refit is singular.
pub const REFIT_RIDGE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct BicRecord {
    pub lambda: f64,
    pub mse: f64,
    pub k: usize,
    pub bic: f64,
    pub converged: bool,
    /// The OLS refit was singular and a ridge refit was used for k.
    pub ridge_refit: bool,
}

/// Nonzero count of the OLS refit on the intercepts plus the star-design
/// columns of the prognostic and predictive supports.
pub fn refit_count(star: &DesignMatrix, y: &DVector<f64>, stage: &StageEstimates) -> Result<(usize, bool)> {
    let p = star.p;
    let mut cols = vec![0, 1];
    cols.extend(stage.prognostic().into_iter().map(|j| 2 + j));
    cols.extend(stage.predictive().into_iter().map(|j| 2 + p + j));
    let sub = star.matrix.select_columns(&cols);
    match linalg::least_squares(&sub, y) {
        Some(coef) => Ok((coef.iter().filter(|&&c| c != 0.0).count(), false)),
        None => {
            let mut w = vec![1.0; cols.len()];
            w[0] = 0.0;
            w[1] = 0.0;
            let coef = linalg::ridge(&sub, y, REFIT_RIDGE, &w)?;
            Ok((coef.iter().filter(|&&c| c != 0.0).count(), true))
        }
    }
}

/// `BIC(λ) = n log(MSE/n) + k log n` for every λ, and the index of the
/// smallest value among converged fits (first one on ties).
pub fn bic_select(
    data: &TrialData,
    star: &DesignMatrix,
    stages: &[StageEstimates],
) -> Result<(usize, Vec<BicRecord>)> {
    solver::require_star(star)?;
    let n = data.n() as f64;
    let mut table = Vec::with_capacity(stages.len());
    for s in stages {
        let (k, ridge_refit) = refit_count(star, data.response(), s)?;
        let mse = s.rss.max(f64::MIN_POSITIVE);
        let bic = n * (mse / n).ln() + k as f64 * n.ln();
        table.push(BicRecord { lambda: s.lambda, mse: s.rss, k, bic, converged: s.converged, ridge_refit });
    }
    let best = table
        .iter()
        .enumerate()
        .filter(|(_, r)| r.converged)
        .fold(None::<(usize, f64)>, |acc, (i, r)| match acc {
            Some((_, b)) if b <= r.bic => acc,
            _ => Some((i, r.bic)),
        })
        .map(|(i, _)| i)
        .ok_or(Error::NoConvergedFit)?;
    Ok((best, table))
}

// ---------------------------------------------------------------------------
// End to end

/// Where the biomarker correlation matrix comes from.
#[derive(Clone, Debug)]
pub enum CovarianceSource<'a> {
    Given(&'a CovarianceModel),
    /// Cross-validated choice among these candidates on arm-centered data.
    Estimate(Vec<EstimatorCandidate>),
}

/// All per-λ stages of one pipeline run.
#[derive(Clone, Debug)]
pub struct PPLassoPath {
    pub stages: Vec<StageEstimates>,
    pub covariance_tag: String,
    pub risk_table: Vec<RiskEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PPLassoResult {
    pub prognostic: Vec<usize>,
    pub predictive: Vec<usize>,
    pub alpha_hat: (f64, f64),
    pub beta1_hat: DVector<f64>,
    pub beta2_hat: DVector<f64>,
    pub lambda_selected: f64,
    pub selected_index: usize,
    pub k: (usize, usize),
    pub m: (usize, usize),
    pub bic_table: Vec<BicRecord>,
    pub covariance_tag: String,
}

/// Runs every stage for every λ with a known correlation model.
pub fn fit_path_stages(
    data: &TrialData,
    cov: &CovarianceModel,
    config: &PPLassoConfig,
) -> Result<Vec<StageEstimates>> {
    let fit = whiten_fit(data, cov, config)?;
    let problem = WhitenedProblem::new(data, cov, config.k_search)?;
    Ok(config.exec.map(fit.lambdas.len(), |i| {
        stage_estimates(&problem, fit.lambdas[i], fit.converged[i], &fit.gamma_tilde0[i], config)
    }))
}

pub fn fit_pplasso_path(
    data: &TrialData,
    cov: CovarianceSource<'_>,
    config: &PPLassoConfig,
) -> Result<PPLassoPath> {
    config.validate()?;
    match cov {
        CovarianceSource::Given(model) => Ok(PPLassoPath {
            stages: fit_path_stages(data, model, config)?,
            covariance_tag: model.estimator_tag.clone(),
            risk_table: Vec::new(),
        }),
        CovarianceSource::Estimate(candidates) => {
            let centered = data.arm_centered_biomarkers();
            let (model, risk_table) = covariance::estimate_model(
                &candidates,
                &centered,
                config.seed,
                config.floor_ratio,
                config.exec,
            )?;
            Ok(PPLassoPath {
                stages: fit_path_stages(data, &model, config)?,
                covariance_tag: model.estimator_tag.clone(),
                risk_table,
            })
        }
    }
}

impl PPLassoPath {
    pub fn result_at(&self, index: usize, bic_table: Vec<BicRecord>) -> PPLassoResult {
        let s = &self.stages[index];
        PPLassoResult {
            prognostic: s.prognostic(),
            predictive: s.predictive(),
            alpha_hat: s.alpha,
            beta1_hat: s.beta_final.0.clone(),
            beta2_hat: s.beta_final.1.clone(),
            lambda_selected: s.lambda,
            selected_index: index,
            k: s.k,
            m: s.m,
            bic_table,
            covariance_tag: self.covariance_tag.clone(),
        }
    }

    pub fn select_bic(&self, data: &TrialData) -> Result<PPLassoResult> {
        let star = build_design(data, Layout::Star);
        let (best, table) = bic_select(data, &star, &self.stages)?;
        Ok(self.result_at(best, table))
    }
}

/// Whitened fit, thresholding, K/M selection and BIC choice of λ.
pub fn run_pplasso(
    data: &TrialData,
    cov: CovarianceSource<'_>,
    config: &PPLassoConfig,
) -> Result<PPLassoResult> {
    fit_pplasso_path(data, cov, config)?.select_bic(data)
}
