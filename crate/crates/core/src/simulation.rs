//! Synthetic two-arm trials, selection metrics and the replication runner.

use std::fmt;
use std::io;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::covariance::{self, CovarianceModel};
use crate::design::{build_design, DesignMatrix, Layout, TrialData};
use crate::error::{Error, Result};
use crate::linalg;
use crate::parallel::Execution;
use crate::pplasso::{self, PPLassoConfig, PPLassoPath, WhitenedProblem};
use crate::solver::{self, CdSettings, PenalizedFit};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaKind {
    /// Two-block structure: `a1` within the prognostic block, `a3` within the
    /// rest, `a2` across.
    BlockBm { a1: f64, a2: f64, a3: f64 },
    Compound { rho: f64 },
    Identity,
}

impl Default for SigmaKind {
    fn default() -> Self {
        SigmaKind::BlockBm { a1: 0.3, a2: 0.5, a3: 0.7 }
    }
}

impl fmt::Display for SigmaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaKind::BlockBm { a1, a2, a3 } => write!(f, "bm:{a1}:{a2}:{a3}"),
            SigmaKind::Compound { rho } => write!(f, "compound:{rho}"),
            SigmaKind::Identity => f.write_str("identity"),
        }
    }
}

impl FromStr for SigmaKind {
    type Err = Error;

    /// `bm`, `bm:a1:a2:a3`, `compound`, `compound:rho` or `identity`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("'{x}' is not a number in sigma kind '{s}'")))
        };
        match parts.as_slice() {
            ["bm"] | ["block_bm"] => Ok(SigmaKind::default()),
            ["bm", a1, a2, a3] | ["block_bm", a1, a2, a3] => {
                Ok(SigmaKind::BlockBm { a1: num(a1)?, a2: num(a2)?, a3: num(a3)? })
            }
            ["compound"] => Ok(SigmaKind::Compound { rho: 0.5 }),
            ["compound", r] => Ok(SigmaKind::Compound { rho: num(r)? }),
            ["identity"] => Ok(SigmaKind::Identity),
            _ => Err(Error::InvalidInput(format!("unknown sigma kind '{s}'"))),
        }
    }
}

/// Builds the correlation matrix of a scenario; `split` is the size of the
/// leading (prognostic) block for [`SigmaKind::BlockBm`].
pub fn gen_sigma(kind: SigmaKind, p: usize, split: usize) -> Result<DMatrix<f64>> {
    if split > p {
        return Err(Error::InvalidInput(format!("block size {split} exceeds p = {p}")));
    }
    let sigma = match kind {
        SigmaKind::Identity => DMatrix::identity(p, p),
        SigmaKind::Compound { rho } => {
            DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho })
        }
        SigmaKind::BlockBm { a1, a2, a3 } => DMatrix::from_fn(p, p, |i, j| {
            if i == j {
                1.0
            } else if i < split && j < split {
                a1
            } else if i >= split && j >= split {
                a3
            } else {
                a2
            }
        }),
    };
    if !linalg::is_positive_definite(&sigma) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(sigma)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
    pub sigma_kind: SigmaKind,
    pub b1: f64,
    pub b2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub n_prognostic_only: usize,
    pub n_prog_and_pred: usize,
    pub replications: usize,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            p: 200,
            n1: 50,
            n2: 50,
            sigma_kind: SigmaKind::default(),
            b1: 1.0,
            b2: 2.0,
            alpha1: 0.0,
            alpha2: 1.0,
            n_prognostic_only: 5,
            n_prog_and_pred: 5,
            replications: 100,
            seed: 0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.active_count() > self.p {
            return Err(Error::InvalidInput(format!(
                "{} active biomarkers exceed p = {}",
                self.active_count(),
                self.p
            )));
        }
        if self.replications < 1 {
            return Err(Error::InvalidInput("need at least one replication".into()));
        }
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::InvalidInput("each arm needs at least 2 patients".into()));
        }
        Ok(())
    }

    pub fn active_count(&self) -> usize {
        self.n_prognostic_only + self.n_prog_and_pred
    }
}

/// True coefficient vectors of a simulated trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Truth {
    pub beta1: DVector<f64>,
    pub beta2: DVector<f64>,
}

impl Truth {
    pub fn p(&self) -> usize {
        self.beta1.len()
    }

    pub fn prognostic(&self) -> Vec<usize> {
        pplasso::support(&self.beta1)
    }

    pub fn predictive(&self) -> Vec<usize> {
        pplasso::support(&(&self.beta2 - &self.beta1))
    }
}

pub fn scenario_truth(s: &Scenario) -> Truth {
    let mut beta1 = DVector::zeros(s.p);
    let mut beta2 = DVector::zeros(s.p);
    for j in 0..s.active_count() {
        beta1[j] = s.b1;
        beta2[j] = if j < s.n_prognostic_only { s.b1 } else { s.b2 };
    }
    Truth { beta1, beta2 }
}

/// Scenario with its correlation matrix and factors precomputed.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub scenario: Scenario,
    pub sigma: DMatrix<f64>,
    chol: DMatrix<f64>,
    pub oracle: CovarianceModel,
    pub truth: Truth,
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let sigma = gen_sigma(scenario.sigma_kind, scenario.p, scenario.active_count())?;
        let chol = sigma.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l();
        let mut oracle = covariance::symmetric_roots(&sigma, covariance::DEFAULT_FLOOR_RATIO)?;
        oracle.estimator_tag = format!("oracle {}", scenario.sigma_kind);
        let truth = scenario_truth(&scenario);
        Ok(Simulator { scenario, sigma, chol, oracle, truth })
    }

    /// Replicate `index`, drawn from its own counter-based RNG stream.
    pub fn gen_data(&self, index: usize) -> TrialData {
        let s = &self.scenario;
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        rng.set_stream(index as u64);
        let n = s.n1 + s.n2;
        let z = DMatrix::from_fn(s.p, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = (&self.chol * z).transpose();
        let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut y = DVector::zeros(n);
        let mut treatment = Vec::with_capacity(n);
        for i in 0..n {
            let (alpha, beta, arm) = if i < s.n1 {
                (s.alpha1, &self.truth.beta1, 1)
            } else {
                (s.alpha2, &self.truth.beta2, 2)
            };
            y[i] = alpha + x.row(i).dot(&beta.transpose()) + noise[i];
            treatment.push(arm);
        }
        let names = (1..=s.p).map(|j| format!("X{j}")).collect();
        TrialData::new(y, treatment, x, names).expect("simulated data is valid")
    }
}

pub fn gen_data(scenario: &Scenario, index: usize) -> Result<(TrialData, Truth)> {
    let sim = Simulator::new(scenario.clone())?;
    Ok((sim.gen_data(index), sim.truth.clone()))
}

/// `‖Σ_{SᶜS} Σ_{SS}^{-1} sign(β_S)‖_∞` and whether it is below 1.
pub fn check_ic(sigma: &DMatrix<f64>, support: &[usize], signs: &[f64]) -> Result<(f64, bool)> {
    if support.len() != signs.len() {
        return Err(Error::DimensionMismatch { expected: support.len(), found: signs.len() });
    }
    let p = sigma.nrows();
    if let Some(&bad) = support.iter().find(|&&j| j >= p) {
        return Err(Error::InvalidInput(format!("support index {bad} out of range")));
    }
    let rest: Vec<usize> = (0..p).filter(|j| !support.contains(j)).collect();
    if rest.is_empty() {
        return Ok((0.0, true));
    }
    let ss = sigma.select_rows(support).select_columns(support);
    let cs = sigma.select_rows(&rest).select_columns(support);
    let s = DVector::from_column_slice(signs);
    let solved = ss
        .lu()
        .solve(&s)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular("active block of the correlation matrix".into()))?;
    let q = (cs * solved).amax();
    Ok((q, q < 1.0))
}

// ---------------------------------------------------------------------------
// Metrics

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Metrics {
    pub tpr_prog: Option<f64>,
    pub fpr_prog: Option<f64>,
    pub tpr_pred: Option<f64>,
    pub fpr_pred: Option<f64>,
    pub tpr_all: Option<f64>,
    pub fpr_all: Option<f64>,
}

pub const METRIC_NAMES: [&str; 6] = ["tpr_prog", "fpr_prog", "tpr_pred", "fpr_pred", "tpr_all", "fpr_all"];

impl Metrics {
    pub fn values(&self) -> [Option<f64>; 6] {
        [self.tpr_prog, self.fpr_prog, self.tpr_pred, self.fpr_pred, self.tpr_all, self.fpr_all]
    }

    fn from_values(v: [Option<f64>; 6]) -> Self {
        Metrics {
            tpr_prog: v[0],
            fpr_prog: v[1],
            tpr_pred: v[2],
            fpr_pred: v[3],
            tpr_all: v[4],
            fpr_all: v[5],
        }
    }

    /// `TPR_all − FPR_all`, the quantity maximized by oracle tuning. Undefined
    /// rates count as 0.
    pub fn score(&self) -> f64 {
        self.tpr_all.unwrap_or(0.0) - self.fpr_all.unwrap_or(0.0)
    }
}

fn rates(selected: &[usize], truth: &[usize], p: usize) -> (Option<f64>, Option<f64>) {
    let mut is_true = vec![false; p];
    for &j in truth {
        is_true[j] = true;
    }
    let mut sel = vec![false; p];
    for &j in selected {
        sel[j] = true;
    }
    let tp = (0..p).filter(|&j| sel[j] && is_true[j]).count();
    let fp = (0..p).filter(|&j| sel[j] && !is_true[j]).count();
    let inactive = p - truth.len();
    let tpr = (!truth.is_empty()).then(|| tp as f64 / truth.len() as f64);
    let fpr = (inactive > 0).then(|| fp as f64 / inactive as f64);
    (tpr, fpr)
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Selection rates per category. A rate whose denominator is empty (no true
/// or no inactive biomarkers in that category) is `None`.
pub fn compute_metrics(selected_prog: &[usize], selected_pred: &[usize], truth: &Truth) -> Metrics {
    let p = truth.p();
    let tp = truth.prognostic();
    let tq = truth.predictive();
    let (tpr_prog, fpr_prog) = rates(selected_prog, &tp, p);
    let (tpr_pred, fpr_pred) = rates(selected_pred, &tq, p);
    let (tpr_all, fpr_all) = rates(&union(selected_prog, selected_pred), &union(&tp, &tq), p);
    Metrics { tpr_prog, fpr_prog, tpr_pred, fpr_pred, tpr_all, fpr_all }
}

/// Per-metric mean and standard error over replications, each metric over the
/// replications where it is defined.
pub fn summarize(metrics: &[Metrics]) -> ([Option<f64>; 6], [Option<f64>; 6]) {
    let mut means = [None; 6];
    let mut ses = [None; 6];
    for k in 0..6 {
        let vals: Vec<f64> = metrics.iter().filter_map(|m| m.values()[k]).collect();
        if vals.is_empty() {
            continue;
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        means[k] = Some(mean);
        if vals.len() > 1 {
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            ses[k] = Some((var / n).sqrt());
        }
    }
    (means, ses)
}

// ---------------------------------------------------------------------------
// Methods

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    PplassoOracle,
    PplassoEstimated,
    Lasso,
    ElasticNet,
    AdaptiveLasso,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::PplassoOracle,
        Method::PplassoEstimated,
        Method::Lasso,
        Method::ElasticNet,
        Method::AdaptiveLasso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::PplassoOracle => "pplasso_oracle",
            Method::PplassoEstimated => "pplasso_estimated",
            Method::Lasso => "lasso",
            Method::ElasticNet => "elastic_net",
            Method::AdaptiveLasso => "adaptive_lasso",
        }
    }

    pub fn is_pplasso(self) -> bool {
        matches!(self, Method::PplassoOracle | Method::PplassoEstimated)
    }

    /// Tunings that apply to this method out of the requested ones. Baselines
    /// are always tuned optimally.
    pub fn tunings(self, requested: &[Tuning]) -> Vec<Tuning> {
        if self.is_pplasso() {
            let mut t = requested.to_vec();
            t.sort();
            t.dedup();
            t
        } else {
            vec![Tuning::Optimal]
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tuning {
    Bic,
    Optimal,
}

impl Tuning {
    pub fn name(self) -> &'static str {
        match self {
            Tuning::Bic => "bic",
            Tuning::Optimal => "optimal",
        }
    }
}

impl FromStr for Tuning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bic" => Ok(Tuning::Bic),
            "optimal" => Ok(Tuning::Optimal),
            _ => Err(Error::InvalidInput(format!("unknown tuning '{s}'"))),
        }
    }
}

impl fmt::Display for Tuning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub pplasso: PPLassoConfig,
    pub grid_size: usize,
    pub en_alphas: Vec<f64>,
    pub adaptive_gamma: f64,
    pub solver: CdSettings,
    /// Replications are spread over this strategy; work inside a replication
    /// runs sequentially.
    pub exec: Execution,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            pplasso: PPLassoConfig { exec: Execution::Sequential, ..PPLassoConfig::default() },
            grid_size: solver::DEFAULT_GRID_SIZE,
            en_alphas: (1..=9).map(|k| k as f64 / 10.0).collect(),
            adaptive_gamma: 1.0,
            solver: CdSettings::default(),
            exec: Execution::default(),
        }
    }
}

/// Metrics at the λ (over every supplied path) maximizing `TPR_all − FPR_all`;
/// earlier entries win ties.
fn best_over<'a>(
    selections: impl Iterator<Item = (Vec<usize>, Vec<usize>)> + 'a,
    truth: &Truth,
) -> Option<Metrics> {
    let mut best: Option<Metrics> = None;
    for (prog, pred) in selections {
        let m = compute_metrics(&prog, &pred, truth);
        if best.is_none_or(|b| m.score() > b.score()) {
            best = Some(m);
        }
    }
    best
}

/// Prognostic/predictive supports along a star-layout path.
fn star_selections(fit: &PenalizedFit, p: usize) -> impl Iterator<Item = (Vec<usize>, Vec<usize>)> + '_ {
    fit.coefficients.iter().map(move |theta| {
        let prog = (0..p).filter(|&j| theta[2 + j] != 0.0).collect();
        let pred = (0..p).filter(|&j| theta[2 + p + j] != 0.0).collect();
        (prog, pred)
    })
}

fn pplasso_metrics(
    data: &TrialData,
    path: &PPLassoPath,
    tuning: Tuning,
    truth: &Truth,
) -> Result<Metrics> {
    match tuning {
        Tuning::Bic => {
            let r = path.select_bic(data)?;
            Ok(compute_metrics(&r.prognostic, &r.predictive, truth))
        }
        Tuning::Optimal => {
            best_over(path.stages.iter().map(|s| (s.prognostic(), s.predictive())), truth)
                .ok_or(Error::NoConvergedFit)
        }
    }
}

/// One row of raw per-replication output.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub replicate: usize,
    pub method: Method,
    pub tuning: Tuning,
    pub outcome: std::result::Result<Metrics, String>,
}

/// Runs every requested method on one replicate.
pub fn run_replication(
    sim: &Simulator,
    index: usize,
    methods: &[Method],
    tunings: &[Tuning],
    config: &BenchmarkConfig,
) -> Vec<RawRecord> {
    let data = sim.gen_data(index);
    let truth = &sim.truth;
    let p = data.p();
    let star = build_design(&data, Layout::Star);
    let y = data.response();
    let factors = solver::split_factors(p, 1.0);

    // The first PPLasso stage and the plain Lasso share one path.
    let mut lasso_path: Option<Result<PenalizedFit>> = None;
    let mut lasso = |star: &DesignMatrix| -> Result<PenalizedFit> {
        lasso_path
            .get_or_insert_with(|| {
                solver::weighted_path(&star.matrix, y, &factors, 1.0, None, config.grid_size, config.solver)
            })
            .clone()
    };

    let mut out = Vec::new();
    for &method in methods {
        let tunings = method.tunings(tunings);
        let mut push = |outcome: Result<Vec<Metrics>>| match outcome {
            Ok(ms) => {
                for (t, m) in tunings.iter().zip(ms) {
                    out.push(RawRecord { replicate: index, method, tuning: *t, outcome: Ok(m) });
                }
            }
            Err(e) => {
                for t in &tunings {
                    out.push(RawRecord {
                        replicate: index,
                        method,
                        tuning: *t,
                        outcome: Err(e.to_string()),
                    });
                }
            }
        };
        let result: Result<Vec<Metrics>> = match method {
            Method::Lasso => lasso(&star).and_then(|fit| {
                best_over(star_selections(&fit, p), truth).map(|m| vec![m]).ok_or(Error::NoConvergedFit)
            }),
            Method::ElasticNet => (|| {
                let mut best: Option<Metrics> = None;
                for &alpha in &config.en_alphas {
                    let fit = solver::weighted_path(
                        &star.matrix,
                        y,
                        &factors,
                        alpha,
                        None,
                        config.grid_size,
                        config.solver,
                    )?;
                    if let Some(m) = best_over(star_selections(&fit, p), truth) {
                        if best.is_none_or(|b| m.score() > b.score()) {
                            best = Some(m);
                        }
                    }
                }
                best.map(|m| vec![m]).ok_or(Error::NoConvergedFit)
            })(),
            Method::AdaptiveLasso => solver::adaptive_lasso_path(
                &star.matrix,
                y,
                config.adaptive_gamma,
                &factors,
                config.grid_size,
                config.solver,
            )
            .and_then(|fit| {
                best_over(star_selections(&fit, p), truth).map(|m| vec![m]).ok_or(Error::NoConvergedFit)
            }),
            Method::PplassoOracle | Method::PplassoEstimated => (|| {
                let fit = lasso(&star)?;
                let path = pplasso_path_from_lasso(&data, &fit, method, sim, &config.pplasso)?;
                tunings.iter().map(|&t| pplasso_metrics(&data, &path, t, truth)).collect()
            })(),
        };
        push(result);
    }
    out
}

fn pplasso_path_from_lasso(
    data: &TrialData,
    fit: &PenalizedFit,
    method: Method,
    sim: &Simulator,
    config: &PPLassoConfig,
) -> Result<PPLassoPath> {
    let (model, tag, risk_table) = match method {
        Method::PplassoOracle => (sim.oracle.clone(), sim.oracle.estimator_tag.clone(), Vec::new()),
        _ => {
            let centered = data.arm_centered_biomarkers();
            let (model, table) = covariance::estimate_model(
                &covariance::default_candidates(),
                &centered,
                config.seed,
                config.floor_ratio,
                Execution::Sequential,
            )?;
            let tag = model.estimator_tag.clone();
            (model, tag, table)
        }
    };
    let whitened = pplasso::whitened_from_path(fit, &model, data.p(), 1.0);
    let problem = WhitenedProblem::new(data, &model, config.k_search)?;
    let stages = (0..whitened.lambdas.len())
        .map(|i| {
            pplasso::stage_estimates(
                &problem,
                whitened.lambdas[i],
                whitened.converged[i],
                &whitened.gamma_tilde0[i],
                config,
            )
        })
        .collect();
    Ok(PPLassoPath { stages, covariance_tag: tag, risk_table })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    pub tuning: Tuning,
    pub replications: usize,
    pub failures: usize,
    pub means: [Option<f64>; 6],
    pub std_errors: [Option<f64>; 6],
}

impl ReportRow {
    pub fn mean(&self, name: &str) -> Option<f64> {
        METRIC_NAMES.iter().position(|&m| m == name).and_then(|k| self.means[k])
    }

    pub fn mean_metrics(&self) -> Metrics {
        Metrics::from_values(self.means)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub rows: Vec<ReportRow>,
    pub raw: Vec<RawRecord>,
}

impl ScenarioReport {
    pub fn row(&self, method: Method, tuning: Tuning) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.tuning == tuning)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().map(|r| r.failures).sum()
    }
}

/// Runs all replications of a scenario and averages the per-replication
/// metrics for every (method, tuning) pair.
pub fn run_scenario(
    scenario: &Scenario,
    methods: &[Method],
    tunings: &[Tuning],
    config: &BenchmarkConfig,
) -> Result<ScenarioReport> {
    if methods.is_empty() {
        return Err(Error::InvalidInput("no methods requested".into()));
    }
    let sim = Simulator::new(scenario.clone())?;
    run_with_simulator(&sim, methods, tunings, config)
}

pub fn run_with_simulator(
    sim: &Simulator,
    methods: &[Method],
    tunings: &[Tuning],
    config: &BenchmarkConfig,
) -> Result<ScenarioReport> {
    let per_rep = config.exec.map(sim.scenario.replications, |i| {
        run_replication(sim, i, methods, tunings, config)
    });
    let raw: Vec<RawRecord> = per_rep.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for &method in methods {
        for tuning in method.tunings(tunings) {
            let recs: Vec<&RawRecord> =
                raw.iter().filter(|r| r.method == method && r.tuning == tuning).collect();
            let ok: Vec<Metrics> = recs.iter().filter_map(|r| r.outcome.clone().ok()).collect();
            let (means, std_errors) = summarize(&ok);
            rows.push(ReportRow {
                method,
                tuning,
                replications: ok.len(),
                failures: recs.len() - ok.len(),
                means,
                std_errors,
            });
        }
    }
    Ok(ScenarioReport { scenario: sim.scenario.clone(), rows, raw })
}

// ---------------------------------------------------------------------------
// CSV

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::InvalidInput(format!("'{s}' is not a number")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

pub fn report_header() -> Vec<String> {
    let mut h: Vec<String> = ["method", "tuning", "replications", "failures"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for m in METRIC_NAMES {
        h.push(m.to_string());
        h.push(format!("{m}_se"));
    }
    for s in [
        "p",
        "n1",
        "n2",
        "sigma",
        "b1",
        "b2",
        "alpha1",
        "alpha2",
        "n_prognostic_only",
        "n_prog_and_pred",
        "seed",
    ] {
        h.push(s.to_string());
    }
    h
}

impl ScenarioReport {
    /// One row per (method, tuning): means and standard errors of the six
    /// rates followed by the scenario parameters. Undefined values are empty.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(report_header()).map_err(csv_err)?;
        let s = &self.scenario;
        for r in &self.rows {
            let mut rec = vec![
                r.method.to_string(),
                r.tuning.to_string(),
                r.replications.to_string(),
                r.failures.to_string(),
            ];
            for k in 0..6 {
                rec.push(fmt_opt(r.means[k]));
                rec.push(fmt_opt(r.std_errors[k]));
            }
            rec.extend([
                s.p.to_string(),
                s.n1.to_string(),
                s.n2.to_string(),
                s.sigma_kind.to_string(),
                s.b1.to_string(),
                s.b2.to_string(),
                s.alpha1.to_string(),
                s.alpha2.to_string(),
                s.n_prognostic_only.to_string(),
                s.n_prog_and_pred.to_string(),
                s.seed.to_string(),
            ]);
            out.write_record(rec).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }

    /// Per-replication metrics, one row per (replicate, method, tuning).
    pub fn write_raw_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["replicate".to_string(), "method".into(), "tuning".into()];
        header.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
        header.push("error".into());
        out.write_record(header).map_err(csv_err)?;
        for r in &self.raw {
            let mut rec = vec![r.replicate.to_string(), r.method.to_string(), r.tuning.to_string()];
            match &r.outcome {
                Ok(m) => {
                    rec.extend(m.values().iter().map(|v| fmt_opt(*v)));
                    rec.push(String::new());
                }
                Err(e) => {
                    rec.extend(std::iter::repeat_n(String::new(), 6));
                    rec.push(e.clone());
                }
            }
            out.write_record(rec).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }
}

/// Reads the rows written by [`ScenarioReport::write_csv`].
pub fn read_report_csv<R: io::Read>(r: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != report_header() {
        return Err(Error::InvalidInput("unexpected report header".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| -> Result<usize> {
            rec[i].parse().map_err(|_| Error::InvalidInput(format!("bad count '{}'", &rec[i])))
        };
        let mut means = [None; 6];
        let mut std_errors = [None; 6];
        for k in 0..6 {
            means[k] = parse_opt(&rec[4 + 2 * k])?;
            std_errors[k] = parse_opt(&rec[5 + 2 * k])?;
        }
        rows.push(ReportRow {
            method: rec[0].parse()?,
            tuning: rec[1].parse()?,
            replications: num(2)?,
            failures: num(3)?,
            means,
            std_errors,
        });
    }
    Ok(rows)
}
