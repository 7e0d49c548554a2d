use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use pplasso::covariance::{self, EstimatorCandidate, DEFAULT_FLOOR_RATIO, DEFAULT_FOLDS};
use pplasso::design::{build_design, star_to_block, Layout};
use pplasso::pplasso::{fit_pplasso_path, CovarianceSource, PPLassoConfig};
use pplasso::simulation::{self, BenchmarkConfig, Method, Scenario, SigmaKind, Tuning};
use pplasso::solver::{self, CdSettings, CvChoice};
use pplasso::{Execution, ScenarioReport, TrialData};

use crate::args::{CovSelectArgs, FitArgs, SimulateArgs};
use crate::config::{parse_list, ConfigFile};
use crate::error::{CliError, CliResult};
use crate::input::{self, RawCsv};
use crate::output::{
    self, BaselineDoc, BicRow, CoefRow, DataSummary, FitDocument, FitSettingsDoc, PPLassoDoc, RiskRow,
};

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn required<T>(v: Option<T>, key: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::validation(format!("missing required setting '{key}'")))
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::validation(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn candidates(text: Option<String>) -> CliResult<Vec<EstimatorCandidate>> {
    match text {
        None => Ok(covariance::default_candidates()),
        Some(t) => parse_list(&t, "candidates", EstimatorCandidate::parse),
    }
}

/// Baseline methods the `fit` command can run besides PPLasso.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    PPLasso,
    Lasso,
    ElasticNet,
    AdaptiveLasso,
}

impl FitMethod {
    pub fn parse(s: &str) -> pplasso::Result<Self> {
        match s {
            "pplasso" => Ok(FitMethod::PPLasso),
            "lasso" => Ok(FitMethod::Lasso),
            "elastic_net" => Ok(FitMethod::ElasticNet),
            "adaptive_lasso" => Ok(FitMethod::AdaptiveLasso),
            _ => Err(pplasso::Error::InvalidInput(format!("unknown method '{s}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitMethod::PPLasso => "pplasso",
            FitMethod::Lasso => "lasso",
            FitMethod::ElasticNet => "elastic_net",
            FitMethod::AdaptiveLasso => "adaptive_lasso",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub input: PathBuf,
    pub response: String,
    pub treatment: String,
    pub top_variance: Option<usize>,
    pub seed: u64,
    pub delta: f64,
    pub lambda_grid: usize,
    /// `None` means estimate.
    pub sigma_file: Option<PathBuf>,
    pub candidates: Vec<EstimatorCandidate>,
    pub methods: Vec<FitMethod>,
    pub folds: usize,
    pub exec: Execution,
    pub out: Option<PathBuf>,
}

impl FitConfig {
    pub fn resolve(args: FitArgs) -> CliResult<Self> {
        let mut file = ConfigFile::load(args.config.as_deref())?;
        let input = required(file.pick(args.input, "input")?, "input")?;
        let response = required(file.pick(args.response, "response")?, "response")?;
        let treatment = required(file.pick(args.treatment, "treatment")?, "treatment")?;
        let top_variance = file.pick(args.top_variance, "top_variance")?;
        if top_variance == Some(0) {
            return Err(CliError::validation("top_variance must be at least 1"));
        }
        let seed = file.pick(args.seed, "seed")?.unwrap_or(0);
        let delta = file.pick(args.delta, "delta")?.unwrap_or(0.95);
        let lambda_grid = file
            .pick(args.lambda_grid, "lambda_grid")?
            .unwrap_or(solver::DEFAULT_GRID_SIZE);
        let sigma: String = file.pick(args.sigma, "sigma")?.unwrap_or_else(|| "estimate".into());
        let sigma_file = (sigma != "estimate").then(|| PathBuf::from(sigma));
        let candidates = candidates(file.pick(args.candidates, "candidates")?)?;
        let methods = match file.pick::<String>(args.methods, "methods")? {
            None => vec![FitMethod::PPLasso],
            Some(t) => parse_list(&t, "methods", FitMethod::parse)?,
        };
        let folds = file.pick(args.folds, "folds")?.unwrap_or(DEFAULT_FOLDS);
        let sequential = file.pick_switch(args.sequential, "sequential")?;
        let out = file.pick(args.out, "out")?;
        file.finish()?;
        Ok(FitConfig {
            input,
            response,
            treatment,
            top_variance,
            seed,
            delta,
            lambda_grid,
            sigma_file,
            candidates,
            methods,
            folds,
            exec: exec(sequential),
            out,
        })
    }
}

fn coef_rows(data: &TrialData, beta1: &DVector<f64>, beta2: &DVector<f64>) -> Vec<CoefRow> {
    (0..data.p())
        .filter(|&j| beta1[j] != 0.0 || beta2[j] != 0.0)
        .map(|j| CoefRow {
            biomarker: data.names()[j].clone(),
            beta1: beta1[j],
            beta2: beta2[j],
            beta2_minus_beta1: beta2[j] - beta1[j],
        })
        .collect()
}

fn names_of(data: &TrialData, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&j| data.names()[j].clone()).collect()
}

fn baseline_doc(data: &TrialData, method: FitMethod, mixing: f64, cv: &CvChoice) -> BaselineDoc {
    let p = data.p();
    let theta = &cv.fit.coefficients[cv.index];
    let gamma = star_to_block(theta, p);
    let beta1 = gamma.rows(2, p).into_owned();
    let beta2 = gamma.rows(2 + p, p).into_owned();
    let prog: Vec<usize> = (0..p).filter(|&j| theta[2 + j] != 0.0).collect();
    let pred: Vec<usize> = (0..p).filter(|&j| theta[2 + p + j] != 0.0).collect();
    BaselineDoc {
        method: method.name().into(),
        tuning: String::new(),
        mixing,
        lambda: cv.lambda,
        cv_error: cv.cv_error[cv.index],
        alpha: [gamma[0], gamma[1]],
        prognostic: names_of(data, &prog),
        predictive: names_of(data, &pred),
        coefficients: coef_rows(data, &beta1, &beta2),
    }
}

fn run_baseline(data: &TrialData, method: FitMethod, cfg: &FitConfig) -> CliResult<BaselineDoc> {
    let star = build_design(data, Layout::Star);
    let y = data.response();
    let factors = solver::split_factors(data.p(), 1.0);
    let settings = CdSettings::default();
    let cv = |factors: &[f64], alpha: f64| {
        solver::cv_path(&star, y, factors, alpha, cfg.lambda_grid, cfg.folds, cfg.seed, settings)
    };
    let mut doc = match method {
        FitMethod::Lasso => baseline_doc(data, method, 1.0, &cv(&factors, 1.0)?),
        FitMethod::AdaptiveLasso => {
            let init = solver::adaptive_initial(&star.matrix, y, &factors)?;
            let weighted = solver::adaptive_factors(&factors, &init, 1.0);
            baseline_doc(data, method, 1.0, &cv(&weighted, 1.0)?)
        }
        FitMethod::ElasticNet => {
            let mut best: Option<(f64, CvChoice)> = None;
            for k in 1..=9 {
                let alpha = k as f64 / 10.0;
                let choice = cv(&factors, alpha)?;
                let better = best
                    .as_ref()
                    .is_none_or(|(_, b)| choice.cv_error[choice.index] < b.cv_error[b.index]);
                if better {
                    best = Some((alpha, choice));
                }
            }
            let (alpha, choice) = best.expect("alpha grid is not empty");
            baseline_doc(data, method, alpha, &choice)
        }
        FitMethod::PPLasso => unreachable!("not a baseline"),
    };
    doc.tuning = format!("cv{}", cfg.folds);
    Ok(doc)
}

pub fn run_fit(cfg: &FitConfig) -> CliResult<FitDocument> {
    let raw = RawCsv::open(&cfg.input)?;
    let mut data = input::trial_from_csv(&raw, &cfg.response, &cfg.treatment)?;
    let in_file = data.p();
    if let Some(n) = cfg.top_variance {
        let keep = input::top_variance_columns(data.biomarkers(), n);
        data = data.select_biomarkers(&keep);
    }
    let data = data.standardized().map_err(|e| input::name_columns(e, data.names()))?;

    let mut pplasso_doc = None;
    if cfg.methods.contains(&FitMethod::PPLasso) {
        let config = PPLassoConfig {
            delta: cfg.delta,
            lambda_grid_size: cfg.lambda_grid,
            seed: cfg.seed,
            exec: cfg.exec,
            ..PPLassoConfig::default()
        };
        let oracle;
        let source = match &cfg.sigma_file {
            Some(path) => {
                oracle = input::read_oracle_sigma(path, data.names(), DEFAULT_FLOOR_RATIO)?;
                CovarianceSource::Given(&oracle)
            }
            None => CovarianceSource::Estimate(cfg.candidates.clone()),
        };
        let path = fit_pplasso_path(&data, source, &config)?;
        let r = path.select_bic(&data)?;
        pplasso_doc = Some(PPLassoDoc {
            covariance_estimator: r.covariance_tag.clone(),
            covariance_risk: path.risk_table.iter().map(RiskRow::from).collect(),
            lambda: r.lambda_selected,
            lambda_index: r.selected_index,
            k: [r.k.0, r.k.1],
            m: [r.m.0, r.m.1],
            alpha: [r.alpha_hat.0, r.alpha_hat.1],
            prognostic: names_of(&data, &r.prognostic),
            predictive: names_of(&data, &r.predictive),
            coefficients: coef_rows(&data, &r.beta1_hat, &r.beta2_hat),
            bic_table: r.bic_table.iter().map(BicRow::from).collect(),
        });
    }

    let baselines = cfg
        .methods
        .iter()
        .filter(|&&m| m != FitMethod::PPLasso)
        .map(|&m| run_baseline(&data, m, cfg))
        .collect::<CliResult<Vec<_>>>()?;

    Ok(FitDocument {
        command: "fit".into(),
        data: DataSummary {
            n: data.n(),
            n1: data.n1(),
            n2: data.n2(),
            biomarkers_in_file: in_file,
            biomarkers_used: data.p(),
            response: cfg.response.clone(),
            treatment: cfg.treatment.clone(),
            standardized: true,
        },
        settings: FitSettingsDoc {
            seed: cfg.seed,
            delta: cfg.delta,
            lambda_grid: cfg.lambda_grid,
            sigma: cfg
                .sigma_file
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "estimate".into()),
            top_variance: cfg.top_variance,
            methods: cfg.methods.iter().map(|m| m.name().to_string()).collect(),
        },
        pplasso: pplasso_doc,
        baselines,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub tunings: Vec<Tuning>,
    pub bench: BenchmarkConfig,
    pub raw_out: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl SimulateConfig {
    pub fn resolve(args: SimulateArgs) -> CliResult<Self> {
        let mut file = ConfigFile::load(args.config.as_deref())?;
        let d = Scenario::default();
        let sigma_kind = match file.pick::<String>(args.sigma, "sigma")? {
            None => d.sigma_kind,
            Some(s) => s.parse::<SigmaKind>()?,
        };
        let scenario = Scenario {
            p: file.pick(args.p, "p")?.unwrap_or(d.p),
            n1: file.pick(args.n1, "n1")?.unwrap_or(d.n1),
            n2: file.pick(args.n2, "n2")?.unwrap_or(d.n2),
            sigma_kind,
            b1: file.pick(args.b1, "b1")?.unwrap_or(d.b1),
            b2: file.pick(args.b2, "b2")?.unwrap_or(d.b2),
            alpha1: file.pick(args.alpha1, "alpha1")?.unwrap_or(d.alpha1),
            alpha2: file.pick(args.alpha2, "alpha2")?.unwrap_or(d.alpha2),
            n_prognostic_only: file
                .pick(args.n_prognostic_only, "n_prognostic_only")?
                .unwrap_or(d.n_prognostic_only),
            n_prog_and_pred: file.pick(args.n_prog_and_pred, "n_prog_and_pred")?.unwrap_or(d.n_prog_and_pred),
            replications: file.pick(args.replications, "replications")?.unwrap_or(d.replications),
            seed: file.pick(args.seed, "seed")?.unwrap_or(d.seed),
        };
        scenario.validate()?;
        let methods = match file.pick::<String>(args.methods, "methods")? {
            None => Method::ALL.to_vec(),
            Some(t) => parse_list(&t, "methods", str::parse)?,
        };
        let tunings = match file.pick::<String>(args.tuning, "tuning")? {
            None => vec![Tuning::Bic, Tuning::Optimal],
            Some(t) => parse_list(&t, "tuning", str::parse)?,
        };
        let mut bench = BenchmarkConfig::default();
        bench.pplasso.delta = file.pick(args.delta, "delta")?.unwrap_or(bench.pplasso.delta);
        let grid = file.pick(args.lambda_grid, "lambda_grid")?.unwrap_or(bench.grid_size);
        bench.grid_size = grid;
        bench.pplasso.lambda_grid_size = grid;
        bench.pplasso.seed = scenario.seed;
        bench.pplasso.validate()?;
        bench.exec = exec(file.pick_switch(args.sequential, "sequential")?);
        let raw_out = file.pick(args.raw_out, "raw_out")?;
        let out = file.pick(args.out, "out")?;
        file.finish()?;
        Ok(SimulateConfig { scenario, methods, tunings, bench, raw_out, out })
    }
}

pub fn run_simulate(cfg: &SimulateConfig) -> CliResult<ScenarioReport> {
    Ok(simulation::run_scenario(&cfg.scenario, &cfg.methods, &cfg.tunings, &cfg.bench)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovSelectConfig {
    pub input: PathBuf,
    pub response: Option<String>,
    pub treatment: Option<String>,
    pub top_variance: Option<usize>,
    pub candidates: Vec<EstimatorCandidate>,
    pub folds: usize,
    pub seed: u64,
    pub exec: Execution,
    pub out: Option<PathBuf>,
}

impl CovSelectConfig {
    pub fn resolve(args: CovSelectArgs) -> CliResult<Self> {
        let mut file = ConfigFile::load(args.config.as_deref())?;
        let input = required(file.pick(args.input, "input")?, "input")?;
        let response = file.pick(args.response, "response")?;
        let treatment = file.pick(args.treatment, "treatment")?;
        let top_variance = file.pick(args.top_variance, "top_variance")?;
        if top_variance == Some(0) {
            return Err(CliError::validation("top_variance must be at least 1"));
        }
        let candidates = candidates(file.pick(args.candidates, "candidates")?)?;
        let folds = file.pick(args.folds, "folds")?.unwrap_or(DEFAULT_FOLDS);
        let seed = file.pick(args.seed, "seed")?.unwrap_or(0);
        let sequential = file.pick_switch(args.sequential, "sequential")?;
        let out = file.pick(args.out, "out")?;
        file.finish()?;
        Ok(CovSelectConfig {
            input,
            response,
            treatment,
            top_variance,
            candidates,
            folds,
            seed,
            exec: exec(sequential),
            out,
        })
    }
}

pub fn run_cov_select(cfg: &CovSelectConfig) -> CliResult<Vec<RiskRow>> {
    let raw = RawCsv::open(&cfg.input)?;
    let skip: Vec<usize> = [&cfg.response, &cfg.treatment]
        .into_iter()
        .flatten()
        .map(|name| raw.column(name))
        .collect::<CliResult<_>>()?;
    let cols: Vec<usize> = (0..raw.headers.len()).filter(|j| !skip.contains(j)).collect();
    if cols.is_empty() {
        return Err(CliError::validation("no biomarker columns"));
    }
    let mut x = raw.matrix(&cols)?;
    let mut names: Vec<String> = cols.iter().map(|&j| raw.headers[j].clone()).collect();
    if let Some(n) = cfg.top_variance {
        let keep = input::top_variance_columns(&x, n);
        x = x.select_columns(&keep);
        names = keep.iter().map(|&j| names[j].clone()).collect();
    }
    if let Some(t) = &cfg.treatment {
        let arms = input::treatment_labels(&raw, raw.column(t)?)?;
        let data = TrialData::new(DVector::zeros(x.nrows()), arms, x, names.clone())?;
        x = data.arm_centered_biomarkers();
    }
    let (_, table) = covariance::cv_select(&cfg.candidates, &x, cfg.folds, cfg.seed, cfg.exec)
        .map_err(|e| input::name_columns(e, &names))?;
    Ok(table.iter().map(RiskRow::from).collect())
}

pub fn fit(args: FitArgs) -> CliResult<()> {
    let cfg = FitConfig::resolve(args)?;
    let doc = run_fit(&cfg)?;
    let out = open_out(cfg.out.as_deref())?;
    output::write_json(out, &doc)
}

pub fn simulate(args: SimulateArgs) -> CliResult<()> {
    let cfg = SimulateConfig::resolve(args)?;
    let report = run_simulate(&cfg)?;
    let failures = report.failures();
    if failures > 0 {
        eprintln!("warning: {failures} method fit(s) failed and were left out of the means");
    }
    report.write_csv(open_out(cfg.out.as_deref())?)?;
    if let Some(path) = &cfg.raw_out {
        report.write_raw_csv(open_out(Some(path))?)?;
    }
    Ok(())
}

pub fn cov_select(args: CovSelectArgs) -> CliResult<()> {
    let cfg = CovSelectConfig::resolve(args)?;
    let rows = run_cov_select(&cfg)?;
    output::write_risk_table(open_out(cfg.out.as_deref())?, &rows)
}
