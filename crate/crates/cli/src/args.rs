use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "pplasso", version, about = "Prognostic and predictive biomarker selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit PPLasso (and optional CV-tuned baselines) on a trial CSV.
    Fit(FitArgs),
    /// Run a simulation scenario and write the summary report CSV.
    Simulate(SimulateArgs),
    /// Rank correlation estimators by cross-validated risk.
    CovSelect(CovSelectArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV (header row, comma separated).
    pub input: Option<PathBuf>,
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Name of the response column.
    #[arg(long)]
    pub response: Option<String>,
    /// Name of the treatment column (values 1 and 2).
    #[arg(long)]
    pub treatment: Option<String>,
    /// Keep only the N highest-variance biomarkers.
    #[arg(long, value_name = "N")]
    pub top_variance: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ratio threshold for choosing K and M, in (0.5, 1).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of λ values on the path.
    #[arg(long, value_name = "SIZE")]
    pub lambda_grid: Option<usize>,
    /// `estimate`, or a CSV correlation matrix whose header names the biomarkers.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Covariance candidates, e.g. `sample,lw,dense,threshold:0.2,poet:1:0.1`.
    #[arg(long)]
    pub candidates: Option<String>,
    /// Comma list from pplasso, lasso, elastic_net, adaptive_lasso.
    #[arg(long)]
    pub methods: Option<String>,
    /// Cross-validation folds for the baselines.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Disable data-parallel execution.
    #[arg(long)]
    pub sequential: bool,
    /// Output path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    /// `bm`, `bm:a1:a2:a3`, `compound:rho` or `identity`.
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub b1: Option<f64>,
    #[arg(long)]
    pub b2: Option<f64>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    #[arg(long)]
    pub n_prognostic_only: Option<usize>,
    #[arg(long)]
    pub n_prog_and_pred: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma list from pplasso_oracle, pplasso_estimated, lasso,
    /// elastic_net, adaptive_lasso.
    #[arg(long)]
    pub methods: Option<String>,
    /// Comma list from bic, optimal (PPLasso only; baselines are always
    /// tuned optimally).
    #[arg(long)]
    pub tuning: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_name = "SIZE")]
    pub lambda_grid: Option<usize>,
    /// Also write per-replication metrics here.
    #[arg(long)]
    pub raw_out: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CovSelectArgs {
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Column to leave out of the biomarkers.
    #[arg(long)]
    pub response: Option<String>,
    /// Treatment column; biomarkers are centered within arms when given.
    #[arg(long)]
    pub treatment: Option<String>,
    #[arg(long, value_name = "N")]
    pub top_variance: Option<usize>,
    #[arg(long)]
    pub candidates: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
