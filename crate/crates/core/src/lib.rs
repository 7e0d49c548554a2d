//! Simultaneous selection of prognostic and predictive biomarkers in two-arm
//! trials with many correlated biomarkers.
//!
//! The pipeline fits a split-penalty Lasso on the treatment-by-biomarker
//! design, moves the estimate into the decorrelated ("whitened") coordinate
//! system defined by the biomarker correlation matrix, corrects it there with
//! a Top-K thresholding step, maps it back, thresholds again and finally
//! picks the penalty level by BIC.
//!
//! Modules:
//!
//! * [`covariance`]: correlation estimators, cross-validated estimator choice
//!   and symmetric matrix roots.
//! * [`design`] and [`solver`]: trial data, design layouts and the weighted
//!   coordinate-descent solvers (Lasso, Elastic Net, Adaptive Lasso).
//! * [`pplasso`]: the thresholding pipeline and BIC selection.
//! * [`simulation`]: synthetic scenarios, selection metrics and the
//!   replication runner used for benchmarking.

pub mod covariance;
pub mod design;
pub mod error;
pub mod linalg;
pub mod parallel;
pub mod pplasso;
pub mod simulation;
pub mod solver;

pub use covariance::{CovarianceModel, EstimatorCandidate};
pub use design::{DesignMatrix, Layout, TrialData};
pub use error::{Error, Result};
pub use parallel::Execution;
pub use pplasso::{PPLassoConfig, PPLassoResult};
pub use simulation::{Metrics, Scenario, ScenarioReport};
