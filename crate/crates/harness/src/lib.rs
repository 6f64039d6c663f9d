//! Formula-verification suite, convergence experiment and report output for
//! the Brinkman limit of a dilute suspension.

pub mod config;
pub mod convergence;
pub mod report;
pub mod suite;

pub use config::{ExperimentConfig, Method, SolverChoice};
pub use convergence::{run_convergence, run_convergence_with, ConvergenceReport, ReportRow};
pub use report::{emit_report, load_report, ReportFormat, CSV_COLUMNS};
pub use suite::{check_names, run_check, run_formula_suite, CheckResult, Fault, SuiteReport};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] brinkman_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit status: 2 for configuration problems, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}
