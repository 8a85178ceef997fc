//! Experiment driver: configuration, runs and CSV reports.

pub mod config;
pub mod report;
pub mod runs;

pub use config::{ErrorKind, ExperimentConfig, ProblemConfig, ProblemKind, RunConfig, TauSweep};
pub use report::{
    emit_csv, error_linf, error_linf_window, loglog_slope, observed_order, ComparisonCell,
    ComparisonReport, ConvergenceReport, ConvergenceRow, CsvReport, ResonanceReport, ResonanceRow,
    TraceReport, TraceRow,
};
pub use runs::{
    build_problem, run_comparison, run_convergence, run_interior_convergence, run_resonance,
    run_trace, Problem, COMPARISON_COEFFICIENTS, COMPARISON_DEFAULT_TAU, COMPARISON_REACTIONS,
    COMPARISON_TIMES,
};
