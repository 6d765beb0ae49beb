//! Independent checks of solver output: constraint semantics of a
//! schedule, the recomputed objective, the served-load series and an
//! exhaustive reference optimum for tiny instances.
//!
//! Nothing here reads the model rows; every check works from the scenario
//! and the decoded schedule.

mod check;
mod objective;
mod oracle;

pub use check::{check_schedule, Violation, ViolationReport, COVERAGE};
pub use objective::{recompute_objective, resilience_series, series_table, ObjectiveBreakdown, ResiliencePoint};
pub use oracle::{brute_force_optimal, brute_force_optimal_with, OracleLimits, OracleResult};

/// Default residual tolerance of [`check_schedule`].
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
