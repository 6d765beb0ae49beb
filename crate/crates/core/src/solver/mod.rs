//! Model export, MILP backends and solution decoding.
//!
//! Two backends are provided: HiGHS linked in-process (feature `highs`) and
//! CBC driven as an external process through an MPS file. Both maximise the
//! model objective. After the search, binaries are rounded and the
//! continuous part is re-solved with binaries fixed so that every returned
//! schedule is exactly integral.

mod cbc;
#[cfg(feature = "highs")]
mod highs;
mod mps;
mod schedule;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::Assembled;
use crate::error::{Error, Result};
use crate::milp::{ModelIR, VarKind};

pub use cbc::{cbc_path, CBC_ENV};
pub use mps::{read_mps, write_mps, MpsModel, OBJECTIVE_ROW};
pub use schedule::{
    extract_schedule, round_binaries, MegTrack, MerTrack, ModuleTrack, Schedule, SpanGrid, TankerTrack,
    BINARY_HARD_TOL, BINARY_ROUNDING_TOL,
};

/// Seed handed to every backend.
pub const SOLVER_SEED: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Highs,
    Cbc,
}

impl Backend {
    pub fn default_backend() -> Backend {
        if cfg!(feature = "highs") {
            Backend::Highs
        } else {
            Backend::Cbc
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Highs => "highs",
            Backend::Cbc => "cbc",
        })
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "highs" => Ok(Backend::Highs),
            "cbc" => Ok(Backend::Cbc),
            _ => Err(format!("unknown backend `{s}` (expected highs or cbc)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Relative optimality gap in `[0, 1)`.
    pub gap: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub backend: Backend,
    pub threads: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gap: 0.001,
            time_limit: 3600.0,
            backend: Backend::default_backend(),
            threads: 1,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gap) {
            return Err(Error::invariant("gap", "must lie in [0, 1)"));
        }
        if !(self.time_limit > 0.0) {
            return Err(Error::invariant("time_limit", "must be positive"));
        }
        if self.threads == 0 {
            return Err(Error::invariant("threads", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    GapLimit,
    TimeLimit,
    Infeasible,
    Error,
}

impl SolveStatus {
    pub fn has_incumbent_status(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::GapLimit | SolveStatus::TimeLimit)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::GapLimit => "gap-limit",
            SolveStatus::TimeLimit => "time-limit",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Error => "error",
        })
    }
}

/// Raw backend answer before rounding.
#[derive(Debug, Clone)]
pub(crate) struct RawSolution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub backend: Backend,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    /// `(bound - incumbent) / max(1, |bound|)`, clamped at 0.
    pub gap: Option<f64>,
    pub seconds: f64,
    /// Rounded and polished variable values.
    pub values: Option<Vec<f64>>,
    pub schedule: Option<Schedule>,
}

pub fn relative_gap(bound: f64, incumbent: f64) -> f64 {
    ((bound - incumbent) / bound.abs().max(1.0)).max(0.0)
}

fn run_backend(model: &ModelIR, options: &SolveOptions) -> Result<RawSolution> {
    match options.backend {
        #[cfg(feature = "highs")]
        Backend::Highs => highs::solve(model, options),
        #[cfg(not(feature = "highs"))]
        Backend::Highs => Err(Error::BackendMissing {
            backend: "highs".into(),
            message: "built without the `highs` feature".into(),
        }),
        Backend::Cbc => cbc::solve(model, options),
    }
}

/// Solve `model` and return rounded, polished values. The model is not
/// modified.
pub fn solve_model(model: &ModelIR, options: &SolveOptions) -> Result<SolveResult> {
    options.validate()?;
    let start = Instant::now();
    let raw = run_backend(model, options)?;
    let mut result = SolveResult {
        status: raw.status,
        backend: options.backend,
        objective: None,
        bound: raw.bound,
        gap: None,
        seconds: 0.0,
        values: None,
        schedule: None,
    };
    if let (Some(mut values), Some(obj)) = (raw.values, raw.objective) {
        round_binaries(model, &mut values)?;
        let mut incumbent = obj;
        let fixed = fixed_binaries(model, &values);
        let remaining = (options.time_limit - start.elapsed().as_secs_f64()).max(1.0);
        let polish_opts = SolveOptions {
            gap: 0.0,
            time_limit: remaining,
            ..options.clone()
        };
        if let Ok(p) = run_backend(&fixed, &polish_opts) {
            if let (SolveStatus::Optimal, Some(v), Some(o)) = (p.status, p.values, p.objective) {
                let mut v = v;
                if round_binaries(model, &mut v).is_ok() {
                    values = v;
                    incumbent = o;
                }
            }
        }
        result.objective = Some(incumbent);
        result.gap = raw.bound.map(|b| relative_gap(b, incumbent));
        result.values = Some(values);
    }
    result.seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Solve an assembled model and decode the schedule.
pub fn solve(assembled: &Assembled, options: &SolveOptions) -> Result<SolveResult> {
    let mut result = solve_model(&assembled.model, options)?;
    if let Some(values) = &result.values {
        result.schedule = Some(extract_schedule(assembled, values)?);
    }
    Ok(result)
}

/// Copy of `model` with every binary fixed at its value in `values`.
fn fixed_binaries(model: &ModelIR, values: &[f64]) -> ModelIR {
    let mut fixed = model.clone();
    for (i, def) in model.vars().iter().enumerate() {
        if def.kind == VarKind::Binary {
            fixed.set_bounds(crate::milp::VarId(i), values[i], values[i]);
        }
    }
    fixed
}
