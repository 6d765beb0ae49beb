use std::ffi::CString;
use std::os::raw::c_void;

use highs_sys::*;

use crate::error::{Error, Result};
use crate::milp::{ModelIR, Sense, VarKind};

use super::{RawSolution, SolveOptions, SolveStatus, SOLVER_SEED};

/// Owned HiGHS instance.
struct Handle(*mut c_void);

impl Drop for Handle {
    fn drop(&mut self) {
        // SAFETY: the pointer came from Highs_create and is destroyed once.
        unsafe { Highs_destroy(self.0) }
    }
}

fn fail(message: impl Into<String>) -> Error {
    Error::Backend {
        backend: "highs".into(),
        message: message.into(),
    }
}

fn c(s: &str) -> CString {
    CString::new(s).expect("option names have no NUL")
}

impl Handle {
    fn set_bool(&self, name: &str, v: bool) -> Result<()> {
        // SAFETY: valid handle and NUL-terminated name.
        let st = unsafe { Highs_setBoolOptionValue(self.0, c(name).as_ptr(), v as HighsInt) };
        check(st, name)
    }

    fn set_int(&self, name: &str, v: i64) -> Result<()> {
        // SAFETY: as above.
        let st = unsafe { Highs_setIntOptionValue(self.0, c(name).as_ptr(), v as HighsInt) };
        check(st, name)
    }

    fn set_double(&self, name: &str, v: f64) -> Result<()> {
        // SAFETY: as above.
        let st = unsafe { Highs_setDoubleOptionValue(self.0, c(name).as_ptr(), v) };
        check(st, name)
    }

    fn double_info(&self, name: &str) -> Option<f64> {
        let mut v = 0.0;
        // SAFETY: as above; `v` outlives the call.
        let st = unsafe { Highs_getDoubleInfoValue(self.0, c(name).as_ptr(), &mut v) };
        (st == kHighsStatusOk).then_some(v)
    }

    fn int_info(&self, name: &str) -> Option<HighsInt> {
        let mut v: HighsInt = 0;
        // SAFETY: as above.
        let st = unsafe { Highs_getIntInfoValue(self.0, c(name).as_ptr(), &mut v) };
        (st == kHighsStatusOk).then_some(v)
    }
}

fn check(status: HighsInt, what: &str) -> Result<()> {
    if status == kHighsStatusError {
        Err(fail(format!("rejected option or call `{what}`")))
    } else {
        Ok(())
    }
}

/// Solve in-process with a fixed seed. Primal solution status 2 means a
/// feasible point is available.
pub(crate) fn solve(model: &ModelIR, options: &SolveOptions) -> Result<RawSolution> {
    let n = model.num_vars();
    let rows = model.rows();
    let mut cost = vec![0.0; n];
    for &(v, c) in &model.objective().terms {
        cost[v.0] = c;
    }
    let lower: Vec<f64> = model.vars().iter().map(|d| d.lower).collect();
    let upper: Vec<f64> = model.vars().iter().map(|d| d.upper).collect();
    let integrality: Vec<HighsInt> = model
        .vars()
        .iter()
        .map(|d| match d.kind {
            VarKind::Binary => kHighsVarTypeInteger,
            VarKind::Continuous => kHighsVarTypeContinuous,
        })
        .collect();
    let mut row_lo = Vec::with_capacity(rows.len());
    let mut row_hi = Vec::with_capacity(rows.len());
    let mut start = Vec::with_capacity(rows.len());
    let mut index = Vec::new();
    let mut value = Vec::new();
    for r in rows {
        let (lo, hi) = match r.sense {
            Sense::Le => (f64::NEG_INFINITY, r.rhs),
            Sense::Ge => (r.rhs, f64::INFINITY),
            Sense::Eq => (r.rhs, r.rhs),
        };
        row_lo.push(lo);
        row_hi.push(hi);
        start.push(index.len() as HighsInt);
        for &(v, c) in &r.expr.terms {
            index.push(v.0 as HighsInt);
            value.push(c);
        }
    }

    // SAFETY: Highs_create returns an owned instance released by Handle.
    let h = Handle(unsafe { Highs_create() });
    if h.0.is_null() {
        return Err(fail("could not create an instance"));
    }
    h.set_bool("output_flag", false)?;
    h.set_int("random_seed", SOLVER_SEED as i64)?;
    h.set_int("threads", options.threads as i64)?;
    h.set_double("mip_rel_gap", options.gap)?;
    h.set_double("time_limit", options.time_limit)?;
    h.set_double("mip_feasibility_tolerance", 1e-8)?;
    h.set_double("primal_feasibility_tolerance", 1e-9)?;

    // SAFETY: every array has the length HiGHS expects for a row-wise matrix
    // and stays alive until the call returns.
    let st = unsafe {
        Highs_passMip(
            h.0,
            n as HighsInt,
            rows.len() as HighsInt,
            index.len() as HighsInt,
            kHighsMatrixFormatRowwise,
            kHighsObjSenseMaximize,
            model.objective().constant,
            cost.as_ptr(),
            lower.as_ptr(),
            upper.as_ptr(),
            row_lo.as_ptr(),
            row_hi.as_ptr(),
            start.as_ptr(),
            index.as_ptr(),
            value.as_ptr(),
            integrality.as_ptr(),
        )
    };
    check(st, "passMip")?;
    // SAFETY: valid handle with a loaded model.
    let run = unsafe { Highs_run(h.0) };
    if run == kHighsStatusError {
        return Ok(RawSolution {
            status: SolveStatus::Error,
            objective: None,
            bound: None,
            values: None,
        });
    }
    // SAFETY: valid handle.
    let model_status = unsafe { Highs_getModelStatus(h.0) };
    let has_solution = h.int_info("primal_solution_status") == Some(2);
    let objective = has_solution.then(|| unsafe { Highs_getObjectiveValue(h.0) });
    let bound = if n > 0 && integrality.iter().any(|&i| i == kHighsVarTypeInteger) {
        h.double_info("mip_dual_bound").filter(|b| b.is_finite())
    } else {
        objective
    };
    let status = match model_status {
        s if s == kHighsModelStatusOptimal || s == kHighsModelStatusModelEmpty => {
            match (objective, bound) {
                (Some(o), Some(b)) if super::relative_gap(b, o) > 1e-9 => SolveStatus::GapLimit,
                _ => SolveStatus::Optimal,
            }
        }
        s if s == kHighsModelStatusInfeasible => SolveStatus::Infeasible,
        s if s == kHighsModelStatusTimeLimit => SolveStatus::TimeLimit,
        _ => SolveStatus::Error,
    };
    let values = if has_solution {
        let mut col = vec![0.0; n];
        let mut col_dual = vec![0.0; n];
        let mut row = vec![0.0; rows.len()];
        let mut row_dual = vec![0.0; rows.len()];
        // SAFETY: buffers sized to the column and row counts.
        unsafe {
            Highs_getSolution(
                h.0,
                col.as_mut_ptr(),
                col_dual.as_mut_ptr(),
                row.as_mut_ptr(),
                row_dual.as_mut_ptr(),
            )
        };
        Some(col)
    } else {
        None
    };
    Ok(RawSolution {
        status,
        objective,
        bound,
        values,
    })
}
