//! The same models solved through the in-process and the external backend.

mod common;

use common::tiny;
use smess_core::assembly::{assemble, with_case};
use smess_core::scenario::CaseTag;
use smess_core::solver::{cbc_path, solve, Backend, SolveOptions};
use smess_core::validate::check_schedule;

#[test]
fn highs_and_cbc_agree_on_tiny_optima() {
    if cbc_path().is_none() {
        eprintln!("cbc not found; skipping");
        return;
    }
    for (name, s) in tiny() {
        for case in [CaseTag::Case2, CaseTag::Case5] {
            let sc = with_case(&s, case);
            let a = assemble(&sc).unwrap();
            let mut objs = Vec::new();
            for backend in [Backend::Highs, Backend::Cbc] {
                let opts = SolveOptions {
                    gap: 0.0,
                    backend,
                    ..Default::default()
                };
                let r = solve(&a, &opts).unwrap();
                let sched = r.schedule.as_ref().expect("feasible");
                let report = check_schedule(&sc, sched, 1e-6).unwrap();
                assert!(report.pass(), "{name} {case} {backend}: {:?}", report.violations);
                objs.push(r.objective.unwrap());
            }
            assert!((objs[0] - objs[1]).abs() < 1e-6, "{name} {case}: {objs:?}");
        }
    }
}
