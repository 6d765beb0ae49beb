mod common;

use common::{solve_case, tiny, CORRUPTIONS};
use smess_core::assembly::{assemble, with_case};
use smess_core::scenario::{parse_scenario, CaseTag};
use smess_core::validate::{check_schedule, recompute_objective, COVERAGE, DEFAULT_TOLERANCE};

#[test]
fn every_model_family_has_a_check() {
    let mut scenarios: Vec<_> = tiny().into_iter().map(|(_, s)| s).collect();
    scenarios.push(parse_scenario(common::IEEE33).unwrap());
    for s in scenarios {
        for case in CaseTag::ALL {
            let mut sc = with_case(&s, case);
            sc.study.strict_pickup = true;
            let a = assemble(&sc).unwrap();
            for family in a.counts.rows.keys() {
                assert!(COVERAGE.iter().any(|(f, _)| f == family), "family {family} has no check");
            }
        }
    }
}

#[test]
fn solver_schedules_validate_and_reproduce_objective() {
    for (name, s) in tiny() {
        for case in CaseTag::ALL {
            let (sc, r) = solve_case(&s, case);
            let sched = r.schedule.expect("tiny instances are feasible");
            let report = check_schedule(&sc, &sched, DEFAULT_TOLERANCE).unwrap();
            assert!(report.pass(), "{name} {case}: {:?}", report.violations);
            let total = recompute_objective(&sc, &sched).total;
            assert!((total - r.objective.unwrap()).abs() < 1e-6, "{name} {case}: {total} vs {:?}", r.objective);
        }
    }
}

#[test]
fn corruptions_name_their_family() {
    let s = tiny().into_iter().find(|(n, _)| *n == "t4-mixed").unwrap().1;
    let (sc, r) = solve_case(&s, CaseTag::Case5);
    let base = r.schedule.unwrap();
    for c in &CORRUPTIONS {
        let mut sched = base.clone();
        assert!((c.apply)(&sc, &mut sched), "{} not applicable", c.name);
        let report = check_schedule(&sc, &sched, DEFAULT_TOLERANCE).unwrap();
        assert!(report.has_family(c.family), "{}: expected {}, got {:?}", c.name, c.family, report.families());
    }
}

#[test]
fn dimension_mismatch_is_an_error() {
    let s = tiny().remove(0).1;
    let (sc, r) = solve_case(&s, CaseTag::Case5);
    let mut sched = r.schedule.unwrap();
    sched.grid.pop();
    assert!(check_schedule(&sc, &sched, DEFAULT_TOLERANCE).is_err());
}
