use std::ffi::{CStr, CString};
use std::ptr;

use smess_ffi::*;

const T1: &str = include_str!("../../core/data/tiny/t1-line.json");

fn parse(text: &str) -> *mut SmessScenario {
    let json = CString::new(text).unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { smess_scenario_parse(json.as_ptr(), &mut sc) }, SmessStatus::Ok);
    sc
}

#[test]
fn solve_validate_and_oracle_agree() {
    unsafe {
        let sc = parse(T1);
        let mut sched = ptr::null_mut();
        let mut obj = f64::NAN;
        let mut opts = smess_solve_options_default();
        opts.gap = 0.0;
        assert_eq!(smess_solve(sc, opts, &mut sched, &mut obj), SmessStatus::Ok);
        let mut count = usize::MAX;
        assert_eq!(smess_validate(sc, sched, 1e-6, &mut count), SmessStatus::Ok);
        assert_eq!(count, 0);
        let mut recomputed = f64::NAN;
        assert_eq!(smess_objective(sc, sched, &mut recomputed), SmessStatus::Ok);
        let mut oracle = f64::NAN;
        assert_eq!(smess_oracle(sc, &mut oracle), SmessStatus::Ok);
        assert!((obj - oracle).abs() < 1e-6 && (obj - recomputed).abs() < 1e-6);

        let json = smess_schedule_to_json(sched);
        assert!(!json.is_null());
        let mut again = ptr::null_mut();
        assert_eq!(smess_schedule_from_json(json, &mut again), SmessStatus::Ok);
        smess_string_free(json);
        assert_eq!(smess_validate(sc, again, 1e-6, &mut count), SmessStatus::Ok);

        smess_schedule_free(again);
        smess_schedule_free(sched);
        smess_scenario_free(sc);
    }
}

#[test]
fn case_variant_changes_optimum() {
    unsafe {
        let sc = parse(T1);
        assert_eq!(smess_scenario_set_case(sc, 2), SmessStatus::Ok);
        let mut obj = f64::NAN;
        assert_eq!(smess_oracle(sc, &mut obj), SmessStatus::Ok);
        assert!((obj - 180.0).abs() < 1e-6);
        assert_eq!(smess_scenario_set_case(sc, 9), SmessStatus::Input);
        smess_scenario_free(sc);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let bad = CString::new("{\"time\": 3}").unwrap();
        let mut sc = ptr::null_mut();
        assert_eq!(smess_scenario_parse(bad.as_ptr(), &mut sc), SmessStatus::Input);
        assert!(sc.is_null());
        let msg = CStr::from_ptr(smess_last_error()).to_str().unwrap();
        assert!(msg.contains("schema"), "{msg}");
        assert_eq!(smess_scenario_parse(ptr::null(), &mut sc), SmessStatus::NullPointer);
        let mut n = 0usize;
        assert_eq!(smess_validate(ptr::null(), ptr::null(), 1e-6, &mut n), SmessStatus::NullPointer);
        let sc = parse(T1);
        let mut opts = smess_solve_options_default();
        opts.backend = 7;
        let (mut sched, mut obj) = (ptr::null_mut(), 0.0);
        assert_eq!(smess_solve(sc, opts, &mut sched, &mut obj), SmessStatus::Input);
        smess_scenario_free(sc);
        assert!(!CStr::from_ptr(smess_version()).to_str().unwrap().is_empty());
    }
}

#[test]
fn header_declares_the_interface() {
    let header = include_str!("../include/smess.h");
    for name in [
        "SmessScenario",
        "SmessSchedule",
        "SMESS_STATUS_OK",
        "SMESS_STATUS_BACKEND",
        "smess_scenario_parse",
        "smess_solve",
        "smess_validate",
        "smess_oracle",
        "smess_last_error",
        "smess_string_free",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
