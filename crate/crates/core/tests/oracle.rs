mod common;

use common::{solve_case, tiny, ORACLE_OPTIMA};
use smess_core::assembly::with_case;
use smess_core::scenario::CaseTag;
use smess_core::validate::{brute_force_optimal, OracleLimits};
use smess_core::Error;

#[test]
fn oracle_matches_frozen_optima() {
    for ((name, s), (frozen_name, values)) in tiny().into_iter().zip(ORACLE_OPTIMA) {
        assert_eq!(name, frozen_name);
        for (case, want) in CaseTag::ALL.into_iter().zip(values) {
            let got = brute_force_optimal(&with_case(&s, case)).unwrap().objective.unwrap();
            assert!((got - want).abs() < 1e-6, "{name} {case}: oracle {got}, frozen {want}");
        }
    }
}

#[test]
fn milp_matches_oracle() {
    for (name, s) in tiny() {
        for case in CaseTag::ALL {
            let (sc, r) = solve_case(&s, case);
            let o = brute_force_optimal(&sc).unwrap();
            let (m, b) = (r.objective.unwrap(), o.objective.unwrap());
            assert!((m - b).abs() < 1e-6, "{name} {case}: milp {m}, oracle {b}");
        }
    }
}

#[test]
fn oracle_rejects_large_and_unsupported_instances() {
    let big = smess_core::scenario::parse_scenario(common::IEEE33).unwrap();
    assert!(matches!(brute_force_optimal(&big), Err(Error::InstanceTooLarge(_))));
    let mut s = tiny().remove(0).1;
    s.study.strict_pickup = true;
    assert!(matches!(brute_force_optimal(&s), Err(Error::OracleUnsupported(_))));
    let s = tiny().remove(0).1;
    let limits = OracleLimits {
        max_spans: 2,
        ..Default::default()
    };
    assert!(matches!(
        smess_core::validate::brute_force_optimal_with(&s, &limits),
        Err(Error::InstanceTooLarge(_))
    ));
}

#[test]
fn oracle_tracks_phi_trade_off() {
    let s = tiny().into_iter().find(|(n, _)| *n == "t1-line").unwrap().1;
    let mut cheap = s.clone();
    cheap.study.phi_travel = 1e-3;
    let mut dear = s.clone();
    dear.study.phi_travel = 1e4;
    let (a, b) = (brute_force_optimal(&cheap).unwrap(), brute_force_optimal(&dear).unwrap());
    assert!(a.travel_spans >= 1);
    assert_eq!(b.travel_spans, 0);
    assert!(b.restored <= a.restored);
}
