//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion, then
//! fails if any criterion failed. Criterion 8 is the long 33-node run and
//! is ignored by default: `cargo test --release --test acceptance -- --ignored`.

mod common;

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use common::{exact, solve_case, tiny, CORRUPTIONS};
use smess_core::assembly::{assemble, structure_check, with_case};
use smess_core::scenario::{parse_scenario, CaseTag, MerClass, Scenario};
use smess_core::solver::{solve, write_mps, Schedule, SolveOptions, SolveResult};
use smess_core::validate::{brute_force_optimal, check_schedule, recompute_objective, resilience_series};

const OBJ_TOL: f64 = 1e-6;
const VALIDATION_TOL: f64 = 1e-6;
const SERIES_TOL: f64 = 1e-6;
const TABLE1_BUDGET: Duration = Duration::from_secs(10);
const ORACLE_BUDGET: Duration = Duration::from_secs(300);
const PHI_SWEEP: [f64; 5] = [1e-3, 1e-2, 0.1, 1.0, 10.0];
/// Sweep values forming the low band.
const LOW_BAND: usize = 3;
const PHI_DOUBLING_LIMIT: f64 = 1e9;
const SWEEP_INSTANCE: &str = "t4-mixed";
const CORRUPTION_INSTANCE: &str = "t4-mixed";
const EXTENDED_GAP: f64 = 0.01;
const EXTENDED_TIME_LIMIT_S: f64 = 7200.0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

/// Schedules returned by the solver for criteria 2 to 5.
#[derive(Default)]
struct Harvest {
    schedules: Vec<(String, Scenario, Schedule)>,
}

impl Harvest {
    fn keep(&mut self, label: String, sc: &Scenario, r: &SolveResult) {
        if let Some(s) = &r.schedule {
            self.schedules.push((label, sc.clone(), s.clone()));
        }
    }
}

fn report(n: usize, title: &str, o: &Outcome) {
    println!("criterion {n} [{}] {title}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let s = parse_scenario(common::IEEE33).unwrap();
    let a = assemble(&s).unwrap();
    let check = structure_check(&a.scenario, &a.counts).unwrap();
    let elapsed = start.elapsed();
    let names: Vec<&str> = check.deviations.iter().map(|d| d.name).collect();
    let allowed = names.iter().all(|n| ["disk-segments", "fuel-segments"].contains(n));
    let pass = check.pass() && allowed && elapsed < TABLE1_BUDGET;
    Outcome::new(
        pass,
        format!(
            "model {:?} vs formula {:?}, {} family mismatches, deviations {names:?}, {:.2}s",
            check.model_totals,
            check.closed_form,
            check.mismatches().len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion2(h: &mut Harvest) -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut checked = 0;
    for (name, s) in tiny() {
        for case in CaseTag::ALL {
            let (sc, r) = solve_case(&s, case);
            h.keep(format!("{name}/{case}"), &sc, &r);
            let oracle = brute_force_optimal(&sc).unwrap();
            checked += 1;
            match (r.objective, oracle.objective) {
                (Some(m), Some(o)) => {
                    worst = worst.max((m - o).abs());
                    if (m - o).abs() > OBJ_TOL {
                        failures.push(format!("{name}/{case}: milp {m} oracle {o}"));
                    }
                }
                (m, o) => failures.push(format!("{name}/{case}: milp {m:?} oracle {o:?}")),
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        failures.is_empty() && elapsed < ORACLE_BUDGET,
        format!("{checked} instance-cases, max |milp - oracle| = {worst:.1e}, {:.1}s {failures:?}", elapsed.as_secs_f64()),
    )
}

fn criterion3(h: &mut Harvest) -> Outcome {
    let mut failures = Vec::new();
    for (name, s) in tiny() {
        let (sc3, r3) = solve_case(&s, CaseTag::Case3);
        let (sc5, r5) = solve_case(&s, CaseTag::Case5);
        h.keep(format!("{name}/case3"), &sc3, &r3);
        h.keep(format!("{name}/case5"), &sc5, &r5);
        let sched3 = r3.schedule.as_ref().unwrap();
        let rep = check_schedule(&sc5, sched3, VALIDATION_TOL).unwrap();
        if !rep.pass() {
            failures.push(format!("{name}: case3 schedule violates case5 {:?}", rep.families()));
        }
        let (o3, o5) = (r3.objective.unwrap(), r5.objective.unwrap());
        if o5 < o3 - OBJ_TOL {
            failures.push(format!("{name}: obj5 {o5} < obj3 {o3}"));
        }
    }
    Outcome::new(failures.is_empty(), format!("5 instances {failures:?}"))
}

fn criterion4(h: &mut Harvest) -> Outcome {
    let mut failures = Vec::new();
    let mut table = String::new();
    for (name, s) in tiny() {
        let mut obj = Vec::new();
        let mut series = Vec::new();
        for case in CaseTag::ALL {
            let (sc, r) = solve_case(&s, case);
            h.keep(format!("{name}/{case}"), &sc, &r);
            obj.push(r.objective.unwrap());
            series.push(resilience_series(&sc, r.schedule.as_ref().unwrap()));
        }
        let _ = write!(table, "{name}={obj:?} ");
        let [o1, o2, _, o4, o5] = [obj[0], obj[1], obj[2], obj[3], obj[4]];
        if o1 > o2 + OBJ_TOL || o2 > o5 + OBJ_TOL || o4 > o5 + OBJ_TOL {
            failures.push(format!("{name}: ordering {obj:?}"));
        }
        for (p2, p5) in series[1].iter().zip(&series[4]) {
            if p2.served_kw > p5.served_kw + SERIES_TOL {
                failures.push(format!("{name}: span {} case2 {} kW > case5 {} kW", p2.span, p2.served_kw, p5.served_kw));
            }
        }
    }
    Outcome::new(failures.is_empty(), format!("{}{failures:?}", table))
}

/// Discrete part of a schedule: routes, pickups and the number of
/// exchanges per resource. Exchange timing is left out because moving an
/// exchange between parked spans changes neither cost nor served load.
fn signature(s: &Schedule) -> String {
    let mut out = String::new();
    for class in MerClass::ALL {
        for r in s.routes(class) {
            let _ = write!(out, "{:?}{:?};", r.parked, r.travelling);
        }
    }
    for g in &s.grid {
        let _ = write!(out, "{:?};", g.pickup);
    }
    let count = |tab: &Vec<Vec<bool>>| tab.iter().flatten().filter(|&&l| l).count();
    for m in &s.megs {
        let _ = write!(out, "{};", count(&m.exchanging));
    }
    for f in &s.tanker_fuel {
        let _ = write!(out, "{};", count(&f.exchanging));
    }
    out
}

fn solve_phi(s: &Scenario, phi: f64, h: &mut Harvest) -> (SolveResult, Scenario) {
    let mut sc = with_case(s, CaseTag::Case5);
    sc.study.phi_travel = phi;
    sc.study.phi_fuel = phi;
    let r = solve(&assemble(&sc).unwrap(), &exact()).unwrap();
    h.keep(format!("{}/phi={phi}", SWEEP_INSTANCE), &sc, &r);
    (r, sc)
}

fn criterion5(h: &mut Harvest) -> Outcome {
    let s = tiny().into_iter().find(|(n, _)| *n == SWEEP_INSTANCE).unwrap().1;
    let mut travel = Vec::new();
    let mut sigs = Vec::new();
    for phi in PHI_SWEEP {
        let (r, sc) = solve_phi(&s, phi, h);
        let sched = r.schedule.unwrap();
        travel.push(recompute_objective(&sc, &sched).travel_total());
        sigs.push(signature(&sched));
    }
    let monotone = travel.windows(2).all(|w| w[1] <= w[0]);
    let low_constant = sigs[..LOW_BAND].iter().all(|x| *x == sigs[0]);

    let mut phi = PHI_SWEEP[PHI_SWEEP.len() - 1];
    let mut prev: Option<String> = None;
    let (large_phi, breakdown) = loop {
        phi *= 2.0;
        let (r, sc) = solve_phi(&s, phi, h);
        let sched = r.schedule.unwrap();
        let b = recompute_objective(&sc, &sched);
        let sig = signature(&sched);
        let stable = prev.as_ref() == Some(&sig);
        prev = Some(sig);
        if (stable && b.travel_total() == 0) || phi > PHI_DOUBLING_LIMIT {
            break (phi, b);
        }
    };
    let only_energy = breakdown.travel_total() == 0 && breakdown.exchange_total() == 0 && (breakdown.total - breakdown.restored).abs() <= OBJ_TOL;
    Outcome::new(
        monotone && low_constant && only_energy,
        format!(
            "{SWEEP_INSTANCE}: travel {travel:?} over {PHI_SWEEP:?}, low band constant {low_constant}; phi {large_phi:e}: travel {}, exchanges {}, objective {} = restored {}",
            breakdown.travel_total(),
            breakdown.exchange_total(),
            breakdown.total,
            breakdown.restored
        ),
    )
}

fn criterion6(h: &Harvest) -> Outcome {
    let mut failures = Vec::new();
    for (label, sc, sched) in &h.schedules {
        let rep = check_schedule(sc, sched, VALIDATION_TOL).unwrap();
        if !rep.pass() {
            failures.push(format!("{label}: {:?}", rep.families()));
        }
    }
    let s = tiny().into_iter().find(|(n, _)| *n == CORRUPTION_INSTANCE).unwrap().1;
    let (sc, r) = solve_case(&s, CaseTag::Case5);
    let base = r.schedule.unwrap();
    let mut caught = 0;
    for c in &CORRUPTIONS {
        let mut sched = base.clone();
        if !(c.apply)(&sc, &mut sched) {
            failures.push(format!("{}: not applicable", c.name));
            continue;
        }
        let rep = check_schedule(&sc, &sched, VALIDATION_TOL).unwrap();
        if rep.has_family(c.family) {
            caught += 1;
        } else {
            failures.push(format!("{}: expected {}, got {:?}", c.name, c.family, rep.families()));
        }
    }
    Outcome::new(
        failures.is_empty() && CORRUPTIONS.len() >= 20,
        format!("{} solver schedules validated, {caught}/{} corruptions caught {failures:?}", h.schedules.len(), CORRUPTIONS.len()),
    )
}

fn criterion7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let s = parse_scenario(common::IEEE33).unwrap();
    let mut files = Vec::new();
    for run in 0..2 {
        let a = assemble(&s).unwrap();
        let mps = dir.path().join(format!("run{run}.mps"));
        let counts = dir.path().join(format!("run{run}.json"));
        std::fs::write(&mps, write_mps(&a.model, false)).unwrap();
        std::fs::write(&counts, serde_json::to_string_pretty(&a.counts).unwrap()).unwrap();
        files.push((std::fs::read(&mps).unwrap(), std::fs::read(&counts).unwrap()));
    }
    let files_equal = files[0] == files[1];
    let mut same_incumbents = true;
    for (_, sc) in tiny() {
        let a = assemble(&sc).unwrap();
        let opts = SolveOptions { gap: 0.0, ..Default::default() };
        let (x, y) = (solve(&a, &opts).unwrap(), solve(&a, &opts).unwrap());
        same_incumbents &= x.values == y.values && x.objective == y.objective;
    }
    Outcome::new(
        files_equal && same_incumbents,
        format!("model files identical {files_equal} ({} bytes), incumbents identical {same_incumbents}", files[0].0.len()),
    )
}

#[test]
fn acceptance_criteria() {
    let mut harvest = Harvest::default();
    let outcomes = [
        (1, "structural counts", criterion1()),
        (2, "oracle equivalence", criterion2(&mut harvest)),
        (3, "feasibility embedding", criterion3(&mut harvest)),
        (4, "case ordering", criterion4(&mut harvest)),
        (5, "weight sweep", criterion5(&mut harvest)),
        (6, "validator soundness", criterion6(&harvest)),
        (7, "determinism", criterion7()),
    ];
    for (n, title, o) in &outcomes {
        report(*n, title, o);
    }
    let failed: Vec<usize> = outcomes.iter().filter(|(_, _, o)| !o.pass).map(|(n, _, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}

#[test]
#[ignore = "long 33-node run"]
fn acceptance_extended_33_node() {
    let s = parse_scenario(common::IEEE33).unwrap();
    let opts = SolveOptions {
        gap: EXTENDED_GAP,
        time_limit: EXTENDED_TIME_LIMIT_S,
        ..Default::default()
    };
    let solve_with = |case| {
        let sc = with_case(&s, case);
        let r = solve(&assemble(&sc).unwrap(), &opts).unwrap();
        (sc, r)
    };
    let (sc5, r5) = solve_with(CaseTag::Case5);
    let (sc1, r1) = solve_with(CaseTag::Case1);
    let gap_ok = r5.gap.is_some_and(|g| g <= EXTENDED_GAP + 1e-9);
    let sched5 = r5.schedule.as_ref().expect("case5 incumbent");
    let rep = check_schedule(&sc5, sched5, VALIDATION_TOL).unwrap();
    let series5 = resilience_series(&sc5, sched5);
    let series1 = resilience_series(&sc1, r1.schedule.as_ref().expect("case1 incumbent"));
    let dominates = series5.iter().zip(&series1).all(|(a, b)| a.served_kw + SERIES_TOL >= b.served_kw);
    let o = Outcome::new(
        gap_ok && rep.pass() && dominates,
        format!(
            "case5 obj {:?} gap {:?} in {:.0}s, violations {}, dominates case1 {dominates}",
            r5.objective,
            r5.gap,
            r5.seconds,
            rep.violations.len()
        ),
    );
    report(8, "extended 33-node run", &o);
    assert!(o.pass);
}
