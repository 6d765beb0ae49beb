mod common;

use proptest::prelude::*;
use smess_core::assembly::assemble;
use smess_core::milp::{and_product, polygonal_disk, LinExpr, Literal, ModelIR, VarKind};
use smess_core::scenario::{parse_scenario, CaseTag};
use smess_core::solver::solve;
use smess_core::validate::{check_schedule, recompute_objective};

fn t3() -> smess_core::scenario::Scenario {
    common::tiny().into_iter().find(|(n, _)| *n == "t3-fuel").unwrap().1
}

proptest! {
    #[test]
    fn and_product_is_exact(signs in prop::collection::vec(any::<bool>(), 2..6), seed in any::<u32>()) {
        let mut m = ModelIR::new();
        let values: Vec<f64> = (0..signs.len()).map(|i| ((seed >> i) & 1) as f64).collect();
        let lits: Vec<Literal> = signs
            .iter()
            .zip(&values)
            .enumerate()
            .map(|(i, (&pos, &v))| {
                let var = m.add_var("lit", format!("l[{i}]"), VarKind::Binary, v, v);
                if pos { Literal::pos(var) } else { Literal::neg(var) }
            })
            .collect();
        let z = and_product(&mut m, &lits, "z", "and", "z[0]".into()).unwrap();
        let truth = signs.iter().zip(&values).all(|(&pos, &v)| (v == 1.0) == pos);
        for zv in [0.0, 1.0] {
            let mut vals = values.clone();
            vals.push(0.0);
            vals[z.0] = zv;
            let feasible = m.rows().iter().all(|r| r.violation(&vals) <= 1e-12);
            prop_assert_eq!(feasible, (zv == 1.0) == truth);
        }
    }

    #[test]
    fn disk_polygon_is_inscribed(half in 2usize..17, angle in 0.0f64..std::f64::consts::TAU, r in 0.1f64..10.0, scale in 0.0f64..1.5) {
        let k = 2 * half;
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", "x".into(), -100.0, 100.0);
        let y = m.add_continuous("y", "y".into(), -100.0, 100.0);
        polygonal_disk(&mut m, &LinExpr::term(x, 1.0), &LinExpr::term(y, 1.0), &LinExpr::constant(r), k, "disk", "d").unwrap();
        let rho = scale * r;
        let vals = [rho * angle.cos(), rho * angle.sin()];
        let feasible = m.rows().iter().all(|row| row.violation(&vals) <= 1e-9);
        let apothem = r * (std::f64::consts::PI / k as f64).cos();
        if rho <= apothem * (1.0 - 1e-9) {
            prop_assert!(feasible);
        }
        if rho > r * (1.0 + 1e-9) {
            prop_assert!(!feasible);
        }
    }

    #[test]
    fn scenario_round_trips(weights in prop::collection::vec(1u8..6, 6)) {
        for (_, mut s) in common::tiny() {
            for (node, w) in s.network.nodes.iter_mut().zip(&weights) {
                node.weight = *w as f64;
            }
            let again = parse_scenario(&s.to_json()).unwrap();
            prop_assert_eq!(&again, &s);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Total fuel in generators, tankers and sites falls exactly by the
    /// fuel burnt, and every module has exactly one owner per span.
    #[test]
    fn solved_schedules_conserve_fuel_and_ownership(
        meg_sof in 0.05f64..1.0,
        ft_sof in 0.0f64..1.0,
        phi in prop::sample::select(vec![1e-3, 0.1, 10.0]),
        case in prop::sample::select(CaseTag::ALL.to_vec()),
    ) {
        let mut s = t3();
        s.fleet.generators[0].sof_init = meg_sof;
        s.fleet.tankers[0].sof_init = ft_sof;
        s.study.phi_travel = phi;
        s.study.phi_fuel = phi;
        s.study.case = case;
        let a = assemble(&s).unwrap();
        let r = solve(&a, &common::exact()).unwrap();
        let sched = r.schedule.expect("feasible");
        let report = check_schedule(&s, &sched, 1e-6).unwrap();
        prop_assert!(report.pass(), "{:?}", report.violations);
        prop_assert!((recompute_objective(&s, &sched).total - r.objective.unwrap()).abs() < 1e-6);

        let g = &s.fleet.generators[0];
        let h = &s.fleet.tankers[0];
        let total = |t: usize| {
            g.fuel_capacity_l * sched.megs[0].sof[t]
                + h.fuel_capacity_l * sched.tanker_fuel[0].sof[t]
                + s.fleet.site_fuel.iter().zip(&sched.site_sof).map(|(sf, sof)| sf.capacity_l * sof[t]).sum::<f64>()
        };
        for t in 1..=s.time.span_count {
            let burnt: f64 = sched.megs[0].burn[t - 1].iter().sum();
            prop_assert!((total(t - 1) - burnt - total(t)).abs() < 1e-6 * g.fuel_capacity_l);
        }
        for m in &sched.modules {
            for t in 0..=s.time.span_count {
                let owners = m.owned_by_node[t].iter().chain(&m.carried_by[t]).filter(|&&x| x).count();
                prop_assert_eq!(owners, 1);
            }
        }
    }
}
