mod common;

use common::tiny;
use smess_core::assembly::{assemble, structure_check, with_case, CASE1_FAMILY, CASE2_FAMILY, CASE3_FAMILY, CASE4_FAMILY, STRICT_PICKUP_FAMILY};
use smess_core::scenario::{parse_scenario, CaseTag};
use smess_core::solver::{read_mps, write_mps};

#[test]
fn tiny_base_models_match_closed_forms() {
    for (name, s) in tiny() {
        let a = assemble(&with_case(&s, CaseTag::Case5)).unwrap();
        let check = structure_check(&a.scenario, &a.counts).unwrap();
        assert!(check.pass(), "{name}\n{}", check.render());
    }
}

#[test]
fn case_rows_have_expected_counts() {
    for (name, s) in tiny() {
        let d = s.time.span_count;
        let (k, m, j, h) = (s.fleet.modules.len(), s.fleet.generators.len(), s.fleet.carriers.len(), s.fleet.tankers.len());
        let (ns, ng, nf) = (s.access.storage_nodes.len(), s.access.generator_nodes.len(), s.access.fuel_site_count());
        let bundled: usize = s.case3_bundles().unwrap().iter().map(|b| b.modules.len()).sum();
        let expected = [
            (CaseTag::Case1, CASE1_FAMILY, d * (3 * k * ns + 2 * m * ng)),
            (CaseTag::Case2, CASE2_FAMILY, d * (k + m + j)),
            (CaseTag::Case3, CASE3_FAMILY, d * bundled * (1 + ns)),
            (CaseTag::Case4, CASE4_FAMILY, d * h * (1 + 2 * nf)),
        ];
        let base = assemble(&with_case(&s, CaseTag::Case5)).unwrap().counts;
        for (case, family, rows) in expected {
            let a = assemble(&with_case(&s, case)).unwrap();
            assert_eq!(a.counts.rows_of(family), rows, "{name} {case}");
            assert_eq!(a.counts.row_total(), base.row_total() + rows, "{name} {case}");
            assert_eq!(a.counts.totals().0, base.totals().0, "{name} {case}");
        }
        let mut strict = with_case(&s, CaseTag::Case5);
        strict.study.strict_pickup = true;
        let a = assemble(&strict).unwrap();
        assert_eq!(a.counts.rows_of(STRICT_PICKUP_FAMILY), d * s.network.nodes.len(), "{name}");
    }
}

#[test]
fn model_file_is_deterministic_and_reads_back() {
    let s = parse_scenario(common::IEEE33).unwrap();
    let first = write_mps(&assemble(&s).unwrap().model, false);
    let second = write_mps(&assemble(&s).unwrap().model, false);
    assert_eq!(first, second);
    let model = assemble(&s).unwrap().model;
    let back = read_mps(&first).unwrap();
    assert_eq!(back.rows.len(), model.num_rows());
    assert_eq!(back.columns.len(), model.num_vars());
}

#[test]
fn case2_overrides_move_the_fleet() {
    for (name, s) in tiny() {
        let a = assemble(&with_case(&s, CaseTag::Case2)).unwrap();
        for k in 0..s.fleet.modules.len() {
            assert_eq!(a.scenario.fleet.modules[k].start, s.case2_module_site(k), "{name}");
        }
        for m in 0..s.fleet.generators.len() {
            assert_eq!(a.scenario.fleet.generators[m].start, s.case2_generator_site(m), "{name}");
        }
    }
}
