//! Full-model assembly: fleet and grid emitters, the case-variant rows, the
//! objective and the structural self-check against the reference counts.

mod bigm;
mod structure;

use crate::error::Result;
use crate::fleet::{emit_fleet, FleetVars};
use crate::grid::{emit_grid, GridVars};
use crate::milp::{count_by_family, CountReport, LinExpr, ModelIR, Sense};
use crate::scenario::{check_bundles, CaseTag, Scenario};

pub use bigm::BigM;
pub use structure::{closed_form, deviations, reference_counts, structure_check, Cardinalities, Deviation, FamilyCheck, StructureCheck};

/// Row families added on top of the base model, by case variant.
pub const CASE1_FAMILY: &str = "case1-idle";
pub const CASE2_FAMILY: &str = "case2-fixed";
pub const CASE3_FAMILY: &str = "case3-bundle";
pub const CASE4_FAMILY: &str = "case4-ft";
pub const STRICT_PICKUP_FAMILY: &str = "strict-pickup";

/// The scenario the model is built from: in Case 2, modules and generators
/// start at their designated stationary sites.
pub fn effective_scenario(scenario: &Scenario) -> Scenario {
    let mut s = scenario.clone();
    if s.study.case == CaseTag::Case2 {
        for k in 0..s.fleet.modules.len() {
            s.fleet.modules[k].start = scenario.case2_module_site(k);
        }
        for m in 0..s.fleet.generators.len() {
            s.fleet.generators[m].start = scenario.case2_generator_site(m);
        }
    }
    s
}

/// Copy of `scenario` with the case variant replaced.
pub fn with_case(scenario: &Scenario, case: CaseTag) -> Scenario {
    let mut s = scenario.clone();
    s.study.case = case;
    s
}

#[derive(Debug, Clone)]
pub struct Assembled {
    /// Scenario after case-variant overrides.
    pub scenario: Scenario,
    pub model: ModelIR,
    pub fleet: FleetVars,
    pub grid: GridVars,
    pub big_m: BigM,
    pub counts: CountReport,
}

pub fn assemble(scenario: &Scenario) -> Result<Assembled> {
    let scenario = effective_scenario(scenario);
    if scenario.study.case == CaseTag::Case3 {
        check_bundles(&scenario)?;
    }
    let big_m = BigM::new(&scenario);
    let mut model = ModelIR::new();
    let fleet = emit_fleet(&mut model, &scenario, &big_m)?;
    let grid = emit_grid(&mut model, &scenario, &fleet, &big_m)?;
    if scenario.study.strict_pickup {
        emit_strict_pickup(&mut model, &scenario, &grid);
    }
    apply_case_variant(&mut model, &scenario, &fleet)?;
    let objective = emit_objective(&scenario, &fleet, &grid);
    model.set_objective(objective);
    let counts = count_by_family(&model);
    Ok(Assembled {
        scenario,
        model,
        fleet,
        grid,
        big_m,
        counts,
    })
}

/// Weighted restored energy in kWh minus the travel and fuel-exchange
/// penalties.
pub fn emit_objective(scenario: &Scenario, fleet: &FleetVars, grid: &GridVars) -> LinExpr {
    let dt = scenario.time.span_length_h;
    let (phi_t, phi_f) = (scenario.study.phi_travel, scenario.study.phi_fuel);
    let mut obj = LinExpr::new();
    for t in scenario.time.spans() {
        for (i, node) in scenario.network.nodes.iter().enumerate() {
            let w = node.weight * node.p_kw_at(t) * dt;
            if w != 0.0 {
                obj.push(grid.flow.pickup[t - 1][i], w);
            }
        }
        if phi_t != 0.0 {
            for mv in fleet.carriers.iter().chain(&fleet.generators).chain(&fleet.tankers) {
                obj.push_all(&mv.v[t], -phi_t);
            }
        }
        if phi_f != 0.0 {
            for tab in fleet.fuel.meg_exchanging.iter().chain(&fleet.fuel.ft_exchanging) {
                obj.push_all(&tab[t - 1], -phi_f);
            }
        }
    }
    obj
}

/// Optional `δ ≤ η` rows.
fn emit_strict_pickup(model: &mut ModelIR, scenario: &Scenario, grid: &GridVars) {
    for t in scenario.time.spans() {
        for (i, node) in scenario.network.nodes.iter().enumerate() {
            let e = LinExpr::term(grid.flow.pickup[t - 1][i], 1.0).with(grid.flow.energized[t - 1][i], -1.0);
            model.add_row(STRICT_PICKUP_FAMILY, format!("{STRICT_PICKUP_FAMILY}[i={},t={t}]", node.id), e, Sense::Le, 0.0);
        }
    }
}

fn fix(model: &mut ModelIR, family: &'static str, label: String, var: crate::milp::VarId, value: f64) {
    model.add_row(family, label, LinExpr::term(var, 1.0), Sense::Eq, value);
}

/// Rows restricting the base model to the configured case variant. Expects
/// the model built from [`effective_scenario`].
pub fn apply_case_variant(model: &mut ModelIR, scenario: &Scenario, fleet: &FleetVars) -> Result<()> {
    let d = scenario.time.span_count;
    let fleet_doc = &scenario.fleet;
    match scenario.study.case {
        CaseTag::Case1 => {
            let fam = CASE1_FAMILY;
            for (k, m) in fleet_doc.modules.iter().enumerate() {
                for t in 1..=d {
                    for slot in 0..scenario.access.storage_nodes.len() {
                        let idx = format!("[k={},i={},t={t}]", m.id, scenario.storage_label(slot));
                        fix(model, fam, format!("{fam}-Pc{idx}"), fleet.modules.p_charge[k][t - 1][slot], 0.0);
                        fix(model, fam, format!("{fam}-Pd{idx}"), fleet.modules.p_discharge[k][t - 1][slot], 0.0);
                        fix(model, fam, format!("{fam}-Qs{idx}"), fleet.modules.q[k][t - 1][slot], 0.0);
                    }
                }
            }
            for (m, g) in fleet_doc.generators.iter().enumerate() {
                for t in 1..=d {
                    for slot in 0..scenario.access.generator_nodes.len() {
                        let idx = format!("[m={},i={},t={t}]", g.id, scenario.fuel_site_label(slot));
                        fix(model, fam, format!("{fam}-PG{idx}"), fleet.meg.p[m][t - 1][slot], 0.0);
                        fix(model, fam, format!("{fam}-QG{idx}"), fleet.meg.q[m][t - 1][slot], 0.0);
                    }
                }
            }
        }
        CaseTag::Case2 => {
            let fam = CASE2_FAMILY;
            for t in 1..=d {
                for (k, m) in fleet_doc.modules.iter().enumerate() {
                    let label = format!("{fam}[k={},t={t}]", m.id);
                    fix(model, fam, label, fleet.coupling.zeta[k][t][m.start], 1.0);
                }
                for (m, g) in fleet_doc.generators.iter().enumerate() {
                    let label = format!("{fam}[m={},t={t}]", g.id);
                    fix(model, fam, label, fleet.generators[m].x[t][g.start], 1.0);
                }
                for (j, c) in fleet_doc.carriers.iter().enumerate() {
                    let label = format!("{fam}[j={},t={t}]", c.id);
                    fix(model, fam, label, fleet.carriers[j].x[t][c.start], 1.0);
                }
            }
        }
        CaseTag::Case3 => {
            let fam = CASE3_FAMILY;
            for bundle in scenario.case3_bundles()? {
                let j = bundle.carrier;
                let cid = &fleet_doc.carriers[j].id;
                let cv = &fleet.carriers[j];
                for &k in &bundle.modules {
                    let kid = &fleet_doc.modules[k].id;
                    for t in 1..=d {
                        let e = LinExpr::term(fleet.coupling.gamma[k][j][t], 1.0).with_expr(&cv.parked(t), 1.0);
                        model.add_row(fam, format!("{fam}-carried[k={kid},j={cid},t={t}]"), e, Sense::Eq, 1.0);
                        for slot in 0..scenario.access.storage_nodes.len() {
                            let e = LinExpr::term(fleet.coupling.zeta[k][t][slot], 1.0).with(cv.x[t][slot], -1.0);
                            let label = format!("{fam}-parked[k={kid},j={cid},i={},t={t}]", scenario.storage_label(slot));
                            model.add_row(fam, label, e, Sense::Eq, 0.0);
                        }
                    }
                }
            }
        }
        CaseTag::Case4 => {
            let fam = CASE4_FAMILY;
            for (h, ft) in fleet_doc.tankers.iter().enumerate() {
                for t in 1..=d {
                    fix(model, fam, format!("{fam}-x[h={},t={t}]", ft.id), fleet.tankers[h].x[t][ft.start], 1.0);
                    for slot in 0..scenario.access.fuel_site_count() {
                        let idx = format!("[h={},i={},t={t}]", ft.id, scenario.fuel_site_label(slot));
                        fix(model, fam, format!("{fam}-D{idx}"), fleet.fuel.release[h][t - 1][slot], 0.0);
                        fix(model, fam, format!("{fam}-l{idx}"), fleet.fuel.ft_exchanging[h][t - 1][slot], 0.0);
                    }
                }
            }
        }
        CaseTag::Case5 => {}
    }
    Ok(())
}

