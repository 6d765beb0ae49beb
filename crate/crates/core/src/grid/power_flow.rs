use crate::assembly::BigM;
use crate::error::Result;
use crate::fleet::FleetVars;
use crate::milp::{indexed_name, polygonal_disk, LinExpr, ModelIR, Sense, VarId};
use crate::scenario::Scenario;

use super::radiality::branch_label;
use super::RadialityVars;

/// Operating variables, per-unit. Tables are `[t - 1][node]` or
/// `[t - 1][branch]`.
#[derive(Debug, Clone)]
pub struct FlowVars {
    pub p: Vec<Vec<VarId>>,
    pub q: Vec<Vec<VarId>>,
    pub p_in: Vec<Vec<VarId>>,
    pub q_in: Vec<Vec<VarId>>,
    pub v_sq: Vec<Vec<VarId>>,
    pub pickup: Vec<Vec<VarId>>,
    pub energized: Vec<Vec<VarId>>,
}

/// Fleet injection at `node` during span `t`: `(P, Q)` before the access
/// coefficients are applied.
pub(crate) fn fleet_injection(scenario: &Scenario, fleet: &FleetVars, node: usize, t: usize) -> (LinExpr, LinExpr) {
    let mut p = LinExpr::new();
    let mut q = LinExpr::new();
    if let Some(slot) = scenario.access.storage_slot(node) {
        for k in 0..scenario.fleet.modules.len() {
            p.push(fleet.modules.p_discharge[k][t - 1][slot], 1.0);
            p.push(fleet.modules.p_charge[k][t - 1][slot], -1.0);
            q.push(fleet.modules.q[k][t - 1][slot], 1.0);
        }
    }
    if let Some(slot) = scenario.access.generator_slot(node) {
        for m in 0..scenario.fleet.generators.len() {
            p.push(fleet.meg.p[m][t - 1][slot], 1.0);
            q.push(fleet.meg.q[m][t - 1][slot], 1.0);
        }
    }
    (p, q)
}

/// Emit injections, nodal balance, pickup monotonicity, voltage drop,
/// voltage bounds, branch disks, fault pinning and substation energization.
pub fn emit_power_flow(
    model: &mut ModelIR,
    scenario: &Scenario,
    fleet: &FleetVars,
    radial: &RadialityVars,
    big_m: &BigM,
) -> Result<FlowVars> {
    let d = scenario.time.span_count;
    let net = &scenario.network;
    let root = net.substation;
    let energized_root = scenario.study.substation_energized;
    let br_names: Vec<String> = (0..net.branches.len()).map(|b| branch_label(scenario, b)).collect();
    let (v_lo, v_hi) = (net.v_min_pu.powi(2), net.v_max_pu.powi(2));

    let mut fv = FlowVars {
        p: Vec::with_capacity(d),
        q: Vec::with_capacity(d),
        p_in: Vec::with_capacity(d),
        q_in: Vec::with_capacity(d),
        v_sq: Vec::with_capacity(d),
        pickup: Vec::with_capacity(d),
        energized: Vec::with_capacity(d),
    };
    for t in 1..=d {
        let mut p = Vec::with_capacity(br_names.len());
        let mut q = Vec::with_capacity(br_names.len());
        for (b, bn) in br_names.iter().enumerate() {
            let s = net.s_max_pu(b);
            p.push(model.add_continuous("P", indexed_name("P", &[("b", bn), ("t", &t)]), -s, s));
            q.push(model.add_continuous("Q", indexed_name("Q", &[("b", bn), ("t", &t)]), -s, s));
        }
        fv.p.push(p);
        fv.q.push(q);
        let mut tabs: [Vec<VarId>; 5] = Default::default();
        for (i, node) in net.nodes.iter().enumerate() {
            let idx = [("i", &node.id as &dyn std::fmt::Display), ("t", &t)];
            let inf = f64::INFINITY;
            tabs[0].push(model.add_continuous("Pin", indexed_name("Pin", &idx), -inf, inf));
            tabs[1].push(model.add_continuous("Qin", indexed_name("Qin", &idx), -inf, inf));
            let (lo, hi) = if i == root && energized_root { (1.0, 1.0) } else { (v_lo, v_hi) };
            tabs[2].push(model.add_continuous("V2", indexed_name("V2", &idx), lo, hi));
            tabs[3].push(model.add_binary("delta", indexed_name("delta", &idx)));
            tabs[4].push(model.add_binary("eta", indexed_name("eta", &idx)));
        }
        let [pi, qi, v2, dl, et] = tabs;
        fv.p_in.push(pi);
        fv.q_in.push(qi);
        fv.v_sq.push(v2);
        fv.pickup.push(dl);
        fv.energized.push(et);
    }

    for t in 1..=d {
        let faults = scenario.fault_sets_at(t)?;
        for (i, node) in net.nodes.iter().enumerate() {
            let idx = format!("[i={},t={t}]", node.id);
            let (fp, fq) = fleet_injection(scenario, fleet, i, t);
            // 9a, 9b: an energized substation imports without limit from the bulk grid.
            let e_p = LinExpr::term(fv.p_in[t - 1][i], 1.0).with_expr(&fp, -1.0);
            let e_q = LinExpr::term(fv.q_in[t - 1][i], 1.0).with_expr(&fq, -1.0);
            if i == root && energized_root {
                let q_floor: f64 = net.incident(i).iter().map(|&b| net.s_max_pu(b)).sum();
                model.add_row("9a", format!("9a{idx}"), e_p, Sense::Ge, 0.0);
                model.add_row("9b", format!("9b{idx}"), e_q, Sense::Ge, -q_floor);
            } else {
                model.add_row("9a", format!("9a{idx}"), e_p, Sense::Eq, 0.0);
                model.add_row("9b", format!("9b{idx}"), e_q, Sense::Eq, 0.0);
            }
            // 9c, 9d
            let mut bal_p = LinExpr::term(fv.p_in[t - 1][i], 1.0).with(fv.pickup[t - 1][i], -net.p_load_pu(i, t));
            let mut bal_q = LinExpr::term(fv.q_in[t - 1][i], 1.0).with(fv.pickup[t - 1][i], -net.q_load_pu(i, t));
            for &b in net.incident(i) {
                let sign = if net.branches[b].to == i { 1.0 } else { -1.0 };
                bal_p.push(fv.p[t - 1][b], sign);
                bal_q.push(fv.q[t - 1][b], sign);
            }
            model.add_row("9c", format!("9c{idx}"), bal_p, Sense::Eq, 0.0);
            model.add_row("9d", format!("9d{idx}"), bal_q, Sense::Eq, 0.0);
            // 9e
            let mut mono = LinExpr::term(fv.pickup[t - 1][i], 1.0);
            if t > 1 {
                mono.push(fv.pickup[t - 2][i], -1.0);
            }
            model.add_row("9e", format!("9e{idx}"), mono, Sense::Ge, 0.0);
            // 9g
            let v = LinExpr::term(fv.v_sq[t - 1][i], 1.0);
            model.add_row("9g", format!("9g-lower{idx}"), v.clone(), Sense::Ge, v_lo);
            model.add_row("9g", format!("9g-upper{idx}"), v, Sense::Le, v_hi);
        }
        for (b, bn) in br_names.iter().enumerate() {
            let br = &net.branches[b];
            let idx = format!("[b={bn},t={t}]");
            let kappa = radial.kappa[t - 1][b];
            let (p, q) = (fv.p[t - 1][b], fv.q[t - 1][b]);
            let m = big_m.voltage(b);
            // 9f
            let drop = LinExpr::term(fv.v_sq[t - 1][br.to], 1.0)
                .with(fv.v_sq[t - 1][br.from], -1.0)
                .with(p, 2.0 * br.r_pu)
                .with(q, 2.0 * br.x_pu);
            model.add_row("9f", format!("9f-lower{idx}"), drop.clone().with(kappa, -m), Sense::Ge, -m);
            model.add_row("9f", format!("9f-upper{idx}"), drop.with(kappa, m), Sense::Le, m);
            // 9h
            polygonal_disk(
                model,
                &LinExpr::term(p, 1.0),
                &LinExpr::term(q, 1.0),
                &LinExpr::term(kappa, net.s_max_pu(b)),
                scenario.study.disk_segments,
                "9h",
                &idx,
            )?;
        }
        // 9i
        for &b in &faults.open_branches {
            let label = format!("9i-open-branch[b={},t={t}]", br_names[b]);
            model.add_row("9i", label, LinExpr::term(radial.kappa[t - 1][b], 1.0), Sense::Eq, 0.0);
        }
        for &b in &faults.closed_branches {
            let label = format!("9i-closed-branch[b={},t={t}]", br_names[b]);
            model.add_row("9i", label, LinExpr::term(radial.kappa[t - 1][b], 1.0), Sense::Eq, 1.0);
        }
        for &i in &faults.open_nodes {
            let label = format!("9i-open-node[i={},t={t}]", net.nodes[i].id);
            model.add_row("9i", label, LinExpr::term(fv.pickup[t - 1][i], 1.0), Sense::Eq, 0.0);
        }
        for &i in &faults.closed_nodes {
            let label = format!("9i-closed-node[i={},t={t}]", net.nodes[i].id);
            let e = LinExpr::term(fv.pickup[t - 1][i], 1.0).with(fv.energized[t - 1][i], -1.0);
            model.add_row("9i", label, e, Sense::Ge, 0.0);
        }
        // 9j
        if energized_root {
            let label = format!("9j[i={},t={t}]", net.nodes[root].id);
            model.add_row("9j", label, LinExpr::term(fv.energized[t - 1][root], 1.0), Sense::Eq, 1.0);
        }
    }
    Ok(fv)
}
