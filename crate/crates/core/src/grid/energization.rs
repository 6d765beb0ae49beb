use crate::assembly::BigM;
use crate::error::Result;
use crate::fleet::FleetVars;
use crate::milp::{and_product, indexed_name, LinExpr, Literal, ModelIR, Sense, VarId};
use crate::scenario::Scenario;

use super::radiality::branch_label;
use super::{has_energization_rows, FlowVars, RadialityVars};

#[derive(Debug, Clone)]
pub struct EnergizationVars {
    /// `source[t - 1][node]`: a module or generator is attached.
    pub source: Vec<Vec<VarId>>,
    /// `neighbor[t - 1][node]`: an energized neighbour is connected.
    pub neighbor: Vec<Vec<VarId>>,
    /// `chi[t - 1][branch][end]`: endpoint `end` (0 = from, 1 = to) is
    /// energized and the branch is closed.
    pub chi: Vec<Vec<[VarId; 2]>>,
}

/// Number of sources attached to `node` during span `t`, with the
/// normalising denominator of the source-present row.
pub(crate) fn source_count(scenario: &Scenario, fleet: &FleetVars, node: usize, t: usize) -> (LinExpr, f64) {
    let mut e = LinExpr::new();
    let mut denom = 1.0;
    if let Some(slot) = scenario.access.storage_slot(node) {
        for k in 0..scenario.fleet.modules.len() {
            e.push(fleet.coupling.zeta[k][t][slot], 1.0);
        }
        denom += scenario.fleet.modules.len() as f64;
    }
    if let Some(slot) = scenario.access.generator_slot(node) {
        for mv in &fleet.generators {
            e.push(mv.x[t][slot], 1.0);
        }
        denom += scenario.fleet.generators.len() as f64;
    }
    (e, denom)
}

/// Emit source-present, energized-neighbour and composition rows, with the
/// product auxiliaries linearized as AND gadgets.
pub fn emit_energization(
    model: &mut ModelIR,
    scenario: &Scenario,
    fleet: &FleetVars,
    radial: &RadialityVars,
    flow: &FlowVars,
    big_m: &BigM,
) -> Result<EnergizationVars> {
    let d = scenario.time.span_count;
    let net = &scenario.network;
    let br_names: Vec<String> = (0..net.branches.len()).map(|b| branch_label(scenario, b)).collect();

    let mut ev = EnergizationVars {
        source: Vec::with_capacity(d),
        neighbor: Vec::with_capacity(d),
        chi: Vec::with_capacity(d),
    };
    for t in 1..=d {
        let mut rho = Vec::with_capacity(net.nodes.len());
        let mut sigma = Vec::with_capacity(net.nodes.len());
        for node in &net.nodes {
            let idx = [("i", &node.id as &dyn std::fmt::Display), ("t", &t)];
            rho.push(model.add_binary("rho", indexed_name("rho", &idx)));
            sigma.push(model.add_binary("sigma", indexed_name("sigma", &idx)));
        }
        ev.source.push(rho);
        ev.neighbor.push(sigma);

        // 10
        let mut chi = Vec::with_capacity(br_names.len());
        for (b, bn) in br_names.iter().enumerate() {
            let br = &net.branches[b];
            let kappa = radial.kappa[t - 1][b];
            let mut pair = [VarId(0); 2];
            for (end, node) in [br.from, br.to].into_iter().enumerate() {
                let nid = &net.nodes[node].id;
                let name = indexed_name("chi", &[("i", nid), ("b", bn), ("t", &t)]);
                let lits = [Literal::pos(flow.energized[t - 1][node]), Literal::pos(kappa)];
                pair[end] = and_product(model, &lits, "chi", "10", name)?;
            }
            chi.push(pair);
        }
        ev.chi.push(chi);
    }

    for t in 1..=d {
        for (i, node) in net.nodes.iter().enumerate() {
            if !has_energization_rows(scenario, i) {
                continue;
            }
            let idx = format!("[i={},t={t}]", node.id);
            let rho = ev.source[t - 1][i];
            let sigma = ev.neighbor[t - 1][i];
            let eta = flow.energized[t - 1][i];
            // 9k
            let (src, denom) = source_count(scenario, fleet, i, t);
            model.add_row(
                "9k",
                format!("9k-lower{idx}"),
                LinExpr::term(rho, 1.0).with_expr(&src, -1.0 / denom),
                Sense::Ge,
                0.0,
            );
            model.add_row("9k", format!("9k-upper{idx}"), LinExpr::term(rho, 1.0).with_expr(&src, -1.0), Sense::Le, 0.0);
            // 9l: products from the far end of each incident branch.
            let mut nb = LinExpr::new();
            for &b in net.incident(i) {
                let far_end = if net.branches[b].from == i { 1 } else { 0 };
                nb.push(ev.chi[t - 1][b][far_end], 1.0);
            }
            let m = big_m.neighbor(i);
            model.add_row(
                "9l",
                format!("9l-lower{idx}"),
                LinExpr::term(sigma, 1.0).with_expr(&nb, -1.0 / m),
                Sense::Ge,
                0.0,
            );
            model.add_row("9l", format!("9l-upper{idx}"), LinExpr::term(sigma, 1.0).with_expr(&nb, -1.0), Sense::Le, 0.0);
            // 9m
            model.add_row("9m", format!("9m-source{idx}"), LinExpr::term(eta, 1.0).with(rho, -1.0), Sense::Ge, 0.0);
            model.add_row("9m", format!("9m-neighbor{idx}"), LinExpr::term(eta, 1.0).with(sigma, -1.0), Sense::Ge, 0.0);
            model.add_row(
                "9m",
                format!("9m-upper{idx}"),
                LinExpr::term(eta, 1.0).with(rho, -1.0).with(sigma, -1.0),
                Sense::Le,
                0.0,
            );
        }
    }
    Ok(ev)
}
