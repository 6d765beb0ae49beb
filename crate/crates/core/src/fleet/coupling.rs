use crate::error::{Error, Result};
use crate::milp::{and_product, indexed_name, LinExpr, Literal, ModelIR, Sense, VarId};
use crate::scenario::Scenario;

use super::MerVars;

/// Ownership variables of the modules.
#[derive(Debug, Clone)]
pub struct CouplingVars {
    /// `zeta[k][t][slot]`, `t = 0..=D`: storage node owns module `k`.
    pub zeta: Vec<Vec<Vec<VarId>>>,
    /// `gamma[k][j][t]`, `t = 0..=D`: carrier `j` holds module `k`.
    pub gamma: Vec<Vec<Vec<VarId>>>,
    /// `alpha[j][slot][k][t - 1]`: carrier `j` arrives at the node holding `k`.
    pub alpha: Vec<Vec<Vec<Vec<VarId>>>>,
}

/// Emit ownership, capacity, carrier-side and node-side rows.
pub fn emit_smess_coupling(model: &mut ModelIR, scenario: &Scenario, carriers: &[MerVars]) -> Result<CouplingVars> {
    let d = scenario.time.span_count;
    let nodes: Vec<&str> = (0..scenario.access.storage_nodes.len())
        .map(|s| scenario.storage_label(s))
        .collect();
    let mods = &scenario.fleet.modules;
    let carrs = &scenario.fleet.carriers;
    for (k, m) in mods.iter().enumerate() {
        if m.start >= nodes.len() {
            return Err(Error::Model(format!("module {k} has no initial storage node")));
        }
    }

    let zeta: Vec<Vec<Vec<VarId>>> = mods
        .iter()
        .map(|m| {
            (0..=d)
                .map(|t| {
                    nodes
                        .iter()
                        .map(|i| model.add_binary("zeta", indexed_name("zeta", &[("k", &m.id), ("i", i), ("t", &t)])))
                        .collect()
                })
                .collect()
        })
        .collect();
    let gamma: Vec<Vec<Vec<VarId>>> = mods
        .iter()
        .map(|m| {
            carrs
                .iter()
                .map(|c| {
                    (0..=d)
                        .map(|t| model.add_binary("gamma", indexed_name("gamma", &[("k", &m.id), ("j", &c.id), ("t", &t)])))
                        .collect()
                })
                .collect()
        })
        .collect();

    // 2a: exactly one owner, t = 0..D.
    for (k, m) in mods.iter().enumerate() {
        for t in 0..=d {
            let e = LinExpr::sum(zeta[k][t].iter().copied()).with_terms(gamma[k].iter().map(|g| (g[t], 1.0)));
            model.add_row("2a", indexed_name("2a", &[("k", &m.id), ("t", &t)]), e, Sense::Eq, 1.0);
        }
    }
    // 2b: carrying capacity.
    for t in 1..=d {
        for (j, c) in carrs.iter().enumerate() {
            let e = LinExpr::new().with_terms(mods.iter().enumerate().map(|(k, m)| (gamma[k][j][t], m.weight)));
            model.add_row("2b", indexed_name("2b", &[("j", &c.id), ("t", &t)]), e, Sense::Le, c.capacity);
        }
    }
    // 2c: initial placement.
    for (k, m) in mods.iter().enumerate() {
        model.add_row(
            "2c",
            indexed_name("2c", &[("k", &m.id)]),
            LinExpr::term(zeta[k][0][m.start], 1.0),
            Sense::Eq,
            1.0,
        );
    }

    for t in 1..=d {
        for (j, c) in carrs.iter().enumerate() {
            let cv = &carriers[j];
            for (k, m) in mods.iter().enumerate() {
                // 3a: a parked carrier holds nothing.
                let e = LinExpr::term(gamma[k][j][t], 1.0).with_expr(&cv.parked(t), 1.0);
                model.add_row("3a", indexed_name("3a", &[("k", &m.id), ("j", &c.id), ("t", &t)]), e, Sense::Le, 1.0);
                // 3b: a departing carrier takes only modules owned by its node.
                for (i, label) in nodes.iter().enumerate() {
                    let e = LinExpr::term(gamma[k][j][t], 1.0)
                        .with(zeta[k][t - 1][i], -1.0)
                        .with(cv.x[t][i], -1.0)
                        .with(cv.x[t - 1][i], 1.0);
                    model.add_row(
                        "3b",
                        indexed_name("3b", &[("k", &m.id), ("j", &c.id), ("i", label), ("t", &t)]),
                        e,
                        Sense::Le,
                        1.0,
                    );
                }
                // 3c: a travelling carrier keeps its load.
                let parked = cv.parked(t - 1).with_expr(&cv.parked(t), 1.0);
                let diff = LinExpr::term(gamma[k][j][t], 1.0).with(gamma[k][j][t - 1], -1.0);
                let idx = format!("[k={},j={},t={t}]", m.id, c.id);
                model.add_row("3c", format!("3c-lower{idx}"), diff.clone().with_expr(&parked, 1.0), Sense::Ge, 0.0);
                model.add_row("3c", format!("3c-upper{idx}"), diff.with_expr(&parked, -1.0), Sense::Le, 0.0);
            }
        }
    }

    // 4a: arrival indicators.
    let mut alpha = vec![vec![vec![Vec::with_capacity(d); mods.len()]; nodes.len()]; carrs.len()];
    for t in 1..=d {
        for (j, c) in carrs.iter().enumerate() {
            for (i, label) in nodes.iter().enumerate() {
                for (k, m) in mods.iter().enumerate() {
                    let lits = [
                        Literal::neg(carriers[j].x[t - 1][i]),
                        Literal::pos(carriers[j].x[t][i]),
                        Literal::pos(gamma[k][j][t - 1]),
                    ];
                    let name = indexed_name("alpha", &[("j", &c.id), ("i", label), ("k", &m.id), ("t", &t)]);
                    let a = and_product(model, &lits, "alpha", "4a", name)?;
                    alpha[j][i][k].push(a);
                }
            }
        }
    }
    // 4b, 4c: node-side ownership.
    for t in 1..=d {
        for (i, label) in nodes.iter().enumerate() {
            for (k, m) in mods.iter().enumerate() {
                let arrivals = LinExpr::new().with_terms((0..carrs.len()).map(|j| (alpha[j][i][k][t - 1], 1.0)));
                let idx = [("k", &m.id as &dyn std::fmt::Display), ("i", label), ("t", &t)];
                model.add_row(
                    "4b",
                    indexed_name("4b", &idx),
                    LinExpr::term(zeta[k][t][i], 1.0).with_expr(&arrivals, -1.0),
                    Sense::Ge,
                    0.0,
                );
                model.add_row(
                    "4c",
                    indexed_name("4c", &idx),
                    LinExpr::term(zeta[k][t][i], 1.0)
                        .with(zeta[k][t - 1][i], -1.0)
                        .with_expr(&arrivals, -1.0),
                    Sense::Le,
                    0.0,
                );
            }
        }
    }

    Ok(CouplingVars { zeta, gamma, alpha })
}
