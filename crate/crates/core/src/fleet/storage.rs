use crate::error::Result;
use crate::milp::{indexed_name, polygonal_disk, LinExpr, ModelIR, Sense, VarId};
use crate::scenario::Scenario;

use super::{CouplingVars, SpanTable};

/// Module operating variables; power in per-unit of the network base.
#[derive(Debug, Clone)]
pub struct ModuleVars {
    /// `[k][t - 1][slot]`
    pub charging: Vec<SpanTable>,
    pub discharging: Vec<SpanTable>,
    pub p_charge: Vec<SpanTable>,
    pub p_discharge: Vec<SpanTable>,
    pub q: Vec<SpanTable>,
    /// `soc[k][t]`, `t = 0..=D`.
    pub soc: Vec<Vec<VarId>>,
}

impl ModuleVars {
    /// Net active injection of module `k` during span `t`.
    pub fn net_p(&self, k: usize, t: usize) -> LinExpr {
        LinExpr::sum(self.p_discharge[k][t - 1].iter().copied())
            .with_terms(self.p_charge[k][t - 1].iter().map(|&v| (v, -1.0)))
    }

    pub fn net_q(&self, k: usize, t: usize) -> LinExpr {
        LinExpr::sum(self.q[k][t - 1].iter().copied())
    }
}

/// Emit mode exclusivity, power bounds, apparent-power disk and SOC rows.
pub fn emit_mod_operation(model: &mut ModelIR, scenario: &Scenario, coupling: &CouplingVars) -> Result<ModuleVars> {
    let d = scenario.time.span_count;
    let dt = scenario.time.span_length_h;
    let k_disk = scenario.study.disk_segments;
    let nodes: Vec<&str> = (0..scenario.access.storage_nodes.len())
        .map(|s| scenario.storage_label(s))
        .collect();
    let net = &scenario.network;

    let mut mv = ModuleVars {
        charging: Vec::new(),
        discharging: Vec::new(),
        p_charge: Vec::new(),
        p_discharge: Vec::new(),
        q: Vec::new(),
        soc: Vec::new(),
    };
    for m in &scenario.fleet.modules {
        let pc_max = net.to_pu(m.p_charge_max_kw);
        let pd_max = net.to_pu(m.p_discharge_max_kw);
        let s_max = net.to_pu(m.s_rated_kva);
        let mut tables: [SpanTable; 5] = Default::default();
        for t in 1..=d {
            let mut row: [Vec<VarId>; 5] = Default::default();
            for i in &nodes {
                let idx = [("k", &m.id as &dyn std::fmt::Display), ("i", i), ("t", &t)];
                row[0].push(model.add_binary("c", indexed_name("c", &idx)));
                row[1].push(model.add_binary("d", indexed_name("d", &idx)));
                row[2].push(model.add_continuous("Pc", indexed_name("Pc", &idx), 0.0, pc_max));
                row[3].push(model.add_continuous("Pd", indexed_name("Pd", &idx), 0.0, pd_max));
                row[4].push(model.add_continuous("Qs", indexed_name("Qs", &idx), -s_max, s_max));
            }
            for (table, r) in tables.iter_mut().zip(row) {
                table.push(r);
            }
        }
        let soc = (0..=d)
            .map(|t| model.add_continuous("SOC", indexed_name("SOC", &[("k", &m.id), ("t", &t)]), 0.0, 1.0))
            .collect();
        let [c, dd, pc, pd, q] = tables;
        mv.charging.push(c);
        mv.discharging.push(dd);
        mv.p_charge.push(pc);
        mv.p_discharge.push(pd);
        mv.q.push(q);
        mv.soc.push(soc);
    }

    for (k, m) in scenario.fleet.modules.iter().enumerate() {
        let pc_max = net.to_pu(m.p_charge_max_kw);
        let pd_max = net.to_pu(m.p_discharge_max_kw);
        let s_max = net.to_pu(m.s_rated_kva);
        for t in 1..=d {
            for (i, label) in nodes.iter().enumerate() {
                let idx = format!("[k={},i={label},t={t}]", m.id);
                let zeta = coupling.zeta[k][t][i];
                let (c, dv) = (mv.charging[k][t - 1][i], mv.discharging[k][t - 1][i]);
                let (pc, pd, q) = (mv.p_charge[k][t - 1][i], mv.p_discharge[k][t - 1][i], mv.q[k][t - 1][i]);
                // 5a
                model.add_row(
                    "5a",
                    format!("5a{idx}"),
                    LinExpr::term(c, 1.0).with(dv, 1.0).with(zeta, -1.0),
                    Sense::Le,
                    0.0,
                );
                // 5b
                model.add_row("5b", format!("5b-pc-lower{idx}"), LinExpr::term(pc, 1.0), Sense::Ge, 0.0);
                model.add_row("5b", format!("5b-pc-upper{idx}"), LinExpr::term(pc, 1.0).with(c, -pc_max), Sense::Le, 0.0);
                model.add_row("5b", format!("5b-pd-lower{idx}"), LinExpr::term(pd, 1.0), Sense::Ge, 0.0);
                model.add_row("5b", format!("5b-pd-upper{idx}"), LinExpr::term(pd, 1.0).with(dv, -pd_max), Sense::Le, 0.0);
                model.add_row("5b", format!("5b-q-lower{idx}"), LinExpr::term(q, 1.0).with(zeta, s_max), Sense::Ge, 0.0);
                model.add_row("5b", format!("5b-q-upper{idx}"), LinExpr::term(q, 1.0).with(zeta, -s_max), Sense::Le, 0.0);
            }
            // 5c
            let idx = format!("[k={},t={t}]", m.id);
            polygonal_disk(
                model,
                &mv.net_p(k, t),
                &mv.net_q(k, t),
                &LinExpr::constant(s_max),
                k_disk,
                "5c",
                &idx,
            )?;
            // 5d
            let scale = dt * scenario.network.base_kva / m.energy_kwh;
            let e = LinExpr::term(mv.soc[k][t], 1.0)
                .with(mv.soc[k][t - 1], -1.0)
                .with_terms(mv.p_charge[k][t - 1].iter().map(|&v| (v, -m.eff_charge * scale)))
                .with_terms(mv.p_discharge[k][t - 1].iter().map(|&v| (v, scale / m.eff_discharge)));
            model.add_row("5d", format!("5d{idx}"), e, Sense::Eq, 0.0);
            // 5f
            let s = LinExpr::term(mv.soc[k][t], 1.0);
            model.add_row("5f", format!("5f-lower{idx}"), s.clone(), Sense::Ge, m.soc_min);
            model.add_row("5f", format!("5f-upper{idx}"), s, Sense::Le, m.soc_max);
        }
        // 5e
        model.add_row(
            "5e",
            format!("5e[k={}]", m.id),
            LinExpr::term(mv.soc[k][0], 1.0),
            Sense::Eq,
            m.soc_init,
        );
    }
    Ok(mv)
}
