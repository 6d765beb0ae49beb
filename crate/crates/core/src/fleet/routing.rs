use crate::assembly::BigM;
use crate::error::{Error, Result};
use crate::milp::{indexed_name, LinExpr, ModelIR, Sense, VarId};
use crate::scenario::{MerClass, Scenario};

use super::class_key;

/// Routing variables of one resource. Every table is indexed by `t = 0..=D`.
#[derive(Debug, Clone)]
pub struct MerVars {
    /// Parked indicator `x[t][slot]`.
    pub x: Vec<Vec<VarId>>,
    /// Travelling-towards indicator `v[t][slot]`.
    pub v: Vec<Vec<VarId>>,
    /// Travel time recognised at departure.
    pub s: Vec<VarId>,
    /// Residual travel time.
    pub r: Vec<VarId>,
    /// Direction-hold indicator.
    pub omega: Vec<VarId>,
}

impl MerVars {
    pub fn travelling(&self, t: usize) -> LinExpr {
        LinExpr::sum(self.v[t].iter().copied())
    }

    pub fn parked(&self, t: usize) -> LinExpr {
        LinExpr::sum(self.x[t].iter().copied())
    }
}

/// Direction-hold offset in the `ω` row; the travelling sums are integral.
const DIRECTION_EPS: f64 = 1.0;

/// Emit the mobility rows for every resource of `class`.
pub fn emit_routing(
    model: &mut ModelIR,
    scenario: &Scenario,
    class: MerClass,
    big_m: &BigM,
) -> Result<Vec<MerVars>> {
    let d = scenario.time.span_count;
    let labels = scenario.site_labels(class);
    let n = labels.len();
    let table = scenario.travel.table(class);
    let key = class_key(class);
    let m_route = big_m.routing(class);
    let mut out = Vec::with_capacity(scenario.mer_count(class));

    for j in 0..scenario.mer_count(class) {
        let id = scenario.mer_id(class, j);
        let start = scenario.mer_start(class, j);
        if start >= n {
            return Err(Error::Model(format!("{} `{id}` starts outside its site set", class.tag())));
        }
        if table.len() != n || table.iter().any(|row| row.len() != n) {
            return Err(Error::Model(format!("travel table for {} does not cover its sites", class.tag())));
        }
        let mut x = Vec::with_capacity(d + 1);
        let mut v = Vec::with_capacity(d + 1);
        let mut s = Vec::with_capacity(d + 1);
        let mut r = Vec::with_capacity(d + 1);
        let mut omega = Vec::with_capacity(d + 1);
        for t in 0..=d {
            x.push(
                labels
                    .iter()
                    .map(|i| model.add_binary("x", indexed_name("x", &[(key, &id), ("i", i), ("t", &t)])))
                    .collect::<Vec<_>>(),
            );
            v.push(
                labels
                    .iter()
                    .map(|i| model.add_binary("v", indexed_name("v", &[(key, &id), ("i", i), ("t", &t)])))
                    .collect::<Vec<_>>(),
            );
            s.push(model.add_continuous("S", indexed_name("S", &[(key, &id), ("t", &t)]), 0.0, m_route));
            r.push(model.add_continuous("R", indexed_name("R", &[(key, &id), ("t", &t)]), 0.0, m_route));
            omega.push(model.add_binary("omega", indexed_name("omega", &[(key, &id), ("t", &t)])));
        }
        let mv = MerVars { x, v, s, r, omega };
        let tag = |t: usize| format!("[{key}={id},t={t}]");
        let tag_i = |i: &str, t: usize| format!("[{key}={id},i={i},t={t}]");

        // 1a: one state per span, including t = 0.
        for t in 0..=d {
            let e = mv.parked(t).with_expr(&mv.travelling(t), 1.0);
            model.add_row("1a", format!("1a{}", tag(t)), e, Sense::Eq, 1.0);
        }
        // 1b: park/travel transitions, t = 0..D-1.
        for t in 0..d {
            let dv = mv.travelling(t).with_expr(&mv.travelling(t + 1), -1.0);
            for (i, label) in labels.iter().enumerate() {
                let lo = LinExpr::term(mv.x[t + 1][i], 1.0)
                    .with(mv.x[t][i], -1.0)
                    .with(mv.v[t][i], -1.2)
                    .with(mv.v[t + 1][i], 1.2)
                    .with_expr(&dv, -0.4);
                model.add_row("1b", format!("1b-lower{}", tag_i(label, t)), lo, Sense::Ge, -0.8);
                let hi = LinExpr::term(mv.x[t + 1][i], 1.0)
                    .with(mv.x[t][i], -1.0)
                    .with(mv.v[t][i], -1.0)
                    .with(mv.v[t + 1][i], 1.0)
                    .with_expr(&dv, 0.5);
                model.add_row("1b", format!("1b-upper{}", tag_i(label, t)), hi, Sense::Le, 0.7);
            }
        }
        for t in 1..=d {
            // 1c: departure from i towards i' sets S >= T[i][i'].
            for (i, label) in labels.iter().enumerate() {
                let total: f64 = table[i].iter().map(|&c| c as f64).sum();
                let mut e = LinExpr::term(mv.s[t], 1.0).with(mv.x[t - 1][i], -total);
                for (ip, &tt) in table[i].iter().enumerate() {
                    e.push(mv.v[t][ip], -(tt as f64));
                }
                model.add_row("1c", format!("1c{}", tag_i(label, t)), e, Sense::Ge, -total);
            }
            model.add_row("1c", format!("1c-nonneg{}", tag(t)), LinExpr::term(mv.s[t], 1.0), Sense::Ge, 0.0);
            // 1d: residual time.
            let e = LinExpr::term(mv.r[t], 1.0)
                .with(mv.r[t - 1], -1.0)
                .with(mv.s[t], -1.0)
                .with_expr(&mv.travelling(t - 1), 1.0);
            model.add_row("1d", format!("1d{}", tag(t)), e, Sense::Eq, 0.0);
        }
        // 1e: travelling iff residual time remains, t = 0..D.
        for t in 0..=d {
            let lo = mv.travelling(t).with(mv.r[t], -1.0 / m_route);
            model.add_row("1e", format!("1e-lower{}", tag(t)), lo, Sense::Ge, 0.0);
            let hi = mv.travelling(t).with(mv.r[t], -1.0);
            model.add_row("1e", format!("1e-upper{}", tag(t)), hi, Sense::Le, 0.0);
        }
        // 1f: direction is held while travelling in consecutive spans.
        for t in 1..=d {
            let e = LinExpr::term(mv.omega[t], 1.0)
                .with_expr(&mv.travelling(t - 1), -1.0)
                .with_expr(&mv.travelling(t), -1.0);
            model.add_row("1f", format!("1f{}", tag(t)), e, Sense::Ge, -2.0 + DIRECTION_EPS);
            for (i, label) in labels.iter().enumerate() {
                let diff = LinExpr::term(mv.v[t][i], 1.0).with(mv.v[t - 1][i], -1.0);
                model.add_row(
                    "1f",
                    format!("1f-lower{}", tag_i(label, t)),
                    diff.clone().with(mv.omega[t], -1.0),
                    Sense::Ge,
                    -1.0,
                );
                model.add_row(
                    "1f",
                    format!("1f-upper{}", tag_i(label, t)),
                    diff.with(mv.omega[t], 1.0),
                    Sense::Le,
                    1.0,
                );
            }
        }
        // 1g: initial state.
        model.add_row("1g", format!("1g-x{}", tag(0)), LinExpr::term(mv.x[0][start], 1.0), Sense::Eq, 1.0);
        model.add_row("1g", format!("1g-S{}", tag(0)), LinExpr::term(mv.s[0], 1.0), Sense::Eq, 0.0);
        model.add_row("1g", format!("1g-R{}", tag(0)), LinExpr::term(mv.r[0], 1.0), Sense::Eq, 0.0);
        model.add_row("1g", format!("1g-omega{}", tag(0)), LinExpr::term(mv.omega[0], 1.0), Sense::Eq, 0.0);
        out.push(mv);
    }
    Ok(out)
}
