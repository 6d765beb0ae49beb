use std::collections::BTreeSet;

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::assembly::{effective_scenario, CASE1_FAMILY, CASE2_FAMILY, CASE3_FAMILY, CASE4_FAMILY, STRICT_PICKUP_FAMILY};
use crate::error::{Error, Result};
use crate::scenario::{CaseTag, MerClass, Scenario};
use crate::solver::{MerTrack, Schedule};

/// One failed check. Logic failures carry residual 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub family: String,
    pub index: String,
    pub residual: f64,
    pub description: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{} residual {:.3e}: {}", self.family, self.index, self.residual, self.description)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub tolerance: f64,
    pub checks: usize,
    pub max_residual: f64,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn families(&self) -> BTreeSet<&str> {
        self.violations.iter().map(|v| v.family.as_str()).collect()
    }

    pub fn has_family(&self, family: &str) -> bool {
        self.violations.iter().any(|v| v.family == family)
    }

    /// Tab-separated violations, one row each.
    pub fn to_table(&self) -> String {
        let mut out = String::from("family\tindex\tresidual\tdescription\n");
        for v in &self.violations {
            out.push_str(&format!("{}\t{}\t{:e}\t{}\n", v.family, v.index, v.residual, v.description));
        }
        out
    }
}

/// Every row family the assembler can emit, with the check that covers it.
pub const COVERAGE: &[(&str, &str)] = &[
    ("1a", "one state per span"),
    ("1b", "park and travel transitions"),
    ("1c", "travel time set at departure"),
    ("1d", "residual travel time recursion"),
    ("1e", "travelling iff residual time remains"),
    ("1f", "direction held while travelling"),
    ("1g", "initial route state"),
    ("2a", "exactly one module owner"),
    ("2b", "carrier capacity"),
    ("2c", "initial module placement"),
    ("3a", "parked carrier holds nothing"),
    ("3b", "pickup only from the departure node"),
    ("3c", "load kept while travelling"),
    ("4a", "arrival indicator"),
    ("4b", "arrival hands modules to the node"),
    ("4c", "node ownership needs a prior owner or arrival"),
    ("5a", "module mode exclusivity"),
    ("5b", "module power bounds"),
    ("5c", "module apparent power disk"),
    ("5d", "state of charge recursion"),
    ("5e", "initial state of charge"),
    ("5f", "state of charge limits"),
    ("6a", "generator output bounds"),
    ("6b", "generator apparent power disk"),
    ("7a", "burn only where parked"),
    ("7b", "no burn at depots"),
    ("7d", "burn follows the fuel curve"),
    ("7e", "one fuel segment selected"),
    ("7f", "extra fuel drawn from the site"),
    ("7g", "generator fuel recursion"),
    ("7h", "tanker fuel recursion"),
    ("7i", "site fuel recursion"),
    ("7j", "generator exchange only where parked"),
    ("7k", "generator exchange bound"),
    ("7l", "tanker exchange only where parked"),
    ("7m", "tanker exchange rate"),
    ("7n", "initial fuel states"),
    ("7o", "fuel state limits"),
    ("8a", "tree arcs reach every node"),
    ("8b", "tree arcs reach every node"),
    ("8c", "tree arcs reach every node"),
    ("8d", "tree arcs reach every node"),
    ("8e", "tree arc count"),
    ("8f", "tree arc orientation"),
    ("8g", "closed branches lie in the tree"),
    ("9a", "fleet active injection"),
    ("9b", "fleet reactive injection"),
    ("9c", "active power balance"),
    ("9d", "reactive power balance"),
    ("9e", "pickup is monotone"),
    ("9f", "voltage drop on closed branches"),
    ("9g", "voltage limits"),
    ("9h", "branch apparent power disk"),
    ("9i", "fault pins"),
    ("9j", "energized substation"),
    ("9k", "source present"),
    ("9l", "energized neighbour"),
    ("9m", "energization composition"),
    ("10", "branch end live"),
    (CASE1_FAMILY, "fleet idle"),
    (CASE2_FAMILY, "fleet stationary"),
    (CASE3_FAMILY, "bundled modules ride with their carrier"),
    (CASE4_FAMILY, "tanker inactive"),
    (STRICT_PICKUP_FAMILY, "pickup only when energized"),
];

struct Checker {
    tol: f64,
    checks: usize,
    max_residual: f64,
    out: Vec<Violation>,
}

impl Checker {
    fn residual(&mut self, family: &str, index: &str, residual: f64, description: impl FnOnce() -> String) {
        self.checks += 1;
        let r = if residual.is_nan() { f64::INFINITY } else { residual.max(0.0) };
        self.max_residual = self.max_residual.max(r);
        if r > self.tol {
            self.out.push(Violation {
                family: family.to_string(),
                index: index.to_string(),
                residual: r,
                description: description(),
            });
        }
    }

    fn logic(&mut self, family: &str, index: &str, ok: bool, description: impl FnOnce() -> String) {
        self.residual(family, index, if ok { 0.0 } else { 1.0 }, description);
    }

    /// `lhs <= rhs`.
    fn le(&mut self, family: &str, index: &str, lhs: f64, rhs: f64, what: &str) {
        self.residual(family, index, lhs - rhs, || format!("{what}: {lhs} > {rhs}"));
    }

    fn eq(&mut self, family: &str, index: &str, lhs: f64, rhs: f64, what: &str) {
        self.residual(family, index, (lhs - rhs).abs(), || format!("{what}: {lhs} != {rhs}"));
    }

    fn within(&mut self, family: &str, index: &str, v: f64, lo: f64, hi: f64, what: &str) {
        let r = (lo - v).max(v - hi);
        self.residual(family, index, r, || format!("{what}: {v} outside [{lo}, {hi}]"));
    }
}

fn count(bits: &[bool]) -> usize {
    bits.iter().filter(|&&b| b).count()
}

fn shape(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Dimension(what()))
    }
}

fn table_shape<T>(t: &[Vec<T>], rows: usize, cols: usize, what: &str) -> Result<()> {
    shape(t.len() == rows && t.iter().all(|r| r.len() == cols), || {
        format!("{what}: expected {rows}x{cols}")
    })
}

/// Check that every table in `schedule` has the dimensions of `sc`.
fn check_dimensions(sc: &Scenario, schedule: &Schedule) -> Result<()> {
    let d = sc.time.span_count;
    shape(schedule.span_count == d, || format!("span_count {} != {d}", schedule.span_count))?;
    let ns = sc.access.storage_nodes.len();
    let nf = sc.access.fuel_site_count();
    let ng = sc.access.generator_nodes.len();
    let nc = sc.fleet.carriers.len();
    let nm = sc.fleet.modules.len();
    for class in MerClass::ALL {
        let routes = schedule.routes(class);
        shape(routes.len() == sc.mer_count(class), || format!("{} route count", class.tag()))?;
        let sites = sc.site_labels(class).len();
        for r in routes {
            table_shape(&r.parked, d + 1, sites, &format!("{} parked", r.id))?;
            table_shape(&r.travelling, d + 1, sites, &format!("{} travelling", r.id))?;
            shape(
                r.travel_set.len() == d + 1 && r.residual.len() == d + 1 && r.direction_hold.len() == d + 1,
                || format!("{} route series length", r.id),
            )?;
        }
    }
    shape(schedule.modules.len() == nm, || "module count".into())?;
    for m in &schedule.modules {
        table_shape(&m.owned_by_node, d + 1, ns, &format!("{} owners", m.id))?;
        table_shape(&m.carried_by, d + 1, nc, &format!("{} carriers", m.id))?;
        for (t, name) in [
            (&m.charging, "charging"),
            (&m.discharging, "discharging"),
        ] {
            table_shape(t, d, ns, &format!("{} {name}", m.id))?;
        }
        for (t, name) in [(&m.p_charge, "p_charge"), (&m.p_discharge, "p_discharge"), (&m.q, "q")] {
            table_shape(t, d, ns, &format!("{} {name}", m.id))?;
        }
        shape(m.soc.len() == d + 1, || format!("{} soc length", m.id))?;
    }
    shape(
        schedule.arrivals.len() == nc
            && schedule
                .arrivals
                .iter()
                .all(|by_slot| by_slot.len() == ns && by_slot.iter().all(|by_mod| by_mod.len() == nm && by_mod.iter().all(|s| s.len() == d))),
        || "arrival table".into(),
    )?;
    shape(schedule.megs.len() == sc.fleet.generators.len(), || "generator count".into())?;
    for (m, g) in schedule.megs.iter().enumerate() {
        table_shape(&g.p, d, ng, &format!("{} p", g.id))?;
        table_shape(&g.q, d, ng, &format!("{} q", g.id))?;
        for (t, name) in [(&g.burn, "burn"), (&g.extra, "extra"), (&g.exchange, "exchange")] {
            table_shape(t, d, nf, &format!("{} {name}", g.id))?;
        }
        table_shape(&g.exchanging, d, nf, &format!("{} exchanging", g.id))?;
        let segs = sc.fleet.generators[m].segments(sc.time.span_length_h).len();
        table_shape(&g.segment, d, segs, &format!("{} segment", g.id))?;
        shape(g.self_sufficient.len() == d && g.sof.len() == d + 1, || format!("{} series length", g.id))?;
    }
    shape(schedule.tanker_fuel.len() == sc.fleet.tankers.len(), || "tanker count".into())?;
    for f in &schedule.tanker_fuel {
        table_shape(&f.release, d, nf, &format!("{} release", f.id))?;
        table_shape(&f.exchanging, d, nf, &format!("{} exchanging", f.id))?;
        shape(f.sof.len() == d + 1, || format!("{} sof length", f.id))?;
    }
    table_shape(&schedule.site_sof, nf, d + 1, "site fuel")?;
    let n = sc.network.nodes.len();
    let nb = sc.network.branches.len();
    shape(schedule.grid.len() == d, || "grid span count".into())?;
    for g in &schedule.grid {
        let ok = g.closed.len() == nb
            && g.in_tree.len() == nb
            && g.p.len() == nb
            && g.q.len() == nb
            && g.arc_in_tree.len() == 2 * nb
            && g.end_live.len() == nb
            && [&g.p_in, &g.q_in, &g.v_sq].iter().all(|v| v.len() == n)
            && [&g.pickup, &g.energized, &g.source, &g.neighbor].iter().all(|v| v.len() == n);
        shape(ok, || "grid table".into())?;
    }
    Ok(())
}

fn mer_label(class: MerClass) -> &'static str {
    match class {
        MerClass::Carrier => "j",
        MerClass::Generator => "m",
        MerClass::Tanker => "h",
    }
}

fn check_route(c: &mut Checker, sc: &Scenario, class: MerClass, j: usize, r: &MerTrack) {
    let d = sc.time.span_count;
    let table = sc.travel.table(class);
    let labels = sc.site_labels(class);
    let key = mer_label(class);
    let idx = |t: usize| format!("[{key}={},t={t}]", r.id);
    for t in 0..=d {
        let states = count(&r.parked[t]) + count(&r.travelling[t]);
        c.logic("1a", &idx(t), states == 1, || format!("{states} simultaneous states"));
    }
    for t in 0..d {
        let ok = match (r.position(t), r.destination(t)) {
            (Some(a), _) => r.parked[t + 1][a] || r.is_travelling(t + 1) && count(&r.travelling[t + 1]) == 1,
            (None, Some(a)) => r.travelling[t + 1][a] || r.parked[t + 1][a],
            (None, None) => true,
        };
        c.logic("1b", &idx(t), ok, || "parked resources stay or depart; travelling ones keep course or arrive".into());
    }
    for t in 1..=d {
        if let (Some(a), Some(b)) = (r.position(t - 1), r.destination(t)) {
            let need = table[a][b] as f64;
            c.residual("1c", &idx(t), need - r.travel_set[t], || {
                format!("departure {}->{} recognises {} < {need} spans", labels[a], labels[b], r.travel_set[t])
            });
        }
        c.residual("1c", &idx(t), -r.travel_set[t], || "negative travel time".into());
        let travelling_prev = if r.is_travelling(t - 1) { 1.0 } else { 0.0 };
        c.eq("1d", &idx(t), r.residual[t], r.residual[t - 1] + r.travel_set[t] - travelling_prev, "residual time");
    }
    let big = sc.time.span_count.max(table.iter().flatten().copied().max().unwrap_or(0)) as f64;
    for t in 0..=d {
        if r.is_travelling(t) {
            c.within("1e", &idx(t), r.residual[t], 1.0, big, "residual time while travelling");
        } else {
            c.eq("1e", &idx(t), r.residual[t], 0.0, "residual time while parked");
        }
    }
    for t in 1..=d {
        if r.is_travelling(t - 1) && r.is_travelling(t) {
            c.logic("1f", &idx(t), r.direction_hold[t], || "direction hold unset between travelling spans".into());
        }
        if r.direction_hold[t] {
            c.logic("1f", &idx(t), r.travelling[t] == r.travelling[t - 1], || "direction changed while held".into());
        }
    }
    let start = sc.mer_start(class, j);
    c.logic("1g", &idx(0), r.parked[0][start], || format!("not parked at {} initially", labels[start]));
    c.eq("1g", &idx(0), r.travel_set[0], 0.0, "initial travel time");
    c.eq("1g", &idx(0), r.residual[0], 0.0, "initial residual time");
    c.logic("1g", &idx(0), !r.direction_hold[0], || "initial direction hold set".into());
}

fn check_coupling(c: &mut Checker, sc: &Scenario, s: &Schedule) {
    let d = sc.time.span_count;
    let nodes = sc.access.storage_nodes.len();
    for (k, m) in s.modules.iter().enumerate() {
        let spec = &sc.fleet.modules[k];
        for t in 0..=d {
            let owners = count(&m.owned_by_node[t]) + count(&m.carried_by[t]);
            c.logic("2a", &format!("[k={},t={t}]", m.id), owners == 1, || format!("{owners} owners"));
        }
        c.logic("2c", &format!("[k={}]", m.id), m.owned_by_node[0][spec.start], || {
            format!("not at {} initially", sc.storage_label(spec.start))
        });
    }
    for (j, carrier) in sc.fleet.carriers.iter().enumerate() {
        let route = &s.carriers[j];
        for t in 1..=d {
            let load: f64 = s
                .modules
                .iter()
                .zip(&sc.fleet.modules)
                .filter(|(m, _)| m.carried_by[t][j])
                .map(|(_, spec)| spec.weight)
                .sum();
            c.le("2b", &format!("[j={},t={t}]", carrier.id), load, carrier.capacity, "carried weight");
            for (k, m) in s.modules.iter().enumerate() {
                let idx = format!("[k={},j={},t={t}]", m.id, carrier.id);
                let held = m.carried_by[t][j];
                if held {
                    c.logic("3a", &idx, !route.is_parked(t), || "parked carrier holds a module".into());
                }
                if let Some(a) = route.position(t - 1) {
                    if held && !route.parked[t][a] {
                        c.logic("3b", &idx, m.owned_by_node[t - 1][a], || {
                            format!("picked up at {} which did not own it", sc.storage_label(a))
                        });
                    }
                }
                if !route.is_parked(t - 1) && !route.is_parked(t) {
                    c.logic("3c", &idx, m.carried_by[t][j] == m.carried_by[t - 1][j], || "load changed in transit".into());
                }
                for i in 0..nodes {
                    let expect = !route.parked[t - 1][i] && route.parked[t][i] && m.carried_by[t - 1][j];
                    let got = s.arrivals[j][i][k][t - 1];
                    let aidx = format!("[j={},i={},k={},t={t}]", carrier.id, sc.storage_label(i), m.id);
                    c.logic("4a", &aidx, got == expect, || format!("arrival indicator {got}, expected {expect}"));
                }
            }
        }
    }
    for (k, m) in s.modules.iter().enumerate() {
        for t in 1..=d {
            for i in 0..nodes {
                let arrived = (0..sc.fleet.carriers.len()).any(|j| s.arrivals[j][i][k][t - 1]);
                let idx = format!("[k={},i={},t={t}]", m.id, sc.storage_label(i));
                if arrived {
                    c.logic("4b", &idx, m.owned_by_node[t][i], || "arrival not handed to the node".into());
                }
                if m.owned_by_node[t][i] {
                    c.logic("4c", &idx, m.owned_by_node[t - 1][i] || arrived, || "node gained a module without an arrival".into());
                }
            }
        }
    }
}

fn check_modules(c: &mut Checker, sc: &Scenario, s: &Schedule) {
    let d = sc.time.span_count;
    let net = &sc.network;
    let dt = sc.time.span_length_h;
    for (k, m) in s.modules.iter().enumerate() {
        let spec = &sc.fleet.modules[k];
        let (pc_max, pd_max, s_max) = (
            net.to_pu(spec.p_charge_max_kw),
            net.to_pu(spec.p_discharge_max_kw),
            net.to_pu(spec.s_rated_kva),
        );
        for t in 1..=d {
            for i in 0..sc.access.storage_nodes.len() {
                let idx = format!("[k={},i={},t={t}]", m.id, sc.storage_label(i));
                let (ch, dis) = (m.charging[t - 1][i], m.discharging[t - 1][i]);
                let owned = m.owned_by_node[t][i];
                c.logic("5a", &idx, !(ch && dis) && (owned || !(ch || dis)), || {
                    "modes must be exclusive and need ownership".into()
                });
                let pc = m.p_charge[t - 1][i];
                let pd = m.p_discharge[t - 1][i];
                let q = m.q[t - 1][i];
                c.within("5b", &idx, pc, 0.0, if ch { pc_max } else { 0.0 }, "charge power");
                c.within("5b", &idx, pd, 0.0, if dis { pd_max } else { 0.0 }, "discharge power");
                let q_lim = if owned { s_max } else { 0.0 };
                c.within("5b", &idx, q, -q_lim, q_lim, "reactive power");
            }
            let idx = format!("[k={},t={t}]", m.id);
            let p: f64 = m.p_discharge[t - 1].iter().sum::<f64>() - m.p_charge[t - 1].iter().sum::<f64>();
            let q: f64 = m.q[t - 1].iter().sum();
            c.le("5c", &idx, p.hypot(q), s_max, "apparent power");
            let scale = dt * net.base_kva / spec.energy_kwh;
            let pc: f64 = m.p_charge[t - 1].iter().sum();
            let pd: f64 = m.p_discharge[t - 1].iter().sum();
            let expect = m.soc[t - 1] + scale * (spec.eff_charge * pc - pd / spec.eff_discharge);
            c.eq("5d", &idx, m.soc[t], expect, "state of charge");
            c.within("5f", &idx, m.soc[t], spec.soc_min, spec.soc_max, "state of charge");
        }
        c.eq("5e", &format!("[k={}]", m.id), m.soc[0], spec.soc_init, "initial state of charge");
    }
}

fn check_generators(c: &mut Checker, sc: &Scenario, s: &Schedule) {
    let d = sc.time.span_count;
    let dt = sc.time.span_length_h;
    let net = &sc.network;
    let ng = sc.access.generator_nodes.len();
    let nf = sc.access.fuel_site_count();
    for (m, g) in s.megs.iter().enumerate() {
        let spec = &sc.fleet.generators[m];
        let route = &s.generators[m];
        let (p_max, q_max, s_max) = (net.to_pu(spec.p_max_kw), net.to_pu(spec.q_max_kvar), net.to_pu(spec.s_rated_kva));
        let b_max = spec.b_max_l(dt);
        let f = spec.fuel_capacity_l;
        let segs = spec.segments(dt);
        for t in 1..=d {
            let tag = format!("[m={},t={t}]", g.id);
            for slot in 0..ng {
                let idx = format!("[m={},i={},t={t}]", g.id, sc.fuel_site_label(slot));
                let here = route.parked[t][slot];
                c.within("6a", &idx, g.p[t - 1][slot], 0.0, if here { p_max } else { 0.0 }, "active output");
                c.within("6a", &idx, g.q[t - 1][slot], 0.0, if here { q_max } else { 0.0 }, "reactive output");
            }
            let p: f64 = g.p[t - 1].iter().sum();
            let q: f64 = g.q[t - 1].iter().sum();
            c.le("6b", &tag, p.hypot(q), s_max, "apparent power");
            for slot in 0..nf {
                let idx = format!("[m={},i={},t={t}]", g.id, sc.fuel_site_label(slot));
                let burn = g.burn[t - 1][slot];
                if sc.access.is_depot_slot(slot) {
                    c.eq("7b", &idx, burn / f, 0.0, "burn at a depot");
                } else {
                    let cap = if route.parked[t][slot] { b_max } else { 0.0 };
                    c.within("7a", &idx, burn / f, 0.0, cap / f, "burn");
                }
            }
            let gross: f64 = g.burn[t - 1][..ng].iter().sum();
            let p_kw = p * net.base_kva;
            let expect = spec.fuel_per_span(p_kw, dt);
            c.residual("7d", &tag, (gross - expect).abs() / f, || format!("burn {gross} L, curve gives {expect} L"));
            let chosen: Vec<usize> = (0..segs.len()).filter(|&l| g.segment[t - 1][l]).collect();
            c.logic("7e", &tag, chosen.len() == 1, || format!("{} segments selected", chosen.len()));
            if let [l] = chosen[..] {
                let (lo, hi) = (net.to_pu(segs[l].p_lo_kw), net.to_pu(segs[l].p_hi_kw));
                c.within("7e", &tag, p, lo, hi, "output outside the selected segment");
            }
            for slot in 0..nf {
                let idx = format!("[m={},i={},t={t}]", g.id, sc.fuel_site_label(slot));
                c.within("7f", &idx, g.extra[t - 1][slot] / f, 0.0, g.burn[t - 1][slot].max(0.0) / f, "extra fuel");
            }
            let shortfall = gross - f * g.sof[t - 1];
            let extra: f64 = g.extra[t - 1][..ng].iter().sum();
            if g.self_sufficient[t - 1] {
                c.le("7f", &tag, shortfall / f, 0.0, "self-sufficient shortfall");
                c.eq("7f", &tag, extra / f, 0.0, "extra fuel while self-sufficient");
            } else {
                c.le("7f", &tag, -shortfall / f, 0.0, "shortfall without self-sufficiency");
                c.eq("7f", &tag, extra / f, shortfall / f, "extra fuel covers the shortfall");
            }
            let burn: f64 = g.burn[t - 1].iter().sum();
            let extra_all: f64 = g.extra[t - 1].iter().sum();
            let exch: f64 = g.exchange[t - 1].iter().sum();
            c.eq("7g", &tag, g.sof[t], g.sof[t - 1] - (burn - extra_all - exch) / f, "generator fuel state");
            for slot in 0..nf {
                let idx = format!("[m={},i={},t={t}]", g.id, sc.fuel_site_label(slot));
                let l = g.exchanging[t - 1][slot];
                c.logic("7j", &idx, !l || route.parked[t][slot], || "exchange away from the site".into());
                let cap = if l { 1.0 } else { 0.0 };
                c.within("7k", &idx, g.exchange[t - 1][slot] / f, -cap, cap, "exchange");
            }
            c.within("7o", &tag, g.sof[t], 0.0, 1.0, "generator fuel state");
        }
        c.eq("7n", &format!("[m={}]", g.id), g.sof[0], spec.sof_init, "initial fuel state");
    }
    for (h, ft) in s.tanker_fuel.iter().enumerate() {
        let spec = &sc.fleet.tankers[h];
        let route = &s.tankers[h];
        let (rate_in, rate_out) = sc.tanker_rates_l(h);
        let f = spec.fuel_capacity_l;
        for t in 1..=d {
            let tag = format!("[h={},t={t}]", ft.id);
            for slot in 0..nf {
                let idx = format!("[h={},i={},t={t}]", ft.id, sc.fuel_site_label(slot));
                let l = ft.exchanging[t - 1][slot];
                c.logic("7l", &idx, !l || route.parked[t][slot], || "exchange away from the site".into());
                let (lo, hi) = if l { (-rate_in, rate_out) } else { (0.0, 0.0) };
                c.within("7m", &idx, ft.release[t - 1][slot] / f, lo / f, hi / f, "release");
            }
            let rel: f64 = ft.release[t - 1].iter().sum();
            c.eq("7h", &tag, ft.sof[t], ft.sof[t - 1] - rel / f, "tanker fuel state");
            c.within("7o", &tag, ft.sof[t], 0.0, 1.0, "tanker fuel state");
        }
        c.eq("7n", &format!("[h={}]", ft.id), ft.sof[0], spec.sof_init, "initial fuel state");
    }
    for slot in 0..nf {
        let label = sc.fuel_site_label(slot);
        let f = sc.fleet.site_fuel[slot].capacity_l;
        let sof = &s.site_sof[slot];
        for t in 1..=d {
            let tag = format!("[s={label},t={t}]");
            let rel: f64 = s.tanker_fuel.iter().map(|ft| ft.release[t - 1][slot]).sum();
            let out: f64 = s.megs.iter().map(|g| g.extra[t - 1][slot] + g.exchange[t - 1][slot]).sum();
            c.eq("7i", &tag, sof[t], sof[t - 1] + (rel - out) / f, "site fuel state");
            c.within("7o", &tag, sof[t], 0.0, 1.0, "site fuel state");
        }
        c.eq("7n", &format!("[s={label}]"), sof[0], sc.fleet.site_fuel[slot].sof_init, "initial fuel state");
    }
}

/// Fleet `(P, Q)` injected at `node` during span `t`, per-unit.
pub(crate) fn fleet_injection(sc: &Scenario, s: &Schedule, node: usize, t: usize) -> (f64, f64) {
    let (mut p, mut q) = (0.0, 0.0);
    if let Some(slot) = sc.access.storage_slot(node) {
        for m in &s.modules {
            p += m.p_discharge[t - 1][slot] - m.p_charge[t - 1][slot];
            q += m.q[t - 1][slot];
        }
    }
    if let Some(slot) = sc.access.generator_slot(node) {
        for g in &s.megs {
            p += g.p[t - 1][slot];
            q += g.q[t - 1][slot];
        }
    }
    (p, q)
}

fn check_grid(c: &mut Checker, sc: &Scenario, s: &Schedule) -> Result<()> {
    let d = sc.time.span_count;
    let net = &sc.network;
    let n = net.nodes.len();
    let root = net.substation;
    let root_live = sc.study.substation_energized;
    let (v_lo, v_hi) = (net.v_min_pu.powi(2), net.v_max_pu.powi(2));
    let bname = |b: usize| {
        let br = &net.branches[b];
        format!("{}~{}", net.nodes[br.from].id, net.nodes[br.to].id)
    };
    for t in 1..=d {
        let g = &s.grid[t - 1];
        let faults = sc.fault_sets_at(t)?;
        let tt = format!("[t={t}]");

        // Fictitious tree: every node reachable from the root along tree arcs.
        let mut reach = vec![false; n];
        reach[root] = true;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &b in net.incident(u) {
                let br = &net.branches[b];
                let (arc, head) = if br.from == u { (2 * b, br.to) } else { (2 * b + 1, br.from) };
                if g.arc_in_tree[arc] && !reach[head] {
                    reach[head] = true;
                    stack.push(head);
                }
            }
        }
        for i in (0..n).filter(|&i| i != root) {
            c.logic("8b", &format!("[c={},t={t}]", net.nodes[i].id), reach[i], || "not reached by tree arcs".into());
        }
        let arcs = count(&g.arc_in_tree);
        c.logic("8e", &tt, arcs == n - 1, || format!("{arcs} tree arcs for {n} nodes"));
        for b in 0..net.branches.len() {
            let idx = format!("[b={},t={t}]", bname(b));
            let both = g.arc_in_tree[2 * b] as u8 + g.arc_in_tree[2 * b + 1] as u8;
            c.logic("8f", &idx, both == g.in_tree[b] as u8, || "arc orientation disagrees with the tree".into());
            if g.closed[b] {
                c.logic("8g", &idx, g.in_tree[b], || "closed branch outside the tree".into());
            }
        }
        let mut uf = UnionFind::<usize>::new(n);
        for (b, br) in net.branches.iter().enumerate() {
            if g.closed[b] && !uf.union(br.from, br.to) {
                c.logic("8g", &format!("[b={},t={t}]", bname(b)), false, || "closed branches form a cycle".into());
            }
        }

        for (i, node) in net.nodes.iter().enumerate() {
            let idx = format!("[i={},t={t}]", node.id);
            let (fp, fq) = fleet_injection(sc, s, i, t);
            if i == root && root_live {
                let q_floor: f64 = net.incident(i).iter().map(|&b| net.s_max_pu(b)).sum();
                c.le("9a", &idx, fp, g.p_in[i], "import below fleet injection");
                c.le("9b", &idx, fq - q_floor, g.q_in[i], "reactive import below floor");
                c.eq("9g", &idx, g.v_sq[i], 1.0, "substation voltage");
            } else {
                c.eq("9a", &idx, g.p_in[i], fp, "active injection");
                c.eq("9b", &idx, g.q_in[i], fq, "reactive injection");
            }
            let mut bal_p = g.p_in[i];
            let mut bal_q = g.q_in[i];
            for &b in net.incident(i) {
                let sign = if net.branches[b].to == i { 1.0 } else { -1.0 };
                bal_p += sign * g.p[b];
                bal_q += sign * g.q[b];
            }
            let served = if g.pickup[i] { 1.0 } else { 0.0 };
            c.eq("9c", &idx, bal_p, served * net.p_load_pu(i, t), "active balance");
            c.eq("9d", &idx, bal_q, served * net.q_load_pu(i, t), "reactive balance");
            if t > 1 && s.grid[t - 2].pickup[i] {
                c.logic("9e", &idx, g.pickup[i], || "load dropped after pickup".into());
            }
            c.within("9g", &idx, g.v_sq[i], v_lo, v_hi, "squared voltage");
        }
        for (b, br) in net.branches.iter().enumerate() {
            let idx = format!("[b={},t={t}]", bname(b));
            if g.closed[b] {
                let expect = g.v_sq[br.from] - 2.0 * (br.r_pu * g.p[b] + br.x_pu * g.q[b]);
                c.eq("9f", &idx, g.v_sq[br.to], expect, "voltage drop");
            }
            let cap = if g.closed[b] { net.s_max_pu(b) } else { 0.0 };
            c.le("9h", &idx, g.p[b].hypot(g.q[b]), cap, "branch apparent power");
        }
        for &b in &faults.open_branches {
            c.logic("9i", &format!("[b={},t={t}]", bname(b)), !g.closed[b], || "faulted branch closed".into());
        }
        for &b in &faults.closed_branches {
            c.logic("9i", &format!("[b={},t={t}]", bname(b)), g.closed[b], || "pinned branch open".into());
        }
        for &i in &faults.open_nodes {
            c.logic("9i", &format!("[i={},t={t}]", net.nodes[i].id), !g.pickup[i], || "faulted node picked up".into());
        }
        for &i in &faults.closed_nodes {
            let ok = g.pickup[i] || !g.energized[i];
            c.logic("9i", &format!("[i={},t={t}]", net.nodes[i].id), ok, || "energized pinned node not picked up".into());
        }
        if root_live {
            c.logic("9j", &format!("[i={},t={t}]", net.nodes[root].id), g.energized[root], || "substation not energized".into());
        }
        for (i, node) in net.nodes.iter().enumerate() {
            if i == root && root_live {
                continue;
            }
            let idx = format!("[i={},t={t}]", node.id);
            let mut sources = 0;
            if let Some(slot) = sc.access.storage_slot(i) {
                sources += s.modules.iter().filter(|m| m.owned_by_node[t][slot]).count();
            }
            if let Some(slot) = sc.access.generator_slot(i) {
                sources += s.generators.iter().filter(|r| r.parked[t][slot]).count();
            }
            c.logic("9k", &idx, g.source[i] == (sources > 0), || format!("source flag with {sources} sources"));
            let live_nb = net.incident(i).iter().any(|&b| {
                let far = if net.branches[b].from == i { 1 } else { 0 };
                g.end_live[b][far]
            });
            c.logic("9l", &idx, g.neighbor[i] == live_nb, || "neighbour flag disagrees with live branch ends".into());
            c.logic("9m", &idx, g.energized[i] == (g.source[i] || g.neighbor[i]), || "energized flag disagrees".into());
        }
        for (b, br) in net.branches.iter().enumerate() {
            for (end, node) in [br.from, br.to].into_iter().enumerate() {
                let idx = format!("[i={},b={},t={t}]", net.nodes[node].id, bname(b));
                let expect = g.energized[node] && g.closed[b];
                c.logic("10", &idx, g.end_live[b][end] == expect, || "live end disagrees".into());
            }
        }
    }
    Ok(())
}

fn check_case(c: &mut Checker, sc: &Scenario, s: &Schedule) -> Result<()> {
    let d = sc.time.span_count;
    match sc.study.case {
        CaseTag::Case1 => {
            let fam = CASE1_FAMILY;
            for m in &s.modules {
                for t in 1..=d {
                    let idx = format!("[k={},t={t}]", m.id);
                    let mag: f64 = (0..m.q[t - 1].len())
                        .map(|i| m.p_charge[t - 1][i].abs() + m.p_discharge[t - 1][i].abs() + m.q[t - 1][i].abs())
                        .sum();
                    c.eq(fam, &idx, mag, 0.0, "module power");
                }
            }
            for g in &s.megs {
                for t in 1..=d {
                    let mag: f64 = g.p[t - 1].iter().chain(&g.q[t - 1]).map(|v| v.abs()).sum();
                    c.eq(fam, &format!("[m={},t={t}]", g.id), mag, 0.0, "generator output");
                }
            }
        }
        CaseTag::Case2 => {
            let fam = CASE2_FAMILY;
            for t in 1..=d {
                for (k, m) in s.modules.iter().enumerate() {
                    let site = sc.fleet.modules[k].start;
                    c.logic(fam, &format!("[k={},t={t}]", m.id), m.owned_by_node[t][site], || "module moved".into());
                }
                for (class, starts) in [(MerClass::Generator, &s.generators), (MerClass::Carrier, &s.carriers)] {
                    for (j, r) in starts.iter().enumerate() {
                        let site = sc.mer_start(class, j);
                        let idx = format!("[{}={},t={t}]", mer_label(class), r.id);
                        c.logic(fam, &idx, r.parked[t][site], || format!("{} moved", class.tag()));
                    }
                }
            }
        }
        CaseTag::Case3 => {
            let fam = CASE3_FAMILY;
            for bundle in sc.case3_bundles()? {
                let route = &s.carriers[bundle.carrier];
                for &k in &bundle.modules {
                    let m = &s.modules[k];
                    for t in 1..=d {
                        let idx = format!("[k={},j={},t={t}]", m.id, route.id);
                        let aboard = m.carried_by[t][bundle.carrier];
                        c.logic(fam, &idx, aboard != route.is_parked(t), || "bundled module left its carrier".into());
                        let same_site = m.owned_by_node[t] == route.parked[t];
                        c.logic(fam, &idx, same_site, || "bundled module parked apart from its carrier".into());
                    }
                }
            }
        }
        CaseTag::Case4 => {
            let fam = CASE4_FAMILY;
            for (h, r) in s.tankers.iter().enumerate() {
                let start = sc.fleet.tankers[h].start;
                let ft = &s.tanker_fuel[h];
                for t in 1..=d {
                    let idx = format!("[h={},t={t}]", r.id);
                    c.logic(fam, &idx, r.parked[t][start], || "tanker moved".into());
                    c.logic(fam, &idx, !ft.exchanging[t - 1].iter().any(|&l| l), || "tanker exchanged fuel".into());
                    let mag: f64 = ft.release[t - 1].iter().map(|v| v.abs()).sum();
                    c.eq(fam, &idx, mag, 0.0, "tanker release");
                }
            }
        }
        CaseTag::Case5 => {}
    }
    if sc.study.strict_pickup {
        for t in 1..=d {
            let g = &s.grid[t - 1];
            for (i, node) in sc.network.nodes.iter().enumerate() {
                let idx = format!("[i={},t={t}]", node.id);
                c.logic(STRICT_PICKUP_FAMILY, &idx, !g.pickup[i] || g.energized[i], || "load picked up while de-energized".into());
            }
        }
    }
    Ok(())
}

/// Check `schedule` against the constraint semantics of `scenario` under
/// its configured case variant. Residuals are absolute in per-unit, spans
/// and state fractions; fuel flows are divided by the owning capacity.
/// Logic failures have residual 1 and are always reported.
pub fn check_schedule(scenario: &Scenario, schedule: &Schedule, tol: f64) -> Result<ViolationReport> {
    let sc = effective_scenario(scenario);
    check_dimensions(&sc, schedule)?;
    let mut c = Checker {
        tol,
        checks: 0,
        max_residual: 0.0,
        out: Vec::new(),
    };
    for class in MerClass::ALL {
        for (j, r) in schedule.routes(class).iter().enumerate() {
            check_route(&mut c, &sc, class, j, r);
        }
    }
    check_coupling(&mut c, &sc, schedule);
    check_modules(&mut c, &sc, schedule);
    check_generators(&mut c, &sc, schedule);
    check_grid(&mut c, &sc, schedule)?;
    check_case(&mut c, &sc, schedule)?;
    Ok(ViolationReport {
        tolerance: tol,
        checks: c.checks,
        max_residual: c.max_residual,
        violations: c.out,
    })
}
