use crate::assembly::BigM;
use crate::error::Result;
use crate::milp::{indexed_name, piecewise_bigm, polygonal_disk, LinExpr, ModelIR, Sense, VarId};
use crate::milp::{PiecewiseCurve, PiecewiseNames};
use crate::scenario::Scenario;

use super::{MerVars, SpanTable};

/// Generator output, per-unit, over generator-access nodes only.
#[derive(Debug, Clone)]
pub struct MegPowerVars {
    /// `[m][t - 1][generator-node slot]`
    pub p: Vec<SpanTable>,
    pub q: Vec<SpanTable>,
}

impl MegPowerVars {
    pub fn total_p(&self, m: usize, t: usize) -> LinExpr {
        LinExpr::sum(self.p[m][t - 1].iter().copied())
    }

    pub fn total_q(&self, m: usize, t: usize) -> LinExpr {
        LinExpr::sum(self.q[m][t - 1].iter().copied())
    }
}

/// Fuel variables in litres (flows) and fractions of capacity (states).
#[derive(Debug, Clone)]
pub struct FuelVars {
    /// Gross demand `B[m][t - 1][site]`.
    pub burn: Vec<SpanTable>,
    /// Extra demand drawn from the site `B+[m][t - 1][site]`.
    pub extra: Vec<SpanTable>,
    /// Site-to-generator transfer `G[m][t - 1][site]`.
    pub exchange: Vec<SpanTable>,
    /// Segment selectors `tau[m][t - 1][l]`.
    pub tau: Vec<SpanTable>,
    /// Self-sufficiency indicator `b[m][t - 1]`.
    pub self_sufficient: Vec<Vec<VarId>>,
    /// Exchange indicators `l[m][t - 1][site]` and `l[h][t - 1][site]`.
    pub meg_exchanging: Vec<SpanTable>,
    pub ft_exchanging: Vec<SpanTable>,
    /// Tanker release `D[h][t - 1][site]` (negative when loading).
    pub release: Vec<SpanTable>,
    /// States `[entity][t]`, `t = 0..=D`.
    pub sof_meg: Vec<Vec<VarId>>,
    pub sof_ft: Vec<Vec<VarId>>,
    pub sof_site: Vec<Vec<VarId>>,
}

/// Emit parked-gated output bounds and the apparent-power disk.
pub fn emit_meg_power(model: &mut ModelIR, scenario: &Scenario, generators: &[MerVars]) -> Result<MegPowerVars> {
    let d = scenario.time.span_count;
    let net = &scenario.network;
    let ng = scenario.access.generator_nodes.len();
    let mut out = MegPowerVars {
        p: Vec::new(),
        q: Vec::new(),
    };
    for g in &scenario.fleet.generators {
        let (p_max, q_max) = (net.to_pu(g.p_max_kw), net.to_pu(g.q_max_kvar));
        let mut p_tab = Vec::with_capacity(d);
        let mut q_tab = Vec::with_capacity(d);
        for t in 1..=d {
            let mut p_row = Vec::with_capacity(ng);
            let mut q_row = Vec::with_capacity(ng);
            for slot in 0..ng {
                let i = scenario.fuel_site_label(slot);
                let idx = [("m", &g.id as &dyn std::fmt::Display), ("i", &i), ("t", &t)];
                p_row.push(model.add_continuous("PG", indexed_name("PG", &idx), 0.0, p_max));
                q_row.push(model.add_continuous("QG", indexed_name("QG", &idx), 0.0, q_max));
            }
            p_tab.push(p_row);
            q_tab.push(q_row);
        }
        out.p.push(p_tab);
        out.q.push(q_tab);
    }

    for (m, g) in scenario.fleet.generators.iter().enumerate() {
        let (p_max, q_max, s_max) = (net.to_pu(g.p_max_kw), net.to_pu(g.q_max_kvar), net.to_pu(g.s_rated_kva));
        for t in 1..=d {
            for slot in 0..ng {
                let idx = format!("[m={},i={},t={t}]", g.id, scenario.fuel_site_label(slot));
                let x = generators[m].x[t][slot];
                let (p, q) = (out.p[m][t - 1][slot], out.q[m][t - 1][slot]);
                model.add_row("6a", format!("6a-p-lower{idx}"), LinExpr::term(p, 1.0), Sense::Ge, 0.0);
                model.add_row("6a", format!("6a-p-upper{idx}"), LinExpr::term(p, 1.0).with(x, -p_max), Sense::Le, 0.0);
                model.add_row("6a", format!("6a-q-lower{idx}"), LinExpr::term(q, 1.0), Sense::Ge, 0.0);
                model.add_row("6a", format!("6a-q-upper{idx}"), LinExpr::term(q, 1.0).with(x, -q_max), Sense::Le, 0.0);
            }
            polygonal_disk(
                model,
                &out.total_p(m, t),
                &out.total_q(m, t),
                &LinExpr::constant(s_max),
                scenario.study.disk_segments,
                "6b",
                &format!("[m={},t={t}]", g.id),
            )?;
        }
    }
    Ok(out)
}

/// Fuel curve of generator `m` with the driver in per-unit and the value in
/// litres per span.
pub fn fuel_curve_pu(scenario: &Scenario, m: usize) -> PiecewiseCurve {
    let g = &scenario.fleet.generators[m];
    let base = scenario.network.base_kva;
    let segs = g.segments(scenario.time.span_length_h);
    let mut breakpoints = vec![segs[0].p_lo_kw / base];
    breakpoints.extend(segs.iter().map(|s| s.p_hi_kw / base));
    PiecewiseCurve {
        breakpoints,
        slopes: segs.iter().map(|s| s.slope * base).collect(),
        intercepts: segs.iter().map(|s| s.intercept).collect(),
    }
}

/// Emit gross-demand gating, the piecewise fuel curve, extra-fuel logic,
/// fuel states and exchange rows.
pub fn emit_fuel_logistics(
    model: &mut ModelIR,
    scenario: &Scenario,
    generators: &[MerVars],
    tankers: &[MerVars],
    meg: &MegPowerVars,
    big_m: &BigM,
) -> Result<FuelVars> {
    let d = scenario.time.span_count;
    let dt = scenario.time.span_length_h;
    let ns = scenario.access.fuel_site_count();
    let ng = scenario.access.generator_nodes.len();
    let sites: Vec<&str> = (0..ns).map(|s| scenario.fuel_site_label(s)).collect();
    let gens = &scenario.fleet.generators;
    let fts = &scenario.fleet.tankers;

    let mut fv = FuelVars {
        burn: Vec::new(),
        extra: Vec::new(),
        exchange: Vec::new(),
        tau: Vec::new(),
        self_sufficient: Vec::new(),
        meg_exchanging: Vec::new(),
        ft_exchanging: Vec::new(),
        release: Vec::new(),
        sof_meg: Vec::new(),
        sof_ft: Vec::new(),
        sof_site: Vec::new(),
    };

    let per_site = |model: &mut ModelIR, fam: &'static str, key: &str, id: &str, lo: f64, hi: f64, binary: bool| {
        (1..=d)
            .map(|t| {
                sites
                    .iter()
                    .map(|i| {
                        let name = indexed_name(fam, &[(key, &id), ("i", i), ("t", &t)]);
                        if binary {
                            model.add_binary(fam, name)
                        } else {
                            model.add_continuous(fam, name, lo, hi)
                        }
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };
    let states = |model: &mut ModelIR, key: &str, id: &str| {
        (0..=d)
            .map(|t| model.add_continuous("SOF", indexed_name("SOF", &[(key, &id), ("t", &t)]), 0.0, 1.0))
            .collect::<Vec<_>>()
    };

    for g in gens {
        let b_max = g.b_max_l(dt);
        fv.burn.push(per_site(model, "B", "m", &g.id, 0.0, b_max, false));
        fv.extra.push(per_site(model, "Bplus", "m", &g.id, 0.0, b_max, false));
        fv.exchange.push(per_site(model, "G", "m", &g.id, -g.fuel_capacity_l, g.fuel_capacity_l, false));
        fv.meg_exchanging.push(per_site(model, "l", "m", &g.id, 0.0, 1.0, true));
        fv.self_sufficient.push(
            (1..=d)
                .map(|t| model.add_binary("b", indexed_name("b", &[("m", &g.id), ("t", &t)])))
                .collect(),
        );
        fv.sof_meg.push(states(model, "m", &g.id));
    }
    for (h, ft) in fts.iter().enumerate() {
        let (rate_in, rate_out) = scenario.tanker_rates_l(h);
        fv.release.push(per_site(model, "D", "h", &ft.id, -rate_in, rate_out, false));
        fv.ft_exchanging.push(per_site(model, "l", "h", &ft.id, 0.0, 1.0, true));
        fv.sof_ft.push(states(model, "h", &ft.id));
    }
    for s in &sites {
        fv.sof_site.push(states(model, "s", s));
    }

    for (m, g) in gens.iter().enumerate() {
        let b_max = g.b_max_l(dt);
        let f_m = g.fuel_capacity_l;
        let curve = fuel_curve_pu(scenario, m);
        let m_fuel = big_m.fuel(m);
        let p_max = scenario.network.to_pu(g.p_max_kw);
        let mut taus = Vec::with_capacity(d);
        for t in 1..=d {
            let tag = format!("[m={},t={t}]", g.id);
            let burn = &fv.burn[m][t - 1];
            let extra = &fv.extra[m][t - 1];
            for (slot, i) in sites.iter().enumerate() {
                let idx = format!("[m={},i={i},t={t}]", g.id);
                if slot < ng {
                    // 7a
                    let x = generators[m].x[t][slot];
                    model.add_row("7a", format!("7a-lower{idx}"), LinExpr::term(burn[slot], 1.0), Sense::Ge, 0.0);
                    model.add_row(
                        "7a",
                        format!("7a-upper{idx}"),
                        LinExpr::term(burn[slot], 1.0).with(x, -b_max),
                        Sense::Le,
                        0.0,
                    );
                } else {
                    // 7b
                    model.add_row("7b", format!("7b{idx}"), LinExpr::term(burn[slot], 1.0), Sense::Eq, 0.0);
                }
            }
            // 7d, 7e
            let gross = LinExpr::sum(burn[..ng].iter().copied());
            let names = PiecewiseNames {
                var_family: "tau",
                row_family: "7d",
                select_family: "7e",
                index: &tag,
            };
            taus.push(piecewise_bigm(
                model,
                &gross,
                (0.0, b_max),
                &meg.total_p(m, t),
                (0.0, p_max),
                &curve,
                m_fuel,
                names,
            )?);
            // 7f
            let bind = fv.self_sufficient[m][t - 1];
            let sof_prev = fv.sof_meg[m][t - 1];
            for (slot, i) in sites.iter().enumerate() {
                let idx = format!("[m={},i={i},t={t}]", g.id);
                model.add_row("7f", format!("7f-extra-lower{idx}"), LinExpr::term(extra[slot], 1.0), Sense::Ge, 0.0);
                model.add_row(
                    "7f",
                    format!("7f-extra-upper{idx}"),
                    LinExpr::term(extra[slot], 1.0).with(burn[slot], -1.0),
                    Sense::Le,
                    0.0,
                );
            }
            let shortfall = gross.clone().with(sof_prev, -f_m);
            let extra_sum = LinExpr::sum(extra[..ng].iter().copied());
            model.add_row("7f", format!("7f-self-lower{tag}"), shortfall.clone().with(bind, f_m), Sense::Ge, 0.0);
            model.add_row("7f", format!("7f-self-upper{tag}"), shortfall.clone().with(bind, b_max), Sense::Le, b_max);
            model.add_row("7f", format!("7f-cap{tag}"), extra_sum.clone().with(bind, b_max), Sense::Le, b_max);
            let gap = extra_sum.with_expr(&shortfall, -1.0);
            model.add_row("7f", format!("7f-gap-lower{tag}"), gap.clone(), Sense::Ge, 0.0);
            model.add_row("7f", format!("7f-gap-upper{tag}"), gap.with(bind, -f_m), Sense::Le, 0.0);
            // 7g
            let mut e = LinExpr::term(fv.sof_meg[m][t], 1.0).with(sof_prev, -1.0);
            for slot in 0..ns {
                e.push(burn[slot], 1.0 / f_m);
                e.push(extra[slot], -1.0 / f_m);
                e.push(fv.exchange[m][t - 1][slot], -1.0 / f_m);
            }
            model.add_row("7g", format!("7g{tag}"), e, Sense::Eq, 0.0);
            // 7j, 7k
            for (slot, i) in sites.iter().enumerate() {
                let idx = format!("[m={},i={i},t={t}]", g.id);
                let l = fv.meg_exchanging[m][t - 1][slot];
                let gx = fv.exchange[m][t - 1][slot];
                model.add_row(
                    "7j",
                    format!("7j{idx}"),
                    LinExpr::term(l, 1.0).with(generators[m].x[t][slot], -1.0),
                    Sense::Le,
                    0.0,
                );
                model.add_row("7k", format!("7k-lower{idx}"), LinExpr::term(gx, 1.0).with(l, f_m), Sense::Ge, 0.0);
                model.add_row("7k", format!("7k-upper{idx}"), LinExpr::term(gx, 1.0).with(l, -f_m), Sense::Le, 0.0);
            }
        }
        fv.tau.push(taus);
    }

    for (h, ft) in fts.iter().enumerate() {
        let (rate_in, rate_out) = scenario.tanker_rates_l(h);
        for t in 1..=d {
            let mut e = LinExpr::term(fv.sof_ft[h][t], 1.0).with(fv.sof_ft[h][t - 1], -1.0);
            for (slot, i) in sites.iter().enumerate() {
                let idx = format!("[h={},i={i},t={t}]", ft.id);
                let l = fv.ft_exchanging[h][t - 1][slot];
                let rel = fv.release[h][t - 1][slot];
                // 7l, 7m
                model.add_row(
                    "7l",
                    format!("7l{idx}"),
                    LinExpr::term(l, 1.0).with(tankers[h].x[t][slot], -1.0),
                    Sense::Le,
                    0.0,
                );
                model.add_row("7m", format!("7m-lower{idx}"), LinExpr::term(rel, 1.0).with(l, rate_in), Sense::Ge, 0.0);
                model.add_row("7m", format!("7m-upper{idx}"), LinExpr::term(rel, 1.0).with(l, -rate_out), Sense::Le, 0.0);
                e.push(rel, 1.0 / ft.fuel_capacity_l);
            }
            // 7h
            model.add_row("7h", format!("7h[h={},t={t}]", ft.id), e, Sense::Eq, 0.0);
        }
    }

    // 7i
    for (slot, i) in sites.iter().enumerate() {
        let f_i = scenario.fleet.site_fuel[slot].capacity_l;
        for t in 1..=d {
            let mut e = LinExpr::term(fv.sof_site[slot][t], 1.0).with(fv.sof_site[slot][t - 1], -1.0);
            for h in 0..fts.len() {
                e.push(fv.release[h][t - 1][slot], -1.0 / f_i);
            }
            for m in 0..gens.len() {
                e.push(fv.extra[m][t - 1][slot], 1.0 / f_i);
                e.push(fv.exchange[m][t - 1][slot], 1.0 / f_i);
            }
            model.add_row("7i", format!("7i[s={i},t={t}]"), e, Sense::Eq, 0.0);
        }
    }

    // 7n, 7o
    let entities = gens
        .iter()
        .zip(&fv.sof_meg)
        .map(|(g, s)| ("m", g.id.as_str(), g.sof_init, s))
        .chain(fts.iter().zip(&fv.sof_ft).map(|(f, s)| ("h", f.id.as_str(), f.sof_init, s)))
        .chain(
            sites
                .iter()
                .zip(&fv.sof_site)
                .zip(&scenario.fleet.site_fuel)
                .map(|((i, s), sf)| ("s", *i, sf.sof_init, s)),
        );
    for (key, id, init, sof) in entities {
        model.add_row("7n", format!("7n[{key}={id}]"), LinExpr::term(sof[0], 1.0), Sense::Eq, init);
        for (t, &v) in sof.iter().enumerate().skip(1) {
            model.add_row("7o", format!("7o-lower[{key}={id},t={t}]"), LinExpr::term(v, 1.0), Sense::Ge, 0.0);
            model.add_row("7o", format!("7o-upper[{key}={id},t={t}]"), LinExpr::term(v, 1.0), Sense::Le, 1.0);
        }
    }

    Ok(fv)
}
