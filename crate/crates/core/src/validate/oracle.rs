//! Exhaustive reference optimum.
//!
//! Discrete decisions are enumerated explicitly: every route of every
//! mobile resource (exact travel times, trips finished within the horizon,
//! no round trips), every pickup subset at every carrier departure, and
//! every pickup start per node. Candidates are scanned in decreasing order
//! of `restored energy − φ_travel · travel spans`, which bounds the value
//! from above; the scan stops once the bound cannot beat the incumbent.
//!
//! Feasibility of a candidate is decided by a depth-first search over the
//! closed-branch forest of each span. Spans not yet fixed use a copper-plate
//! balance per connected component, which relaxes every forest. The
//! remaining continuous operation and the small logic choices (charge or
//! discharge, fuel segment, self-sufficiency, exchange) form an inner
//! problem solved with `microlp`, minimising the exchange count.
//!
//! Longer trips, round trips and trips cut by the horizon are dropped
//! because waiting parked is never worse. A closed branch inside a component
//! without any source only pins voltages, so forests with such branches are
//! skipped when all loads are non-negative.

use std::f64::consts::PI;

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{CaseTag, Scenario};

/// Size limits of [`brute_force_optimal`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleLimits {
    pub max_nodes: usize,
    pub max_modules: usize,
    pub max_carriers: usize,
    pub max_generators: usize,
    pub max_tankers: usize,
    pub max_spans: usize,
    pub max_switchable_branches: usize,
    /// Upper limit on enumerated (skeleton, pickup pattern) pairs.
    pub max_candidates: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_nodes: 6,
            max_modules: 2,
            max_carriers: 1,
            max_generators: 1,
            max_tankers: 1,
            max_spans: 4,
            max_switchable_branches: 12,
            max_candidates: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// `None` when no schedule is feasible.
    pub objective: Option<f64>,
    /// Weighted restored energy of the optimum, kWh.
    pub restored: f64,
    pub travel_spans: usize,
    pub exchange_spans: usize,
    /// First served span per node, `None` when never served or free.
    pub pickup_start: Vec<Option<usize>>,
    pub candidates: usize,
    pub inner_solves: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Park(usize),
    Go(usize),
}

type Route = Vec<Place>;

fn travel_spans(r: &Route) -> usize {
    r.iter().skip(1).filter(|p| matches!(p, Place::Go(_))).count()
}

fn parked_at(r: &Route, t: usize) -> Option<usize> {
    match r[t] {
        Place::Park(s) => Some(s),
        Place::Go(_) => None,
    }
}

/// Routes starting parked at `start`, over `t = 0..=d`.
fn enumerate_routes(table: &[Vec<usize>], start: usize, d: usize, fixed: bool) -> Vec<Route> {
    fn go(table: &[Vec<usize>], d: usize, cur: &mut Route, out: &mut Vec<Route>) {
        let t = cur.len();
        if t > d {
            out.push(cur.clone());
            return;
        }
        let Place::Park(a) = cur[t - 1] else { unreachable!("routes resume from a parked state") };
        cur.push(Place::Park(a));
        go(table, d, cur, out);
        cur.pop();
        for b in 0..table.len() {
            if b == a {
                continue;
            }
            let tt = table[a][b].max(1);
            if t + tt > d {
                continue;
            }
            cur.extend(std::iter::repeat(Place::Go(b)).take(tt));
            cur.push(Place::Park(b));
            go(table, d, cur, out);
            cur.truncate(t);
        }
    }
    if fixed {
        return vec![vec![Place::Park(start); d + 1]];
    }
    let mut out = Vec::new();
    let mut cur = vec![Place::Park(start)];
    go(table, d, &mut cur, &mut out);
    out
}

/// Carrier route plus module ownership `owner[k][t]` (`None` = aboard).
#[derive(Debug, Clone)]
struct CarrierPlan {
    route: Option<Route>,
    owner: Vec<Vec<Option<usize>>>,
}

fn enumerate_carrier_plans(sc: &Scenario, mod_start: &[usize], bundled: &[usize], fixed: bool) -> Vec<CarrierPlan> {
    let d = sc.time.span_count;
    let nk = mod_start.len();
    let initial: Vec<Vec<Option<usize>>> = mod_start.iter().map(|&s| vec![Some(s)]).collect();
    if sc.fleet.carriers.is_empty() {
        let owner = mod_start.iter().map(|&s| vec![Some(s); d + 1]).collect();
        return vec![CarrierPlan { route: None, owner }];
    }
    let carrier = &sc.fleet.carriers[0];
    let mut out = Vec::new();
    for route in enumerate_routes(&sc.travel.carrier, carrier.start, d, fixed) {
        let mut stack = vec![(1usize, 0u32, initial.clone())];
        while let Some((t, aboard, mut owner)) = stack.pop() {
            if t > d {
                out.push(CarrierPlan {
                    route: Some(route.clone()),
                    owner,
                });
                continue;
            }
            match (route[t - 1], route[t]) {
                (Place::Park(a), Place::Go(_)) => {
                    let here: Vec<usize> = (0..nk).filter(|&k| owner[k][t - 1] == Some(a)).collect();
                    for mask in 0u32..(1 << here.len()) {
                        let chosen: Vec<usize> = (0..here.len()).filter(|&b| mask & (1 << b) != 0).map(|b| here[b]).collect();
                        let weight: f64 = chosen.iter().map(|&k| sc.fleet.modules[k].weight).sum();
                        if weight > carrier.capacity + 1e-12 {
                            continue;
                        }
                        if bundled.iter().any(|k| !chosen.contains(k)) {
                            continue;
                        }
                        let mut next = owner.clone();
                        let mut bits = 0u32;
                        for (k, series) in next.iter_mut().enumerate() {
                            if chosen.contains(&k) {
                                series.push(None);
                                bits |= 1 << k;
                            } else {
                                series.push(series[t - 1]);
                            }
                        }
                        stack.push((t + 1, bits, next));
                    }
                }
                (Place::Go(b), Place::Park(_)) => {
                    for (k, series) in owner.iter_mut().enumerate() {
                        let v = if aboard & (1 << k) != 0 { Some(b) } else { series[t - 1] };
                        series.push(v);
                    }
                    stack.push((t + 1, 0, owner));
                }
                _ => {
                    for series in owner.iter_mut() {
                        series.push(series[t - 1]);
                    }
                    stack.push((t + 1, aboard, owner));
                }
            }
        }
    }
    out
}

/// One combination of carrier plan, generator route and tanker route.
#[derive(Debug, Clone)]
struct Skeleton {
    carrier: usize,
    meg: Option<usize>,
    ft: Option<usize>,
    travel: usize,
}

struct Instance<'a> {
    sc: &'a Scenario,
    case: CaseTag,
    carrier_plans: Vec<CarrierPlan>,
    meg_routes: Vec<Route>,
    ft_routes: Vec<Route>,
    /// Nodes whose pickup is enumerated, with per-span value `w · P · Δt`.
    valued: Vec<usize>,
    value: Vec<Vec<f64>>,
    /// Nodes with load but no value; pickup is left to the inner problem.
    free: Vec<usize>,
    /// Per span: whether the node is pinned unserved.
    open_node: Vec<Vec<bool>>,
    /// Per span: candidate forests as closed-branch masks, largest first.
    forests: Vec<Vec<Vec<bool>>>,
    /// Per span: component id of every node in the graph minus open pins.
    relaxed_comp: Vec<Vec<usize>>,
    nonneg_loads: bool,
    solves: usize,
}

fn fail(message: impl Into<String>) -> Error {
    Error::Backend {
        backend: "microlp".into(),
        message: message.into(),
    }
}

/// Exhaustive optimum of `scenario` under its configured case variant.
pub fn brute_force_optimal(scenario: &Scenario) -> Result<OracleResult> {
    brute_force_optimal_with(scenario, &OracleLimits::default())
}

pub fn brute_force_optimal_with(scenario: &Scenario, limits: &OracleLimits) -> Result<OracleResult> {
    let sc = scenario;
    let d = sc.time.span_count;
    let net = &sc.network;
    let n = net.nodes.len();
    let too_large = |what: &str, got: usize, max: usize| {
        if got > max {
            Err(Error::InstanceTooLarge(format!("{got} {what}, limit {max}")))
        } else {
            Ok(())
        }
    };
    too_large("nodes", n, limits.max_nodes)?;
    too_large("modules", sc.fleet.modules.len(), limits.max_modules)?;
    too_large("carriers", sc.fleet.carriers.len(), limits.max_carriers)?;
    too_large("generators", sc.fleet.generators.len(), limits.max_generators)?;
    too_large("tankers", sc.fleet.tankers.len(), limits.max_tankers)?;
    too_large("spans", d, limits.max_spans)?;
    if sc.study.strict_pickup {
        return Err(Error::OracleUnsupported("strict pickup".into()));
    }
    if sc.faults.windows.iter().any(|w| !w.closed_nodes.is_empty()) {
        return Err(Error::OracleUnsupported("pinned closed nodes".into()));
    }

    let infeasible = |candidates| OracleResult {
        objective: None,
        restored: 0.0,
        travel_spans: 0,
        exchange_spans: 0,
        pickup_start: vec![None; n],
        candidates,
        inner_solves: 0,
    };

    // A fictitious spanning tree exists only on a connected graph.
    let mut uf = UnionFind::<usize>::new(n);
    for br in &net.branches {
        uf.union(br.from, br.to);
    }
    if (0..n).any(|i| !uf.equiv(i, net.substation)) {
        return Ok(infeasible(0));
    }

    let case = sc.study.case;
    let mod_start: Vec<usize> = (0..sc.fleet.modules.len())
        .map(|k| if case == CaseTag::Case2 { sc.case2_module_site(k) } else { sc.fleet.modules[k].start })
        .collect();
    let bundled: Vec<usize> = if case == CaseTag::Case3 {
        sc.case3_bundles()?.into_iter().filter(|b| b.carrier == 0).flat_map(|b| b.modules).collect()
    } else {
        Vec::new()
    };
    if bundled.iter().any(|&k| sc.fleet.carriers.first().is_none_or(|c| mod_start[k] != c.start)) {
        return Ok(infeasible(0));
    }
    let carrier_plans = enumerate_carrier_plans(sc, &mod_start, &bundled, case == CaseTag::Case2);
    let meg_routes = match sc.fleet.generators.first() {
        Some(_) => {
            let start = if case == CaseTag::Case2 { sc.case2_generator_site(0) } else { sc.fleet.generators[0].start };
            enumerate_routes(&sc.travel.generator, start, d, case == CaseTag::Case2)
        }
        None => Vec::new(),
    };
    let ft_routes = match sc.fleet.tankers.first() {
        Some(ft) => enumerate_routes(&sc.travel.tanker, ft.start, d, case == CaseTag::Case4),
        None => Vec::new(),
    };

    let dt = sc.time.span_length_h;
    let mut valued = Vec::new();
    let mut value = Vec::new();
    let mut free = Vec::new();
    let mut nonneg_loads = true;
    for (i, node) in net.nodes.iter().enumerate() {
        let v: Vec<f64> = (1..=d).map(|t| node.weight * node.p_kw_at(t) * dt).collect();
        let loaded = (1..=d).any(|t| node.p_kw_at(t) != 0.0 || node.q_kvar_at(t) != 0.0);
        nonneg_loads &= (1..=d).all(|t| node.p_kw_at(t) >= 0.0 && node.q_kvar_at(t) >= 0.0);
        if v.iter().any(|&x| x != 0.0) {
            valued.push(i);
            value.push(v);
        } else if loaded {
            free.push(i);
        }
    }

    let mut open_node = vec![vec![false; n]; d + 1];
    let mut forests = vec![Vec::new(); d + 1];
    let mut relaxed_comp = vec![Vec::new(); d + 1];
    for t in 1..=d {
        let f = sc.fault_sets_at(t)?;
        for &i in &f.open_nodes {
            open_node[t][i] = true;
        }
        if f.open_branches.iter().any(|b| f.closed_branches.contains(b)) {
            return Ok(infeasible(0));
        }
        let switchable: Vec<usize> = (0..net.branches.len())
            .filter(|b| !f.open_branches.contains(b) && !f.closed_branches.contains(b))
            .collect();
        too_large("switchable branches", switchable.len(), limits.max_switchable_branches)?;
        let mut list = Vec::new();
        for mask in 0u64..(1 << switchable.len()) {
            let mut closed = vec![false; net.branches.len()];
            for &b in &f.closed_branches {
                closed[b] = true;
            }
            for (bit, &b) in switchable.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    closed[b] = true;
                }
            }
            let mut uf = UnionFind::<usize>::new(n);
            let acyclic = net
                .branches
                .iter()
                .enumerate()
                .filter(|(b, _)| closed[*b])
                .all(|(_, br)| uf.union(br.from, br.to));
            if acyclic {
                list.push(closed);
            }
        }
        if list.is_empty() {
            return Ok(infeasible(0));
        }
        list.sort_by_key(|c| std::cmp::Reverse(c.iter().filter(|&&x| x).count()));
        forests[t] = list;
        let mut uf = UnionFind::<usize>::new(n);
        for (b, br) in net.branches.iter().enumerate() {
            if !f.open_branches.contains(&b) {
                uf.union(br.from, br.to);
            }
        }
        relaxed_comp[t] = (0..n).map(|i| uf.find(i)).collect();
    }

    let mut inst = Instance {
        sc,
        case,
        carrier_plans,
        meg_routes,
        ft_routes,
        valued,
        value,
        free,
        open_node,
        forests,
        relaxed_comp,
        nonneg_loads,
        solves: 0,
    };

    // Pickup patterns: first served span per valued node, `d + 1` = never.
    let mut patterns: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 0.0)];
    for (vi, &i) in inst.valued.iter().enumerate() {
        let first = (1..=d).rev().find(|&t| inst.open_node[t][i]).map_or(1, |t| t + 1);
        let mut next = Vec::new();
        for (starts, e) in &patterns {
            for s in first..=d + 1 {
                let gain: f64 = (s..=d).map(|t| inst.value[vi][t - 1]).sum();
                let mut st = starts.clone();
                st.push(s);
                next.push((st, e + gain));
            }
            if first > d + 1 {
                let mut st = starts.clone();
                st.push(d + 1);
                next.push((st, *e));
            }
        }
        patterns = next;
    }

    let mut skeletons = Vec::new();
    let megs: Vec<Option<usize>> = if inst.meg_routes.is_empty() { vec![None] } else { (0..inst.meg_routes.len()).map(Some).collect() };
    let fts: Vec<Option<usize>> = if inst.ft_routes.is_empty() { vec![None] } else { (0..inst.ft_routes.len()).map(Some).collect() };
    for (c, plan) in inst.carrier_plans.iter().enumerate() {
        for &m in &megs {
            for &h in &fts {
                let travel = plan.route.as_ref().map_or(0, travel_spans)
                    + m.map_or(0, |m| travel_spans(&inst.meg_routes[m]))
                    + h.map_or(0, |h| travel_spans(&inst.ft_routes[h]));
                skeletons.push(Skeleton { carrier: c, meg: m, ft: h, travel });
            }
        }
    }
    let total = skeletons.len().saturating_mul(patterns.len());
    too_large("candidates", total, limits.max_candidates)?;

    let phi_t = sc.study.phi_travel;
    let phi_f = sc.study.phi_fuel;
    let mut order: Vec<(f64, u32, u32)> = Vec::with_capacity(total);
    for (s, sk) in skeletons.iter().enumerate() {
        for (p, (_, e)) in patterns.iter().enumerate() {
            order.push((e - phi_t * sk.travel as f64, s as u32, p as u32));
        }
    }
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut best: Option<(f64, usize, usize, usize)> = None;
    let mut scanned = 0;
    for &(ub, s, p) in &order {
        if let Some((v, ..)) = best {
            if ub <= v + 1e-9 {
                break;
            }
        }
        scanned += 1;
        let sk = &skeletons[s as usize];
        let starts = &patterns[p as usize].0;
        if !inst.reachable(sk, starts) {
            continue;
        }
        let need = best.map(|(v, ..)| v);
        if let Some(exchanges) = inst.min_exchanges(sk, starts, ub, phi_f, need)? {
            let v = ub - phi_f * exchanges as f64;
            if best.is_none_or(|(b, ..)| v > b + 1e-9) {
                best = Some((v, s as usize, p as usize, exchanges));
            }
        }
    }

    let solves = inst.solves;
    Ok(match best {
        None => OracleResult {
            inner_solves: solves,
            ..infeasible(scanned)
        },
        Some((v, s, p, exchanges)) => {
            let starts = &patterns[p].0;
            let mut pickup_start = vec![None; n];
            for (vi, &i) in inst.valued.iter().enumerate() {
                if starts[vi] <= d {
                    pickup_start[i] = Some(starts[vi]);
                }
            }
            OracleResult {
                objective: Some(v),
                restored: patterns[p].1,
                travel_spans: skeletons[s].travel,
                exchange_spans: exchanges,
                pickup_start,
                candidates: scanned,
                inner_solves: solves,
            }
        }
    })
}

/// Linear expression over inner-problem variables.
#[derive(Debug, Clone, Default)]
struct Lin {
    terms: Vec<(Variable, f64)>,
    constant: f64,
}

impl Lin {
    fn var(v: Variable) -> Lin {
        Lin {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    fn add(&mut self, v: Variable, c: f64) {
        self.terms.push((v, c));
    }

    fn add_lin(&mut self, other: &Lin, s: f64) {
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * s)));
        self.constant += other.constant * s;
    }
}

fn constrain(p: &mut Problem, e: &Lin, op: ComparisonOp, rhs: f64) {
    p.add_constraint(e.terms.clone(), op, rhs - e.constant);
}

/// Inscribed regular `k`-gon of radius `r` around `(x, y)`.
fn polygon(p: &mut Problem, x: &Lin, y: &Lin, r: f64, k: usize) {
    let apothem = (PI / k as f64).cos();
    for m in 0..k {
        let phi = (2 * m + 1) as f64 * PI / k as f64;
        let mut e = Lin::default();
        e.add_lin(x, phi.cos());
        e.add_lin(y, phi.sin());
        constrain(p, &e, ComparisonOp::Le, apothem * r);
    }
}

impl Instance<'_> {
    fn served(&self, starts: &[usize], vi: usize, t: usize) -> bool {
        starts[vi] <= t
    }

    /// Nodes holding a module, a parked generator or the live substation.
    fn sources(&self, sk: &Skeleton, t: usize) -> Vec<bool> {
        let sc = self.sc;
        let mut src = vec![false; sc.network.nodes.len()];
        if sc.study.substation_energized {
            src[sc.network.substation] = true;
        }
        for series in &self.carrier_plans[sk.carrier].owner {
            if let Some(slot) = series[t] {
                src[sc.access.storage_nodes[slot]] = true;
            }
        }
        if let Some(m) = sk.meg {
            if let Some(node) = parked_at(&self.meg_routes[m], t).and_then(|s| sc.access.fuel_site_node(s)) {
                src[node] = true;
            }
        }
        src
    }

    /// Every served node with active load shares a component of the graph
    /// minus open branches with a source able to supply it.
    fn reachable(&self, sk: &Skeleton, starts: &[usize]) -> bool {
        let sc = self.sc;
        let d = sc.time.span_count;
        for t in 1..=d {
            let mut src = self.sources(sk, t);
            if self.case == CaseTag::Case1 {
                src = vec![false; src.len()];
                if sc.study.substation_energized {
                    src[sc.network.substation] = true;
                }
            }
            let comp = &self.relaxed_comp[t];
            for (vi, &i) in self.valued.iter().enumerate() {
                if self.served(starts, vi, t) && sc.network.p_load_pu(i, t) > 0.0 {
                    let ok = (0..src.len()).any(|j| src[j] && comp[j] == comp[i]);
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn canonical(&self, closed: &[bool], src: &[bool], t: usize) -> bool {
        if !self.nonneg_loads {
            return true;
        }
        let net = &self.sc.network;
        let n = net.nodes.len();
        let mut uf = UnionFind::<usize>::new(n);
        for (b, br) in net.branches.iter().enumerate() {
            if closed[b] {
                uf.union(br.from, br.to);
            }
        }
        let f = self.sc.faults.sets_at(t);
        net.branches.iter().enumerate().all(|(b, br)| {
            !closed[b] || f.closed_branches.contains(&b) || (0..n).any(|j| src[j] && uf.equiv(j, br.from))
        })
    }

    /// Fewest exchanges over all forest choices, or `None` if infeasible.
    /// Stops early when no forest choice can beat `need`.
    fn min_exchanges(&mut self, sk: &Skeleton, starts: &[usize], ub: f64, phi_f: f64, need: Option<f64>) -> Result<Option<usize>> {
        let d = self.sc.time.span_count;
        let cap = need.map(|v| if phi_f > 0.0 { ((ub - v) / phi_f - 1e-9).ceil().max(0.0) as usize } else { 0 });
        let mut topo: Vec<Option<usize>> = vec![None; d + 1];
        let mut best: Option<usize> = None;
        self.search(sk, starts, 1, &mut topo, phi_f > 0.0, cap, &mut best)?;
        Ok(best)
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &mut self,
        sk: &Skeleton,
        starts: &[usize],
        t: usize,
        topo: &mut Vec<Option<usize>>,
        optimise: bool,
        cap: Option<usize>,
        best: &mut Option<usize>,
    ) -> Result<()> {
        let d = self.sc.time.span_count;
        let Some(lb) = self.inner(sk, starts, topo, optimise)? else {
            return Ok(());
        };
        if best.is_some_and(|b| lb >= b) || cap.is_some_and(|c| lb >= c) {
            return Ok(());
        }
        if t > d {
            *best = Some(lb);
            return Ok(());
        }
        let src = self.sources(sk, t);
        for f in 0..self.forests[t].len() {
            if !self.canonical(&self.forests[t][f], &src, t) {
                continue;
            }
            topo[t] = Some(f);
            self.search(sk, starts, t + 1, topo, optimise, cap, best)?;
            topo[t] = None;
            if best.is_some_and(|b| b <= lb) {
                break;
            }
        }
        Ok(())
    }

    /// Solve the inner problem for fixed discrete choices; spans without a
    /// forest use the copper-plate relaxation. Returns the exchange count.
    fn inner(&mut self, sk: &Skeleton, starts: &[usize], topo: &[Option<usize>], optimise: bool) -> Result<Option<usize>> {
        self.solves += 1;
        let sc = self.sc;
        let d = sc.time.span_count;
        let dt = sc.time.span_length_h;
        let net = &sc.network;
        let n = net.nodes.len();
        let k_disk = sc.study.disk_segments;
        let idle = self.case == CaseTag::Case1;
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let mut exchanges: Vec<Variable> = Vec::new();
        let exch_cost = if optimise { 1.0 } else { 0.0 };

        // Fleet injections per span and node.
        let mut inj_p: Vec<Vec<Lin>> = vec![vec![Lin::default(); n]; d + 1];
        let mut inj_q: Vec<Vec<Lin>> = vec![vec![Lin::default(); n]; d + 1];

        // Modules.
        let owner = &self.carrier_plans[sk.carrier].owner;
        for (k, m) in sc.fleet.modules.iter().enumerate() {
            let (pc_max, pd_max, s_max) = (net.to_pu(m.p_charge_max_kw), net.to_pu(m.p_discharge_max_kw), net.to_pu(m.s_rated_kva));
            let scale = dt * net.base_kva / m.energy_kwh;
            let mut soc_prev = p.add_var(0.0, (m.soc_init, m.soc_init));
            for t in 1..=d {
                let soc = p.add_var(0.0, (m.soc_min.max(0.0), m.soc_max.min(1.0)));
                let mut e = Lin::var(soc);
                e.add(soc_prev, -1.0);
                if let (Some(slot), false) = (owner[k][t], idle) {
                    let c = p.add_binary_var(0.0);
                    let dd = p.add_binary_var(0.0);
                    let pc = p.add_var(0.0, (0.0, pc_max));
                    let pd = p.add_var(0.0, (0.0, pd_max));
                    let q = p.add_var(0.0, (-s_max, s_max));
                    p.add_constraint([(c, 1.0), (dd, 1.0)], ComparisonOp::Le, 1.0);
                    p.add_constraint([(pc, 1.0), (c, -pc_max)], ComparisonOp::Le, 0.0);
                    p.add_constraint([(pd, 1.0), (dd, -pd_max)], ComparisonOp::Le, 0.0);
                    let net_p = Lin {
                        terms: vec![(pd, 1.0), (pc, -1.0)],
                        constant: 0.0,
                    };
                    polygon(&mut p, &net_p, &Lin::var(q), s_max, k_disk);
                    e.add(pc, -m.eff_charge * scale);
                    e.add(pd, scale / m.eff_discharge);
                    let node = sc.access.storage_nodes[slot];
                    inj_p[t][node].add_lin(&net_p, 1.0);
                    inj_q[t][node].add(q, 1.0);
                }
                constrain(&mut p, &e, ComparisonOp::Eq, 0.0);
                soc_prev = soc;
            }
        }

        // Fuel: per-span outflow from each site.
        let nf = sc.access.fuel_site_count();
        let mut site_flow: Vec<Vec<Lin>> = vec![vec![Lin::default(); nf]; d + 1];
        if let Some(mi) = sk.meg {
            let route = &self.meg_routes[mi];
            let g = &sc.fleet.generators[0];
            let (p_max, q_max, s_max) = (net.to_pu(g.p_max_kw), net.to_pu(g.q_max_kvar), net.to_pu(g.s_rated_kva));
            let b_max = g.b_max_l(dt);
            let f = g.fuel_capacity_l;
            let segs = g.segments(dt);
            let mut sof_prev = p.add_var(0.0, (g.sof_init, g.sof_init));
            for t in 1..=d {
                let site = parked_at(route, t);
                let node = site.and_then(|s| sc.access.fuel_site_node(s));
                let out = if node.is_some() && !idle { 1.0 } else { 0.0 };
                let pg = p.add_var(0.0, (0.0, p_max * out));
                let qg = p.add_var(0.0, (0.0, q_max * out));
                if let Some(node) = node {
                    polygon(&mut p, &Lin::var(pg), &Lin::var(qg), s_max, k_disk);
                    inj_p[t][node].add(pg, 1.0);
                    inj_q[t][node].add(qg, 1.0);
                }
                let here = if node.is_some() { 1.0 } else { 0.0 };
                let burn = p.add_var(0.0, (0.0, b_max * here));
                // Fuel curve in convex-hull form: one active piece.
                let mut sum_tau = Vec::new();
                let mut p_sum = Lin::default();
                let mut b_sum = Lin::default();
                for sg in &segs {
                    let tau = p.add_binary_var(0.0);
                    let (lo, hi) = (net.to_pu(sg.p_lo_kw), net.to_pu(sg.p_hi_kw));
                    let piece = p.add_var(0.0, (0.0, hi.max(0.0)));
                    p.add_constraint([(piece, 1.0), (tau, -lo)], ComparisonOp::Ge, 0.0);
                    p.add_constraint([(piece, 1.0), (tau, -hi)], ComparisonOp::Le, 0.0);
                    p_sum.add(piece, 1.0);
                    b_sum.add(piece, sg.slope * net.base_kva);
                    b_sum.add(tau, sg.intercept);
                    sum_tau.push((tau, 1.0));
                }
                p.add_constraint(sum_tau, ComparisonOp::Eq, 1.0);
                p_sum.add(pg, -1.0);
                constrain(&mut p, &p_sum, ComparisonOp::Eq, 0.0);
                b_sum.add(burn, -1.0);
                constrain(&mut p, &b_sum, ComparisonOp::Eq, 0.0);
                // Extra fuel drawn from the site when the tank runs short.
                let b = p.add_binary_var(0.0);
                let extra = p.add_var(0.0, (0.0, b_max * here));
                p.add_constraint([(extra, 1.0), (burn, -1.0)], ComparisonOp::Le, 0.0);
                p.add_constraint([(burn, 1.0), (sof_prev, -f), (b, b_max)], ComparisonOp::Le, b_max);
                p.add_constraint([(burn, 1.0), (sof_prev, -f), (b, f)], ComparisonOp::Ge, 0.0);
                p.add_constraint([(extra, 1.0), (b, b_max)], ComparisonOp::Le, b_max);
                p.add_constraint([(extra, 1.0), (burn, -1.0), (sof_prev, f)], ComparisonOp::Ge, 0.0);
                p.add_constraint([(extra, 1.0), (burn, -1.0), (sof_prev, f), (b, -f)], ComparisonOp::Le, 0.0);
                let sof = p.add_var(0.0, (0.0, 1.0));
                let mut e = Lin::var(sof);
                e.add(sof_prev, -1.0);
                e.add(burn, 1.0 / f);
                e.add(extra, -1.0 / f);
                if let Some(s) = site {
                    site_flow[t][s].add(extra, 1.0);
                    let l = p.add_binary_var(exch_cost);
                    exchanges.push(l);
                    let gx = p.add_var(0.0, (-f, f));
                    p.add_constraint([(gx, 1.0), (l, f)], ComparisonOp::Ge, 0.0);
                    p.add_constraint([(gx, 1.0), (l, -f)], ComparisonOp::Le, 0.0);
                    e.add(gx, -1.0 / f);
                    site_flow[t][s].add(gx, 1.0);
                }
                constrain(&mut p, &e, ComparisonOp::Eq, 0.0);
                sof_prev = sof;
            }
        }
        if let Some(hi) = sk.ft {
            let route = &self.ft_routes[hi];
            let ft = &sc.fleet.tankers[0];
            let (rate_in, rate_out) = sc.tanker_rates_l(0);
            let f = ft.fuel_capacity_l;
            let mut sof_prev = p.add_var(0.0, (ft.sof_init, ft.sof_init));
            for t in 1..=d {
                let sof = p.add_var(0.0, (0.0, 1.0));
                let mut e = Lin::var(sof);
                e.add(sof_prev, -1.0);
                if let (Some(s), false) = (parked_at(route, t), self.case == CaseTag::Case4) {
                    let l = p.add_binary_var(exch_cost);
                    exchanges.push(l);
                    let rel = p.add_var(0.0, (-rate_in, rate_out));
                    p.add_constraint([(rel, 1.0), (l, rate_in)], ComparisonOp::Ge, 0.0);
                    p.add_constraint([(rel, 1.0), (l, -rate_out)], ComparisonOp::Le, 0.0);
                    e.add(rel, 1.0 / f);
                    site_flow[t][s].add(rel, -1.0);
                }
                constrain(&mut p, &e, ComparisonOp::Eq, 0.0);
                sof_prev = sof;
            }
        }
        for s in 0..nf {
            let sf = &sc.fleet.site_fuel[s];
            let mut prev = p.add_var(0.0, (sf.sof_init, sf.sof_init));
            for t in 1..=d {
                let sof = p.add_var(0.0, (0.0, 1.0));
                let mut e = Lin::var(sof);
                e.add(prev, -1.0);
                e.add_lin(&site_flow[t][s], 1.0 / sf.capacity_l);
                constrain(&mut p, &e, ComparisonOp::Eq, 0.0);
                prev = sof;
            }
        }

        // Served load.
        let mut demand_p: Vec<Vec<Lin>> = vec![vec![Lin::default(); n]; d + 1];
        let mut demand_q: Vec<Vec<Lin>> = vec![vec![Lin::default(); n]; d + 1];
        for (vi, &i) in self.valued.iter().enumerate() {
            for t in 1..=d {
                if self.served(starts, vi, t) {
                    demand_p[t][i].constant = net.p_load_pu(i, t);
                    demand_q[t][i].constant = net.q_load_pu(i, t);
                }
            }
        }
        for &i in &self.free {
            let mut prev: Option<Variable> = None;
            for t in 1..=d {
                let delta = p.add_binary_var(0.0);
                if self.open_node[t][i] {
                    p.add_constraint([(delta, 1.0)], ComparisonOp::Eq, 0.0);
                }
                if let Some(pr) = prev {
                    p.add_constraint([(delta, 1.0), (pr, -1.0)], ComparisonOp::Ge, 0.0);
                }
                demand_p[t][i].add(delta, net.p_load_pu(i, t));
                demand_q[t][i].add(delta, net.q_load_pu(i, t));
                prev = Some(delta);
            }
        }

        // Network.
        let root = net.substation;
        let root_live = sc.study.substation_energized;
        let (v_lo, v_hi) = (net.v_min_pu.powi(2), net.v_max_pu.powi(2));
        for t in 1..=d {
            match topo[t] {
                None => {
                    let comp = &self.relaxed_comp[t];
                    let mut roots: Vec<usize> = comp.clone();
                    roots.sort_unstable();
                    roots.dedup();
                    for c in roots {
                        if root_live && comp[root] == c {
                            continue;
                        }
                        let mut bp = Lin::default();
                        let mut bq = Lin::default();
                        for i in (0..n).filter(|&i| comp[i] == c) {
                            bp.add_lin(&inj_p[t][i], 1.0);
                            bp.add_lin(&demand_p[t][i], -1.0);
                            bq.add_lin(&inj_q[t][i], 1.0);
                            bq.add_lin(&demand_q[t][i], -1.0);
                        }
                        constrain(&mut p, &bp, ComparisonOp::Eq, 0.0);
                        constrain(&mut p, &bq, ComparisonOp::Eq, 0.0);
                    }
                }
                Some(fi) => {
                    let closed = &self.forests[t][fi];
                    let v: Vec<Variable> = (0..n)
                        .map(|i| if i == root && root_live { p.add_var(0.0, (1.0, 1.0)) } else { p.add_var(0.0, (v_lo, v_hi)) })
                        .collect();
                    let mut bp: Vec<Lin> = (0..n).map(|i| inj_p[t][i].clone()).collect();
                    let mut bq: Vec<Lin> = (0..n).map(|i| inj_q[t][i].clone()).collect();
                    for (i, (ep, eq)) in bp.iter_mut().zip(bq.iter_mut()).enumerate() {
                        ep.add_lin(&demand_p[t][i], -1.0);
                        eq.add_lin(&demand_q[t][i], -1.0);
                    }
                    if root_live {
                        let q_floor: f64 = net.incident(root).iter().map(|&b| net.s_max_pu(b)).sum();
                        let imp_p = p.add_var(0.0, (0.0, f64::INFINITY));
                        let imp_q = p.add_var(0.0, (-q_floor, f64::INFINITY));
                        bp[root].add(imp_p, 1.0);
                        bq[root].add(imp_q, 1.0);
                    }
                    for (b, br) in net.branches.iter().enumerate() {
                        if !closed[b] {
                            continue;
                        }
                        let s = net.s_max_pu(b);
                        let pb = p.add_var(0.0, (-s, s));
                        let qb = p.add_var(0.0, (-s, s));
                        polygon(&mut p, &Lin::var(pb), &Lin::var(qb), s, k_disk);
                        p.add_constraint(
                            [(v[br.to], 1.0), (v[br.from], -1.0), (pb, 2.0 * br.r_pu), (qb, 2.0 * br.x_pu)],
                            ComparisonOp::Eq,
                            0.0,
                        );
                        bp[br.to].add(pb, 1.0);
                        bp[br.from].add(pb, -1.0);
                        bq[br.to].add(qb, 1.0);
                        bq[br.from].add(qb, -1.0);
                    }
                    for i in 0..n {
                        constrain(&mut p, &bp[i], ComparisonOp::Eq, 0.0);
                        constrain(&mut p, &bq[i], ComparisonOp::Eq, 0.0);
                    }
                }
            }
        }

        match p.solve() {
            Ok(outcome) => {
                let sol = outcome.solution().ok_or_else(|| fail("interrupted without a limit"))?;
                let count = exchanges.iter().filter(|&&l| sol.var_value(l) > 0.5).count();
                Ok(Some(if optimise { count } else { 0 }))
            }
            Err(microlp::Error::Infeasible) => Ok(None),
            Err(e) => Err(fail(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routes_finish_trips_within_horizon() {
        let table = vec![vec![0, 2], vec![2, 0]];
        let routes = enumerate_routes(&table, 0, 3, false);
        // stay; depart at 1 (arrive 3)
        assert_eq!(routes.len(), 2);
        assert!(routes.iter().all(|r| r.len() == 4 && r[0] == Place::Park(0)));
        assert_eq!(routes[1], vec![Place::Park(0), Place::Go(1), Place::Go(1), Place::Park(1)]);
    }

    #[test]
    fn one_span_trips_allow_returns() {
        let table = vec![vec![0, 1], vec![1, 0]];
        let routes = enumerate_routes(&table, 0, 4, false);
        assert!(routes.contains(&vec![Place::Park(0), Place::Go(1), Place::Park(1), Place::Go(0), Place::Park(0)]));
        assert!(routes.iter().all(|r| travel_spans(r) <= 2));
    }

    #[test]
    fn fixed_route_stays_put() {
        let routes = enumerate_routes(&[vec![0, 1], vec![1, 0]], 1, 3, true);
        assert_eq!(routes, vec![vec![Place::Park(1); 4]]);
    }
}
