use crate::milp::{indexed_name, LinExpr, ModelIR, Sense, VarId};
use crate::scenario::Scenario;

#[derive(Debug, Clone)]
pub struct RadialityVars {
    /// Commodity nodes, i.e. every node except the substation, in node order.
    pub commodities: Vec<usize>,
    /// `flow[t - 1][commodity][arc]`
    pub flow: Vec<Vec<Vec<VarId>>>,
    /// `lambda[t - 1][arc]`
    pub lambda: Vec<Vec<VarId>>,
    /// `mu[t - 1][branch]`: branch in the fictitious spanning tree.
    pub mu: Vec<Vec<VarId>>,
    /// `kappa[t - 1][branch]`: branch closed.
    pub kappa: Vec<Vec<VarId>>,
}

/// Endpoints `(tail, head)` of directed arc `a`.
pub(crate) fn arc_ends(scenario: &Scenario, a: usize) -> (usize, usize) {
    let br = &scenario.network.branches[a / 2];
    if a % 2 == 0 {
        (br.from, br.to)
    } else {
        (br.to, br.from)
    }
}

fn arc_label(scenario: &Scenario, a: usize) -> String {
    let (u, v) = arc_ends(scenario, a);
    let nodes = &scenario.network.nodes;
    format!("{}>{}", nodes[u].id, nodes[v].id)
}

pub(crate) fn branch_label(scenario: &Scenario, b: usize) -> String {
    let br = &scenario.network.branches[b];
    let nodes = &scenario.network.nodes;
    format!("{}~{}", nodes[br.from].id, nodes[br.to].id)
}

/// Emit single-commodity flows that certify a fictitious spanning tree per
/// span, and the rule that closed branches are a subset of it.
pub fn emit_radiality(model: &mut ModelIR, scenario: &Scenario) -> RadialityVars {
    let d = scenario.time.span_count;
    let net = &scenario.network;
    let n = net.nodes.len();
    let arcs = 2 * net.branches.len();
    let root = net.substation;
    let commodities: Vec<usize> = (0..n).filter(|&i| i != root).collect();
    let arc_names: Vec<String> = (0..arcs).map(|a| arc_label(scenario, a)).collect();
    let br_names: Vec<String> = (0..net.branches.len()).map(|b| branch_label(scenario, b)).collect();

    let mut rv = RadialityVars {
        commodities: commodities.clone(),
        flow: Vec::with_capacity(d),
        lambda: Vec::with_capacity(d),
        mu: Vec::with_capacity(d),
        kappa: Vec::with_capacity(d),
    };
    for t in 1..=d {
        rv.flow.push(
            commodities
                .iter()
                .map(|&c| {
                    let cid = &net.nodes[c].id;
                    arc_names
                        .iter()
                        .map(|a| model.add_continuous("f", indexed_name("f", &[("c", cid), ("a", a), ("t", &t)]), 0.0, 1.0))
                        .collect()
                })
                .collect(),
        );
        rv.lambda.push(
            arc_names
                .iter()
                .map(|a| model.add_binary("lambda", indexed_name("lambda", &[("a", a), ("t", &t)])))
                .collect(),
        );
        rv.mu.push(
            br_names
                .iter()
                .map(|b| model.add_binary("mu", indexed_name("mu", &[("b", b), ("t", &t)])))
                .collect(),
        );
        rv.kappa.push(
            br_names
                .iter()
                .map(|b| model.add_binary("kappa", indexed_name("kappa", &[("b", b), ("t", &t)])))
                .collect(),
        );
    }

    for t in 1..=d {
        for (ci, &c) in commodities.iter().enumerate() {
            let cid = &net.nodes[c].id;
            let f = &rv.flow[t - 1][ci];
            // 8a-8c: inflow minus outflow per node.
            for i in 0..n {
                let mut e = LinExpr::new();
                for &b in net.incident(i) {
                    for a in [2 * b, 2 * b + 1] {
                        let (tail, head) = arc_ends(scenario, a);
                        if head == i {
                            e.push(f[a], 1.0);
                        } else if tail == i {
                            e.push(f[a], -1.0);
                        }
                    }
                }
                let nid = &net.nodes[i].id;
                let (fam, rhs) = if i == root {
                    ("8a", -1.0)
                } else if i == c {
                    ("8b", 1.0)
                } else {
                    ("8c", 0.0)
                };
                let label = if fam == "8c" {
                    format!("8c[c={cid},i={nid},t={t}]")
                } else {
                    format!("{fam}[c={cid},t={t}]")
                };
                model.add_row(fam, label, e, Sense::Eq, rhs);
            }
            // 8d
            for (a, an) in arc_names.iter().enumerate() {
                let idx = format!("[c={cid},a={an},t={t}]");
                model.add_row("8d", format!("8d-lower{idx}"), LinExpr::term(f[a], 1.0), Sense::Ge, 0.0);
                model.add_row(
                    "8d",
                    format!("8d-upper{idx}"),
                    LinExpr::term(f[a], 1.0).with(rv.lambda[t - 1][a], -1.0),
                    Sense::Le,
                    0.0,
                );
            }
        }
        // 8e
        model.add_row(
            "8e",
            format!("8e[t={t}]"),
            LinExpr::sum(rv.lambda[t - 1].iter().copied()),
            Sense::Eq,
            (n - 1) as f64,
        );
        for (b, bn) in br_names.iter().enumerate() {
            // 8f
            let e = LinExpr::term(rv.lambda[t - 1][2 * b], 1.0)
                .with(rv.lambda[t - 1][2 * b + 1], 1.0)
                .with(rv.mu[t - 1][b], -1.0);
            model.add_row("8f", format!("8f[b={bn},t={t}]"), e, Sense::Eq, 0.0);
            // 8g
            let e = LinExpr::term(rv.kappa[t - 1][b], 1.0).with(rv.mu[t - 1][b], -1.0);
            model.add_row("8g", format!("8g[b={bn},t={t}]"), e, Sense::Le, 0.0);
        }
    }
    rv
}
