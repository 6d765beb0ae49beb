use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::unionfind::UnionFind;

use super::document::*;
use super::*;

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    from_doc(&doc)
}

impl TryFrom<&ScenarioDoc> for Scenario {
    type Error = Error;

    fn try_from(doc: &ScenarioDoc) -> Result<Scenario> {
        from_doc(doc)
    }
}

fn require(cond: bool, path: impl Into<String>, message: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invariant(path, message))
    }
}

/// Ids appear inside variable names, so they exclude whitespace and the
/// name delimiters `[`, `]`, `,`, `=`, `~` and `>`.
fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c.is_whitespace() || matches!(c, '[' | ']' | ',' | '=' | '~' | '>'))
}

const ID_RULE: &str = "must be non-empty without whitespace or any of `[],=~>`";

fn finite_nonneg(v: f64, path: String) -> Result<()> {
    require(v.is_finite() && v >= 0.0, path, "must be finite and >= 0")
}

fn positive(v: f64, path: String) -> Result<()> {
    require(v.is_finite() && v > 0.0, path, "must be finite and > 0")
}

fn unit_interval(v: f64, path: String) -> Result<()> {
    require((0.0..=1.0).contains(&v), path, "must lie in [0, 1]")
}

struct Ids<'a> {
    nodes: HashMap<&'a str, usize>,
}

impl<'a> Ids<'a> {
    fn node(&self, id: &str, path: String) -> Result<usize> {
        self.nodes
            .get(id)
            .copied()
            .ok_or_else(|| Error::reference(path, "node", id))
    }
}

pub(super) fn from_doc(doc: &ScenarioDoc) -> Result<Scenario> {
    if let Some(v) = &doc.schema_version {
        require(v == SCHEMA_VERSION, "schema_version", "unsupported schema version")?;
    }
    let time = time_from_doc(&doc.time)?;
    let (network, ids) = network_from_doc(&doc.network, time.span_count)?;
    let access = access_from_doc(&doc.access, &ids)?;
    let faults = faults_from_doc(&doc.faults, &network, &ids, time.span_count)?;
    let fleet = fleet_from_doc(&doc.fleet, &network, &access)?;
    let travel = travel_from_doc(&doc.travel, &network, &access, &fleet)?;
    let study = study_from_doc(&doc.study, &network, &access, &fleet)?;
    if study.substation_energized {
        require(
            network.v_min_pu <= 1.0 && 1.0 <= network.v_max_pu,
            "network",
            "an energized substation is held at 1.0 pu, which must lie within [v_min_pu, v_max_pu]",
        )?;
    }
    let scenario = Scenario {
        time,
        network,
        access,
        faults,
        fleet,
        travel,
        study,
    };
    if scenario.study.case == CaseTag::Case3 {
        check_bundles(&scenario)?;
    }
    Ok(scenario)
}

fn time_from_doc(t: &TimeDoc) -> Result<TimeGrid> {
    require(t.span_count >= 1, "time.span_count", "must be >= 1")?;
    positive(t.span_length_h, "time.span_length_h".into())?;
    Ok(TimeGrid {
        span_count: t.span_count,
        span_length_h: t.span_length_h,
    })
}

fn network_from_doc(n: &NetworkDoc, span_count: usize) -> Result<(Network, Ids<'_>)> {
    positive(n.base_kva, "network.base_kva".into())?;
    positive(n.base_kv, "network.base_kv".into())?;
    positive(n.v_min_pu, "network.v_min_pu".into())?;
    require(n.v_min_pu < n.v_max_pu, "network.v_max_pu", "must exceed v_min_pu")?;
    require(!n.nodes.is_empty(), "network.nodes", "must not be empty")?;

    let mut map = HashMap::new();
    let mut nodes = Vec::with_capacity(n.nodes.len());
    for (i, nd) in n.nodes.iter().enumerate() {
        let path = format!("network.nodes[{i}]");
        require(valid_id(&nd.id), format!("{path}.id"), ID_RULE)?;
        require(map.insert(nd.id.as_str(), i).is_none(), format!("{path}.id"), "duplicate node id")?;
        finite_nonneg(nd.weight, format!("{path}.weight"))?;
        require(nd.p_kw.is_finite(), format!("{path}.p_kw"), "must be finite")?;
        require(nd.q_kvar.is_finite(), format!("{path}.q_kvar"), "must be finite")?;
        let profile = match &nd.profile {
            None => None,
            Some(pts) => {
                require(
                    pts.len() == span_count,
                    format!("{path}.profile"),
                    "must have one entry per span",
                )?;
                for (t, p) in pts.iter().enumerate() {
                    require(
                        p.p_kw.is_finite() && p.q_kvar.is_finite(),
                        format!("{path}.profile[{t}]"),
                        "must be finite",
                    )?;
                }
                Some(pts.iter().map(|p| (p.p_kw, p.q_kvar)).collect())
            }
        };
        nodes.push(Node {
            id: nd.id.clone(),
            p_kw: nd.p_kw,
            q_kvar: nd.q_kvar,
            weight: nd.weight,
            profile,
        });
    }
    let ids = Ids { nodes: map };
    let substation = ids.node(&n.substation, "network.substation".into())?;

    let z_base = n.base_kv * n.base_kv * 1000.0 / n.base_kva;
    let mut branches = Vec::with_capacity(n.branches.len());
    let mut seen = BTreeSet::new();
    for (b, br) in n.branches.iter().enumerate() {
        let path = format!("network.branches[{b}]");
        let from = ids.node(&br.from, format!("{path}.from"))?;
        let to = ids.node(&br.to, format!("{path}.to"))?;
        require(from != to, path.clone(), "branch endpoints must differ")?;
        require(
            seen.insert((from.min(to), from.max(to))),
            path.clone(),
            "parallel branch between the same nodes",
        )?;
        let impedance = match (br.r_ohm, br.x_ohm, br.r_pu, br.x_pu) {
            (Some(r), Some(x), None, None) => Impedance::Ohm { r, x },
            (None, None, Some(r), Some(x)) => Impedance::PerUnit { r, x },
            _ => {
                return Err(Error::Schema {
                    path,
                    message: "give either r_ohm and x_ohm, or r_pu and x_pu".into(),
                })
            }
        };
        let (r_pu, x_pu) = match impedance {
            Impedance::Ohm { r, x } => (r / z_base, x / z_base),
            Impedance::PerUnit { r, x } => (r, x),
        };
        finite_nonneg(r_pu, format!("{path}.r"))?;
        finite_nonneg(x_pu, format!("{path}.x"))?;
        positive(br.s_max_kva, format!("{path}.s_max_kva"))?;
        branches.push(Branch {
            from,
            to,
            impedance,
            r_pu,
            x_pu,
            s_max_kva: br.s_max_kva,
        });
    }

    let mut uf = UnionFind::<usize>::new(nodes.len());
    for br in &branches {
        uf.union(br.from, br.to);
    }
    let root = uf.find(0);
    require(
        (0..nodes.len()).all(|i| uf.find(i) == root),
        "network.branches",
        "network must be connected with every branch closed",
    )?;

    let mut network = Network {
        base_kva: n.base_kva,
        base_kv: n.base_kv,
        substation,
        v_min_pu: n.v_min_pu,
        v_max_pu: n.v_max_pu,
        nodes,
        branches,
        incident: Vec::new(),
    };
    network.rebuild_incidence();
    Ok((network, ids))
}

fn node_list(list: &[String], ids: &Ids<'_>, path: &str) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(list.len());
    for (i, id) in list.iter().enumerate() {
        let n = ids.node(id, format!("{path}[{i}]"))?;
        require(!out.contains(&n), format!("{path}[{i}]"), "listed twice")?;
        out.push(n);
    }
    Ok(out)
}

fn access_from_doc(a: &AccessDoc, ids: &Ids<'_>) -> Result<Access> {
    let storage_nodes = node_list(&a.storage_nodes, ids, "access.storage_nodes")?;
    let generator_nodes = node_list(&a.generator_nodes, ids, "access.generator_nodes")?;
    let mut depots: Vec<String> = Vec::with_capacity(a.depots.len());
    for (i, d) in a.depots.iter().enumerate() {
        let path = format!("access.depots[{i}]");
        require(valid_id(d), path.clone(), ID_RULE)?;
        require(!ids.nodes.contains_key(d.as_str()), path.clone(), "depots are off-network; id clashes with a node")?;
        require(!depots.contains(d), path, "listed twice")?;
        depots.push(d.clone());
    }
    Ok(Access {
        storage_nodes,
        generator_nodes,
        depots,
    })
}

fn branch_ref(network: &Network, ids: &Ids<'_>, pair: &[String; 2], path: String) -> Result<usize> {
    let a = ids.node(&pair[0], format!("{path}[0]"))?;
    let b = ids.node(&pair[1], format!("{path}[1]"))?;
    network
        .branch_index(a, b)
        .ok_or_else(|| Error::reference(path, "branch", &format!("({},{})", pair[0], pair[1])))
}

fn faults_from_doc(
    list: &[FaultWindowDoc],
    network: &Network,
    ids: &Ids<'_>,
    span_count: usize,
) -> Result<FaultTimeline> {
    let mut windows = Vec::with_capacity(list.len());
    for (w, fw) in list.iter().enumerate() {
        let path = format!("faults[{w}]");
        require(
            1 <= fw.from_span && fw.from_span <= fw.to_span && fw.to_span <= span_count,
            path.clone(),
            "window must satisfy 1 <= from_span <= to_span <= span_count",
        )?;
        let nodes = |l: &[String], key: &str| node_list(l, ids, &format!("{path}.{key}"));
        let branches = |l: &[[String; 2]], key: &str| -> Result<Vec<usize>> {
            l.iter()
                .enumerate()
                .map(|(i, p)| branch_ref(network, ids, p, format!("{path}.{key}[{i}]")))
                .collect()
        };
        windows.push(FaultWindow {
            from_span: fw.from_span,
            to_span: fw.to_span,
            open_nodes: nodes(&fw.open_nodes, "open_nodes")?,
            closed_nodes: nodes(&fw.closed_nodes, "closed_nodes")?,
            open_branches: branches(&fw.open_branches, "open_branches")?,
            closed_branches: branches(&fw.closed_branches, "closed_branches")?,
        });
    }
    let timeline = FaultTimeline { windows };
    let mut prev: Option<FaultSets> = None;
    for t in 1..=span_count {
        let s = timeline.sets_at(t);
        require(
            s.open_nodes.is_disjoint(&s.closed_nodes),
            format!("faults (span {t})"),
            "a node is both faulted-open and faulted-closed",
        )?;
        require(
            s.open_branches.is_disjoint(&s.closed_branches),
            format!("faults (span {t})"),
            "a branch is both faulted-open and faulted-closed",
        )?;
        if let Some(p) = &prev {
            require(
                s.is_subset(p),
                format!("faults (span {t})"),
                "fault sets may only shrink over time",
            )?;
        }
        prev = Some(s);
    }
    Ok(timeline)
}

fn fleet_from_doc(f: &FleetDoc, network: &Network, access: &Access) -> Result<Fleet> {
    let storage_slot = |id: &str, path: String| -> Result<usize> {
        network
            .node_index(id)
            .and_then(|n| access.storage_slot(n))
            .ok_or_else(|| Error::reference(path, "storage-access node", id))
    };
    let site_ids: Vec<String> = access
        .generator_nodes
        .iter()
        .map(|&n| network.nodes[n].id.clone())
        .chain(access.depots.iter().cloned())
        .collect();
    let fuel_slot = |id: &str, path: String| -> Result<usize> {
        site_ids
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| Error::reference(path, "generator/tanker site", id))
    };

    let mut all_ids = BTreeSet::new();
    let mut unique = |id: &str, path: String| -> Result<()> {
        require(valid_id(id), path.clone(), ID_RULE)?;
        require(all_ids.insert(id.to_string()), path, "duplicate fleet id")
    };

    let mut carriers = Vec::new();
    for (j, c) in f.carriers.iter().enumerate() {
        let path = format!("fleet.carriers[{j}]");
        unique(&c.id, format!("{path}.id"))?;
        positive(c.capacity, format!("{path}.capacity"))?;
        carriers.push(Carrier {
            id: c.id.clone(),
            capacity: c.capacity,
            start: storage_slot(&c.start, format!("{path}.start"))?,
        });
    }

    let max_capacity = carriers.iter().map(|c| c.capacity).fold(0.0, f64::max);
    let mut modules = Vec::new();
    for (k, m) in f.modules.iter().enumerate() {
        let path = format!("fleet.modules[{k}]");
        unique(&m.id, format!("{path}.id"))?;
        positive(m.weight, format!("{path}.weight"))?;
        positive(m.p_charge_max_kw, format!("{path}.p_charge_max_kw"))?;
        positive(m.p_discharge_max_kw, format!("{path}.p_discharge_max_kw"))?;
        positive(m.s_rated_kva, format!("{path}.s_rated_kva"))?;
        positive(m.energy_kwh, format!("{path}.energy_kwh"))?;
        for (v, key) in [(m.eff_charge, "eff_charge"), (m.eff_discharge, "eff_discharge")] {
            require(v > 0.0 && v <= 1.0, format!("{path}.{key}"), "must lie in (0, 1]")?;
        }
        unit_interval(m.soc_init, format!("{path}.soc_init"))?;
        unit_interval(m.soc_min, format!("{path}.soc_min"))?;
        unit_interval(m.soc_max, format!("{path}.soc_max"))?;
        require(m.soc_min < m.soc_max, format!("{path}.soc_max"), "must exceed soc_min")?;
        if !carriers.is_empty() {
            require(
                m.weight <= max_capacity,
                format!("{path}.weight"),
                "no carrier can hold this module",
            )?;
        }
        modules.push(Module {
            id: m.id.clone(),
            weight: m.weight,
            p_charge_max_kw: m.p_charge_max_kw,
            p_discharge_max_kw: m.p_discharge_max_kw,
            s_rated_kva: m.s_rated_kva,
            energy_kwh: m.energy_kwh,
            eff_charge: m.eff_charge,
            eff_discharge: m.eff_discharge,
            soc_init: m.soc_init,
            soc_min: m.soc_min,
            soc_max: m.soc_max,
            start: storage_slot(&m.start, format!("{path}.start"))?,
        });
    }

    let mut generators = Vec::new();
    for (g, m) in f.generators.iter().enumerate() {
        let path = format!("fleet.generators[{g}]");
        unique(&m.id, format!("{path}.id"))?;
        positive(m.p_max_kw, format!("{path}.p_max_kw"))?;
        positive(m.q_max_kvar, format!("{path}.q_max_kvar"))?;
        positive(m.s_rated_kva, format!("{path}.s_rated_kva"))?;
        positive(m.fuel_capacity_l, format!("{path}.fuel_capacity_l"))?;
        if let Some(b) = m.fuel_max_per_span_l {
            positive(b, format!("{path}.fuel_max_per_span_l"))?;
        }
        unit_interval(m.sof_init, format!("{path}.sof_init"))?;
        require(!m.fuel_curve.is_empty(), format!("{path}.fuel_curve"), "must not be empty")?;
        let mut last = 0.0;
        for (l, p) in m.fuel_curve.iter().enumerate() {
            let lp = format!("{path}.fuel_curve[{l}]");
            require(
                p.p_kw.is_finite() && (p.p_kw > last || (l == 0 && p.p_kw >= 0.0)),
                format!("{lp}.p_kw"),
                "load points must be strictly increasing",
            )?;
            finite_nonneg(p.rate_l_per_h, format!("{lp}.rate_l_per_h"))?;
            last = p.p_kw;
        }
        require(
            m.fuel_curve.len() >= 2 || m.fuel_curve[0].p_kw > 0.0,
            format!("{path}.fuel_curve"),
            "curve needs at least one segment",
        )?;
        generators.push(Generator {
            id: m.id.clone(),
            p_max_kw: m.p_max_kw,
            q_max_kvar: m.q_max_kvar,
            s_rated_kva: m.s_rated_kva,
            fuel_capacity_l: m.fuel_capacity_l,
            fuel_max_per_span_l: m.fuel_max_per_span_l,
            curve: m
                .fuel_curve
                .iter()
                .map(|p| FuelPoint {
                    p_kw: p.p_kw,
                    rate_l_per_h: p.rate_l_per_h,
                })
                .collect(),
            sof_init: m.sof_init,
            start: fuel_slot(&m.start, format!("{path}.start"))?,
        });
    }

    let mut tankers = Vec::new();
    for (h, t) in f.tankers.iter().enumerate() {
        let path = format!("fleet.tankers[{h}]");
        unique(&t.id, format!("{path}.id"))?;
        positive(t.fuel_capacity_l, format!("{path}.fuel_capacity_l"))?;
        if let Some(r) = t.rate_in_l_per_h {
            positive(r, format!("{path}.rate_in_l_per_h"))?;
        }
        if let Some(r) = t.rate_out_l_per_h {
            positive(r, format!("{path}.rate_out_l_per_h"))?;
        }
        unit_interval(t.sof_init, format!("{path}.sof_init"))?;
        tankers.push(Tanker {
            id: t.id.clone(),
            fuel_capacity_l: t.fuel_capacity_l,
            rate_in_l_per_h: t.rate_in_l_per_h,
            rate_out_l_per_h: t.rate_out_l_per_h,
            sof_init: t.sof_init,
            start: fuel_slot(&t.start, format!("{path}.start"))?,
        });
    }

    let mut site_fuel: Vec<Option<SiteFuel>> = vec![None; site_ids.len()];
    for (i, s) in f.fuel_sites.iter().enumerate() {
        let path = format!("fleet.fuel_sites[{i}]");
        let slot = fuel_slot(&s.id, format!("{path}.id"))?;
        require(site_fuel[slot].is_none(), format!("{path}.id"), "listed twice")?;
        positive(s.fuel_capacity_l, format!("{path}.fuel_capacity_l"))?;
        unit_interval(s.sof_init, format!("{path}.sof_init"))?;
        site_fuel[slot] = Some(SiteFuel {
            capacity_l: s.fuel_capacity_l,
            sof_init: s.sof_init,
        });
    }
    let site_fuel = site_fuel
        .into_iter()
        .enumerate()
        .map(|(slot, s)| {
            s.ok_or_else(|| {
                Error::invariant(
                    "fleet.fuel_sites",
                    format!("missing fuel capacity for site `{}`", site_ids[slot]),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Fleet {
        carriers,
        modules,
        generators,
        tankers,
        site_fuel,
    })
}

fn travel_table(
    entries: &[TravelEntryDoc],
    labels: &[String],
    symmetric: bool,
    needed: bool,
    path: &str,
) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    let mut table: Vec<Vec<Option<usize>>> = vec![vec![None; n]; n];
    for i in 0..n {
        table[i][i] = Some(0);
    }
    let slot = |id: &str, p: String| -> Result<usize> {
        labels
            .iter()
            .position(|l| l == id)
            .ok_or_else(|| Error::reference(p, "travel site", id))
    };
    let mut set = |a: usize, b: usize, v: usize, p: &str| -> Result<()> {
        match table[a][b] {
            Some(old) if old != v => Err(Error::invariant(p, "conflicting travel entries")),
            _ => {
                table[a][b] = Some(v);
                Ok(())
            }
        }
    };
    for (e, entry) in entries.iter().enumerate() {
        let p = format!("{path}[{e}]");
        let a = slot(&entry.from, format!("{p}.from"))?;
        let b = slot(&entry.to, format!("{p}.to"))?;
        require(a != b, p.clone(), "travel entry between a site and itself")?;
        require(entry.spans >= 1, format!("{p}.spans"), "must be >= 1")?;
        set(a, b, entry.spans, &p)?;
        if symmetric {
            set(b, a, entry.spans, &p)?;
        }
    }
    let mut out = vec![vec![0; n]; n];
    for a in 0..n {
        for b in 0..n {
            match table[a][b] {
                Some(v) => out[a][b] = v,
                None if needed => {
                    return Err(Error::invariant(
                        path,
                        format!("missing travel time {} -> {}", labels[a], labels[b]),
                    ))
                }
                None => {}
            }
        }
    }
    Ok(out)
}

fn travel_from_doc(
    t: &TravelDoc,
    network: &Network,
    access: &Access,
    fleet: &Fleet,
) -> Result<TravelTimes> {
    let storage: Vec<String> = access
        .storage_nodes
        .iter()
        .map(|&n| network.nodes[n].id.clone())
        .collect();
    let sites: Vec<String> = access
        .generator_nodes
        .iter()
        .map(|&n| network.nodes[n].id.clone())
        .chain(access.depots.iter().cloned())
        .collect();
    let carrier = travel_table(
        &t.carrier,
        &storage,
        t.symmetric,
        !fleet.carriers.is_empty(),
        "travel.carrier",
    )?;
    let generator = travel_table(
        &t.generator,
        &sites,
        t.symmetric,
        !fleet.generators.is_empty() || (t.tanker.is_none() && !fleet.tankers.is_empty()),
        "travel.generator",
    )?;
    let tanker = match &t.tanker {
        Some(list) => travel_table(list, &sites, t.symmetric, !fleet.tankers.is_empty(), "travel.tanker")?,
        None => generator.clone(),
    };
    Ok(TravelTimes {
        carrier,
        generator,
        tanker,
    })
}

fn study_from_doc(s: &StudyDoc, network: &Network, access: &Access, fleet: &Fleet) -> Result<StudyConfig> {
    finite_nonneg(s.phi_travel, "study.phi_travel".into())?;
    finite_nonneg(s.phi_fuel, "study.phi_fuel".into())?;
    let case: CaseTag = s
        .case
        .parse()
        .map_err(|m: String| Error::invariant("study.case", m))?;
    let big_m: BigMPolicy = s
        .big_m
        .parse()
        .map_err(|m: String| Error::invariant("study.big_m", m))?;
    require((0.0..1.0).contains(&s.mip_gap), "study.mip_gap", "must lie in [0, 1)")?;
    require(
        s.disk_segments >= 4 && s.disk_segments % 2 == 0,
        "study.disk_segments",
        "must be even and >= 4",
    )?;
    let case_params = match &s.case_params {
        None => CaseParams::default(),
        Some(p) => case_params_from_doc(p, network, access, fleet)?,
    };
    Ok(StudyConfig {
        phi_travel: s.phi_travel,
        phi_fuel: s.phi_fuel,
        case,
        case_params,
        substation_energized: s.substation_energized,
        mip_gap: s.mip_gap,
        big_m,
        disk_segments: s.disk_segments,
        strict_pickup: s.strict_pickup,
    })
}

fn case_params_from_doc(
    p: &CaseParamsDoc,
    network: &Network,
    access: &Access,
    fleet: &Fleet,
) -> Result<CaseParams> {
    let base = "study.case_params";
    let module = |id: &str, path: String| {
        fleet
            .modules
            .iter()
            .position(|m| m.id == id)
            .ok_or_else(|| Error::reference(path, "module", id))
    };
    let mut module_sites = Vec::new();
    for (m, node) in &p.module_sites {
        let path = format!("{base}.module_sites.{m}");
        let k = module(m, path.clone())?;
        let slot = network
            .node_index(node)
            .and_then(|n| access.storage_slot(n))
            .ok_or_else(|| Error::reference(path, "storage-access node", node))?;
        module_sites.push((k, slot));
    }
    let mut generator_sites = Vec::new();
    for (g, site) in &p.generator_sites {
        let path = format!("{base}.generator_sites.{g}");
        let m = fleet
            .generators
            .iter()
            .position(|x| &x.id == g)
            .ok_or_else(|| Error::reference(path.clone(), "generator", g))?;
        let slot = (0..access.fuel_site_count())
            .find(|&s| match access.fuel_site_node(s) {
                Some(n) => &network.nodes[n].id == site,
                None => &access.depots[s - access.generator_nodes.len()] == site,
            })
            .ok_or_else(|| Error::reference(path, "generator/tanker site", site))?;
        generator_sites.push((m, slot));
    }
    let mut bundles = Vec::new();
    for (b, bd) in p.bundles.iter().enumerate() {
        let path = format!("{base}.bundles[{b}]");
        let carrier = fleet
            .carriers
            .iter()
            .position(|c| c.id == bd.carrier)
            .ok_or_else(|| Error::reference(format!("{path}.carrier"), "carrier", &bd.carrier))?;
        let modules = bd
            .modules
            .iter()
            .enumerate()
            .map(|(i, m)| module(m, format!("{path}.modules[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        bundles.push(Bundle { carrier, modules });
    }
    Ok(CaseParams {
        module_sites,
        generator_sites,
        bundles,
    })
}

/// Bundled modules start with their carrier, fit its capacity, and belong
/// to one bundle only.
pub(crate) fn check_bundles(s: &Scenario) -> Result<()> {
    let bundles = s.case3_bundles()?;
    let mut used = BTreeSet::new();
    let mut carriers = BTreeSet::new();
    for (b, bundle) in bundles.iter().enumerate() {
        let path = format!("study.case_params.bundles[{b}]");
        require(carriers.insert(bundle.carrier), path.clone(), "carrier bundled twice")?;
        let c = &s.fleet.carriers[bundle.carrier];
        let mut w = 0.0;
        for &k in &bundle.modules {
            require(used.insert(k), path.clone(), "module bundled twice")?;
            require(
                s.fleet.modules[k].start == c.start,
                path.clone(),
                "bundled module must start at its carrier's node",
            )?;
            w += s.fleet.modules[k].weight;
        }
        require(w <= c.capacity + 1e-12, path, "bundle exceeds carrier capacity")?;
    }
    Ok(())
}

pub(super) fn to_doc(s: &Scenario) -> ScenarioDoc {
    let net = &s.network;
    let node_id = |i: usize| net.nodes[i].id.clone();
    let pair = |b: usize| [node_id(net.branches[b].from), node_id(net.branches[b].to)];
    let storage: Vec<String> = s.access.storage_nodes.iter().map(|&n| node_id(n)).collect();
    let sites: Vec<String> = (0..s.access.fuel_site_count())
        .map(|slot| s.fuel_site_label(slot).to_string())
        .collect();
    let entries = |table: &[Vec<usize>], labels: &[String]| -> Vec<TravelEntryDoc> {
        let mut out = Vec::new();
        for (a, row) in table.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if a != b && v > 0 {
                    out.push(TravelEntryDoc {
                        from: labels[a].clone(),
                        to: labels[b].clone(),
                        spans: v,
                    });
                }
            }
        }
        out
    };
    let p = &s.study.case_params;
    let case_params = if *p == CaseParams::default() {
        None
    } else {
        Some(CaseParamsDoc {
            module_sites: p
                .module_sites
                .iter()
                .map(|&(k, slot)| (s.fleet.modules[k].id.clone(), storage[slot].clone()))
                .collect::<BTreeMap<_, _>>(),
            generator_sites: p
                .generator_sites
                .iter()
                .map(|&(m, slot)| (s.fleet.generators[m].id.clone(), sites[slot].clone()))
                .collect::<BTreeMap<_, _>>(),
            bundles: p
                .bundles
                .iter()
                .map(|b| BundleDoc {
                    carrier: s.fleet.carriers[b.carrier].id.clone(),
                    modules: b.modules.iter().map(|&k| s.fleet.modules[k].id.clone()).collect(),
                })
                .collect(),
        })
    };

    ScenarioDoc {
        schema_version: Some(SCHEMA_VERSION.to_string()),
        time: TimeDoc {
            span_count: s.time.span_count,
            span_length_h: s.time.span_length_h,
        },
        network: NetworkDoc {
            base_kva: net.base_kva,
            base_kv: net.base_kv,
            substation: node_id(net.substation),
            v_min_pu: net.v_min_pu,
            v_max_pu: net.v_max_pu,
            nodes: net
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id.clone(),
                    p_kw: n.p_kw,
                    q_kvar: n.q_kvar,
                    weight: n.weight,
                    profile: n.profile.as_ref().map(|pr| {
                        pr.iter()
                            .map(|&(p_kw, q_kvar)| LoadPointDoc { p_kw, q_kvar })
                            .collect()
                    }),
                })
                .collect(),
            branches: net
                .branches
                .iter()
                .map(|b| {
                    let (r_ohm, x_ohm, r_pu, x_pu) = match b.impedance {
                        Impedance::Ohm { r, x } => (Some(r), Some(x), None, None),
                        Impedance::PerUnit { r, x } => (None, None, Some(r), Some(x)),
                    };
                    BranchDoc {
                        from: node_id(b.from),
                        to: node_id(b.to),
                        r_ohm,
                        x_ohm,
                        r_pu,
                        x_pu,
                        s_max_kva: b.s_max_kva,
                    }
                })
                .collect(),
        },
        access: AccessDoc {
            storage_nodes: storage.clone(),
            generator_nodes: s.access.generator_nodes.iter().map(|&n| node_id(n)).collect(),
            depots: s.access.depots.clone(),
        },
        faults: s
            .faults
            .windows
            .iter()
            .map(|w| FaultWindowDoc {
                from_span: w.from_span,
                to_span: w.to_span,
                open_nodes: w.open_nodes.iter().map(|&n| node_id(n)).collect(),
                closed_nodes: w.closed_nodes.iter().map(|&n| node_id(n)).collect(),
                open_branches: w.open_branches.iter().map(|&b| pair(b)).collect(),
                closed_branches: w.closed_branches.iter().map(|&b| pair(b)).collect(),
            })
            .collect(),
        fleet: FleetDoc {
            carriers: s
                .fleet
                .carriers
                .iter()
                .map(|c| CarrierDoc {
                    id: c.id.clone(),
                    capacity: c.capacity,
                    start: storage[c.start].clone(),
                })
                .collect(),
            modules: s
                .fleet
                .modules
                .iter()
                .map(|m| ModuleDoc {
                    id: m.id.clone(),
                    weight: m.weight,
                    p_charge_max_kw: m.p_charge_max_kw,
                    p_discharge_max_kw: m.p_discharge_max_kw,
                    s_rated_kva: m.s_rated_kva,
                    energy_kwh: m.energy_kwh,
                    eff_charge: m.eff_charge,
                    eff_discharge: m.eff_discharge,
                    soc_init: m.soc_init,
                    soc_min: m.soc_min,
                    soc_max: m.soc_max,
                    start: storage[m.start].clone(),
                })
                .collect(),
            generators: s
                .fleet
                .generators
                .iter()
                .map(|g| GeneratorDoc {
                    id: g.id.clone(),
                    p_max_kw: g.p_max_kw,
                    q_max_kvar: g.q_max_kvar,
                    s_rated_kva: g.s_rated_kva,
                    fuel_capacity_l: g.fuel_capacity_l,
                    fuel_max_per_span_l: g.fuel_max_per_span_l,
                    fuel_curve: g
                        .curve
                        .iter()
                        .map(|p| FuelPointDoc {
                            p_kw: p.p_kw,
                            rate_l_per_h: p.rate_l_per_h,
                        })
                        .collect(),
                    sof_init: g.sof_init,
                    start: sites[g.start].clone(),
                })
                .collect(),
            tankers: s
                .fleet
                .tankers
                .iter()
                .map(|h| TankerDoc {
                    id: h.id.clone(),
                    fuel_capacity_l: h.fuel_capacity_l,
                    rate_in_l_per_h: h.rate_in_l_per_h,
                    rate_out_l_per_h: h.rate_out_l_per_h,
                    sof_init: h.sof_init,
                    start: sites[h.start].clone(),
                })
                .collect(),
            fuel_sites: s
                .fleet
                .site_fuel
                .iter()
                .enumerate()
                .map(|(slot, f)| FuelSiteDoc {
                    id: sites[slot].clone(),
                    fuel_capacity_l: f.capacity_l,
                    sof_init: f.sof_init,
                })
                .collect(),
        },
        travel: TravelDoc {
            symmetric: false,
            carrier: entries(&s.travel.carrier, &storage),
            generator: entries(&s.travel.generator, &sites),
            tanker: Some(entries(&s.travel.tanker, &sites)),
        },
        study: StudyDoc {
            phi_travel: s.study.phi_travel,
            phi_fuel: s.study.phi_fuel,
            case: s.study.case.to_string(),
            substation_energized: s.study.substation_energized,
            mip_gap: s.study.mip_gap,
            big_m: s.study.big_m.as_str().to_string(),
            disk_segments: s.study.disk_segments,
            strict_pickup: s.study.strict_pickup,
            case_params,
        },
    }
}
