//! Input data: network, access sets, fault timeline, fleet, travel times and
//! study configuration.
//!
//! A [`Scenario`] is built once from a JSON document (see [`document`]) and
//! is immutable afterwards. Node, site and fleet references are resolved to
//! dense indices at parse time; electrical quantities are exposed in
//! per-unit through accessor methods while the raw document values are kept
//! so that [`Scenario::to_doc`] reproduces an equivalent document.

mod convert;
pub mod document;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use convert::parse_scenario;
pub(crate) use convert::check_bundles;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub time: TimeGrid,
    pub network: Network,
    pub access: Access,
    pub faults: FaultTimeline,
    pub fleet: Fleet,
    pub travel: TravelTimes,
    pub study: StudyConfig,
}

/// Spans are indexed `1..=span_count`; index 0 holds initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub span_count: usize,
    pub span_length_h: f64,
}

impl TimeGrid {
    pub fn horizon_h(&self) -> f64 {
        self.span_count as f64 * self.span_length_h
    }

    pub fn spans(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.span_count
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub base_kva: f64,
    pub base_kv: f64,
    pub substation: usize,
    pub v_min_pu: f64,
    pub v_max_pu: f64,
    pub nodes: Vec<Node>,
    pub branches: Vec<Branch>,
    incident: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub p_kw: f64,
    pub q_kvar: f64,
    pub weight: f64,
    /// Per-span `(p_kw, q_kvar)`, length `span_count` when present.
    pub profile: Option<Vec<(f64, f64)>>,
}

impl Node {
    /// Active load in kW during span `t` (1-based).
    pub fn p_kw_at(&self, t: usize) -> f64 {
        match &self.profile {
            Some(p) => p[t - 1].0,
            None => self.p_kw,
        }
    }

    pub fn q_kvar_at(&self, t: usize) -> f64 {
        match &self.profile {
            Some(p) => p[t - 1].1,
            None => self.q_kvar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Impedance {
    Ohm { r: f64, x: f64 },
    PerUnit { r: f64, x: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub impedance: Impedance,
    pub r_pu: f64,
    pub x_pu: f64,
    pub s_max_kva: f64,
}

impl Branch {
    pub fn other(&self, node: usize) -> usize {
        if node == self.from {
            self.to
        } else {
            self.from
        }
    }
}

impl Network {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn branch_index(&self, a: usize, b: usize) -> Option<usize> {
        self.branches
            .iter()
            .position(|br| (br.from == a && br.to == b) || (br.from == b && br.to == a))
    }

    /// Branch indices incident to `node`, ascending.
    pub fn incident(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.incident[node].len()
    }

    pub fn z_base_ohm(&self) -> f64 {
        self.base_kv * self.base_kv * 1000.0 / self.base_kva
    }

    pub fn to_pu(&self, kw: f64) -> f64 {
        kw / self.base_kva
    }

    pub fn p_load_pu(&self, node: usize, t: usize) -> f64 {
        self.to_pu(self.nodes[node].p_kw_at(t))
    }

    pub fn q_load_pu(&self, node: usize, t: usize) -> f64 {
        self.to_pu(self.nodes[node].q_kvar_at(t))
    }

    pub fn s_max_pu(&self, branch: usize) -> f64 {
        self.to_pu(self.branches[branch].s_max_kva)
    }

    pub(crate) fn rebuild_incidence(&mut self) {
        let mut incident = vec![Vec::new(); self.nodes.len()];
        for (b, br) in self.branches.iter().enumerate() {
            incident[br.from].push(b);
            incident[br.to].push(b);
        }
        self.incident = incident;
    }
}

/// A location a generator or tanker can park at: a generator-access node or
/// an off-network depot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    Node(usize),
    Depot(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Access {
    pub storage_nodes: Vec<usize>,
    pub generator_nodes: Vec<usize>,
    pub depots: Vec<String>,
}

impl Access {
    /// Generator/tanker sites: generator nodes in declaration order, then depots.
    pub fn fuel_sites(&self) -> Vec<Site> {
        self.generator_nodes
            .iter()
            .map(|&n| Site::Node(n))
            .chain((0..self.depots.len()).map(Site::Depot))
            .collect()
    }

    pub fn fuel_site_count(&self) -> usize {
        self.generator_nodes.len() + self.depots.len()
    }

    pub fn storage_slot(&self, node: usize) -> Option<usize> {
        self.storage_nodes.iter().position(|&n| n == node)
    }

    pub fn generator_slot(&self, node: usize) -> Option<usize> {
        self.generator_nodes.iter().position(|&n| n == node)
    }

    /// Network node of a fuel-site slot, `None` for depots.
    pub fn fuel_site_node(&self, slot: usize) -> Option<usize> {
        self.generator_nodes.get(slot).copied()
    }

    pub fn is_depot_slot(&self, slot: usize) -> bool {
        slot >= self.generator_nodes.len()
    }

    pub fn a1(&self, node: usize) -> bool {
        self.storage_nodes.contains(&node)
    }

    pub fn a2(&self, node: usize) -> bool {
        self.generator_nodes.contains(&node)
    }
}

/// Injection coefficients `(a_1, a_2)` per node, in node order.
pub fn derive_access_coefficients(scenario: &Scenario) -> Vec<(u8, u8)> {
    (0..scenario.network.nodes.len())
        .map(|i| {
            (
                scenario.access.a1(i) as u8,
                scenario.access.a2(i) as u8,
            )
        })
        .collect()
}

/// Fault sets active over the inclusive window `from_span..=to_span`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultWindow {
    pub from_span: usize,
    pub to_span: usize,
    pub open_nodes: Vec<usize>,
    pub closed_nodes: Vec<usize>,
    pub open_branches: Vec<usize>,
    pub closed_branches: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaultTimeline {
    pub windows: Vec<FaultWindow>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultSets {
    pub open_nodes: BTreeSet<usize>,
    pub closed_nodes: BTreeSet<usize>,
    pub open_branches: BTreeSet<usize>,
    pub closed_branches: BTreeSet<usize>,
}

impl FaultSets {
    pub fn len(&self) -> usize {
        self.open_nodes.len()
            + self.closed_nodes.len()
            + self.open_branches.len()
            + self.closed_branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_subset(&self, other: &FaultSets) -> bool {
        self.open_nodes.is_subset(&other.open_nodes)
            && self.closed_nodes.is_subset(&other.closed_nodes)
            && self.open_branches.is_subset(&other.open_branches)
            && self.closed_branches.is_subset(&other.closed_branches)
    }
}

impl FaultTimeline {
    /// Union of every window covering span `t`; no range check.
    pub fn sets_at(&self, t: usize) -> FaultSets {
        let mut s = FaultSets::default();
        for w in self.windows.iter().filter(|w| w.from_span <= t && t <= w.to_span) {
            s.open_nodes.extend(&w.open_nodes);
            s.closed_nodes.extend(&w.closed_nodes);
            s.open_branches.extend(&w.open_branches);
            s.closed_branches.extend(&w.closed_branches);
        }
        s
    }
}

impl Scenario {
    pub fn fault_sets_at(&self, t: usize) -> Result<FaultSets> {
        if t == 0 || t > self.time.span_count {
            return Err(Error::SpanOutOfRange {
                span: t,
                span_count: self.time.span_count,
            });
        }
        Ok(self.faults.sets_at(t))
    }

    pub fn to_doc(&self) -> document::ScenarioDoc {
        convert::to_doc(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("scenario document serializes")
    }

    /// Display label of a fuel-site slot (node id or depot id).
    pub fn fuel_site_label(&self, slot: usize) -> &str {
        match self.access.fuel_site_node(slot) {
            Some(n) => &self.network.nodes[n].id,
            None => &self.access.depots[slot - self.access.generator_nodes.len()],
        }
    }

    pub fn storage_label(&self, slot: usize) -> &str {
        &self.network.nodes[self.access.storage_nodes[slot]].id
    }

    /// Site labels for a mobile-resource class, in slot order.
    pub fn site_labels(&self, class: MerClass) -> Vec<&str> {
        match class {
            MerClass::Carrier => (0..self.access.storage_nodes.len())
                .map(|s| self.storage_label(s))
                .collect(),
            MerClass::Generator | MerClass::Tanker => (0..self.access.fuel_site_count())
                .map(|s| self.fuel_site_label(s))
                .collect(),
        }
    }

    pub fn mer_count(&self, class: MerClass) -> usize {
        match class {
            MerClass::Carrier => self.fleet.carriers.len(),
            MerClass::Generator => self.fleet.generators.len(),
            MerClass::Tanker => self.fleet.tankers.len(),
        }
    }

    pub fn mer_id(&self, class: MerClass, j: usize) -> &str {
        match class {
            MerClass::Carrier => &self.fleet.carriers[j].id,
            MerClass::Generator => &self.fleet.generators[j].id,
            MerClass::Tanker => &self.fleet.tankers[j].id,
        }
    }

    pub fn mer_start(&self, class: MerClass, j: usize) -> usize {
        match class {
            MerClass::Carrier => self.fleet.carriers[j].start,
            MerClass::Generator => self.fleet.generators[j].start,
            MerClass::Tanker => self.fleet.tankers[j].start,
        }
    }

    /// Per-span fuel budget of a tanker in litres: `(max intake, max release)`.
    pub fn tanker_rates_l(&self, h: usize) -> (f64, f64) {
        let ft = &self.fleet.tankers[h];
        let dt = self.time.span_length_h;
        (
            ft.rate_in_l_per_h.map_or(ft.fuel_capacity_l, |r| r * dt),
            ft.rate_out_l_per_h.map_or(ft.fuel_capacity_l, |r| r * dt),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MerClass {
    Carrier,
    Generator,
    Tanker,
}

impl MerClass {
    pub const ALL: [MerClass; 3] = [MerClass::Carrier, MerClass::Generator, MerClass::Tanker];

    pub fn tag(self) -> &'static str {
        match self {
            MerClass::Carrier => "carr",
            MerClass::Generator => "meg",
            MerClass::Tanker => "ft",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fleet {
    pub carriers: Vec<Carrier>,
    pub modules: Vec<Module>,
    pub generators: Vec<Generator>,
    pub tankers: Vec<Tanker>,
    /// Fuel stock per fuel-site slot.
    pub site_fuel: Vec<SiteFuel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Carrier {
    pub id: String,
    pub capacity: f64,
    /// Storage-node slot.
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub id: String,
    pub weight: f64,
    pub p_charge_max_kw: f64,
    pub p_discharge_max_kw: f64,
    pub s_rated_kva: f64,
    pub energy_kwh: f64,
    pub eff_charge: f64,
    pub eff_discharge: f64,
    pub soc_init: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// Storage-node slot.
    pub start: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuelPoint {
    pub p_kw: f64,
    pub rate_l_per_h: f64,
}

/// One affine piece of a fuel curve, in litres per span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuelSegment {
    pub p_lo_kw: f64,
    pub p_hi_kw: f64,
    /// Litres per span per kW.
    pub slope: f64,
    /// Litres per span at zero output.
    pub intercept: f64,
}

impl FuelSegment {
    pub fn eval(&self, p_kw: f64) -> f64 {
        self.slope * p_kw + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: String,
    pub p_max_kw: f64,
    pub q_max_kvar: f64,
    pub s_rated_kva: f64,
    pub fuel_capacity_l: f64,
    pub fuel_max_per_span_l: Option<f64>,
    /// Curve rate points, strictly increasing in load.
    pub curve: Vec<FuelPoint>,
    pub sof_init: f64,
    /// Fuel-site slot.
    pub start: usize,
}

impl Generator {
    /// Curve breakpoints with an idle point `(0, 0)` prepended when the
    /// curve starts above zero load.
    pub fn breakpoints(&self) -> Vec<FuelPoint> {
        let mut pts = Vec::with_capacity(self.curve.len() + 1);
        if self.curve[0].p_kw > 0.0 {
            pts.push(FuelPoint {
                p_kw: 0.0,
                rate_l_per_h: 0.0,
            });
        }
        pts.extend_from_slice(&self.curve);
        pts
    }

    pub fn segments(&self, span_length_h: f64) -> Vec<FuelSegment> {
        self.breakpoints()
            .windows(2)
            .map(|w| {
                let slope_h = (w[1].rate_l_per_h - w[0].rate_l_per_h) / (w[1].p_kw - w[0].p_kw);
                FuelSegment {
                    p_lo_kw: w[0].p_kw,
                    p_hi_kw: w[1].p_kw,
                    slope: slope_h * span_length_h,
                    intercept: (w[0].rate_l_per_h - slope_h * w[0].p_kw) * span_length_h,
                }
            })
            .collect()
    }

    /// Exact fuel burnt over one span at output `p_kw` (linear interpolation).
    pub fn fuel_per_span(&self, p_kw: f64, span_length_h: f64) -> f64 {
        let segs = self.segments(span_length_h);
        let seg = segs
            .iter()
            .find(|s| p_kw <= s.p_hi_kw)
            .unwrap_or_else(|| segs.last().expect("curve has a segment"));
        seg.eval(p_kw)
    }

    /// Fuel burnt per span at full load.
    pub fn b_max_l(&self, span_length_h: f64) -> f64 {
        self.fuel_max_per_span_l.unwrap_or_else(|| {
            self.curve
                .iter()
                .map(|p| p.rate_l_per_h)
                .fold(0.0, f64::max)
                * span_length_h
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tanker {
    pub id: String,
    pub fuel_capacity_l: f64,
    pub rate_in_l_per_h: Option<f64>,
    pub rate_out_l_per_h: Option<f64>,
    pub sof_init: f64,
    /// Fuel-site slot.
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteFuel {
    pub capacity_l: f64,
    pub sof_init: f64,
}

/// Travel spans per class, indexed by site slot. The diagonal is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimes {
    pub carrier: Vec<Vec<usize>>,
    pub generator: Vec<Vec<usize>>,
    pub tanker: Vec<Vec<usize>>,
}

impl TravelTimes {
    pub fn table(&self, class: MerClass) -> &[Vec<usize>] {
        match class {
            MerClass::Carrier => &self.carrier,
            MerClass::Generator => &self.generator,
            MerClass::Tanker => &self.tanker,
        }
    }

    pub fn spans(&self, class: MerClass, from: usize, to: usize) -> usize {
        self.table(class)[from][to]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseTag {
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
}

impl CaseTag {
    pub const ALL: [CaseTag; 5] = [
        CaseTag::Case1,
        CaseTag::Case2,
        CaseTag::Case3,
        CaseTag::Case4,
        CaseTag::Case5,
    ];
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = *self as u8 + 1;
        write!(f, "case{n}")
    }
}

impl FromStr for CaseTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "case1" | "1" => Ok(CaseTag::Case1),
            "case2" | "2" => Ok(CaseTag::Case2),
            "case3" | "3" => Ok(CaseTag::Case3),
            "case4" | "4" => Ok(CaseTag::Case4),
            "case5" | "5" => Ok(CaseTag::Case5),
            _ => Err(format!("unknown case variant `{s}` (expected case1..case5)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BigMPolicy {
    /// Per-row constants derived from data.
    Tight,
    /// One constant, the largest tight value, on every big-M row.
    Uniform,
}

impl BigMPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            BigMPolicy::Tight => "tight",
            BigMPolicy::Uniform => "uniform",
        }
    }
}

impl FromStr for BigMPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tight" => Ok(BigMPolicy::Tight),
            "uniform" => Ok(BigMPolicy::Uniform),
            _ => Err(format!("unknown big-M policy `{s}` (expected tight|uniform)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub carrier: usize,
    pub modules: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaseParams {
    /// Case 2 overrides: module index -> storage slot.
    pub module_sites: Vec<(usize, usize)>,
    /// Case 2 overrides: generator index -> fuel-site slot.
    pub generator_sites: Vec<(usize, usize)>,
    /// Case 3 bundles; empty means "derive greedily".
    pub bundles: Vec<Bundle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub phi_travel: f64,
    pub phi_fuel: f64,
    pub case: CaseTag,
    pub case_params: CaseParams,
    pub substation_energized: bool,
    pub mip_gap: f64,
    pub big_m: BigMPolicy,
    pub disk_segments: usize,
    pub strict_pickup: bool,
}

impl Scenario {
    /// Storage slot module `k` sits at in Case 2.
    pub fn case2_module_site(&self, k: usize) -> usize {
        self.study
            .case_params
            .module_sites
            .iter()
            .find(|(m, _)| *m == k)
            .map_or(self.fleet.modules[k].start, |&(_, s)| s)
    }

    /// Fuel-site slot generator `m` sits at in Case 2.
    pub fn case2_generator_site(&self, m: usize) -> usize {
        self.study
            .case_params
            .generator_sites
            .iter()
            .find(|(g, _)| *g == m)
            .map_or(self.fleet.generators[m].start, |&(_, s)| s)
    }

    /// Case 3 bundles: the configured list, or a greedy packing of modules
    /// onto carriers starting at the same node.
    pub fn case3_bundles(&self) -> Result<Vec<Bundle>> {
        if !self.study.case_params.bundles.is_empty() {
            return Ok(self.study.case_params.bundles.clone());
        }
        let mut bundles: Vec<Bundle> = self
            .fleet
            .carriers
            .iter()
            .enumerate()
            .map(|(j, _)| Bundle {
                carrier: j,
                modules: Vec::new(),
            })
            .collect();
        let mut load = vec![0.0; bundles.len()];
        for (k, m) in self.fleet.modules.iter().enumerate() {
            let slot = self
                .fleet
                .carriers
                .iter()
                .enumerate()
                .position(|(j, c)| c.start == m.start && load[j] + m.weight <= c.capacity + 1e-12)
                .ok_or_else(|| {
                    Error::invariant(
                        format!("fleet.modules[{k}]"),
                        "case3 needs every module bundled, but no carrier at its start node has room",
                    )
                })?;
            load[slot] += m.weight;
            bundles[slot].modules.push(k);
        }
        bundles.retain(|b| !b.modules.is_empty());
        Ok(bundles)
    }
}
