//! Wire format of a scenario document.
//!
//! Every physical quantity carries its unit in the key name. The layout is
//! described by `schema/scenario.schema.json` at the repository root.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<String>,
    pub time: TimeDoc,
    pub network: NetworkDoc,
    pub access: AccessDoc,
    #[serde(default)]
    pub faults: Vec<FaultWindowDoc>,
    pub fleet: FleetDoc,
    pub travel: TravelDoc,
    pub study: StudyDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeDoc {
    pub span_count: usize,
    pub span_length_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    pub base_kva: f64,
    pub base_kv: f64,
    pub substation: String,
    pub v_min_pu: f64,
    pub v_max_pu: f64,
    pub nodes: Vec<NodeDoc>,
    pub branches: Vec<BranchDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: String,
    #[serde(default)]
    pub p_kw: f64,
    #[serde(default)]
    pub q_kvar: f64,
    #[serde(default = "one")]
    pub weight: f64,
    /// Optional per-span load profile overriding `p_kw`/`q_kvar`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<LoadPointDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadPointDoc {
    pub p_kw: f64,
    pub q_kvar: f64,
}

/// Branch impedance is given either in ohms or directly in per-unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_ohm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_ohm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_pu: Option<f64>,
    pub s_max_kva: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessDoc {
    pub storage_nodes: Vec<String>,
    pub generator_nodes: Vec<String>,
    #[serde(default)]
    pub depots: Vec<String>,
}

/// Fault sets active over the inclusive span window `from_span..=to_span`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultWindowDoc {
    pub from_span: usize,
    pub to_span: usize,
    #[serde(default)]
    pub open_nodes: Vec<String>,
    #[serde(default)]
    pub closed_nodes: Vec<String>,
    #[serde(default)]
    pub open_branches: Vec<[String; 2]>,
    #[serde(default)]
    pub closed_branches: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetDoc {
    #[serde(default)]
    pub carriers: Vec<CarrierDoc>,
    #[serde(default)]
    pub modules: Vec<ModuleDoc>,
    #[serde(default)]
    pub generators: Vec<GeneratorDoc>,
    #[serde(default)]
    pub tankers: Vec<TankerDoc>,
    #[serde(default)]
    pub fuel_sites: Vec<FuelSiteDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierDoc {
    pub id: String,
    #[serde(default = "two")]
    pub capacity: f64,
    pub start: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleDoc {
    pub id: String,
    #[serde(default = "one")]
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
    pub start: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDoc {
    pub id: String,
    pub p_max_kw: f64,
    pub q_max_kvar: f64,
    pub s_rated_kva: f64,
    pub fuel_capacity_l: f64,
    /// Fuel burnt per span at full load; derived from the curve when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel_max_per_span_l: Option<f64>,
    pub fuel_curve: Vec<FuelPointDoc>,
    pub sof_init: f64,
    pub start: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelPointDoc {
    pub p_kw: f64,
    pub rate_l_per_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TankerDoc {
    pub id: String,
    pub fuel_capacity_l: f64,
    /// Defaults to a full tank per span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_in_l_per_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_out_l_per_h: Option<f64>,
    pub sof_init: f64,
    pub start: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelSiteDoc {
    pub id: String,
    pub fuel_capacity_l: f64,
    pub sof_init: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TravelDoc {
    #[serde(default = "yes")]
    pub symmetric: bool,
    #[serde(default)]
    pub carrier: Vec<TravelEntryDoc>,
    #[serde(default)]
    pub generator: Vec<TravelEntryDoc>,
    /// Falls back to the generator table when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tanker: Option<Vec<TravelEntryDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TravelEntryDoc {
    pub from: String,
    pub to: String,
    pub spans: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyDoc {
    #[serde(default = "tenth")]
    pub phi_travel: f64,
    #[serde(default = "tenth")]
    pub phi_fuel: f64,
    #[serde(default = "case5")]
    pub case: String,
    #[serde(default = "yes")]
    pub substation_energized: bool,
    #[serde(default = "default_gap")]
    pub mip_gap: f64,
    #[serde(default = "tight")]
    pub big_m: String,
    #[serde(default = "eight")]
    pub disk_segments: usize,
    #[serde(default)]
    pub strict_pickup: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_params: Option<CaseParamsDoc>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseParamsDoc {
    /// Case 2: module id -> storage node it stays at (default: its start).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub module_sites: BTreeMap<String, String>,
    /// Case 2: generator id -> site it stays at (default: its start).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub generator_sites: BTreeMap<String, String>,
    /// Case 3: modules that travel with a carrier as one unit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bundles: Vec<BundleDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleDoc {
    pub carrier: String,
    pub modules: Vec<String>,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn tenth() -> f64 {
    0.1
}
fn yes() -> bool {
    true
}
fn eight() -> usize {
    8
}
fn default_gap() -> f64 {
    0.001
}
fn case5() -> String {
    "case5".into()
}
fn tight() -> String {
    "tight".into()
}
