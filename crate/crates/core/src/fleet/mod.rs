//! Constraint emitters for mobile resources: routing of carriers, generators
//! and tankers, carrier/module coupling, module operation, generator output
//! and fuel logistics.
//!
//! Index conventions: series that include the initial state are indexed by
//! `t = 0..=D`; per-span series are indexed by `t - 1` for `t = 1..=D`.

mod coupling;
mod generator;
mod routing;
mod storage;

use crate::assembly::BigM;
use crate::error::Result;
use crate::milp::{ModelIR, VarId};
use crate::scenario::{MerClass, Scenario};

pub use coupling::{emit_smess_coupling, CouplingVars};
pub use generator::{emit_fuel_logistics, emit_meg_power, fuel_curve_pu, FuelVars, MegPowerVars};
pub use routing::{emit_routing, MerVars};
pub use storage::{emit_mod_operation, ModuleVars};

/// Index key used in variable names for each resource class.
pub(crate) fn class_key(class: MerClass) -> &'static str {
    match class {
        MerClass::Carrier => "j",
        MerClass::Generator => "m",
        MerClass::Tanker => "h",
    }
}

/// Handles of every fleet variable.
#[derive(Debug, Clone)]
pub struct FleetVars {
    pub carriers: Vec<MerVars>,
    pub generators: Vec<MerVars>,
    pub tankers: Vec<MerVars>,
    pub coupling: CouplingVars,
    pub modules: ModuleVars,
    pub meg: MegPowerVars,
    pub fuel: FuelVars,
}

impl FleetVars {
    pub fn routing(&self, class: MerClass) -> &[MerVars] {
        match class {
            MerClass::Carrier => &self.carriers,
            MerClass::Generator => &self.generators,
            MerClass::Tanker => &self.tankers,
        }
    }
}

/// Emit every fleet family in a fixed order.
pub fn emit_fleet(model: &mut ModelIR, scenario: &Scenario, big_m: &BigM) -> Result<FleetVars> {
    let carriers = emit_routing(model, scenario, MerClass::Carrier, big_m)?;
    let generators = emit_routing(model, scenario, MerClass::Generator, big_m)?;
    let tankers = emit_routing(model, scenario, MerClass::Tanker, big_m)?;
    let coupling = emit_smess_coupling(model, scenario, &carriers)?;
    let modules = emit_mod_operation(model, scenario, &coupling)?;
    let meg = emit_meg_power(model, scenario, &generators)?;
    let fuel = emit_fuel_logistics(model, scenario, &generators, &tankers, &meg, big_m)?;
    Ok(FleetVars {
        carriers,
        generators,
        tankers,
        coupling,
        modules,
        meg,
        fuel,
    })
}

/// Per-span handle table `[t - 1][slot]`.
pub(crate) type SpanTable = Vec<Vec<VarId>>;
