//! Constraint emitters for the network: fictitious-tree radiality, linearized
//! DistFlow with switched branches, and energization propagation.
//!
//! Branch `b` runs `from -> to`; positive flow leaves `from`. Directed arcs
//! are `2b` (`from -> to`) and `2b + 1` (`to -> from`). Per-span tables are
//! indexed by `t - 1`.

mod energization;
mod power_flow;
mod radiality;

use crate::assembly::BigM;
use crate::error::Result;
use crate::fleet::FleetVars;
use crate::milp::ModelIR;
use crate::scenario::Scenario;

pub use energization::{emit_energization, EnergizationVars};
pub use power_flow::{emit_power_flow, FlowVars};
pub use radiality::{emit_radiality, RadialityVars};

#[derive(Debug, Clone)]
pub struct GridVars {
    pub radiality: RadialityVars,
    pub flow: FlowVars,
    pub energization: EnergizationVars,
}

pub fn emit_grid(model: &mut ModelIR, scenario: &Scenario, fleet: &FleetVars, big_m: &BigM) -> Result<GridVars> {
    let radiality = emit_radiality(model, scenario);
    let flow = emit_power_flow(model, scenario, fleet, &radiality, big_m)?;
    let energization = emit_energization(model, scenario, fleet, &radiality, &flow, big_m)?;
    Ok(GridVars {
        radiality,
        flow,
        energization,
    })
}

/// Whether `node` carries energization rows (every node but an energized
/// substation).
pub(crate) fn has_energization_rows(scenario: &Scenario, node: usize) -> bool {
    node != scenario.network.substation || !scenario.study.substation_energized
}
