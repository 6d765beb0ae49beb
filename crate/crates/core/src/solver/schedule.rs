use serde::{Deserialize, Serialize};

use crate::assembly::Assembled;
use crate::error::{Error, Result};
use crate::milp::{ModelIR, VarId, VarKind};
use crate::scenario::{CaseTag, MerClass};

/// Binaries within this distance of an integer are rounded silently.
pub const BINARY_ROUNDING_TOL: f64 = 1e-6;
/// Binaries farther than this from an integer are rejected.
pub const BINARY_HARD_TOL: f64 = 1e-4;

/// Route of one mobile resource. Tables are indexed `[t][slot]`, `t = 0..=D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MerTrack {
    pub id: String,
    pub parked: Vec<Vec<bool>>,
    pub travelling: Vec<Vec<bool>>,
    /// Travel time recognised at departure.
    pub travel_set: Vec<f64>,
    /// Residual travel time.
    pub residual: Vec<f64>,
    pub direction_hold: Vec<bool>,
}

impl MerTrack {
    /// Slot the resource is parked at during `t`.
    pub fn position(&self, t: usize) -> Option<usize> {
        self.parked[t].iter().position(|&p| p)
    }

    /// Destination slot while travelling during `t`.
    pub fn destination(&self, t: usize) -> Option<usize> {
        self.travelling[t].iter().position(|&v| v)
    }

    pub fn is_travelling(&self, t: usize) -> bool {
        self.travelling[t].iter().any(|&v| v)
    }

    pub fn is_parked(&self, t: usize) -> bool {
        self.parked[t].iter().any(|&x| x)
    }

    /// Spans `1..=D` spent travelling.
    pub fn travel_spans(&self) -> usize {
        (1..self.travelling.len()).filter(|&t| self.is_travelling(t)).count()
    }
}

/// Ownership and operation of one module. Power in per-unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleTrack {
    pub id: String,
    /// `[t][storage slot]`, `t = 0..=D`.
    pub owned_by_node: Vec<Vec<bool>>,
    /// `[t][carrier]`, `t = 0..=D`.
    pub carried_by: Vec<Vec<bool>>,
    /// `[t - 1][storage slot]`.
    pub charging: Vec<Vec<bool>>,
    pub discharging: Vec<Vec<bool>>,
    pub p_charge: Vec<Vec<f64>>,
    pub p_discharge: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    /// `t = 0..=D`.
    pub soc: Vec<f64>,
}

/// Output and fuel of one generator. Power in per-unit, fuel flows in
/// litres per span, states as fractions of capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MegTrack {
    pub id: String,
    /// `[t - 1][generator-node slot]`.
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    /// `[t - 1][fuel site]`.
    pub burn: Vec<Vec<f64>>,
    pub extra: Vec<Vec<f64>>,
    pub exchange: Vec<Vec<f64>>,
    pub exchanging: Vec<Vec<bool>>,
    /// `[t - 1][segment]`.
    pub segment: Vec<Vec<bool>>,
    /// `[t - 1]`.
    pub self_sufficient: Vec<bool>,
    /// `t = 0..=D`.
    pub sof: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TankerTrack {
    pub id: String,
    /// `[t - 1][fuel site]`, litres per span; negative when loading.
    pub release: Vec<Vec<f64>>,
    pub exchanging: Vec<Vec<bool>>,
    /// `t = 0..=D`.
    pub sof: Vec<f64>,
}

/// Network state of one span. Electrical quantities in per-unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanGrid {
    /// Per branch.
    pub closed: Vec<bool>,
    pub in_tree: Vec<bool>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Per directed arc (`2b` from->to, `2b + 1` to->from).
    pub arc_in_tree: Vec<bool>,
    /// Per branch and end (0 = from, 1 = to).
    pub end_live: Vec<[bool; 2]>,
    /// Per node.
    pub p_in: Vec<f64>,
    pub q_in: Vec<f64>,
    pub v_sq: Vec<f64>,
    pub pickup: Vec<bool>,
    pub energized: Vec<bool>,
    pub source: Vec<bool>,
    pub neighbor: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub case: CaseTag,
    pub span_count: usize,
    pub carriers: Vec<MerTrack>,
    pub generators: Vec<MerTrack>,
    pub tankers: Vec<MerTrack>,
    pub modules: Vec<ModuleTrack>,
    /// Carrier arrival with a module aboard, `[carrier][storage slot][module][t - 1]`.
    pub arrivals: Vec<Vec<Vec<Vec<bool>>>>,
    pub megs: Vec<MegTrack>,
    pub tanker_fuel: Vec<TankerTrack>,
    /// `[fuel site][t]`, `t = 0..=D`.
    pub site_sof: Vec<Vec<f64>>,
    /// `[t - 1]`.
    pub grid: Vec<SpanGrid>,
}

impl Schedule {
    pub fn routes(&self, class: MerClass) -> &[MerTrack] {
        match class {
            MerClass::Carrier => &self.carriers,
            MerClass::Generator => &self.generators,
            MerClass::Tanker => &self.tankers,
        }
    }

    pub fn routes_mut(&mut self, class: MerClass) -> &mut Vec<MerTrack> {
        match class {
            MerClass::Carrier => &mut self.carriers,
            MerClass::Generator => &mut self.generators,
            MerClass::Tanker => &mut self.tankers,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Round every binary of `values` to 0 or 1. Values within
/// [`BINARY_HARD_TOL`] of an integer are accepted.
pub fn round_binaries(model: &ModelIR, values: &mut [f64]) -> Result<()> {
    if values.len() != model.num_vars() {
        return Err(Error::Dimension(format!(
            "{} values for {} variables",
            values.len(),
            model.num_vars()
        )));
    }
    for (d, x) in model.vars().iter().zip(values.iter_mut()) {
        if d.kind == VarKind::Binary {
            let r = x.round();
            if !(r == 0.0 || r == 1.0) || (*x - r).abs() > BINARY_HARD_TOL {
                return Err(Error::FractionalBinary {
                    name: d.name.clone(),
                    value: *x,
                });
            }
            *x = r;
        }
    }
    Ok(())
}

struct Reader<'a> {
    values: &'a [f64],
}

impl Reader<'_> {
    fn f(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    fn b(&self, v: VarId) -> bool {
        self.values[v.0] > 0.5
    }

    fn fs(&self, vs: &[VarId]) -> Vec<f64> {
        vs.iter().map(|&v| self.f(v)).collect()
    }

    fn bs(&self, vs: &[VarId]) -> Vec<bool> {
        vs.iter().map(|&v| self.b(v)).collect()
    }

    fn ft(&self, t: &[Vec<VarId>]) -> Vec<Vec<f64>> {
        t.iter().map(|r| self.fs(r)).collect()
    }

    fn bt(&self, t: &[Vec<VarId>]) -> Vec<Vec<bool>> {
        t.iter().map(|r| self.bs(r)).collect()
    }
}

/// Decode a raw solution vector into a [`Schedule`]. Binaries are rounded;
/// any binary farther than [`BINARY_HARD_TOL`] from an integer is an error.
pub fn extract_schedule(assembled: &Assembled, raw: &[f64]) -> Result<Schedule> {
    let mut values = raw.to_vec();
    round_binaries(&assembled.model, &mut values)?;
    let r = Reader { values: &values };
    let sc = &assembled.scenario;
    let fleet = &assembled.fleet;
    let grid = &assembled.grid;
    let d = sc.time.span_count;

    let routes = |class: MerClass| -> Vec<MerTrack> {
        fleet
            .routing(class)
            .iter()
            .enumerate()
            .map(|(j, mv)| MerTrack {
                id: sc.mer_id(class, j).to_string(),
                parked: r.bt(&mv.x),
                travelling: r.bt(&mv.v),
                travel_set: r.fs(&mv.s),
                residual: r.fs(&mv.r),
                direction_hold: r.bs(&mv.omega),
            })
            .collect()
    };

    let cp = &fleet.coupling;
    let mv = &fleet.modules;
    let modules = sc
        .fleet
        .modules
        .iter()
        .enumerate()
        .map(|(k, m)| ModuleTrack {
            id: m.id.clone(),
            owned_by_node: r.bt(&cp.zeta[k]),
            carried_by: (0..=d)
                .map(|t| cp.gamma[k].iter().map(|g| r.b(g[t])).collect())
                .collect(),
            charging: r.bt(&mv.charging[k]),
            discharging: r.bt(&mv.discharging[k]),
            p_charge: r.ft(&mv.p_charge[k]),
            p_discharge: r.ft(&mv.p_discharge[k]),
            q: r.ft(&mv.q[k]),
            soc: r.fs(&mv.soc[k]),
        })
        .collect();
    let arrivals = cp
        .alpha
        .iter()
        .map(|by_slot| by_slot.iter().map(|by_mod| r.bt(by_mod)).collect())
        .collect();

    let fu = &fleet.fuel;
    let megs = sc
        .fleet
        .generators
        .iter()
        .enumerate()
        .map(|(m, g)| MegTrack {
            id: g.id.clone(),
            p: r.ft(&fleet.meg.p[m]),
            q: r.ft(&fleet.meg.q[m]),
            burn: r.ft(&fu.burn[m]),
            extra: r.ft(&fu.extra[m]),
            exchange: r.ft(&fu.exchange[m]),
            exchanging: r.bt(&fu.meg_exchanging[m]),
            segment: r.bt(&fu.tau[m]),
            self_sufficient: r.bs(&fu.self_sufficient[m]),
            sof: r.fs(&fu.sof_meg[m]),
        })
        .collect();
    let tanker_fuel = sc
        .fleet
        .tankers
        .iter()
        .enumerate()
        .map(|(h, ft)| TankerTrack {
            id: ft.id.clone(),
            release: r.ft(&fu.release[h]),
            exchanging: r.bt(&fu.ft_exchanging[h]),
            sof: r.fs(&fu.sof_ft[h]),
        })
        .collect();

    let rad = &grid.radiality;
    let fl = &grid.flow;
    let en = &grid.energization;
    let spans = (0..d)
        .map(|s| SpanGrid {
            closed: r.bs(&rad.kappa[s]),
            in_tree: r.bs(&rad.mu[s]),
            p: r.fs(&fl.p[s]),
            q: r.fs(&fl.q[s]),
            arc_in_tree: r.bs(&rad.lambda[s]),
            end_live: en.chi[s].iter().map(|&[a, b]| [r.b(a), r.b(b)]).collect(),
            p_in: r.fs(&fl.p_in[s]),
            q_in: r.fs(&fl.q_in[s]),
            v_sq: r.fs(&fl.v_sq[s]),
            pickup: r.bs(&fl.pickup[s]),
            energized: r.bs(&fl.energized[s]),
            source: r.bs(&en.source[s]),
            neighbor: r.bs(&en.neighbor[s]),
        })
        .collect();

    Ok(Schedule {
        case: sc.study.case,
        span_count: d,
        carriers: routes(MerClass::Carrier),
        generators: routes(MerClass::Generator),
        tankers: routes(MerClass::Tanker),
        modules,
        arrivals,
        megs,
        tanker_fuel,
        site_sof: r.ft(&fu.sof_site),
        grid: spans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_integral_binaries_are_rounded() {
        let mut m = ModelIR::new();
        m.add_binary("x", "x[0]".into());
        m.add_continuous("y", "y[0]".into(), 0.0, 1.0);
        let mut v = vec![1.0 - 5e-7, 0.3];
        round_binaries(&m, &mut v).unwrap();
        assert_eq!(v, vec![1.0, 0.3]);
    }

    #[test]
    fn half_valued_binary_is_rejected() {
        let mut m = ModelIR::new();
        m.add_binary("x", "x[0]".into());
        let err = round_binaries(&m, &mut [0.4999]).unwrap_err();
        assert!(matches!(err, Error::FractionalBinary { .. }));
    }

    #[test]
    fn binary_drift_beyond_hard_tolerance_is_rejected() {
        let mut m = ModelIR::new();
        m.add_binary("x", "x[0]".into());
        assert!(round_binaries(&m, &mut [2e-4]).is_err());
        assert!(round_binaries(&m, &mut [5e-5]).is_ok());
    }
}
