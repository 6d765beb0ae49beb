#![allow(dead_code)]

use smess_core::scenario::{parse_scenario, Scenario};

pub const TINY: [(&str, &str); 5] = [
    ("t1-line", include_str!("../../data/tiny/t1-line.json")),
    ("t2-tie", include_str!("../../data/tiny/t2-tie.json")),
    ("t3-fuel", include_str!("../../data/tiny/t3-fuel.json")),
    ("t4-mixed", include_str!("../../data/tiny/t4-mixed.json")),
    ("t5-islands", include_str!("../../data/tiny/t5-islands.json")),
];

pub const IEEE33: &str = include_str!("../../data/ieee33.json");

pub fn tiny() -> Vec<(&'static str, Scenario)> {
    TINY.iter()
        .map(|(n, t)| (*n, parse_scenario(t).unwrap_or_else(|e| panic!("{n}: {e}"))))
        .collect()
}

use smess_core::assembly::{assemble, with_case};
use smess_core::scenario::CaseTag;
use smess_core::solver::{solve, Schedule, SolveOptions, SolveResult};

/// Frozen reference optima of the tiny corpus, in `CaseTag::ALL` order.
pub const ORACLE_OPTIMA: [(&str, [f64; 5]); 5] = [
    ("t1-line", [0.0, 180.0, 359.9, 359.9, 359.9]),
    ("t2-tie", [0.0, 420.0, 420.0, 420.0, 420.0]),
    ("t3-fuel", [0.0, 479.8, 479.8, 239.9, 479.8]),
    ("t4-mixed", [190.0, 190.0, 429.7, 309.9, 429.7]),
    ("t5-islands", [240.0, 390.0, 390.0, 390.0, 390.0]),
];

pub fn exact() -> SolveOptions {
    SolveOptions {
        gap: 0.0,
        ..Default::default()
    }
}

/// Solve `scenario` under `case` to proven optimality.
pub fn solve_case(scenario: &Scenario, case: CaseTag) -> (Scenario, SolveResult) {
    let sc = with_case(scenario, case);
    let a = assemble(&sc).unwrap_or_else(|e| panic!("assemble {case}: {e}"));
    let r = solve(&a, &exact()).unwrap_or_else(|e| panic!("solve {case}: {e}"));
    (sc, r)
}

/// One single-field corruption and the family that must flag it.
pub struct Corruption {
    pub name: &'static str,
    pub family: &'static str,
    pub apply: fn(&Scenario, &mut Schedule) -> bool,
}

fn first_parked(track: &smess_core::solver::MerTrack) -> Option<(usize, usize)> {
    (1..track.parked.len()).find_map(|t| track.position(t).map(|s| (t, s)))
}

fn owned_span(s: &Schedule, k: usize) -> Option<(usize, usize)> {
    (1..=s.span_count).find_map(|t| s.modules[k].owned_by_node[t].iter().position(|&x| x).map(|slot| (t, slot)))
}

fn meg_at_node(sc: &Scenario, s: &Schedule) -> Option<(usize, usize)> {
    let g = s.generators.first()?;
    (1..=s.span_count).find_map(|t| g.position(t).filter(|&slot| sc.access.fuel_site_node(slot).is_some()).map(|slot| (t, slot)))
}

fn closed_branch(s: &Schedule) -> Option<(usize, usize)> {
    s.grid.iter().enumerate().find_map(|(t, g)| g.closed.iter().position(|&c| c).map(|b| (t, b)))
}

/// Twenty systematic corruptions; each returns `false` when the schedule
/// offers no place to apply it.
pub const CORRUPTIONS: [Corruption; 20] = [
    Corruption {
        name: "generator parked at two sites",
        family: "1a",
        apply: |_, s| {
            let g = &mut s.generators[0];
            let Some((t, slot)) = first_parked(g) else { return false };
            let other = (slot + 1) % g.parked[t].len();
            other != slot && {
                g.parked[t][other] = true;
                true
            }
        },
    },
    Corruption {
        name: "residual travel time while parked",
        family: "1e",
        apply: |_, s| {
            let c = &mut s.carriers[0];
            let Some((t, _)) = first_parked(c) else { return false };
            c.residual[t] = 1.0;
            true
        },
    },
    Corruption {
        name: "initial travel time set",
        family: "1g",
        apply: |_, s| {
            s.tankers[0].travel_set[0] = 1.0;
            true
        },
    },
    Corruption {
        name: "module owned by a node and a carrier",
        family: "2a",
        apply: |_, s| {
            let Some((t, _)) = owned_span(s, 0) else { return false };
            s.modules[0].carried_by[t][0] = true;
            true
        },
    },
    Corruption {
        name: "module starts elsewhere",
        family: "2c",
        apply: |_, s| {
            let m = &mut s.modules[0];
            let Some(slot) = m.owned_by_node[0].iter().position(|&x| x) else { return false };
            m.owned_by_node[0][slot] = false;
            m.carried_by[0][0] = true;
            true
        },
    },
    Corruption {
        name: "charging and discharging together",
        family: "5a",
        apply: |_, s| {
            let Some((t, slot)) = owned_span(s, 0) else { return false };
            s.modules[0].charging[t - 1][slot] = true;
            s.modules[0].discharging[t - 1][slot] = true;
            true
        },
    },
    Corruption {
        name: "discharge above rating",
        family: "5b",
        apply: |sc, s| {
            let Some((t, slot)) = owned_span(s, 0) else { return false };
            let m = &mut s.modules[0];
            m.discharging[t - 1][slot] = true;
            m.charging[t - 1][slot] = false;
            m.p_charge[t - 1][slot] = 0.0;
            m.p_discharge[t - 1][slot] = 2.0 * sc.network.to_pu(sc.fleet.modules[0].p_discharge_max_kw) + 0.01;
            true
        },
    },
    Corruption {
        name: "apparent power outside the module disk",
        family: "5c",
        apply: |sc, s| {
            let Some((t, slot)) = owned_span(s, 0) else { return false };
            let rated = sc.network.to_pu(sc.fleet.modules[0].s_rated_kva);
            let m = &mut s.modules[0];
            m.p_charge[t - 1][slot] = 0.0;
            m.charging[t - 1][slot] = false;
            m.discharging[t - 1][slot] = true;
            m.p_discharge[t - 1][slot] = 0.8 * rated;
            m.q[t - 1][slot] = 0.8 * rated;
            true
        },
    },
    Corruption {
        name: "state of charge jumps",
        family: "5d",
        apply: |_, s| {
            s.modules[0].soc[1] += 0.01;
            true
        },
    },
    Corruption {
        name: "initial state of charge",
        family: "5e",
        apply: |_, s| {
            s.modules[0].soc[0] += 0.01;
            true
        },
    },
    Corruption {
        name: "state of charge above the window",
        family: "5f",
        apply: |_, s| {
            let d = s.span_count;
            s.modules[0].soc[d] = 1.2;
            true
        },
    },
    Corruption {
        name: "generator output above rating",
        family: "6a",
        apply: |sc, s| {
            let Some((t, slot)) = meg_at_node(sc, s) else { return false };
            s.megs[0].p[t - 1][slot] = 1.5 * sc.network.to_pu(sc.fleet.generators[0].p_max_kw) + 0.01;
            true
        },
    },
    Corruption {
        name: "burn off the fuel curve",
        family: "7d",
        apply: |sc, s| {
            let Some((t, slot)) = meg_at_node(sc, s) else { return false };
            s.megs[0].burn[t - 1][slot] += 5.0;
            true
        },
    },
    Corruption {
        name: "generator fuel jumps",
        family: "7g",
        apply: |_, s| {
            let g = &mut s.megs[0];
            g.sof[1] = if g.sof[1] > 0.5 { g.sof[1] - 0.1 } else { g.sof[1] + 0.1 };
            true
        },
    },
    Corruption {
        name: "tanker fuel jumps",
        family: "7h",
        apply: |_, s| {
            let h = &mut s.tanker_fuel[0];
            h.sof[1] = if h.sof[1] > 0.5 { h.sof[1] - 0.1 } else { h.sof[1] + 0.1 };
            true
        },
    },
    Corruption {
        name: "exchange without the indicator",
        family: "7k",
        apply: |_, s| {
            let g = &mut s.megs[0];
            let Some((t, slot)) = (1..=s.span_count).find_map(|t| s.generators[0].position(t).map(|x| (t, x))) else {
                return false;
            };
            g.exchanging[t - 1][slot] = false;
            g.exchange[t - 1][slot] = 1.0;
            true
        },
    },
    Corruption {
        name: "branch count off the spanning forest",
        family: "8e",
        apply: |_, s| {
            let g = &mut s.grid[0];
            let Some(b) = g.in_tree.iter().position(|&x| x) else { return false };
            g.in_tree[b] = false;
            g.arc_in_tree[2 * b] = false;
            g.arc_in_tree[2 * b + 1] = false;
            true
        },
    },
    Corruption {
        name: "served node dropped later",
        family: "9e",
        apply: |_, s| {
            let d = s.span_count;
            let Some(i) = (0..s.grid[d - 1].pickup.len()).find(|&i| d >= 2 && s.grid[d - 2].pickup[i] && s.grid[d - 1].pickup[i]) else {
                return false;
            };
            s.grid[d - 1].pickup[i] = false;
            true
        },
    },
    Corruption {
        name: "voltage outside limits",
        family: "9g",
        apply: |sc, s| {
            let g = &mut s.grid[0];
            let i = (0..g.v_sq.len()).find(|&i| i != sc.network.substation).expect("two nodes");
            g.v_sq[i] = 1.3;
            true
        },
    },
    Corruption {
        name: "branch flow outside the thermal disk",
        family: "9h",
        apply: |sc, s| {
            let Some((t, b)) = closed_branch(s) else { return false };
            let smax = sc.network.s_max_pu(b);
            s.grid[t].p[b] = smax;
            s.grid[t].q[b] = 0.5 * smax;
            true
        },
    },
];
