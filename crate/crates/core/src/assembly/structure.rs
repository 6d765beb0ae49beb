//! Reference calculator for the closed-form variable and constraint counts.
//!
//! [`closed_form`] evaluates the three closed-form totals. [`reference_counts`]
//! splits them by family under the reference assumptions (octagonal disks,
//! one selector per curve level, energized substation, no case
//! rows); its totals equal the closed forms identically. [`deviations`]
//! itemizes what this build emits beyond those assumptions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{CASE1_FAMILY, CASE2_FAMILY, CASE3_FAMILY, CASE4_FAMILY, STRICT_PICKUP_FAMILY};
use crate::error::Result;
use crate::milp::CountReport;
use crate::scenario::{CaseTag, Scenario};

/// Disk segment count the reference row counts assume.
pub const REFERENCE_DISK_SEGMENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cardinalities {
    pub spans: usize,
    pub nodes: usize,
    pub branches: usize,
    pub storage_nodes: usize,
    pub generator_nodes: usize,
    pub depots: usize,
    pub carriers: usize,
    pub modules: usize,
    pub generators: usize,
    pub tankers: usize,
    /// Curve levels summed over generators.
    pub levels: usize,
    /// Emitted curve segments summed over generators.
    pub segments: usize,
    /// Fault-set sizes summed over spans.
    pub fault_entries: usize,
    pub disk_segments: usize,
}

impl Cardinalities {
    pub fn of(scenario: &Scenario) -> Result<Self> {
        let dt = scenario.time.span_length_h;
        let mut fault_entries = 0;
        for t in scenario.time.spans() {
            fault_entries += scenario.fault_sets_at(t)?.len();
        }
        Ok(Cardinalities {
            spans: scenario.time.span_count,
            nodes: scenario.network.nodes.len(),
            branches: scenario.network.branches.len(),
            storage_nodes: scenario.access.storage_nodes.len(),
            generator_nodes: scenario.access.generator_nodes.len(),
            depots: scenario.access.depots.len(),
            carriers: scenario.fleet.carriers.len(),
            modules: scenario.fleet.modules.len(),
            generators: scenario.fleet.generators.len(),
            tankers: scenario.fleet.tankers.len(),
            levels: scenario.fleet.generators.iter().map(|g| g.curve.len()).sum(),
            segments: scenario.fleet.generators.iter().map(|g| g.segments(dt).len()).sum(),
            fault_entries,
            disk_segments: scenario.study.disk_segments,
        })
    }
}

/// Closed-form totals `(binary, continuous, constraints)`. `L·M_G` is read as
/// the level count summed over generators.
pub fn closed_form(c: &Cardinalities) -> (usize, usize, usize) {
    let t = c.spans as i64;
    let n = c.nodes as i64;
    let br = c.branches as i64;
    let (ns, ng, ndp) = (c.storage_nodes as i64, c.generator_nodes as i64, c.depots as i64);
    let (ms, k, mg, mf) = (c.carriers as i64, c.modules as i64, c.generators as i64, c.tankers as i64);
    let lv = c.levels as i64;
    let nf = ng + ndp;
    let binary = t
        * (3 * (mg + mf) * nf + ms * ns * (k + 2) + 3 * ns * k + ms * (k + 1) + lv + 2 * mg + mf + 6 * br + 4 * n)
        + 2 * ms * ns
        + 2 * (mg + mf) * nf
        + ms
        + mg
        + mf
        + (ms + ns) * k;
    let continuous = t
        * ((3 * mg + mf) * nf + 2 * mg * ng + 3 * ns * k + 2 * ms + 3 * mg + 3 * mf + nf + k + (2 * br + 3) * n)
        + 2 * ms
        + 3 * mg
        + 3 * mf
        + nf
        + k;
    let rows = t
        * ((10 * mg + 8 * mf) * nf
            + 5 * ms * ns * (k + 1)
            + 3 * ms * k
            + 9 * ns * k
            + 6 * mg * ng
            + mg * ndp
            + 7 * ms
            + 4 * lv
            + 23 * mg
            + 9 * mf
            + 12 * k
            + 3 * ng
            + 3 * ndp
            + n * n
            + 4 * br * n
            + 13 * n
            + 14 * br
            - 5)
        + c.fault_entries as i64
        + 7 * ms
        + 8 * mg
        + 8 * mf
        + 3 * k
        + ng
        + ndp;
    (binary as usize, continuous as usize, rows as usize)
}

/// Family-wise split of the closed-form totals.
pub fn reference_counts(c: &Cardinalities) -> CountReport {
    let d = c.spans;
    let n = c.nodes;
    let br = c.branches;
    let (ns, ng, ndp) = (c.storage_nodes, c.generator_nodes, c.depots);
    let (ms, k, mg, mf) = (c.carriers, c.modules, c.generators, c.tankers);
    let nf = ng + ndp;
    let mers = ms + mg + mf;
    let sites = ms * ns + (mg + mf) * nf;
    let mut r = CountReport::default();
    let mut bin = |f: &str, v: usize| {
        r.binary.insert(f.to_string(), v);
    };
    bin("x", (d + 1) * sites);
    bin("v", (d + 1) * sites);
    bin("l", d * (mg + mf) * nf);
    bin("alpha", d * ms * ns * k);
    bin("zeta", (d + 1) * ns * k);
    bin("c", d * ns * k);
    bin("d", d * ns * k);
    bin("gamma", (d + 1) * ms * k);
    bin("omega", (d + 1) * mers);
    bin("tau", d * c.levels);
    bin("b", d * mg);
    bin("lambda", d * 2 * br);
    bin("mu", d * br);
    bin("kappa", d * br);
    bin("chi", d * 2 * br);
    for f in ["delta", "eta", "rho", "sigma"] {
        bin(f, d * n);
    }
    let mut cont = |f: &str, v: usize| {
        r.continuous.insert(f.to_string(), v);
    };
    for f in ["B", "Bplus", "G"] {
        cont(f, d * mg * nf);
    }
    cont("D", d * mf * nf);
    cont("PG", d * mg * ng);
    cont("QG", d * mg * ng);
    for f in ["Pc", "Pd", "Qs"] {
        cont(f, d * ns * k);
    }
    cont("S", (d + 1) * mers);
    cont("R", (d + 1) * mers);
    cont("SOF", (d + 1) * (mg + mf + nf));
    cont("SOC", (d + 1) * k);
    cont("f", d * 2 * br * (n - 1));
    cont("P", d * br);
    cont("Q", d * br);
    for f in ["Pin", "Qin", "V2"] {
        cont(f, d * n);
    }
    let mut row = |f: &str, v: usize| {
        if v > 0 {
            r.rows.insert(f.to_string(), v);
        }
    };
    row("1a", (d + 1) * mers);
    row("1b", d * 2 * sites);
    row("1c", d * (sites + mers));
    row("1d", d * mers);
    row("1e", 2 * (d + 1) * mers);
    row("1f", d * (mers + 2 * sites));
    row("1g", 4 * mers);
    row("2a", (d + 1) * k);
    row("2b", d * ms);
    row("2c", k);
    row("3a", d * ms * k);
    row("3b", d * ms * ns * k);
    row("3c", 2 * d * ms * k);
    row("4a", 4 * d * ms * ns * k);
    row("4b", d * ns * k);
    row("4c", d * ns * k);
    row("5a", d * ns * k);
    row("5b", 6 * d * ns * k);
    row("5c", REFERENCE_DISK_SEGMENTS * d * k);
    row("5d", d * k);
    row("5e", k);
    row("5f", 2 * d * k);
    row("6a", 4 * d * mg * ng);
    row("6b", REFERENCE_DISK_SEGMENTS * d * mg);
    row("7a", 2 * d * mg * ng);
    row("7b", d * mg * ndp);
    row("7d", 4 * d * c.levels);
    row("7e", d * mg);
    row("7f", d * mg * (2 * nf + 5));
    row("7g", d * mg);
    row("7h", d * mf);
    row("7i", d * nf);
    row("7j", d * mg * nf);
    row("7k", 2 * d * mg * nf);
    row("7l", d * mf * nf);
    row("7m", 2 * d * mf * nf);
    row("7n", mg + mf + nf);
    row("7o", 2 * d * (mg + mf + nf));
    row("8a", d * (n - 1));
    row("8b", d * (n - 1));
    row("8c", d * (n - 1) * (n - 2));
    row("8d", 4 * d * br * (n - 1));
    row("8e", d);
    row("8f", d * br);
    row("8g", d * br);
    for f in ["9a", "9b", "9c", "9d", "9e"] {
        row(f, d * n);
    }
    row("9f", 2 * d * br);
    row("9g", 2 * d * n);
    row("9h", REFERENCE_DISK_SEGMENTS * d * br);
    row("9i", c.fault_entries);
    row("9j", d);
    row("9k", 2 * d * (n - 1));
    row("9l", 2 * d * (n - 1));
    row("9m", 3 * d * (n - 1));
    row("10", 6 * d * br);
    r
}

/// Change to one family's counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyDelta {
    pub family: String,
    pub binary: i64,
    pub continuous: i64,
    pub rows: i64,
}

/// A documented departure from the reference assumptions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub name: &'static str,
    pub description: String,
    pub deltas: Vec<FamilyDelta>,
}

impl Deviation {
    pub fn is_zero(&self) -> bool {
        self.deltas.iter().all(|d| d.binary == 0 && d.continuous == 0 && d.rows == 0)
    }
}

fn rows_delta(family: &str, rows: i64) -> FamilyDelta {
    FamilyDelta {
        family: family.to_string(),
        binary: 0,
        continuous: 0,
        rows,
    }
}

/// Deviations that apply to `scenario` (built with [`super::effective_scenario`]),
/// including those that happen to be zero.
pub fn deviations(scenario: &Scenario) -> Result<Vec<Deviation>> {
    let c = Cardinalities::of(scenario)?;
    let d = c.spans as i64;
    let mut out = Vec::new();

    let extra = c.disk_segments as i64 - REFERENCE_DISK_SEGMENTS as i64;
    out.push(Deviation {
        name: "disk-segments",
        description: format!(
            "apparent-power disks use {} facets instead of {REFERENCE_DISK_SEGMENTS}",
            c.disk_segments
        ),
        deltas: vec![
            rows_delta("5c", extra * d * c.modules as i64),
            rows_delta("6b", extra * d * c.generators as i64),
            rows_delta("9h", extra * d * c.branches as i64),
        ],
    });

    let seg = c.segments as i64 - c.levels as i64;
    out.push(Deviation {
        name: "fuel-segments",
        description: format!(
            "{} curve segments (idle segment prepended) against {} curve levels",
            c.segments, c.levels
        ),
        deltas: vec![
            FamilyDelta {
                family: "tau".into(),
                binary: seg * d,
                continuous: 0,
                rows: 0,
            },
            rows_delta("7d", 4 * seg * d),
        ],
    });

    if !scenario.study.substation_energized {
        out.push(Deviation {
            name: "substation-deenergized",
            description: "substation follows the energization rows instead of being pinned".into(),
            deltas: vec![
                rows_delta("9j", -d),
                rows_delta("9k", 2 * d),
                rows_delta("9l", 2 * d),
                rows_delta("9m", 3 * d),
            ],
        });
    }
    if scenario.study.strict_pickup {
        out.push(Deviation {
            name: "strict-pickup",
            description: "pickup limited to energized nodes".into(),
            deltas: vec![rows_delta(STRICT_PICKUP_FAMILY, d * c.nodes as i64)],
        });
    }
    let case_rows = match scenario.study.case {
        CaseTag::Case1 => Some((
            CASE1_FAMILY,
            d * (3 * c.storage_nodes * c.modules + 2 * c.generators * c.generator_nodes) as i64,
        )),
        CaseTag::Case2 => Some((CASE2_FAMILY, d * (c.modules + c.generators + c.carriers) as i64)),
        CaseTag::Case3 => {
            let bundled: usize = scenario.case3_bundles()?.iter().map(|b| b.modules.len()).sum();
            Some((CASE3_FAMILY, d * (bundled * (1 + c.storage_nodes)) as i64))
        }
        CaseTag::Case4 => {
            let nf = c.generator_nodes + c.depots;
            Some((CASE4_FAMILY, d * (c.tankers * (1 + 2 * nf)) as i64))
        }
        CaseTag::Case5 => None,
    };
    if let Some((family, rows)) = case_rows {
        out.push(Deviation {
            name: "case-variant",
            description: format!("restriction rows of {}", scenario.study.case),
            deltas: vec![rows_delta(family, rows)],
        });
    }
    Ok(out)
}

/// One family/kind comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyCheck {
    pub kind: &'static str,
    pub family: String,
    pub model: usize,
    pub reference: usize,
    pub deviation: i64,
}

impl FamilyCheck {
    pub fn ok(&self) -> bool {
        self.model as i64 == self.reference as i64 + self.deviation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureCheck {
    pub cardinalities: Cardinalities,
    /// Closed-form totals `(binary, continuous, constraints)`.
    pub closed_form: (usize, usize, usize),
    /// Totals of the family split; equal to `closed_form` by construction.
    pub reference_totals: (usize, usize, usize),
    pub model_totals: (usize, usize, usize),
    /// Non-zero deviations only.
    pub deviations: Vec<Deviation>,
    pub families: Vec<FamilyCheck>,
}

impl StructureCheck {
    pub fn mismatches(&self) -> Vec<&FamilyCheck> {
        self.families.iter().filter(|f| !f.ok()).collect()
    }

    pub fn pass(&self) -> bool {
        self.closed_form == self.reference_totals && self.mismatches().is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let (cb, cc, cr) = self.closed_form;
        let (mb, mc, mr) = self.model_totals;
        let _ = writeln!(s, "{:<12} {:>10} {:>10}", "total", "formula", "model");
        let _ = writeln!(s, "{:<12} {cb:>10} {mb:>10}", "binary");
        let _ = writeln!(s, "{:<12} {cc:>10} {mc:>10}", "continuous");
        let _ = writeln!(s, "{:<12} {cr:>10} {mr:>10}", "constraints");
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<11} {:<14} {:>9} {:>9} {:>9}  status",
            "kind", "family", "formula", "deviation", "model"
        );
        for f in &self.families {
            let _ = writeln!(
                s,
                "{:<11} {:<14} {:>9} {:>9} {:>9}  {}",
                f.kind,
                f.family,
                f.reference,
                f.deviation,
                f.model,
                if f.ok() { "ok" } else { "MISMATCH" }
            );
        }
        if self.deviations.is_empty() {
            let _ = writeln!(s, "\ndeviations: none");
        } else {
            let _ = writeln!(s, "\ndeviations:");
            for d in &self.deviations {
                let _ = writeln!(s, "  {}: {}", d.name, d.description);
            }
        }
        s
    }
}

/// Compare `counts` of a model built from `scenario` with the closed-form
/// split plus the applicable deviations.
pub fn structure_check(scenario: &Scenario, counts: &CountReport) -> Result<StructureCheck> {
    let c = Cardinalities::of(scenario)?;
    let reference = reference_counts(&c);
    let devs: Vec<Deviation> = deviations(scenario)?.into_iter().filter(|d| !d.is_zero()).collect();
    let mut delta: BTreeMap<(&'static str, String), i64> = BTreeMap::new();
    for d in &devs {
        for fd in &d.deltas {
            for (kind, v) in [("binary", fd.binary), ("continuous", fd.continuous), ("rows", fd.rows)] {
                if v != 0 {
                    *delta.entry((kind, fd.family.clone())).or_default() += v;
                }
            }
        }
    }
    let mut families = Vec::new();
    for (kind, model_map, ref_map) in [
        ("binary", &counts.binary, &reference.binary),
        ("continuous", &counts.continuous, &reference.continuous),
        ("rows", &counts.rows, &reference.rows),
    ] {
        let mut keys: Vec<&String> = model_map.keys().chain(ref_map.keys()).collect();
        keys.extend(delta.keys().filter(|(k, _)| *k == kind).map(|(_, f)| f));
        keys.sort();
        keys.dedup();
        for f in keys {
            families.push(FamilyCheck {
                kind,
                family: f.clone(),
                model: model_map.get(f).copied().unwrap_or(0),
                reference: ref_map.get(f).copied().unwrap_or(0),
                deviation: delta.get(&(kind, f.clone())).copied().unwrap_or(0),
            });
        }
    }
    Ok(StructureCheck {
        cardinalities: c,
        closed_form: closed_form(&c),
        reference_totals: reference.totals(),
        model_totals: counts.totals(),
        deviations: devs,
        families,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fixture() -> Cardinalities {
        Cardinalities {
            spans: 12,
            nodes: 33,
            branches: 37,
            storage_nodes: 4,
            generator_nodes: 3,
            depots: 1,
            carriers: 2,
            modules: 4,
            generators: 1,
            tankers: 1,
            levels: 4,
            segments: 4,
            fault_entries: 80,
            disk_segments: 8,
        }
    }

    #[test]
    fn split_sums_to_closed_form_on_fixture_sizes() {
        let c = fixture();
        assert_eq!(reference_counts(&c).totals(), closed_form(&c));
    }

    #[test]
    fn radiality_balance_rows_are_n_times_n_minus_one_per_span() {
        let c = Cardinalities { spans: 1, ..fixture() };
        let r = reference_counts(&c);
        assert_eq!(r.rows_of("8a") + r.rows_of("8b") + r.rows_of("8c"), 33 * 32);
    }

    proptest! {
        #[test]
        fn split_sums_to_closed_form(
            spans in 1usize..6, nodes in 2usize..9, branches in 1usize..10,
            ns in 0usize..4, ng in 0usize..4, ndp in 0usize..3,
            ms in 0usize..3, k in 0usize..4, mg in 0usize..3, mf in 0usize..3,
            lv in 0usize..5, faults in 0usize..20,
        ) {
            let c = Cardinalities {
                spans, nodes, branches, storage_nodes: ns, generator_nodes: ng, depots: ndp,
                carriers: ms, modules: k, generators: mg, tankers: mf,
                levels: lv * mg, segments: lv * mg, fault_entries: faults, disk_segments: 8,
            };
            prop_assert_eq!(reference_counts(&c).totals(), closed_form(&c));
        }
    }
}
