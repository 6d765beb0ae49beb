use std::collections::BTreeMap;

use serde::Serialize;

use super::{ModelIR, VarKind};

/// Variable and row counts keyed by family label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CountReport {
    pub binary: BTreeMap<String, usize>,
    pub continuous: BTreeMap<String, usize>,
    pub rows: BTreeMap<String, usize>,
}

impl CountReport {
    pub fn binary_total(&self) -> usize {
        self.binary.values().sum()
    }

    pub fn continuous_total(&self) -> usize {
        self.continuous.values().sum()
    }

    pub fn row_total(&self) -> usize {
        self.rows.values().sum()
    }

    /// `(binary, continuous, rows)`.
    pub fn totals(&self) -> (usize, usize, usize) {
        (self.binary_total(), self.continuous_total(), self.row_total())
    }

    pub fn rows_of(&self, family: &str) -> usize {
        self.rows.get(family).copied().unwrap_or(0)
    }

    pub fn vars_of(&self, family: &str) -> usize {
        self.binary.get(family).copied().unwrap_or(0) + self.continuous.get(family).copied().unwrap_or(0)
    }
}

pub fn count_by_family(model: &ModelIR) -> CountReport {
    let mut report = CountReport::default();
    for v in model.vars() {
        let table = match v.kind {
            VarKind::Binary => &mut report.binary,
            VarKind::Continuous => &mut report.continuous,
        };
        *table.entry(v.family.to_string()).or_default() += 1;
    }
    for r in model.rows() {
        *report.rows.entry(r.family.to_string()).or_default() += 1;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinExpr, Sense};

    #[test]
    fn empty_model_counts_zero() {
        assert_eq!(count_by_family(&ModelIR::new()).totals(), (0, 0, 0));
    }

    #[test]
    fn counts_split_by_kind_and_family() {
        let mut m = ModelIR::new();
        let a = m.add_binary("x", "x[t=0]".into());
        let b = m.add_binary("x", "x[t=1]".into());
        let c = m.add_continuous("S", "S[t=0]".into(), 0.0, 4.0);
        m.add_row("1a", "1a[t=0]".into(), LinExpr::term(a, 1.0).with(b, 1.0), Sense::Eq, 1.0);
        m.add_row("1d", "1d[t=0]".into(), LinExpr::term(c, 1.0), Sense::Le, 2.0);
        m.add_row("1d", "1d[t=1]".into(), LinExpr::term(c, 1.0), Sense::Ge, 0.0);
        let r = count_by_family(&m);
        assert_eq!(r.totals(), (2, 1, 3));
        assert_eq!(r.rows_of("1d"), 2);
        assert_eq!(r.vars_of("x"), 2);
        assert_eq!(r.vars_of("missing"), 0);
    }
}
