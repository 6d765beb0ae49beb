//! Solver-agnostic MILP representation.
//!
//! Variables are registered densely in creation order and carry a unique
//! name of the form `<family>[<indices>]`. Constraints carry an equation
//! family and a unique label. The objective is always maximised.

mod count;
mod devices;

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub use count::{count_by_family, CountReport};
pub use devices::{and_product, piecewise_bigm, polygonal_disk, Literal, PiecewiseCurve, PiecewiseNames};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDef {
    pub family: &'static str,
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// Sparse affine expression. After [`LinExpr::normalized`] variable ids are
/// unique and ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn term(v: VarId, c: f64) -> Self {
        LinExpr {
            terms: vec![(v, c)],
            constant: 0.0,
        }
    }

    pub fn sum(vars: impl IntoIterator<Item = VarId>) -> Self {
        LinExpr {
            terms: vars.into_iter().map(|v| (v, 1.0)).collect(),
            constant: 0.0,
        }
    }

    pub fn with(mut self, v: VarId, c: f64) -> Self {
        self.terms.push((v, c));
        self
    }

    pub fn with_terms(mut self, terms: impl IntoIterator<Item = (VarId, f64)>) -> Self {
        self.terms.extend(terms);
        self
    }

    pub fn with_expr(mut self, other: &LinExpr, scale: f64) -> Self {
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self.constant += other.constant * scale;
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn push(&mut self, v: VarId, c: f64) {
        self.terms.push((v, c));
    }

    pub fn push_all(&mut self, vars: &[VarId], c: f64) {
        self.terms.extend(vars.iter().map(|&v| (v, c)));
    }

    pub fn scaled(&self, s: f64) -> LinExpr {
        LinExpr::new().with_expr(self, s)
    }

    /// Merge duplicate ids, drop zero coefficients, sort by id.
    pub fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
        self
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Range of the expression over the variable box.
    pub fn bounds(&self, model: &ModelIR) -> (f64, f64) {
        let mut lo = self.constant;
        let mut hi = self.constant;
        for &(v, c) in &self.terms {
            let d = model.var(v);
            if c >= 0.0 {
                lo += c * d.lower;
                hi += c * d.upper;
            } else {
                lo += c * d.upper;
                hi += c * d.lower;
            }
        }
        (lo, hi)
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::term(v, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Ge => lhs >= rhs - tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

/// `expr (sense) rhs`; `expr` is normalized and has zero constant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinConstraint {
    pub family: &'static str,
    pub label: String,
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinConstraint {
    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.expr.eval(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ModelIR {
    vars: Vec<VarDef>,
    by_name: HashMap<String, VarId>,
    rows: Vec<LinConstraint>,
    row_labels: HashMap<String, RowId>,
    objective: LinExpr,
}

/// Render `family[k1=v1,k2=v2]`, replacing whitespace in values.
pub fn indexed_name(family: &str, idx: &[(&str, &dyn std::fmt::Display)]) -> String {
    let mut s = String::with_capacity(family.len() + 8 * idx.len());
    s.push_str(family);
    if !idx.is_empty() {
        s.push('[');
        for (n, (k, v)) in idx.iter().enumerate() {
            if n > 0 {
                s.push(',');
            }
            let _ = write!(s, "{k}=");
            let start = s.len();
            let _ = write!(s, "{v}");
            let cleaned: String = s[start..]
                .chars()
                .map(|c| if c.is_whitespace() { '_' } else { c })
                .collect();
            s.truncate(start);
            s.push_str(&cleaned);
        }
        s.push(']');
    }
    s
}

impl ModelIR {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(
        &mut self,
        family: &'static str,
        name: String,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> VarId {
        assert!(lower <= upper, "variable `{name}` has lower {lower} > upper {upper}");
        if kind == VarKind::Binary {
            assert!(lower >= 0.0 && upper <= 1.0, "binary `{name}` must lie in [0, 1]");
        }
        let id = VarId(self.vars.len());
        let prev = self.by_name.insert(name.clone(), id);
        assert!(prev.is_none(), "duplicate variable name `{name}`");
        self.vars.push(VarDef {
            family,
            name,
            kind,
            lower,
            upper,
        });
        id
    }

    /// Replace the bounds of `v`.
    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) {
        assert!(lower <= upper, "variable `{}` has lower {lower} > upper {upper}", self.vars[v.0].name);
        self.vars[v.0].lower = lower;
        self.vars[v.0].upper = upper;
    }

    pub fn add_binary(&mut self, family: &'static str, name: String) -> VarId {
        self.add_var(family, name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_continuous(&mut self, family: &'static str, name: String, lower: f64, upper: f64) -> VarId {
        self.add_var(family, name, VarKind::Continuous, lower, upper)
    }

    /// Add `expr (sense) rhs`; the expression's constant moves to the right.
    pub fn add_row(
        &mut self,
        family: &'static str,
        label: String,
        expr: LinExpr,
        sense: Sense,
        rhs: f64,
    ) -> RowId {
        let expr = expr.normalized();
        if let Some(&(v, _)) = expr.terms.last() {
            assert!(v.0 < self.vars.len(), "row `{label}` references unknown variable");
        }
        let rhs = rhs - expr.constant;
        let id = RowId(self.rows.len());
        let prev = self.row_labels.insert(label.clone(), id);
        assert!(prev.is_none(), "duplicate constraint label `{label}`");
        self.rows.push(LinConstraint {
            family,
            label,
            expr: LinExpr {
                terms: expr.terms,
                constant: 0.0,
            },
            sense,
            rhs,
        });
        id
    }

    pub fn set_objective(&mut self, objective: LinExpr) {
        let objective = objective.normalized();
        if let Some(&(v, _)) = objective.terms.last() {
            assert!(v.0 < self.vars.len(), "objective references unknown variable");
        }
        self.objective = objective;
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn vars(&self) -> &[VarDef] {
        &self.vars
    }

    pub fn var(&self, v: VarId) -> &VarDef {
        &self.vars[v.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn rows(&self) -> &[LinConstraint] {
        &self.rows
    }

    pub fn row(&self, r: RowId) -> &LinConstraint {
        &self.rows[r.0]
    }

    pub fn row_by_label(&self, label: &str) -> Option<RowId> {
        self.row_labels.get(label).copied()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn require_binary(&self, v: VarId) -> Result<()> {
        match self.vars.get(v.0) {
            Some(d) if d.kind == VarKind::Binary => Ok(()),
            Some(d) => Err(Error::Model(format!("`{}` is not binary", d.name))),
            None => Err(Error::Model(format!("unknown variable id {}", v.0))),
        }
    }

    /// Largest row or bound violation of `values`, with the offending name.
    pub fn max_violation(&self, values: &[f64]) -> (f64, Option<String>) {
        let mut worst = (0.0, None);
        for (d, &x) in self.vars.iter().zip(values) {
            let v = (d.lower - x).max(x - d.upper).max(0.0);
            if v > worst.0 {
                worst = (v, Some(d.name.clone()));
            }
        }
        for r in &self.rows {
            let v = r.violation(values);
            if v > worst.0 {
                worst = (v, Some(r.label.clone()));
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_merges_and_drops() {
        let e = LinExpr::new()
            .with(VarId(2), 1.0)
            .with(VarId(0), 2.0)
            .with(VarId(2), -1.0)
            .with(VarId(0), 0.5)
            .normalized();
        assert_eq!(e.terms, vec![(VarId(0), 2.5)]);
    }

    #[test]
    fn row_constant_moves_to_rhs() {
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", "x".into(), 0.0, 1.0);
        let r = m.add_row("t", "t[0]".into(), LinExpr::term(x, 1.0).plus(3.0), Sense::Le, 5.0);
        assert_eq!(m.row(r).rhs, 2.0);
        assert_eq!(m.row(r).expr.constant, 0.0);
    }

    #[test]
    #[should_panic(expected = "duplicate variable name")]
    fn duplicate_names_rejected() {
        let mut m = ModelIR::new();
        m.add_binary("x", "x[1]".into());
        m.add_binary("x", "x[1]".into());
    }

    #[test]
    fn names_escape_whitespace() {
        let n = indexed_name("x", &[("i", &"depot A"), ("t", &3)]);
        assert_eq!(n, "x[i=depot_A,t=3]");
    }

    #[test]
    fn expression_bounds_follow_signs() {
        let mut m = ModelIR::new();
        let a = m.add_continuous("a", "a".into(), -1.0, 2.0);
        let b = m.add_continuous("b", "b".into(), 0.0, 3.0);
        let e = LinExpr::term(a, 2.0).with(b, -1.0).plus(1.0);
        assert_eq!(e.bounds(&m), (-4.0, 5.0));
    }
}
