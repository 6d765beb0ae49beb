//! Free-format MPS exchange.
//!
//! Rows and columns keep their model names (`family[key=value,...]`). The
//! objective row is `obj` with `OBJSENSE MAX`; integer columns sit between
//! `MARKER` lines and always carry explicit bounds.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::milp::{ModelIR, Sense, VarKind};

pub const OBJECTIVE_ROW: &str = "obj";

/// Shortest representation that parses back to the same `f64`.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == v.trunc() && a < 1e15 {
        format!("{}", v as i64)
    } else if (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Render `model` as free MPS. `negate_objective` writes a minimisation of
/// the negated objective for readers that ignore `OBJSENSE`.
pub fn write_mps(model: &ModelIR, negate_objective: bool) -> String {
    let mut out = String::new();
    let rows = model.rows();
    out.push_str("NAME smess\n");
    if !negate_objective {
        out.push_str("OBJSENSE\n    MAX\n");
    }
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJECTIVE_ROW}");
    for r in rows {
        let s = match r.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {s}  {}", r.label);
    }

    let obj_sign = if negate_objective { -1.0 } else { 1.0 };
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (v, c) in &model.objective().terms {
        columns[v.0].push((usize::MAX, obj_sign * c));
    }
    for (ri, r) in rows.iter().enumerate() {
        for &(v, c) in &r.expr.terms {
            columns[v.0].push((ri, c));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    for (vi, def) in model.vars().iter().enumerate() {
        let is_int = def.kind == VarKind::Binary;
        if is_int != in_int {
            let tag = if is_int { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    M{marker}  'MARKER'  '{tag}'");
            marker += 1;
            in_int = is_int;
        }
        if columns[vi].is_empty() {
            let _ = writeln!(out, "    {}  {OBJECTIVE_ROW}  0", def.name);
        }
        for &(ri, c) in &columns[vi] {
            let row = if ri == usize::MAX { OBJECTIVE_ROW } else { rows[ri].label.as_str() };
            let _ = writeln!(out, "    {}  {row}  {}", def.name, num(c));
        }
    }
    if in_int {
        let _ = writeln!(out, "    M{marker}  'MARKER'  'INTEND'");
    }

    out.push_str("RHS\n");
    let offset = model.objective().constant;
    if offset != 0.0 {
        let _ = writeln!(out, "    RHS  {OBJECTIVE_ROW}  {}", num(-obj_sign * offset));
    }
    for r in rows {
        if r.rhs != 0.0 {
            let _ = writeln!(out, "    RHS  {}  {}", r.label, num(r.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for def in model.vars() {
        let (lo, hi, n) = (def.lower, def.upper, &def.name);
        let is_int = def.kind == VarKind::Binary;
        if lo == hi {
            let _ = writeln!(out, " FX BND  {n}  {}", num(lo));
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND  {n}");
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND  {n}");
                let _ = writeln!(out, " UP BND  {n}  {}", num(hi));
            }
            (true, hi_finite) => {
                if lo != 0.0 {
                    let _ = writeln!(out, " LO BND  {n}  {}", num(lo));
                }
                if hi_finite {
                    let _ = writeln!(out, " UP BND  {n}  {}", num(hi));
                } else if is_int {
                    let _ = writeln!(out, " PL BND  {n}");
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// A parsed MPS document, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MpsModel {
    pub maximize: bool,
    /// `(name, sense, rhs)`; the objective row is not included.
    pub rows: Vec<(String, Sense, f64)>,
    /// `(name, integer, lower, upper)`.
    pub columns: Vec<(String, bool, f64, f64)>,
    /// `(row, column, value)`, with `row == None` for the objective.
    pub entries: Vec<(Option<usize>, usize, f64)>,
    pub objective_offset: f64,
}

impl MpsModel {
    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.0 == name)
    }

    /// Coefficients of row `r` as `(column name, value)`, sorted by column.
    pub fn row_terms(&self, r: usize) -> Vec<(&str, f64)> {
        let mut t: Vec<(usize, f64)> = self
            .entries
            .iter()
            .filter(|e| e.0 == Some(r))
            .map(|e| (e.1, e.2))
            .collect();
        t.sort_by_key(|e| e.0);
        t.into_iter().map(|(c, v)| (self.columns[c].0.as_str(), v)).collect()
    }
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::ModelFile {
        line,
        message: message.into(),
    }
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| bad(line, format!("bad number `{s}`")))
}

/// Parse a free-format MPS document.
pub fn read_mps(text: &str) -> Result<MpsModel> {
    #[derive(PartialEq)]
    enum Section {
        Head,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Ranges,
        Bounds,
        End,
    }
    let mut m = MpsModel::default();
    let mut section = Section::Head;
    let mut obj_row: Option<String> = None;
    let mut row_ix: HashMap<String, usize> = HashMap::new();
    let mut col_ix: HashMap<String, usize> = HashMap::new();
    let mut integer = false;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tok: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') {
            section = match tok[0] {
                "NAME" => Section::Head,
                "OBJSENSE" => {
                    if tok.len() > 1 {
                        m.maximize = tok[1] == "MAX" || tok[1] == "MAXIMIZE";
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(bad(line, format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::Head | Section::End => return Err(bad(line, "data outside a section")),
            Section::ObjSense => m.maximize = tok[0] == "MAX" || tok[0] == "MAXIMIZE",
            Section::Rows => {
                if tok.len() != 2 {
                    return Err(bad(line, "row line needs a type and a name"));
                }
                let sense = match tok[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(tok[1].to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    t => return Err(bad(line, format!("unknown row type `{t}`"))),
                };
                if row_ix.insert(tok[1].to_string(), m.rows.len()).is_some() {
                    return Err(bad(line, format!("duplicate row `{}`", tok[1])));
                }
                m.rows.push((tok[1].to_string(), sense, 0.0));
            }
            Section::Columns => {
                if tok.len() == 3 && tok[1] == "'MARKER'" {
                    integer = match tok[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        t => return Err(bad(line, format!("unknown marker `{t}`"))),
                    };
                    continue;
                }
                if tok.len() != 3 && tok.len() != 5 {
                    return Err(bad(line, "column line needs name/row/value pairs"));
                }
                let c = match col_ix.get(tok[0]) {
                    Some(&c) => c,
                    None => {
                        let (lo, hi) = if integer { (0.0, 1.0) } else { (0.0, f64::INFINITY) };
                        col_ix.insert(tok[0].to_string(), m.columns.len());
                        m.columns.push((tok[0].to_string(), integer, lo, hi));
                        m.columns.len() - 1
                    }
                };
                for pair in tok[1..].chunks(2) {
                    let v = parse_num(pair[1], line)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        if v != 0.0 {
                            m.entries.push((None, c, v));
                        }
                    } else {
                        let r = *row_ix
                            .get(pair[0])
                            .ok_or_else(|| bad(line, format!("unknown row `{}`", pair[0])))?;
                        m.entries.push((Some(r), c, v));
                    }
                }
            }
            Section::Rhs => {
                if tok.len() != 3 && tok.len() != 5 {
                    return Err(bad(line, "rhs line needs name/row/value pairs"));
                }
                for pair in tok[1..].chunks(2) {
                    let v = parse_num(pair[1], line)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        m.objective_offset = -v;
                    } else {
                        let r = *row_ix
                            .get(pair[0])
                            .ok_or_else(|| bad(line, format!("unknown row `{}`", pair[0])))?;
                        m.rows[r].2 = v;
                    }
                }
            }
            Section::Ranges => return Err(bad(line, "RANGES are not supported")),
            Section::Bounds => {
                if tok.len() < 3 {
                    return Err(bad(line, "bound line needs a type, a set and a column"));
                }
                let c = *col_ix
                    .get(tok[2])
                    .ok_or_else(|| bad(line, format!("unknown column `{}`", tok[2])))?;
                let value = || -> Result<f64> {
                    let s = tok.get(3).ok_or_else(|| bad(line, "bound needs a value"))?;
                    parse_num(s, line)
                };
                let col = &mut m.columns[c];
                match tok[0] {
                    "UP" => col.3 = value()?,
                    "LO" => col.2 = value()?,
                    "FX" => {
                        let v = value()?;
                        col.2 = v;
                        col.3 = v;
                    }
                    "FR" => {
                        col.2 = f64::NEG_INFINITY;
                        col.3 = f64::INFINITY;
                    }
                    "MI" => col.2 = f64::NEG_INFINITY,
                    "PL" => col.3 = f64::INFINITY,
                    "BV" => {
                        col.1 = true;
                        col.2 = 0.0;
                        col.3 = 1.0;
                    }
                    t => return Err(bad(line, format!("unknown bound type `{t}`"))),
                }
            }
        }
    }
    if section != Section::End {
        return Err(bad(text.lines().count(), "missing ENDATA"));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::LinExpr;

    fn toy() -> ModelIR {
        let mut m = ModelIR::new();
        let x = m.add_binary("x", "x[i=1,t=0]".into());
        let y = m.add_continuous("P", "P[b=1~2,t=1]".into(), -2.5, 2.5);
        let z = m.add_continuous("Pin", "Pin[i=1,t=1]".into(), f64::NEG_INFINITY, f64::INFINITY);
        let w = m.add_continuous("S", "S[j=c,t=0]".into(), 0.0, 0.0);
        m.add_row("1a", "1a[t=0]".into(), LinExpr::term(x, 1.0).with(y, 0.1), Sense::Le, 1.0);
        m.add_row("9c", "9c[i=1,t=1]".into(), LinExpr::term(z, 1.0).with(y, -1.0), Sense::Eq, 0.0);
        m.add_row("1c", "1c[t=1]".into(), LinExpr::term(w, 3.0).with(x, -1e-7), Sense::Ge, -0.75);
        m.set_objective(LinExpr::term(x, 2.0).with(z, -0.5));
        m
    }

    #[test]
    fn empty_model_is_minimal_document() {
        let text = write_mps(&ModelIR::new(), false);
        let back = read_mps(&text).unwrap();
        assert!(back.rows.is_empty() && back.columns.is_empty());
        assert!(text.ends_with("ENDATA\n"));
    }

    #[test]
    fn round_trip_reconstructs_rows_and_bounds() {
        let m = toy();
        let back = read_mps(&write_mps(&m, false)).unwrap();
        assert!(back.maximize);
        assert_eq!(back.rows.len(), m.num_rows());
        for (r, row) in m.rows().iter().enumerate() {
            assert_eq!(back.rows[r], (row.label.clone(), row.sense, row.rhs));
            let want: Vec<(&str, f64)> = row.expr.terms.iter().map(|&(v, c)| (m.var(v).name.as_str(), c)).collect();
            assert_eq!(back.row_terms(r), want);
        }
        for (c, def) in m.vars().iter().enumerate() {
            let col = &back.columns[c];
            assert_eq!(col.0, def.name);
            assert_eq!(col.1, def.kind == VarKind::Binary);
            assert_eq!((col.2, col.3), (def.lower, def.upper));
        }
    }

    #[test]
    fn negated_objective_drops_objsense() {
        let text = write_mps(&toy(), true);
        assert!(!text.contains("OBJSENSE"));
        let back = read_mps(&text).unwrap();
        let obj: Vec<f64> = back.entries.iter().filter(|e| e.0.is_none()).map(|e| e.2).collect();
        assert_eq!(obj, vec![-2.0, 0.5]);
    }

    #[test]
    fn output_is_deterministic() {
        assert_eq!(write_mps(&toy(), false), write_mps(&toy(), false));
    }

    #[test]
    fn numbers_round_trip_exactly() {
        for v in [0.1, 1e-7, -2.5e20, 1.0 / 3.0, 123456.0, -0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
