//! Linearization devices shared by the fleet and grid emitters.

use std::f64::consts::PI;

use super::{LinExpr, ModelIR, RowId, Sense, VarId};
use crate::error::{Error, Result};

/// A binary variable or its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Literal {
    pub var: VarId,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: VarId) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: VarId) -> Self {
        Literal {
            var,
            positive: false,
        }
    }
}

/// New binary `z = l_1 ∧ … ∧ l_n`: one row `z ≤ l` per literal plus
/// `z ≥ Σ l − (n − 1)`.
///
/// `name` is the variable name of `z`; rows are labelled
/// `<row_family>-le<n>…` and `<row_family>-ge…` with the same indices.
pub fn and_product(
    model: &mut ModelIR,
    literals: &[Literal],
    var_family: &'static str,
    row_family: &'static str,
    name: String,
) -> Result<VarId> {
    if literals.len() < 2 {
        return Err(Error::Model(format!(
            "and_product `{name}` needs at least two literals"
        )));
    }
    for l in literals {
        model.require_binary(l.var)?;
    }
    let z = model.add_binary(var_family, name.clone());
    let idx = index_suffix(&name);
    let mut negatives = 0.0;
    let mut ge = LinExpr::term(z, 1.0);
    for (n, l) in literals.iter().enumerate() {
        let label = format!("{row_family}-le{}{idx}", n + 1);
        if l.positive {
            model.add_row(row_family, label, LinExpr::term(z, 1.0).with(l.var, -1.0), Sense::Le, 0.0);
            ge.push(l.var, -1.0);
        } else {
            model.add_row(row_family, label, LinExpr::term(z, 1.0).with(l.var, 1.0), Sense::Le, 1.0);
            ge.push(l.var, 1.0);
            negatives += 1.0;
        }
    }
    let n = literals.len() as f64;
    model.add_row(row_family, format!("{row_family}-ge{idx}"), ge, Sense::Ge, negatives - (n - 1.0));
    Ok(z)
}

/// Inscribed regular `segments`-gon approximation of `x² + y² ≤ radius²`.
///
/// Facet `m` has outward normal at angle `(2m + 1)π/k`; vertices sit at
/// multiples of `2π/k`, on the circle. `radius` may be a constant or an
/// expression with non-negative coefficients (a switched capacity).
pub fn polygonal_disk(
    model: &mut ModelIR,
    x: &LinExpr,
    y: &LinExpr,
    radius: &LinExpr,
    segments: usize,
    row_family: &'static str,
    index: &str,
) -> Result<Vec<RowId>> {
    if segments < 4 || segments % 2 != 0 {
        return Err(Error::Model(format!(
            "disk `{row_family}{index}` needs an even segment count >= 4, got {segments}"
        )));
    }
    let nonneg = radius.constant >= 0.0 && radius.terms.iter().all(|t| t.1 >= 0.0);
    let nonzero = radius.constant > 0.0 || radius.terms.iter().any(|t| t.1 > 0.0);
    if !(nonneg && nonzero) {
        return Err(Error::Model(format!(
            "disk `{row_family}{index}` radius must be positive"
        )));
    }
    let k = segments as f64;
    let apothem = (PI / k).cos();
    let mut rows = Vec::with_capacity(segments);
    for m in 0..segments {
        let phi = (2 * m + 1) as f64 * PI / k;
        let expr = LinExpr::new()
            .with_expr(x, phi.cos())
            .with_expr(y, phi.sin())
            .with_expr(radius, -apothem);
        rows.push(model.add_row(
            row_family,
            format!("{row_family}-s{m}{index}"),
            expr,
            Sense::Le,
            0.0,
        ));
    }
    Ok(rows)
}

/// Piecewise-affine curve `value = slope_l · driver + intercept_l` on
/// `[breakpoints[l-1], breakpoints[l]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCurve {
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
}

impl PiecewiseCurve {
    pub fn segments(&self) -> usize {
        self.slopes.len()
    }

    /// Smallest big-M for which every inactive segment row is slack, given
    /// the attainable ranges of value and driver.
    pub fn required_big_m(&self, value_range: (f64, f64), driver_range: (f64, f64)) -> f64 {
        let mut need: f64 = 0.0;
        for l in 0..self.segments() {
            let (y, z) = (self.slopes[l], self.intercepts[l]);
            let f_lo = y * driver_range.0 + z;
            let f_hi = y * driver_range.1 + z;
            let (f_min, f_max) = (f_lo.min(f_hi), f_lo.max(f_hi));
            need = need
                .max(value_range.1 - f_min)
                .max(f_max - value_range.0)
                .max(self.breakpoints[l] - driver_range.0)
                .max(driver_range.1 - self.breakpoints[l + 1]);
        }
        need
    }
}

/// Segment selection by big-M: four rows per segment forcing
/// `value = y_l·driver + z_l` and `driver ∈ [p_{l-1}, p_l]` when `τ_l = 1`,
/// and `Σ τ_l = 1`.
///
/// Returns the selectors `τ_1..τ_L`.
#[allow(clippy::too_many_arguments)]
pub fn piecewise_bigm(
    model: &mut ModelIR,
    value: &LinExpr,
    value_range: (f64, f64),
    driver: &LinExpr,
    driver_range: (f64, f64),
    curve: &PiecewiseCurve,
    big_m: f64,
    names: PiecewiseNames<'_>,
) -> Result<Vec<VarId>> {
    let l_count = curve.segments();
    if l_count == 0
        || curve.breakpoints.len() != l_count + 1
        || curve.intercepts.len() != l_count
    {
        return Err(Error::Model(format!(
            "piecewise `{}` needs L >= 1 segments and L + 1 breakpoints",
            names.index
        )));
    }
    if curve.breakpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Model(format!(
            "piecewise `{}` breakpoints must be strictly increasing",
            names.index
        )));
    }
    let need = curve.required_big_m(value_range, driver_range);
    if big_m < need - 1e-9 {
        return Err(Error::Model(format!(
            "piecewise `{}` big-M {big_m} is below the attainable residual range {need}",
            names.index
        )));
    }
    let idx = names.index;
    let fam = names.row_family;
    let mut taus = Vec::with_capacity(l_count);
    for l in 0..l_count {
        let seg = l + 1;
        let tau = model.add_binary(names.var_family, format!("{}[{},l={seg}]", names.var_family, &idx[1..idx.len() - 1]));
        let (y, z) = (curve.slopes[l], curve.intercepts[l]);
        let residual = LinExpr::new().with_expr(value, 1.0).with_expr(driver, -y).plus(-z);
        let sl = format!("l={seg}");
        let lab = |part: &str| format!("{fam}-{part}[{},{sl}]", &idx[1..idx.len() - 1]);
        // −M(1−τ) ≤ residual ≤ M(1−τ)
        model.add_row(fam, lab("lo"), residual.clone().with(tau, -big_m), Sense::Ge, -big_m);
        model.add_row(fam, lab("hi"), residual.with(tau, big_m), Sense::Le, big_m);
        // p_{l−1} − driver ≤ M(1−τ);  driver − p_l ≤ M(1−τ)
        model.add_row(
            fam,
            lab("pmin"),
            LinExpr::new().with_expr(driver, -1.0).with(tau, big_m),
            Sense::Le,
            big_m - curve.breakpoints[l],
        );
        model.add_row(
            fam,
            lab("pmax"),
            LinExpr::new().with_expr(driver, 1.0).with(tau, big_m),
            Sense::Le,
            big_m + curve.breakpoints[l + 1],
        );
        taus.push(tau);
    }
    model.add_row(
        names.select_family,
        format!("{}{idx}", names.select_family),
        LinExpr::sum(taus.iter().copied()),
        Sense::Eq,
        1.0,
    );
    Ok(taus)
}

/// Naming for [`piecewise_bigm`]. `index` is a bracketed index list such as
/// `[meg=G1,t=3]`.
#[derive(Debug, Clone, Copy)]
pub struct PiecewiseNames<'a> {
    pub var_family: &'static str,
    pub row_family: &'static str,
    pub select_family: &'static str,
    pub index: &'a str,
}

fn index_suffix(name: &str) -> &str {
    name.find('[').map_or("", |p| &name[p..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{ModelIR, VarKind};

    fn fixed_binary(m: &mut ModelIR, name: &str, value: f64) -> VarId {
        m.add_var("lit", name.into(), VarKind::Binary, value, value)
    }

    /// Feasible values of `z` given fixed literal values.
    fn feasible_z(m: &ModelIR, z: VarId, base: &[f64]) -> Vec<f64> {
        [0.0, 1.0]
            .into_iter()
            .filter(|&zv| {
                let mut vals = base.to_vec();
                vals[z.0] = zv;
                m.rows().iter().all(|r| r.violation(&vals) <= 1e-12)
            })
            .collect()
    }

    #[test]
    fn and_of_three_ones_is_one() {
        let mut m = ModelIR::new();
        let lits: Vec<_> = (0..3).map(|i| fixed_binary(&mut m, &format!("l{i}"), 1.0)).collect();
        let z = and_product(&mut m, &lits.iter().map(|&v| Literal::pos(v)).collect::<Vec<_>>(), "z", "g", "z[0]".into()).unwrap();
        assert_eq!(feasible_z(&m, z, &[1.0, 1.0, 1.0, 0.0]), vec![1.0]);
    }

    #[test]
    fn and_with_a_zero_is_zero() {
        let mut m = ModelIR::new();
        let a = fixed_binary(&mut m, "a", 0.0);
        let b = fixed_binary(&mut m, "b", 1.0);
        let c = fixed_binary(&mut m, "c", 1.0);
        let z = and_product(&mut m, &[Literal::pos(a), Literal::pos(b), Literal::pos(c)], "z", "g", "z[0]".into()).unwrap();
        assert_eq!(feasible_z(&m, z, &[0.0, 1.0, 1.0, 0.0]), vec![0.0]);
    }

    #[test]
    fn arrival_indicator_with_negated_literal() {
        // (x_prev, x_now, carried) = (0, 1, 1) -> arrival
        let mut m = ModelIR::new();
        let xp = fixed_binary(&mut m, "xp", 0.0);
        let xn = fixed_binary(&mut m, "xn", 1.0);
        let g = fixed_binary(&mut m, "g", 1.0);
        let z = and_product(&mut m, &[Literal::neg(xp), Literal::pos(xn), Literal::pos(g)], "alpha", "4a", "alpha[0]".into()).unwrap();
        assert_eq!(feasible_z(&m, z, &[0.0, 1.0, 1.0, 0.0]), vec![1.0]);
        assert_eq!(m.num_rows(), 4);
    }

    #[test]
    fn and_rejects_continuous_inputs() {
        let mut m = ModelIR::new();
        let a = m.add_continuous("c", "c".into(), 0.0, 1.0);
        let b = m.add_binary("b", "b".into());
        assert!(and_product(&mut m, &[Literal::pos(a), Literal::pos(b)], "z", "g", "z".into()).is_err());
        assert!(and_product(&mut m, &[Literal::pos(b)], "z", "g", "z".into()).is_err());
    }

    fn disk_model(k: usize, r: f64) -> (ModelIR, VarId, VarId) {
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", "x".into(), -10.0, 10.0);
        let y = m.add_continuous("y", "y".into(), -10.0, 10.0);
        polygonal_disk(&mut m, &x.into(), &y.into(), &LinExpr::constant(r), k, "d", "[0]").unwrap();
        (m, x, y)
    }

    fn disk_feasible(m: &ModelIR, x: f64, y: f64, tol: f64) -> bool {
        m.rows().iter().all(|r| r.violation(&[x, y]) <= tol)
    }

    #[test]
    fn square_disk_matches_l1_ball() {
        let (m, _, _) = disk_model(4, 1.0);
        assert!(disk_feasible(&m, 0.9, 0.0, 0.0));
        assert!(!disk_feasible(&m, 0.6, 0.6, 0.0));
        assert!(disk_feasible(&m, 0.5, 0.5, 1e-12));
    }

    #[test]
    fn octagon_contains_axis_vertex() {
        let (m, _, _) = disk_model(8, 0.527);
        assert!(disk_feasible(&m, 0.527, 0.0, 1e-9));
        assert!(disk_feasible(&m, 0.0, 0.0, 0.0));
        assert_eq!(m.num_rows(), 8);
    }

    #[test]
    fn switched_radius_collapses_to_origin() {
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", "x".into(), -1.0, 1.0);
        let y = m.add_continuous("y", "y".into(), -1.0, 1.0);
        let kappa = m.add_binary("k", "k".into());
        polygonal_disk(&mut m, &x.into(), &y.into(), &LinExpr::term(kappa, 0.5), 8, "d", "[0]").unwrap();
        let ok = |vals: [f64; 3]| m.rows().iter().all(|r| r.violation(&vals) <= 1e-12);
        assert!(ok([0.0, 0.0, 0.0]));
        assert!(!ok([0.01, 0.0, 0.0]));
        assert!(ok([0.5, 0.0, 1.0]));
    }

    #[test]
    fn disk_rejects_bad_arguments() {
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", "x".into(), -1.0, 1.0);
        assert!(polygonal_disk(&mut m, &x.into(), &x.into(), &LinExpr::constant(1.0), 6 - 1, "d", "").is_err());
        assert!(polygonal_disk(&mut m, &x.into(), &x.into(), &LinExpr::constant(0.0), 8, "d", "").is_err());
    }

    fn meg_curve() -> PiecewiseCurve {
        // L/h at 0, 200, 400, 600, 800 kW
        let p = [0.0, 200.0, 400.0, 600.0, 800.0];
        let r = [0.0, 64.4, 109.8, 155.2, 200.6];
        let slopes: Vec<f64> = (0..4).map(|l| (r[l + 1] - r[l]) / (p[l + 1] - p[l])).collect();
        let intercepts: Vec<f64> = (0..4).map(|l| r[l] - slopes[l] * p[l]).collect();
        PiecewiseCurve {
            breakpoints: p.to_vec(),
            slopes,
            intercepts,
        }
    }

    /// Values of `value` reachable at a fixed driver, scanning selector choices.
    fn curve_value(driver: f64) -> Vec<f64> {
        let curve = meg_curve();
        let mut m = ModelIR::new();
        let b = m.add_continuous("b", "b".into(), 0.0, 200.6);
        let p = m.add_continuous("p", "p".into(), 0.0, 800.0);
        let names = PiecewiseNames {
            var_family: "tau",
            row_family: "7d",
            select_family: "7e",
            index: "[m=G,t=1]",
        };
        let m_big = curve.required_big_m((0.0, 200.6), (0.0, 800.0));
        let taus = piecewise_bigm(&mut m, &b.into(), (0.0, 200.6), &p.into(), (0.0, 800.0), &curve, m_big, names).unwrap();
        let mut out = Vec::new();
        for sel in 0..taus.len() {
            let l = sel;
            let v = curve.slopes[l] * driver + curve.intercepts[l];
            let mut vals = vec![v, driver];
            vals.extend((0..taus.len()).map(|i| if i == sel { 1.0 } else { 0.0 }));
            if m.rows().iter().all(|r| r.violation(&vals) <= 1e-9) {
                out.push(v);
            }
        }
        out
    }

    #[test]
    fn half_load_burns_curve_rate() {
        for v in curve_value(400.0) {
            approx::assert_abs_diff_eq!(v, 109.8, epsilon = 1e-9);
        }
        assert!(!curve_value(400.0).is_empty());
    }

    #[test]
    fn full_load_burns_curve_rate() {
        let v = curve_value(800.0);
        assert_eq!(v.len(), 1);
        approx::assert_abs_diff_eq!(v[0], 200.6, epsilon = 1e-9);
    }

    #[test]
    fn interpolated_rate_between_quarter_and_half() {
        let v = curve_value(300.0);
        assert_eq!(v.len(), 1);
        approx::assert_abs_diff_eq!(v[0], 87.1, epsilon = 1e-9);
    }

    #[test]
    fn undersized_big_m_rejected() {
        let curve = meg_curve();
        let mut m = ModelIR::new();
        let b = m.add_continuous("b", "b".into(), 0.0, 200.6);
        let p = m.add_continuous("p", "p".into(), 0.0, 800.0);
        let names = PiecewiseNames {
            var_family: "tau",
            row_family: "7d",
            select_family: "7e",
            index: "[t=1]",
        };
        let err = piecewise_bigm(&mut m, &b.into(), (0.0, 200.6), &p.into(), (0.0, 800.0), &curve, 10.0, names);
        assert!(err.is_err());
    }
}
