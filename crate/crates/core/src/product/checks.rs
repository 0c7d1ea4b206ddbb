use nalgebra::{DMatrix, SymmetricEigen};

use super::{adjoint_structure, ProductStructureField};
use crate::check::{max_abs, max_over_points, scaled, CheckResult, PointMax, Status};
use crate::geometry::checks::statistical_residuals;
use crate::error::{GeomError, Result};
use crate::geometry::{
    conjugate_connection, curvature_at, fit_kurose_constant, gidx, ConnectionField,
    CurvatureAtPoint, MetricField,
};

/// A structure counts as different from `+Id` and `-Id` at a point when both
/// `max|P - Id|` and `max|P + Id|` exceed this.
pub const WITNESS_THRESHOLD: f64 = 1e-6;

fn identity_gap(m: &DMatrix<f64>, sign: f64) -> f64 {
    let n = m.nrows();
    max_abs((0..n * n).map(|t| {
        let (i, j) = (t / n, t % n);
        m[(i, j)] - if i == j { sign } else { 0.0 }
    }))
}

fn square_residual(m: &DMatrix<f64>) -> f64 {
    let sq = m * m;
    scaled(identity_gap(&sq, 1.0), max_abs(m.iter().copied()))
}

/// `[square residual, witness]` maxima.
fn almost_product_residuals(p: &ProductStructureField, pts: &[Vec<f64>]) -> Result<Vec<PointMax>> {
    max_over_points(pts, 2, |x| {
        let m = p.value_at(x)?;
        let witness = identity_gap(&m, 1.0).min(identity_gap(&m, -1.0));
        Ok(vec![square_residual(&m), witness])
    })
}

const NO_WITNESS: &str = "structure equals +Id or -Id at every sampled point";

/// `P^2 = Id` everywhere and `P != +-Id` somewhere.
pub fn check_almost_product(p: &ProductStructureField, pts: &[Vec<f64>], tol: f64) -> Result<CheckResult> {
    let res = almost_product_residuals(p, pts)?;
    let r = CheckResult::from_residual("almost_product", pts, res[0].clone(), tol);
    if res[1].value > WITNESS_THRESHOLD {
        Ok(r)
    } else {
        Ok(r.fail_with(NO_WITNESS))
    }
}

/// `(P*)^2 = Id`, `g(P E, P* F) = -g(E, F)` and `(P*)* = P`.
pub fn check_pairing_identities(
    g: &MetricField,
    p: &ProductStructureField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let ps = adjoint_structure(g, p)?;
    let pss = adjoint_structure(g, &ps)?;
    let res = max_over_points(pts, 3, |x| {
        let gm = g.value_at(x)?;
        let a = p.value_at(x)?;
        let b = ps.value_at(x)?;
        let c = pss.value_at(x)?;
        let mag = max_abs(gm.iter().chain(a.iter()).chain(b.iter()).copied());
        let pairing = a.transpose() * &gm * &b + &gm;
        Ok(vec![
            square_residual(&b),
            scaled(max_abs(pairing.iter().copied()), mag),
            scaled(max_abs((c - &a).iter().copied()), mag),
        ])
    })?;
    Ok(CheckResult::from_residuals(
        "pairing_identities",
        pts,
        &[
            ("adjoint_square", res[0].clone()),
            ("pairing", res[1].clone()),
            ("adjoint_involution", res[2].clone()),
        ],
        tol,
    ))
}

/// `(nabla_i P)^k_j` at index `gidx(n, k, i, j)`.
pub fn covariant_derivative_p_at(conn: &ConnectionField, p: &ProductStructureField, x: &[f64]) -> Result<Vec<f64>> {
    let n = conn.dim();
    if p.dim() != n {
        return Err(GeomError::Arity {
            expected: n,
            got: p.dim(),
        });
    }
    let gamma = conn.values_at(x)?;
    let pm = p.jet_at(x)?;
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = pm.get(k, j).di(i);
                for m in 0..n {
                    v += gamma[gidx(n, k, i, m)] * pm.get(m, j).v - gamma[gidx(n, m, i, j)] * pm.get(k, m).v;
                }
                out[gidx(n, k, i, j)] = v;
            }
        }
    }
    Ok(out)
}

fn parallelism_residual(conn: &ConnectionField, p: &ProductStructureField, x: &[f64]) -> Result<f64> {
    let d = covariant_derivative_p_at(conn, p, x)?;
    let mag = max_abs(conn.values_at(x)?).max(p.jet_at(x)?.max_abs_value());
    Ok(scaled(max_abs(d), mag))
}

/// Statistical structure, almost product structure and `nabla P = 0`.
pub fn check_para_kahler_like(
    g: &MetricField,
    conn: &ConnectionField,
    p: &ProductStructureField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let stat = statistical_residuals(g, conn, pts)?;
    let prod = almost_product_residuals(p, pts)?;
    let par = max_over_points(pts, 1, |x| Ok(vec![parallelism_residual(conn, p, x)?]))?;
    let r = CheckResult::from_residuals(
        "para_kahler_like",
        pts,
        &[
            ("torsion", stat[0].clone()),
            ("codazzi", stat[1].clone()),
            ("almost_product", prod[0].clone()),
            ("parallelism", par[0].clone()),
        ],
        tol,
    );
    if prod[1].value > WITNESS_THRESHOLD {
        Ok(r)
    } else {
        Ok(r.fail_with(NO_WITNESS))
    }
}

/// `nabla P = 0` holds exactly when `nabla* P* = 0` does.
pub fn conjugate_parallelism_check(
    g: &MetricField,
    conn: &ConnectionField,
    p: &ProductStructureField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let star = conjugate_connection(g, conn)?;
    let ps = adjoint_structure(g, p)?;
    let res = max_over_points(pts, 2, |x| {
        Ok(vec![parallelism_residual(conn, p, x)?, parallelism_residual(&star, &ps, x)?])
    })?;
    let (a, b) = (res[0].value, res[1].value);
    let mut r = CheckResult::from_residuals(
        "conjugate_parallelism",
        pts,
        &[("parallelism", res[0].clone()), ("dual_parallelism", res[1].clone())],
        tol,
    );
    let (za, zb) = (a <= tol, b <= tol);
    r.status = if za == zb { Status::Pass } else { Status::Fail };
    r.reason = Some(
        match (za, zb) {
            (true, true) => "both structures are parallel",
            (false, false) => "neither structure is parallel",
            _ => "exactly one structure is parallel",
        }
        .into(),
    );
    Ok(r)
}

/// Right-hand side of the para-Kahler space-form curvature with `c = 4`,
/// indexed like `R^l_ijk`.
fn space_form_model(gm: &DMatrix<f64>, pm: &DMatrix<f64>) -> Vec<f64> {
    let n = gm.nrows();
    // gp[a][b] = g(P d_a, d_b); gq[a][b] = g(d_a, P d_b)
    let gp = pm.transpose() * gm;
    let gq = gm * pm;
    let mut out = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let di = if l == i { 1.0 } else { 0.0 };
                    let dj = if l == j { 1.0 } else { 0.0 };
                    out[((l * n + i) * n + j) * n + k] = gm[(j, k)] * di - gm[(i, k)] * dj
                        + gp[(j, k)] * pm[(l, i)]
                        - gp[(i, k)] * pm[(l, j)]
                        + (gq[(i, j)] - gp[(i, j)]) * pm[(l, k)];
                }
            }
        }
    }
    out
}

fn space_form_gap(r: &CurvatureAtPoint, model: &[f64], c: f64) -> f64 {
    let raw = max_abs(r.components.iter().zip(model).map(|(a, b)| a - 0.25 * c * b));
    scaled(raw, r.max_abs().max(0.25 * c.abs() * max_abs(model.iter().copied())))
}

/// Scaled space-form residuals `(R with P, R* with P*)` at one point.
pub fn space_form_residual(
    g: &MetricField,
    conn: &ConnectionField,
    p: &ProductStructureField,
    c: f64,
    x: &[f64],
) -> Result<(f64, f64)> {
    let star = conjugate_connection(g, conn)?;
    let ps = adjoint_structure(g, p)?;
    let gm = g.value_at(x)?;
    let r = curvature_at(conn, x)?;
    let rs = curvature_at(&star, x)?;
    Ok((
        space_form_gap(&r, &space_form_model(&gm, &p.value_at(x)?), c),
        space_form_gap(&rs, &space_form_model(&gm, &ps.value_at(x)?), c),
    ))
}

/// Space form of constant `c`, for both `R` with `P` and `R*` with `P*`.
pub fn check_space_form(
    g: &MetricField,
    conn: &ConnectionField,
    p: &ProductStructureField,
    c: f64,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let res = max_over_points(pts, 2, |x| {
        let (a, b) = space_form_residual(g, conn, p, c, x)?;
        Ok(vec![a, b])
    })?;
    Ok(CheckResult::from_residuals(
        "space_form",
        pts,
        &[("curvature", res[0].clone()), ("dual_curvature", res[1].clone())],
        tol,
    )
    .with_detail("c", c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceFormFit {
    pub c: f64,
    /// Index of the point used for the fit.
    pub point: usize,
    pub residual: PointMax,
}

fn condition_number(gm: &DMatrix<f64>) -> f64 {
    let e = SymmetricEigen::new(gm.clone()).eigenvalues;
    let (lo, hi) = e
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.abs()), hi.max(x.abs())));
    hi / lo
}

/// Least-squares `c` at the best-conditioned sample point, then the
/// residual of that `c` over all points.
pub fn fit_space_form_constant(
    g: &MetricField,
    conn: &ConnectionField,
    p: &ProductStructureField,
    pts: &[Vec<f64>],
) -> Result<SpaceFormFit> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, x) in pts.iter().enumerate() {
        let k = condition_number(&g.value_at(x)?);
        if best.map_or(true, |(_, b)| k < b) {
            best = Some((idx, k));
        }
    }
    let (idx, _) = best.ok_or_else(|| GeomError::InvalidArgument("no sample points".into()))?;
    let x = &pts[idx];
    let r = curvature_at(conn, x)?;
    let model = space_form_model(&g.value_at(x)?, &p.value_at(x)?);
    let den: f64 = model.iter().map(|b| b * b).sum();
    if den == 0.0 {
        return Err(GeomError::InvalidStructure("space-form model tensor vanishes".into()));
    }
    let num: f64 = r.components.iter().zip(&model).map(|(a, b)| a * b).sum();
    let c = 4.0 * num / den;
    let res = max_over_points(pts, 1, |x| Ok(vec![space_form_residual(g, conn, p, c, x)?.0]))?;
    Ok(SpaceFormFit {
        c,
        point: idx,
        residual: res[0].clone(),
    })
}

/// `R(d_i, d_j) P d_k = P R(d_i, d_j) d_k`.
pub fn check_curvature_commutes_with_structure(
    conn: &ConnectionField,
    p: &ProductStructureField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let n = conn.dim();
    let res = max_over_points(pts, 1, |x| {
        let r = curvature_at(conn, x)?;
        let pm = p.value_at(x)?;
        let mut worst: f64 = 0.0;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut a = 0.0;
                        let mut b = 0.0;
                        for m in 0..n {
                            a += r.get(l, i, j, m) * pm[(m, k)];
                            b += pm[(l, m)] * r.get(m, i, j, k);
                        }
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
        Ok(vec![scaled(worst, r.max_abs().max(max_abs(pm.iter().copied())))])
    })?;
    Ok(CheckResult::from_residual(
        "curvature_commutes_with_structure",
        pts,
        res[0].clone(),
        tol,
    ))
}

/// A para-Kahler-like statistical manifold of constant curvature and
/// dimension other than 2 must be flat.
pub fn verify_flatness_theorem(
    g: &MetricField,
    conn: &ConnectionField,
    p: &ProductStructureField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    const NAME: &str = "flatness_theorem";
    let n = g.dim();
    if n == 2 {
        return Ok(CheckResult::not_applicable(NAME, "dimension is 2", tol));
    }
    let cert = check_para_kahler_like(g, conn, p, pts, tol)?;
    if !cert.passed() {
        return Ok(CheckResult::not_applicable(
            NAME,
            format!("not para-Kahler-like (residual {:.3e})", cert.max_residual),
            tol,
        ));
    }
    let fit = match fit_kurose_constant(g, conn, pts) {
        Ok(f) => f,
        Err(GeomError::NoNondegeneratePlane) => {
            return Ok(CheckResult::not_applicable(NAME, "no nondegenerate coordinate plane", tol))
        }
        Err(e) => return Err(e),
    };
    if !(fit.residual.value <= tol) {
        return Ok(CheckResult::not_applicable(
            NAME,
            format!("not of constant curvature (residual {:.3e})", fit.residual.value),
            tol,
        )
        .with_detail("k_hat", fit.k_hat));
    }
    let flat = max_over_points(pts, 1, |x| {
        let r = curvature_at(conn, x)?;
        Ok(vec![scaled(r.max_abs(), max_abs(conn.values_at(x)?))])
    })?;
    let trace = p.trace_at(&pts[0])?;
    Ok(CheckResult::from_residuals(NAME, pts, &[("curvature", flat[0].clone())], tol)
        .with_detail("k_hat", fit.k_hat)
        .with_detail("trace_p", trace))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::check::TOL_EXACT;
    use crate::expr::{parse_expression, ScalarField};

    fn parse(text: &str, coords: &[&str], params: &[(&str, f64)]) -> ScalarField {
        let c: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        let p = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        parse_expression(text, &c, &p).unwrap()
    }

    fn swap() -> ProductStructureField {
        ProductStructureField::constant(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap()
    }

    fn half_plane(k: f64, l: f64) -> (MetricField, ConnectionField) {
        let c = ["x", "y"];
        let ps = [("k", k), ("l", l)];
        let mut ge = BTreeMap::new();
        ge.insert((0, 0), parse("k/(y*y)", &c, &ps));
        ge.insert((1, 1), parse("-l/(y*y)", &c, &ps));
        let g = MetricField::from_entries(2, &ge).unwrap();
        let mut ce = BTreeMap::new();
        for key in [(0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 1)] {
            ce.insert(key, parse("-2*k/((k+l)*y)", &c, &ps));
        }
        (g, ConnectionField::from_entries(2, &ce).unwrap())
    }

    fn pts() -> Vec<Vec<f64>> {
        vec![vec![0.1, 0.6], vec![-0.4, 1.2], vec![0.7, 1.9]]
    }

    #[test]
    fn almost_product_cases() {
        assert!(check_almost_product(&swap(), &pts(), TOL_EXACT).unwrap().passed());
        let id = ProductStructureField::constant(&DMatrix::identity(2, 2)).unwrap();
        let r = check_almost_product(&id, &pts(), TOL_EXACT).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!(r.reason.is_some());
        let d = ProductStructureField::constant(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(check_almost_product(&d, &pts(), TOL_EXACT).unwrap().passed());
    }

    #[test]
    fn half_plane_is_para_kahler_like() {
        let (g, conn) = half_plane(1.0, 2.0);
        let p = swap();
        for r in [
            check_para_kahler_like(&g, &conn, &p, &pts(), TOL_EXACT).unwrap(),
            check_pairing_identities(&g, &p, &pts(), 1e-10).unwrap(),
            conjugate_parallelism_check(&g, &conn, &p, &pts(), TOL_EXACT).unwrap(),
            check_curvature_commutes_with_structure(&conn, &p, &pts(), TOL_EXACT).unwrap(),
        ] {
            assert!(r.passed(), "{r:?}");
        }
        let r = conjugate_parallelism_check(&g, &conn, &p, &pts(), TOL_EXACT).unwrap();
        assert!(r.details["dual_parallelism"] <= TOL_EXACT);
    }

    #[test]
    fn diagonal_structure_is_not_parallel() {
        let (_, conn) = half_plane(1.0, 2.0);
        let d = ProductStructureField::constant(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        let x = [0.0, 1.0];
        let v = covariant_derivative_p_at(&conn, &d, &x).unwrap();
        // (nabla_x P)^y_x = Gamma^y_xm P^m_x - Gamma^m_xx P^y_m = Gamma^y_xx - (-Gamma^y_xx) = 2 Gamma^y_xx
        assert!((v[gidx(2, 1, 0, 0)] - 2.0 * (-2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn perturbed_connection_breaks_both_parallelisms() {
        let (g, conn) = half_plane(1.0, 2.0);
        let mut off = BTreeMap::new();
        off.insert((1, 0, 0), ScalarField::constant(2, 0.1));
        let bent = conn.with_offset(&off).unwrap();
        let r = conjugate_parallelism_check(&g, &bent, &swap(), &pts(), TOL_EXACT).unwrap();
        assert!(r.passed());
        assert!(r.details["parallelism"] > TOL_EXACT);
        assert!(r.details["dual_parallelism"] > TOL_EXACT);
    }

    #[test]
    fn flat_split_space_form() {
        let g = MetricField::diagonal_constant(&[2.0, -1.0]).unwrap();
        let flat = ConnectionField::zero(2).unwrap();
        assert!(check_space_form(&g, &flat, &swap(), 0.0, &pts(), TOL_EXACT).unwrap().passed());
        let r = check_space_form(&g, &flat, &swap(), 1.0, &pts(), TOL_EXACT).unwrap();
        assert_eq!(r.status, Status::Fail);
        let fit = fit_space_form_constant(&g, &flat, &swap(), &pts()).unwrap();
        assert_eq!(fit.c, 0.0);
    }

    #[test]
    fn flatness_theorem_dimension_two_is_not_applicable() {
        let g = MetricField::diagonal_constant(&[2.0, -1.0]).unwrap();
        let flat = ConnectionField::zero(2).unwrap();
        let r = verify_flatness_theorem(&g, &flat, &swap(), &pts(), TOL_EXACT).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
    }

    #[test]
    fn flatness_theorem_on_flat_four_dimensional_split() {
        let g = MetricField::diagonal_constant(&[2.0, -1.0, 2.0, -1.0]).unwrap();
        let flat = ConnectionField::zero(4).unwrap();
        let mut m = DMatrix::zeros(4, 4);
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            m[(i, j)] = 1.0;
        }
        let p = ProductStructureField::constant(&m).unwrap();
        let pts: Vec<Vec<f64>> = vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.5, -0.1, 0.0, 0.9]];
        let r = verify_flatness_theorem(&g, &flat, &p, &pts, TOL_EXACT).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
        assert_eq!(r.details["k_hat"], 0.0);
        assert_eq!(r.details["trace_p"], 0.0);
    }
}
