//! Pointwise identity checks on a metric and a connection.

use super::connection::{conjugate_connection, gidx, levi_civita, ConnectionField};
use super::curvature::{curvature_at, fit_kurose_constant, ridx, statistical_curvature_at};
use super::metric::MetricField;
use crate::check::{max_abs, max_over_points, scaled, CheckResult, PointMax};
use crate::error::{GeomError, Result};
use crate::expr::fd_check;
use crate::jet::JetMatrix;

fn metric_scale(g: &JetMatrix, dg: &[JetMatrix]) -> f64 {
    let a = g.max_abs_value();
    dg.iter().fold(a, |m, d| m.max(d.max_abs_value()))
}

/// Torsion and Codazzi residual maxima.
pub(crate) fn statistical_residuals(g: &MetricField, conn: &ConnectionField, pts: &[Vec<f64>]) -> Result<Vec<PointMax>> {
    let n = g.dim();
    max_over_points(pts, 2, |p| {
        let gm = g.jet_at(p)?;
        let dg = g.partial_jets_at(p)?;
        let gamma = conn.values_at(p)?;
        let mag = metric_scale(&gm, &dg).max(max_abs(gamma.iter().copied()));
        let mut torsion: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    torsion = torsion.max((gamma[gidx(n, k, i, j)] - gamma[gidx(n, k, j, i)]).abs());
                }
            }
        }
        // C_ijk = d_i g_jk - Gamma^m_ij g_mk - Gamma^m_ik g_jm
        let c = |i: usize, j: usize, k: usize| -> f64 {
            let mut v = dg[i].get(j, k).v;
            for m in 0..n {
                v -= gamma[gidx(n, m, i, j)] * gm.get(m, k).v + gamma[gidx(n, m, i, k)] * gm.get(j, m).v;
            }
            v
        };
        let mut codazzi: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    codazzi = codazzi.max((c(i, j, k) - c(j, i, k)).abs());
                }
            }
        }
        Ok(vec![scaled(torsion, mag), scaled(codazzi, mag)])
    })
}

/// Torsion-freeness and symmetry of the cubic form `nabla g`.
pub fn check_statistical_structure(
    g: &MetricField,
    conn: &ConnectionField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let res = statistical_residuals(g, conn, pts)?;
    Ok(CheckResult::from_residuals(
        "statistical_structure",
        pts,
        &[("torsion", res[0].clone()), ("codazzi", res[1].clone())],
        tol,
    ))
}

fn max_coefficient_gap(a: &ConnectionField, b: &ConnectionField, p: &[f64]) -> Result<f64> {
    let x = a.values_at(p)?;
    let y = b.values_at(p)?;
    let raw = max_abs(x.iter().zip(&y).map(|(u, v)| u - v));
    Ok(scaled(raw, max_abs(x.iter().chain(&y).copied())))
}

/// `(nabla*)* = nabla`.
pub fn check_conjugate_involution(
    g: &MetricField,
    conn: &ConnectionField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let twice = conjugate_connection(g, &conjugate_connection(g, conn)?)?;
    let res = max_over_points(pts, 1, |p| Ok(vec![max_coefficient_gap(conn, &twice, p)?]))?;
    Ok(CheckResult::from_residual("conjugate_involution", pts, res[0].clone(), tol))
}

/// `Gamma + Gamma* = 2 Gamma^0`.
pub fn check_levi_civita_average(
    g: &MetricField,
    conn: &ConnectionField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let n = g.dim();
    let star = conjugate_connection(g, conn)?;
    let lc = levi_civita(g);
    let res = max_over_points(pts, 1, |p| {
        let a = conn.values_at(p)?;
        let b = star.values_at(p)?;
        let c = lc.values_at(p)?;
        let raw = max_abs((0..n * n * n).map(|t| a[t] + b[t] - 2.0 * c[t]));
        Ok(vec![scaled(raw, max_abs(a.iter().chain(&b).chain(&c).copied()))])
    })?;
    Ok(CheckResult::from_residual("levi_civita_average", pts, res[0].clone(), tol))
}

/// `2 g(nabla_X Y, Z) = g(K_X Y, Z) + X g(Y,Z) + Y g(Z,X) - Z g(X,Y)` on
/// coordinate fields, with `K = nabla - nabla*`.
pub fn check_koszul_formula(
    g: &MetricField,
    conn: &ConnectionField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let n = g.dim();
    let star = conjugate_connection(g, conn)?;
    let res = max_over_points(pts, 1, |p| {
        let gm = g.jet_at(p)?;
        let dg = g.partial_jets_at(p)?;
        let a = conn.values_at(p)?;
        let b = star.values_at(p)?;
        let lower = |coef: &dyn Fn(usize) -> f64, k: usize| -> f64 {
            (0..n).map(|m| coef(m) * gm.get(m, k).v).sum()
        };
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lhs = 2.0 * lower(&|m| a[gidx(n, m, i, j)], k);
                    let kk = lower(&|m| a[gidx(n, m, i, j)] - b[gidx(n, m, i, j)], k);
                    let rhs = kk + dg[i].get(j, k).v + dg[j].get(k, i).v - dg[k].get(i, j).v;
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        let mag = metric_scale(&gm, &dg).max(max_abs(a.iter().chain(&b).copied()));
        Ok(vec![scaled(worst, mag)])
    })?;
    Ok(CheckResult::from_residual("koszul_formula", pts, res[0].clone(), tol))
}

/// Skew symmetry in the first pair, first Bianchi identity, and skew
/// symmetry of `g(S(., .) ., .)` in the last pair.
pub fn check_statistical_curvature_symmetries(
    g: &MetricField,
    conn: &ConnectionField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let n = g.dim();
    let res = max_over_points(pts, 3, |p| {
        let s = statistical_curvature_at(g, conn, p)?;
        let gm = g.value_at(p)?;
        let low = s.lowered(&gm);
        let mag = s.max_abs().max(max_abs(low.iter().copied()));
        let (mut skew, mut bianchi, mut pair) = (0.0f64, 0.0f64, 0.0f64);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        skew = skew.max((s.get(l, i, j, k) + s.get(l, j, i, k)).abs());
                        bianchi = bianchi.max((s.get(l, i, j, k) + s.get(l, j, k, i) + s.get(l, k, i, j)).abs());
                        pair = pair.max((low[ridx(n, l, i, j, k)] + low[ridx(n, k, i, j, l)]).abs());
                    }
                }
            }
        }
        Ok(vec![scaled(skew, mag), scaled(bianchi, mag), scaled(pair, mag)])
    })?;
    Ok(CheckResult::from_residuals(
        "statistical_curvature_symmetries",
        pts,
        &[
            ("first_pair_skew", res[0].clone()),
            ("first_bianchi", res[1].clone()),
            ("last_pair_skew", res[2].clone()),
        ],
        tol,
    ))
}

/// Constant-curvature fit; details carry the estimate and the plane used.
pub fn check_kurose_constant(
    g: &MetricField,
    conn: &ConnectionField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let fit = fit_kurose_constant(g, conn, pts)?;
    Ok(CheckResult::from_residual("kurose_constant", pts, fit.residual, tol)
        .with_detail("k_hat", fit.k_hat)
        .with_detail("plane_first", fit.plane.0 as f64)
        .with_detail("plane_second", fit.plane.1 as f64))
}

/// Curvature recomputed with central differences of the connection
/// coefficients; returns the worst deviation from [`curvature_at`], scaled
/// by the size of the terms that enter it.
pub fn curvature_fd_deviation(conn: &ConnectionField, p: &[f64], h: f64) -> Result<f64> {
    let n = conn.dim();
    let base = conn.values_at(p)?;
    let shifted = |i: usize, s: f64| -> Result<Vec<f64>> {
        let mut q = p.to_vec();
        q[i] += s;
        conn.values_at(&q)
            .map_err(|e| GeomError::MarginViolation(format!("stencil point {q:?} with h = {h:e}: {e}")))
    };
    // dgamma[i][t] = d_i Gamma_t
    let mut dgamma = Vec::with_capacity(n);
    for i in 0..n {
        let plus = shifted(i, h)?;
        let minus = shifted(i, -h)?;
        dgamma.push(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<_>>());
    }
    let exact = curvature_at(conn, p)?;
    let mut raw: f64 = 0.0;
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = dgamma[i][gidx(n, l, j, k)] - dgamma[j][gidx(n, l, i, k)];
                    for m in 0..n {
                        v += base[gidx(n, m, j, k)] * base[gidx(n, l, i, m)]
                            - base[gidx(n, m, i, k)] * base[gidx(n, l, j, m)];
                    }
                    raw = raw.max((exact.get(l, i, j, k) - v).abs());
                }
            }
        }
    }
    let gamma_max = max_abs(base.iter().copied());
    let mag = exact
        .max_abs()
        .max(gamma_max * gamma_max)
        .max(max_abs(dgamma.iter().flatten().copied()));
    Ok(scaled(raw, mag))
}

/// Exact derivatives against central differences: the metric Hessians
/// and the curvature of the connection.
pub fn check_derivative_oracle(
    g: &MetricField,
    conn: &ConnectionField,
    pts: &[Vec<f64>],
    h: f64,
    tol: f64,
) -> Result<CheckResult> {
    let n = g.dim();
    let res = max_over_points(pts, 2, |p| {
        let mut metric_dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                metric_dev = metric_dev.max(fd_check(g.component(i, j), p, h)?.max_deviation());
            }
        }
        Ok(vec![metric_dev, curvature_fd_deviation(conn, p, h)?])
    })?;
    Ok(CheckResult::from_residuals(
        "derivative_oracle",
        pts,
        &[("metric", res[0].clone()), ("curvature", res[1].clone())],
        tol,
    ))
}

/// Worst deviation of `sectional_curvature` from `k_hat` over
/// `(point, v, w)` planes.
pub fn sectional_deviation(
    g: &MetricField,
    conn: &ConnectionField,
    planes: &[(Vec<f64>, Vec<f64>, Vec<f64>)],
    k_hat: f64,
) -> Result<PointMax> {
    let mut worst = PointMax::zero();
    for (idx, (p, v, w)) in planes.iter().enumerate() {
        let k = super::curvature::sectional_curvature(g, conn, p, v, w)?;
        worst.absorb((k - k_hat).abs(), idx);
    }
    Ok(worst)
}
