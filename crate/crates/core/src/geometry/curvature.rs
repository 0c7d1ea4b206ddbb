use nalgebra::DMatrix;

use super::connection::{conjugate_connection, gidx, ConnectionField};
use super::metric::MetricField;
use crate::check::{max_abs, max_over_points, scaled, CheckResult, PointMax, DEGENERACY_CUTOFF};
use crate::error::{GeomError, Result};
use crate::jet::Jet;

/// Flat index of `R^l_ijk`.
#[inline]
pub fn ridx(n: usize, l: usize, i: usize, j: usize, k: usize) -> usize {
    ((l * n + i) * n + j) * n + k
}

/// `R(d_i, d_j) d_k = R^l_ijk d_l` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureAtPoint {
    pub dim: usize,
    pub components: Vec<f64>,
    pub point: Vec<f64>,
}

impl CurvatureAtPoint {
    #[inline]
    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        self.components[ridx(self.dim, l, i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self.components.iter().copied())
    }

    /// `g(R(d_i, d_j) d_k, d_l)`, indexed like `R^l_ijk`.
    pub fn lowered(&self, g: &DMatrix<f64>) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out[ridx(n, l, i, j, k)] = (0..n).map(|m| self.get(m, i, j, k) * g[(m, l)]).sum();
                    }
                }
            }
        }
        out
    }

    /// `R(v, w) u`.
    pub fn apply(&self, v: &[f64], w: &[f64], u: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|l| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            s += self.get(l, i, j, k) * v[i] * w[j] * u[k];
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// Componentwise `(self + other) / 2`.
    pub fn average(&self, other: &CurvatureAtPoint) -> CurvatureAtPoint {
        CurvatureAtPoint {
            dim: self.dim,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
            point: self.point.clone(),
        }
    }
}

/// Curvature from connection jets. Only `i < j` is computed; the `j > i`
/// half is the exact negation.
pub fn curvature_from_jets(n: usize, gamma: &[Jet], p: &[f64]) -> CurvatureAtPoint {
    let mut r = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let mut v = gamma[gidx(n, l, j, k)].di(i) - gamma[gidx(n, l, i, k)].di(j);
                    for m in 0..n {
                        v += gamma[gidx(n, m, j, k)].v * gamma[gidx(n, l, i, m)].v
                            - gamma[gidx(n, m, i, k)].v * gamma[gidx(n, l, j, m)].v;
                    }
                    r[ridx(n, l, i, j, k)] = v;
                    r[ridx(n, l, j, i, k)] = -v;
                }
            }
        }
    }
    CurvatureAtPoint {
        dim: n,
        components: r,
        point: p.to_vec(),
    }
}

pub fn curvature_at(conn: &ConnectionField, p: &[f64]) -> Result<CurvatureAtPoint> {
    let gamma = conn.jets_at(p)?;
    Ok(curvature_from_jets(conn.dim(), &gamma, p))
}

/// `(R, R*)` for the connection and its conjugate.
pub fn dual_curvatures_at(
    g: &MetricField,
    conn: &ConnectionField,
    p: &[f64],
) -> Result<(CurvatureAtPoint, CurvatureAtPoint)> {
    let star = conjugate_connection(g, conn)?;
    Ok((curvature_at(conn, p)?, curvature_at(&star, p)?))
}

/// `S = (R + R*) / 2`.
pub fn statistical_curvature_at(g: &MetricField, conn: &ConnectionField, p: &[f64]) -> Result<CurvatureAtPoint> {
    let (r, rs) = dual_curvatures_at(g, conn, p)?;
    Ok(r.average(&rs))
}

fn bilinear(g: &DMatrix<f64>, v: &[f64], w: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[(i, j)] * v[i] * w[j];
        }
    }
    s
}

/// `g(v,v) g(w,w) - g(v,w)^2` and the cutoff below which the plane counts
/// as degenerate.
fn plane_denominator(g: &DMatrix<f64>, v: &[f64], w: &[f64]) -> (f64, f64) {
    let den = bilinear(g, v, v) * bilinear(g, w, w) - bilinear(g, v, w).powi(2);
    let gmax = max_abs(g.iter().copied());
    let nv: f64 = v.iter().map(|x| x * x).sum();
    let nw: f64 = w.iter().map(|x| x * x).sum();
    (den, DEGENERACY_CUTOFF * (1.0 + gmax).powi(2) * nv * nw)
}

/// Sectional curvature of the plane spanned by `v` and `w`, built from the
/// statistical curvature tensor.
pub fn sectional_curvature(
    g: &MetricField,
    conn: &ConnectionField,
    p: &[f64],
    v: &[f64],
    w: &[f64],
) -> Result<f64> {
    let n = g.dim();
    if v.len() != n || w.len() != n {
        return Err(GeomError::Arity {
            expected: n,
            got: v.len().min(w.len()),
        });
    }
    let gm = g.value_at(p)?;
    let (den, cutoff) = plane_denominator(&gm, v, w);
    if !(den.abs() > cutoff) {
        return Err(GeomError::DegeneratePlane(den.abs()));
    }
    let s = statistical_curvature_at(g, conn, p)?;
    let swv = s.apply(v, w, w);
    Ok(bilinear(&gm, &swv, v) / den)
}

/// `max |R^l_ijk - k (g_jk delta^l_i - g_ik delta^l_j)|`, scaled.
pub fn kurose_residual(r: &CurvatureAtPoint, g: &DMatrix<f64>, k_hat: f64) -> f64 {
    let n = r.dim;
    let mut worst: f64 = 0.0;
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let di = if l == i { 1.0 } else { 0.0 };
                    let dj = if l == j { 1.0 } else { 0.0 };
                    let model = k_hat * (g[(j, k)] * di - g[(i, k)] * dj);
                    worst = worst.max((r.get(l, i, j, k) - model).abs());
                }
            }
        }
    }
    let mag = r.max_abs().max(max_abs(g.iter().copied()) * k_hat.abs());
    scaled(worst, mag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KuroseFit {
    pub k_hat: f64,
    /// Coordinate plane `(i, j)` used for the estimate.
    pub plane: (usize, usize),
    pub residual: PointMax,
}

/// Best-conditioned coordinate plane at `g`; ties go to the lowest index pair.
fn best_coordinate_plane(g: &DMatrix<f64>) -> Option<((usize, usize), f64)> {
    let n = g.nrows();
    let gmax = max_abs(g.iter().copied());
    let cutoff = DEGENERACY_CUTOFF * (1.0 + gmax).powi(2);
    let mut best: Option<((usize, usize), f64)> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let den = g[(i, i)] * g[(j, j)] - g[(i, j)].powi(2);
            if den.abs() > cutoff && best.map_or(true, |(_, b)| den.abs() > b.abs()) {
                best = Some(((i, j), den));
            }
        }
    }
    best
}

/// Fit `R(X,Y)Z = k (g(Y,Z) X - g(X,Z) Y)` and report the worst deviation.
pub fn fit_kurose_constant(g: &MetricField, conn: &ConnectionField, pts: &[Vec<f64>]) -> Result<KuroseFit> {
    let mut estimate = None;
    for p in pts {
        let gm = g.value_at(p)?;
        if let Some(((i, j), den)) = best_coordinate_plane(&gm) {
            let r = curvature_at(conn, p)?;
            let num: f64 = (0..g.dim()).map(|l| r.get(l, i, j, j) * gm[(l, i)]).sum();
            estimate = Some(((i, j), num / den));
            break;
        }
    }
    let (plane, k_hat) = estimate.ok_or(GeomError::NoNondegeneratePlane)?;
    let mut res = max_over_points(pts, 1, |p| {
        let gm = g.value_at(p)?;
        let r = curvature_at(conn, p)?;
        Ok(vec![kurose_residual(&r, &gm, k_hat)])
    })?;
    Ok(KuroseFit {
        k_hat,
        plane,
        residual: res.remove(0),
    })
}

/// `g(R(d_i,d_j)d_k, d_l) + g(R*(d_i,d_j)d_l, d_k) = 0`.
pub fn check_dual_curvature_identity(
    g: &MetricField,
    conn: &ConnectionField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<CheckResult> {
    let n = g.dim();
    let star = conjugate_connection(g, conn)?;
    let res = max_over_points(pts, 1, |p| {
        let gm = g.value_at(p)?;
        let a = curvature_at(conn, p)?.lowered(&gm);
        let b = curvature_at(&star, p)?.lowered(&gm);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((a[ridx(n, l, i, j, k)] + b[ridx(n, k, i, j, l)]).abs());
                    }
                }
            }
        }
        let mag = max_abs(a.iter().chain(&b).copied());
        Ok(vec![scaled(worst, mag)])
    })?;
    Ok(CheckResult::from_residual(
        "dual_curvature_identity",
        pts,
        res[0].clone(),
        tol,
    ))
}
