use nalgebra::DMatrix;

use crate::check::{max_abs, max_over_points, scaled, CheckResult, PointMax, Status, RANK_CUTOFF};
use crate::error::{GeomError, Result};
use crate::geometry::{check_statistical_structure, curvature_at, gidx, ConnectionField};
use crate::product::{
    check_almost_product, check_pairing_identities, check_para_kahler_like, fit_space_form_constant,
};

use super::fiber::induced_fiber_manifold;
use super::oneill::{check_isometric_fibers, frame_fields, tensors_from_jets};
use super::{Frame, SubmersionSpec, VectorField};

/// `g(lift e_a, lift e_b)` at `p` against `g'(e_a, e_b)` at the projection.
pub fn check_semi_riemannian_submersion(spec: &SubmersionSpec, pts: &[Vec<f64>], tol: f64) -> Result<CheckResult> {
    let nb = spec.base_dim();
    let res = max_over_points(pts, 1, |p| {
        let (g, _, h, _) = Frame::projectors(spec, p)?;
        let gm = g.value();
        let hm = h.value();
        let lifted = hm.transpose() * &gm * &hm;
        let gb = spec.base.metric.value_at(&spec.project(p))?;
        let raw = max_abs((0..nb * nb).map(|t| lifted[(t / nb, t % nb)] - gb[(t / nb, t % nb)]));
        Ok(vec![scaled(raw, gb.abs().max())])
    })?;
    Ok(CheckResult::from_residual("semi_riemannian_submersion", pts, res[0].clone(), tol))
}

/// `d pi (h nabla_X Y) = nabla'_{X'} Y'` for basic lifts of base coordinate
/// fields.
pub fn check_statistical_submersion(spec: &SubmersionSpec, pts: &[Vec<f64>], tol: f64) -> Result<CheckResult> {
    let nb = spec.base_dim();
    let res = max_over_points(pts, 1, |p| {
        let (g, v, h, condition) = Frame::projectors(spec, p)?;
        let fr = Frame {
            n: spec.total_dim(),
            nb,
            g,
            v,
            h,
            condition,
            gamma: spec.total.connection.values_at(p)?,
            gamma_star: Vec::new(),
            structure: None,
        };
        let (_, xs) = frame_fields(&fr, p)?;
        let gb = spec.base.connection.values_at(&spec.project(p))?;
        let mut worst = 0.0f64;
        let mut mag = max_abs(gb.iter().copied());
        for a in 0..nb {
            for b in 0..nb {
                let xa: Vec<f64> = xs[a].iter().map(|c| c.v).collect();
                let w = Frame::apply(&fr.h, &fr.covariant(&fr.gamma, &xa, &xs[b]));
                for c in 0..nb {
                    mag = mag.max(w[c].abs());
                    worst = worst.max((w[c] - gb[gidx(nb, c, a, b)]).abs());
                }
            }
        }
        Ok(vec![scaled(worst, mag)])
    })?;
    Ok(CheckResult::from_residual("statistical_submersion", pts, res[0].clone(), tol))
}

/// `d pi . P = P' . d pi`; also reports `max|h P v|`.
pub fn check_para_holomorphic(spec: &SubmersionSpec, pts: &[Vec<f64>], tol: f64) -> Result<CheckResult> {
    let p_total = spec.total.require_structure()?;
    let p_base = spec.base.require_structure()?;
    let (n, nb) = (spec.total_dim(), spec.base_dim());
    let res = max_over_points(pts, 2, |p| {
        let pm = p_total.value_at(p)?;
        let pb = p_base.value_at(&spec.project(p))?;
        let mut raw = 0.0f64;
        for a in 0..nb {
            for j in 0..n {
                let rhs = if j < nb { pb[(a, j)] } else { 0.0 };
                raw = raw.max((pm[(a, j)] - rhs).abs());
            }
        }
        let mag = pm.abs().max().max(pb.abs().max());
        let (_, v, h, _) = Frame::projectors(spec, p)?;
        let leak = (h.value() * &pm * v.value()).abs().max();
        Ok(vec![scaled(raw, mag), scaled(leak, mag)])
    })?;
    Ok(
        CheckResult::from_residual("para_holomorphic", pts, res[0].clone(), tol)
            .with_detail("vertical_invariance", res[1].value),
    )
}

/// Fiber block of the metric and of the structure at a total point.
fn fiber_blocks(spec: &SubmersionSpec, p: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let nb = spec.base_dim();
    let nf = spec.fiber_dim();
    let g = spec.total.metric.value_at(p)?;
    let pm = spec.total.require_structure()?.value_at(p)?;
    Ok((
        g.view((nb, nb), (nf, nf)).into_owned(),
        pm.view((nb, nb), (nf, nf)).into_owned(),
    ))
}

/// `(P^, P^*)` on the fiber through `p`, with `P^* = -G^-1 P^T G`.
fn fiber_structure_pair(spec: &SubmersionSpec, p: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (g, ph) = fiber_blocks(spec, p)?;
    let det = g.determinant();
    let ginv = g.clone().try_inverse().ok_or(GeomError::DegenerateFiber { det })?;
    let star = -(ginv * ph.transpose() * g);
    Ok((ph, star))
}

/// Numerical rank of `P^ + P^*` at `p` (singular values above the scaled
/// cutoff).
pub fn structure_rank_sum_at(spec: &SubmersionSpec, p: &[f64]) -> Result<usize> {
    let (ph, star) = fiber_structure_pair(spec, p)?;
    let s = (ph.clone() + &star).singular_values();
    let cutoff = RANK_CUTOFF * (1.0 + ph.abs().max().max(star.abs().max()));
    Ok(s.iter().filter(|&&x| x > cutoff).count())
}

/// Folds several results into one named item: the worst status wins and
/// details are prefixed with the part label.
fn combine(name: &str, parts: Vec<(&str, CheckResult)>, tol: f64) -> CheckResult {
    let rank = |s: Status| match s {
        Status::Pass => 0,
        Status::NotApplicable => 1,
        Status::Fail => 2,
        Status::Error => 3,
    };
    let mut out = CheckResult::from_residuals(name, &[], &[], tol);
    let mut reasons = Vec::new();
    let mut worst = -1.0f64;
    for (label, r) in parts {
        if rank(r.status) > rank(out.status) {
            out.status = r.status;
        }
        if r.max_residual > worst || r.max_residual.is_nan() {
            worst = r.max_residual;
            out.max_residual = r.max_residual;
            out.worst_point = r.worst_point.clone();
        }
        out.points_used = out.points_used.max(r.points_used);
        out.details.insert(label.to_string(), r.max_residual);
        for (k, v) in r.details {
            out.details.insert(format!("{label}.{k}"), v);
        }
        if let Some(reason) = r.reason {
            if r.status != Status::Pass {
                reasons.push(format!("{label}: {reason}"));
            }
        }
    }
    if !reasons.is_empty() {
        out.reason = Some(reasons.join("; "));
    }
    out
}

fn item(name: &str) -> String {
    format!("submersion_theorems.{name}")
}

fn or_error(name: &str, r: Result<CheckResult>, tol: f64) -> CheckResult {
    r.unwrap_or_else(|e| CheckResult::error(name, &e, tol))
}

const ITEMS: [&str; 6] = [
    "fiber_para_hermitian_like",
    "base_and_fiber_para_kahler_like",
    "vertical_t_invariance",
    "horizontal_a_vanishing",
    "horizontal_integrability",
    "space_form_flatness",
];

/// Structural consequences for a para-Kahler-like statistical submersion.
/// Each item is NOT-APPLICABLE when its hypotheses fail on the samples.
pub fn verify_submersion_theorems(spec: &SubmersionSpec, pts: &[Vec<f64>], tol: f64) -> Result<Vec<CheckResult>> {
    let p_total = spec.total.require_structure()?;
    let p_base = spec.base.require_structure()?;
    let base_pts: Vec<Vec<f64>> = pts.iter().map(|p| spec.project(p)).collect();

    let hypotheses = [
        check_para_kahler_like(&spec.total.metric, &spec.total.connection, p_total, pts, tol)?,
        check_statistical_structure(&spec.base.metric, &spec.base.connection, &base_pts, tol)?,
        check_almost_product(p_base, &base_pts, tol)?,
        check_semi_riemannian_submersion(spec, pts, tol)?,
        check_statistical_submersion(spec, pts, tol)?,
        check_para_holomorphic(spec, pts, tol)?,
    ];
    let failed: Vec<&str> = hypotheses
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.name.as_str())
        .collect();
    if !failed.is_empty() {
        let reason = format!("not a para-Kahler-like statistical submersion: {} failed", failed.join(", "));
        return Ok(ITEMS
            .iter()
            .map(|name| CheckResult::not_applicable(item(name), reason.clone(), tol))
            .collect());
    }

    let mut out = Vec::with_capacity(ITEMS.len());
    let fiber = induced_fiber_manifold(spec, None);
    let fiber_pts = fiber.as_ref().map_err(Clone::clone).and_then(|f| f.sample(pts.len()));

    // Fiber: almost para-Hermitian-like with a statistical structure.
    let name = item(ITEMS[0]);
    out.push(or_error(
        &name,
        fiber_pts.clone().and_then(|fp| {
            let f = fiber.as_ref().map_err(Clone::clone)?;
            let ph = f.require_structure()?;
            Ok(combine(
                &name,
                vec![
                    ("statistical_structure", check_statistical_structure(&f.metric, &f.connection, &fp, tol)?),
                    ("almost_product", check_almost_product(ph, &fp, tol)?),
                    ("pairing_identities", check_pairing_identities(&f.metric, ph, &fp, tol)?),
                ],
                tol,
            ))
        }),
        tol,
    ));

    // Base and fiber are para-Kahler-like.
    let name = item(ITEMS[1]);
    out.push(or_error(
        &name,
        fiber_pts.clone().and_then(|fp| {
            let f = fiber.as_ref().map_err(Clone::clone)?;
            Ok(combine(
                &name,
                vec![
                    (
                        "base",
                        check_para_kahler_like(&spec.base.metric, &spec.base.connection, p_base, &base_pts, tol)?,
                    ),
                    (
                        "fiber",
                        check_para_kahler_like(&f.metric, &f.connection, f.require_structure()?, &fp, tol)?,
                    ),
                ],
                tol,
            ))
        }),
        tol,
    ));

    // T_{PU} PV = T_UV and T_U PV = P T_UV.
    let name = item(ITEMS[2]);
    out.push(or_error(&name, vertical_t_invariance(spec, pts, tol, &name), tol));

    // A = A* = 0 when P^ + P^* has full rank.
    let name = item(ITEMS[3]);
    let min_rank = pts
        .iter()
        .map(|p| structure_rank_sum_at(spec, p))
        .collect::<Result<Vec<_>>>()
        .map(|r| r.into_iter().min().unwrap_or(0));
    let full_rank = matches!(min_rank, Ok(r) if r == spec.fiber_dim());
    out.push(match &min_rank {
        Err(e) => CheckResult::error(&name, e, tol),
        Ok(r) if *r != spec.fiber_dim() => CheckResult::not_applicable(
            &name,
            format!("rank of P^ + P^* is {r}, fiber dimension is {}", spec.fiber_dim()),
            tol,
        )
        .with_detail("min_rank", *r as f64),
        Ok(r) => or_error(&name, horizontal_a(spec, pts, tol, &name), tol).with_detail("min_rank", *r as f64),
    });

    // v[X, Y] = 0 for basic lifts when P^ = P^*.
    let name = item(ITEMS[4]);
    let gap = max_over_points(pts, 1, |p| {
        let (ph, star) = fiber_structure_pair(spec, p)?;
        Ok(vec![scaled((&ph - &star).abs().max(), ph.abs().max())])
    });
    out.push(match gap {
        Err(e) => CheckResult::error(&name, &e, tol),
        Ok(g) if !(g[0].value <= tol) => CheckResult::not_applicable(
            &name,
            format!("fiber structure differs from its adjoint by {:e}", g[0].value),
            tol,
        ),
        Ok(_) => or_error(&name, vertical_bracket(spec, pts, tol, &name), tol),
    });

    // Flat base and fiber for a space-form total space with isometric fibers
    // and full rank.
    let name = item(ITEMS[5]);
    out.push(or_error(
        &name,
        space_form_flatness(spec, pts, &base_pts, full_rank, tol, &name),
        tol,
    ));
    Ok(out)
}

fn vertical_t_invariance(spec: &SubmersionSpec, pts: &[Vec<f64>], tol: f64, name: &str) -> Result<CheckResult> {
    let dual = spec.dual_connection()?;
    let (n, nb) = (spec.total_dim(), spec.base_dim());
    let res = max_over_points(pts, 2, |p| {
        let fr = Frame::at(spec, &dual, p)?;
        let pm = fr.structure.as_ref().expect("structure checked above").value();
        let (mut inv, mut comm) = (0.0f64, 0.0f64);
        for i in nb..n {
            for j in nb..n {
                let u = VectorField::Coordinate(i).jets(&fr, p)?;
                let v = VectorField::Coordinate(j).jets(&fr, p)?;
                let pu = VectorField::Structure(Box::new(VectorField::Coordinate(i))).jets(&fr, p)?;
                let pv = VectorField::Structure(Box::new(VectorField::Coordinate(j))).jets(&fr, p)?;
                let t_uv = tensors_from_jets(&fr, &u, &v).t;
                let t_pp = tensors_from_jets(&fr, &pu, &pv).t;
                let t_upv = tensors_from_jets(&fr, &u, &pv).t;
                let pt: Vec<f64> = (0..n).map(|k| (0..n).map(|m| pm[(k, m)] * t_uv[m]).sum()).collect();
                let mag = max_abs(t_uv.iter().chain(&t_pp).chain(&t_upv).chain(&pt).copied());
                inv = inv.max(scaled(max_abs(t_pp.iter().zip(&t_uv).map(|(a, b)| a - b)), mag));
                comm = comm.max(scaled(max_abs(t_upv.iter().zip(&pt).map(|(a, b)| a - b)), mag));
            }
        }
        Ok(vec![inv, comm])
    })?;
    Ok(CheckResult::from_residuals(
        name,
        pts,
        &[("invariance", res[0].clone()), ("commutes_with_structure", res[1].clone())],
        tol,
    ))
}

fn horizontal_a(spec: &SubmersionSpec, pts: &[Vec<f64>], tol: f64, name: &str) -> Result<CheckResult> {
    let dual = spec.dual_connection()?;
    let res = max_over_points(pts, 2, |p| {
        let fr = Frame::at(spec, &dual, p)?;
        let (_, xs) = frame_fields(&fr, p)?;
        let mag = max_abs(fr.gamma.iter().chain(&fr.gamma_star).copied());
        let (mut a, mut a_star) = (0.0f64, 0.0f64);
        for x in &xs {
            for y in &xs {
                let o = tensors_from_jets(&fr, x, y);
                a = a.max(max_abs(o.a));
                a_star = a_star.max(max_abs(o.a_star));
            }
        }
        Ok(vec![scaled(a, mag), scaled(a_star, mag)])
    })?;
    Ok(CheckResult::from_residuals(
        name,
        pts,
        &[("a", res[0].clone()), ("a_star", res[1].clone())],
        tol,
    ))
}

fn vertical_bracket(spec: &SubmersionSpec, pts: &[Vec<f64>], tol: f64, name: &str) -> Result<CheckResult> {
    let dual = spec.dual_connection()?;
    let res = max_over_points(pts, 1, |p| {
        let fr = Frame::at(spec, &dual, p)?;
        let (_, xs) = frame_fields(&fr, p)?;
        let mut worst = 0.0f64;
        for x in &xs {
            for y in &xs {
                worst = worst.max(max_abs(Frame::apply(&fr.v, &fr.bracket(x, y))));
            }
        }
        Ok(vec![worst])
    })?;
    Ok(CheckResult::from_residual(name, pts, res[0].clone(), tol))
}

fn flatness(conn: &ConnectionField, pts: &[Vec<f64>]) -> Result<PointMax> {
    let res = max_over_points(pts, 1, |p| {
        let r = curvature_at(conn, p)?;
        Ok(vec![scaled(r.max_abs(), max_abs(conn.values_at(p)?))])
    })?;
    Ok(res[0].clone())
}

fn space_form_flatness(
    spec: &SubmersionSpec,
    pts: &[Vec<f64>],
    base_pts: &[Vec<f64>],
    full_rank: bool,
    tol: f64,
    name: &str,
) -> Result<CheckResult> {
    let fit = fit_space_form_constant(
        &spec.total.metric,
        &spec.total.connection,
        spec.total.require_structure()?,
        pts,
    )?;
    if !(fit.residual.value <= tol) {
        return Ok(CheckResult::not_applicable(name, "total space is not a space form", tol));
    }
    if !full_rank {
        return Ok(CheckResult::not_applicable(name, "rank of P^ + P^* is below the fiber dimension", tol)
            .with_detail("c", fit.c));
    }
    if !check_isometric_fibers(spec, pts, tol)?.passed() {
        return Ok(CheckResult::not_applicable(name, "fibers are not isometric", tol).with_detail("c", fit.c));
    }
    let fiber = induced_fiber_manifold(spec, None)?;
    let fiber_pts = fiber.sample(pts.len())?;
    let base = flatness(&spec.base.connection, base_pts)?;
    let fib = flatness(&fiber.connection, &fiber_pts)?;
    // Base and fiber points are reported on their own charts; only residuals
    // are merged here.
    let mut r = CheckResult::from_residuals(name, base_pts, &[("base", base), ("fiber", PointMax::zero())], tol);
    r.details.insert("fiber".into(), fib.value);
    if fib.value > r.max_residual {
        r.max_residual = fib.value;
        r.worst_point = fib.index.map(|i| fiber_pts[i].clone());
        r.status = if fib.value <= tol { Status::Pass } else { Status::Fail };
    }
    Ok(r.with_detail("c", fit.c))
}

#[cfg(test)]
mod tests {
    use super::super::tests::skewed;
    use super::*;
    use crate::geometry::{ChartSpec, MetricField};
    use crate::manifold::ManifoldSpec;
    use crate::product::ProductStructureField;

    fn swap_pairs(n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for a in 0..n / 2 {
            m[(2 * a, 2 * a + 1)] = 1.0;
            m[(2 * a + 1, 2 * a)] = 1.0;
        }
        m
    }

    /// Flat `R^4 -> R^2` with swap structures on each factor.
    fn flat_split(base_scale: f64, base_sign: f64) -> SubmersionSpec {
        let coords: Vec<String> = ["x1", "y1", "x2", "y2"].iter().map(|s| s.to_string()).collect();
        let chart = ChartSpec::new(coords.clone(), vec![(-1.0, 1.0); 4], 5).unwrap();
        let g = MetricField::diagonal_constant(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        let total = ManifoldSpec::new(chart, g, None, Some(ProductStructureField::constant(&swap_pairs(4)).unwrap()))
            .unwrap();
        let bchart = ChartSpec::new(coords[..2].to_vec(), vec![(-1.0, 1.0); 2], 5).unwrap();
        let gb = MetricField::diagonal_constant(&[base_scale, -base_scale]).unwrap();
        let pb = ProductStructureField::constant(&(swap_pairs(2) * base_sign)).unwrap();
        let base = ManifoldSpec::new(bchart, gb, None, Some(pb)).unwrap();
        SubmersionSpec::new(total, base).unwrap()
    }

    #[test]
    fn flat_split_product_passes_everything() {
        let spec = flat_split(1.0, 1.0);
        let pts = spec.total.sample(8).unwrap();
        assert!(check_semi_riemannian_submersion(&spec, &pts, 1e-8).unwrap().passed());
        assert!(check_statistical_submersion(&spec, &pts, 1e-8).unwrap().passed());
        let ph = check_para_holomorphic(&spec, &pts, 1e-8).unwrap();
        assert!(ph.passed());
        assert_eq!(ph.details["vertical_invariance"], 0.0);
        assert_eq!(structure_rank_sum_at(&spec, &pts[0]).unwrap(), 2);
        let items = verify_submersion_theorems(&spec, &pts, 1e-8).unwrap();
        assert_eq!(items.len(), ITEMS.len());
        for r in &items {
            assert_eq!(r.status, Status::Pass, "{r:?}");
        }
    }

    #[test]
    fn broken_base_data_fails() {
        let pts = flat_split(1.0, 1.0).total.sample(4).unwrap();
        let scaled_base = flat_split(2.0, 1.0);
        assert_eq!(check_semi_riemannian_submersion(&scaled_base, &pts, 1e-8).unwrap().status, Status::Fail);
        let negated = flat_split(1.0, -1.0);
        assert_eq!(check_para_holomorphic(&negated, &pts, 1e-8).unwrap().status, Status::Fail);
        let items = verify_submersion_theorems(&negated, &pts, 1e-8).unwrap();
        assert!(items.iter().all(|r| r.status == Status::NotApplicable));
    }

    #[test]
    fn coupled_metric_lifts_are_isometric() {
        let spec = skewed();
        let pts = spec.total.sample(10).unwrap();
        let r = check_semi_riemannian_submersion(&spec, &pts, 1e-8).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn missing_structure_is_an_error() {
        let spec = skewed();
        let pts = spec.total.sample(2).unwrap();
        assert!(matches!(
            check_para_holomorphic(&spec, &pts, 1e-8),
            Err(GeomError::InvalidStructure(_))
        ));
    }
}
