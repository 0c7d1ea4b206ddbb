//! The O'Neill tensors `T`, `A` and their conjugates.

use crate::check::{max_abs, max_over_points, scaled, CheckResult, PointMax};
use crate::error::Result;
use crate::jet::{Jet, JetMatrix};

use super::{Frame, SubmersionSpec, VectorField};

/// `T_EF`, `A_EF` and the same with the conjugate connection, at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct OneillTensors {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub t_star: Vec<f64>,
    pub a_star: Vec<f64>,
}

fn pair(fr: &Frame, gamma: &[f64], e: &[Jet], f: &[Jet]) -> (Vec<f64>, Vec<f64>) {
    let ev: Vec<f64> = e.iter().map(|x| x.v).collect();
    let ve = Frame::apply(&fr.v, &ev);
    let he = Frame::apply(&fr.h, &ev);
    let vf = fr.v.matvec(f);
    let hf = fr.h.matvec(f);
    let combine = |m1: &JetMatrix, w1: Vec<f64>, m2: &JetMatrix, w2: Vec<f64>| -> Vec<f64> {
        let a = Frame::apply(m1, &w1);
        let b = Frame::apply(m2, &w2);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    };
    // T_EF = h nabla_{vE} vF + v nabla_{vE} hF
    let t = combine(
        &fr.h,
        fr.covariant(gamma, &ve, &vf),
        &fr.v,
        fr.covariant(gamma, &ve, &hf),
    );
    // A_EF = v nabla_{hE} hF + h nabla_{hE} vF
    let a = combine(
        &fr.v,
        fr.covariant(gamma, &he, &hf),
        &fr.h,
        fr.covariant(gamma, &he, &vf),
    );
    (t, a)
}

pub(crate) fn tensors_from_jets(fr: &Frame, e: &[Jet], f: &[Jet]) -> OneillTensors {
    let (t, a) = pair(fr, &fr.gamma, e, f);
    let (t_star, a_star) = pair(fr, &fr.gamma_star, e, f);
    OneillTensors { t, a, t_star, a_star }
}

pub fn oneill_tensors_at(spec: &SubmersionSpec, e: &VectorField, f: &VectorField, p: &[f64]) -> Result<OneillTensors> {
    let dual = spec.dual_connection()?;
    let fr = Frame::at(spec, &dual, p)?;
    let ej = e.jets(&fr, p)?;
    let fj = f.jets(&fr, p)?;
    Ok(tensors_from_jets(&fr, &ej, &fj))
}

/// Jets of the vertical coordinate fields and of the basic lifts.
pub(crate) fn frame_fields(fr: &Frame, p: &[f64]) -> Result<(Vec<Vec<Jet>>, Vec<Vec<Jet>>)> {
    let vertical = (fr.nb..fr.n)
        .map(|i| VectorField::Coordinate(i).jets(fr, p))
        .collect::<Result<Vec<_>>>()?;
    let horizontal = (0..fr.nb)
        .map(|a| VectorField::BasicLift(a).jets(fr, p))
        .collect::<Result<Vec<_>>>()?;
    Ok((vertical, horizontal))
}

fn diff(a: &[f64], b: &[f64], sign: f64) -> f64 {
    max_abs(a.iter().zip(b).map(|(x, y)| x - sign * y))
}

fn values(x: &[Jet]) -> Vec<f64> {
    x.iter().map(|c| c.v).collect()
}

const PARTS: [&str; 6] = [
    "symmetry_t",
    "bracket_a",
    "a_duality",
    "t_pairing",
    "a_pairing",
    "projector_algebra",
];

fn identities_at(spec: &SubmersionSpec, dual: &crate::geometry::ConnectionField, p: &[f64]) -> Result<Vec<f64>> {
    let fr = Frame::at(spec, dual, p)?;
    let (us, xs) = frame_fields(&fr, p)?;
    let mut out = vec![0.0; PARTS.len()];
    let mut bump = |slot: usize, raw: f64, mag: f64| {
        let r = scaled(raw, mag);
        if r > out[slot] || r.is_nan() {
            out[slot] = r;
        }
    };
    for u in &us {
        for v in &us {
            let uv = tensors_from_jets(&fr, u, v);
            let vu = tensors_from_jets(&fr, v, u);
            let mag = max_abs(uv.t.iter().chain(&vu.t).chain(&uv.t_star).chain(&vu.t_star).copied());
            bump(0, diff(&uv.t, &vu.t, 1.0).max(diff(&uv.t_star, &vu.t_star, 1.0)), mag);
            for x in &xs {
                let ux = tensors_from_jets(&fr, u, x);
                let lhs = fr.g(&uv.t, &values(x));
                let rhs = -fr.g(&values(v), &ux.t_star);
                bump(3, (lhs - rhs).abs(), lhs.abs().max(rhs.abs()));
            }
        }
    }
    for x in &xs {
        for y in &xs {
            let xy = tensors_from_jets(&fr, x, y);
            let yx = tensors_from_jets(&fr, y, x);
            let br = Frame::apply(&fr.v, &fr.bracket(x, y));
            let lhs: Vec<f64> = xy.a.iter().zip(&yx.a).map(|(a, b)| a - b).collect();
            let lhs_star: Vec<f64> = xy.a_star.iter().zip(&yx.a_star).map(|(a, b)| a - b).collect();
            let mag = max_abs(xy.a.iter().chain(&yx.a).chain(&xy.a_star).chain(&yx.a_star).chain(&br).copied());
            bump(1, diff(&lhs, &br, 1.0).max(diff(&lhs_star, &br, 1.0)), mag);
            bump(
                2,
                diff(&xy.a, &yx.a_star, -1.0),
                max_abs(xy.a.iter().chain(&yx.a_star).copied()),
            );
            for u in &us {
                let xu = tensors_from_jets(&fr, x, u);
                let lhs = fr.g(&xy.a, &values(u));
                let rhs = -fr.g(&values(y), &xu.a_star);
                bump(4, (lhs - rhs).abs(), lhs.abs().max(rhs.abs()));
            }
        }
    }
    let v = fr.v.value();
    let h = fr.h.value();
    let g = fr.metric_value();
    let id = nalgebra::DMatrix::<f64>::identity(fr.n, fr.n);
    let algebra = [
        (&v + &h - &id).abs().max(),
        (&v * &v - &v).abs().max(),
        (&h * &h - &h).abs().max(),
        (&v * &h).abs().max(),
        (h.transpose() * &g * &v).abs().max(),
    ];
    bump(5, max_abs(algebra), g.abs().max());
    Ok(out)
}

/// The algebraic identities relating `T`, `A`, their conjugates and the
/// metric, over vertical coordinate fields and basic lifts.
pub fn check_oneill_identities(spec: &SubmersionSpec, pts: &[Vec<f64>], tol: f64) -> Result<CheckResult> {
    let dual = spec.dual_connection()?;
    let res = max_over_points(pts, PARTS.len(), |p| identities_at(spec, &dual, p))?;
    let parts: Vec<(&str, PointMax)> = PARTS.iter().copied().zip(res).collect();
    Ok(CheckResult::from_residuals("oneill_identities", pts, &parts, tol))
}

/// `T_UV = 0` (and `T*_UV = 0`) for vertical coordinate fields.
pub fn check_isometric_fibers(spec: &SubmersionSpec, pts: &[Vec<f64>], tol: f64) -> Result<CheckResult> {
    let dual = spec.dual_connection()?;
    let res = max_over_points(pts, 2, |p| {
        let fr = Frame::at(spec, &dual, p)?;
        let (us, _) = frame_fields(&fr, p)?;
        let (mut t, mut ts) = (0.0f64, 0.0f64);
        for u in &us {
            for v in &us {
                let o = tensors_from_jets(&fr, u, v);
                t = t.max(max_abs(o.t));
                ts = ts.max(max_abs(o.t_star));
            }
        }
        Ok(vec![t, ts])
    })?;
    Ok(CheckResult::from_residuals(
        "isometric_fibers",
        pts,
        &[("t", res[0].clone()), ("t_star", res[1].clone())],
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::super::tests::{parse, skewed};
    use super::*;
    use crate::check::Status;
    use crate::expr::ScalarField;
    use crate::geometry::{ChartSpec, MetricField};
    use crate::manifold::ManifoldSpec;

    fn flat_product() -> SubmersionSpec {
        let chart = ChartSpec::new(vec!["a".into(), "b".into(), "c".into()], vec![(-1.0, 1.0); 3], 1).unwrap();
        let total = ManifoldSpec::new(chart, MetricField::diagonal_constant(&[1.0, -1.0, 2.0]).unwrap(), None, None).unwrap();
        let bchart = ChartSpec::new(vec!["a".into(), "b".into()], vec![(-1.0, 1.0); 2], 1).unwrap();
        let base = ManifoldSpec::new(bchart, MetricField::diagonal_constant(&[1.0, -1.0]).unwrap(), None, None).unwrap();
        SubmersionSpec::new(total, base).unwrap()
    }

    #[test]
    fn flat_product_has_vanishing_tensors() {
        let spec = flat_product();
        let p = [0.1, 0.2, 0.3];
        for i in 0..3 {
            for j in 0..3 {
                let o = oneill_tensors_at(&spec, &VectorField::Coordinate(i), &VectorField::Coordinate(j), &p).unwrap();
                assert!(max_abs(o.t.iter().chain(&o.a).chain(&o.t_star).chain(&o.a_star).copied()) < 1e-15);
            }
        }
        let pts = spec.total.sample(10).unwrap();
        let r = check_oneill_identities(&spec, &pts, 1e-8).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn identities_hold_on_coupled_metric() {
        let spec = skewed();
        let pts = spec.total.sample(12).unwrap();
        let r = check_oneill_identities(&spec, &pts, 1e-8).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
        assert!(r.details["projector_algebra"] < 1e-12);
    }

    /// `R^3 -> R^2` with `g = dx^2 - dy^2 + phi (du + a_x dx + a_y dy)^2`;
    /// the horizontal space twists with every coordinate.
    fn twisted() -> SubmersionSpec {
        let c = ["x", "y", "u"];
        let phi = "(2 + 0.1*x + 0.1*u*u)";
        let ax = "(0.3 + 0.2*y + 0.1*u)";
        let ay = "(0.2*x)";
        let mut e = BTreeMap::new();
        e.insert((0, 0), parse(&format!("1 + {phi}*{ax}*{ax}"), &c));
        e.insert((0, 1), parse(&format!("{phi}*{ax}*{ay}"), &c));
        e.insert((1, 1), parse(&format!("-1 + {phi}*{ay}*{ay}"), &c));
        e.insert((0, 2), parse(&format!("{phi}*{ax}"), &c));
        e.insert((1, 2), parse(&format!("{phi}*{ay}"), &c));
        e.insert((2, 2), parse(phi, &c));
        let g = MetricField::from_entries(3, &e).unwrap();
        let chart = ChartSpec::new(c.iter().map(|s| s.to_string()).collect(), vec![(-1.0, 1.0); 3], 4).unwrap();
        let total = ManifoldSpec::new(chart, g, None, None).unwrap();
        let bchart = ChartSpec::new(vec!["x".into(), "y".into()], vec![(-1.0, 1.0); 2], 4).unwrap();
        let base = ManifoldSpec::new(bchart, MetricField::diagonal_constant(&[1.0, -1.0]).unwrap(), None, None).unwrap();
        SubmersionSpec::new(total, base).unwrap()
    }

    #[test]
    fn tensors_are_tensorial_in_both_arguments() {
        let spec = twisted();
        let p = [0.2, -0.3, 0.5];
        let c = ["x", "y", "u"];
        let bump = parse(&format!("1 + (x - {}) * (u + 2)", p[0]), &c);
        let e = VectorField::Components(vec![parse("x*u", &c), parse("1 + y", &c), parse("sin(x)", &c)]);
        let f = VectorField::Components(vec![parse("y", &c), parse("u*u", &c), parse("exp(x)", &c)]);
        let base = oneill_tensors_at(&spec, &e, &f, &p).unwrap();
        let e2 = VectorField::Scaled(bump.clone(), Box::new(e.clone()));
        let f2 = VectorField::Scaled(bump, Box::new(f.clone()));
        let a = oneill_tensors_at(&spec, &e2, &f, &p).unwrap();
        let b = oneill_tensors_at(&spec, &e, &f2, &p).unwrap();
        for o in [a, b] {
            for (x, y) in [(&o.t, &base.t), (&o.a, &base.a), (&o.t_star, &base.t_star), (&o.a_star, &base.a_star)] {
                assert!(diff(x, y, 1.0) < 1e-8, "{x:?} {y:?}");
            }
        }
        for part in [&base.t, &base.a, &base.t_star, &base.a_star] {
            assert!(max_abs(part.iter().copied()) > 1e-3, "{base:?}");
        }
    }

    #[test]
    fn identities_hold_on_twisted_metric() {
        let spec = twisted();
        let pts = spec.total.sample(12).unwrap();
        let r = check_oneill_identities(&spec, &pts, 1e-8).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }

    #[test]
    fn mismatched_dual_connection_breaks_duality() {
        let spec = skewed();
        let n = 3;
        let mut off = BTreeMap::new();
        // fiber component of nabla*_{d_u} d_x
        off.insert((1, 1, 0), ScalarField::constant(n, 1.0));
        let bad = spec.dual_connection().unwrap().with_offset(&off).unwrap();
        let spec = spec.with_dual_connection(bad).unwrap();
        let pts = spec.total.sample(6).unwrap();
        let r = check_oneill_identities(&spec, &pts, 1e-8).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!(r.details["a_duality"] > 1e-3 || r.details["t_pairing"] > 1e-3);
    }

    #[test]
    fn block_diagonal_metric_gives_zero_vertical_bracket() {
        let spec = flat_product();
        let p = [0.3, 0.1, -0.2];
        let dual = spec.dual_connection().unwrap();
        let fr = Frame::at(&spec, &dual, &p).unwrap();
        let (_, xs) = frame_fields(&fr, &p).unwrap();
        let br = Frame::apply(&fr.v, &fr.bracket(&xs[0], &xs[1]));
        assert!(max_abs(br) <= 1e-12);
    }
}
