//! Structures induced on a single fiber.

use std::sync::Arc;

use crate::check::{scaled, TOL_EXACT};
use crate::error::{GeomError, Result};
use crate::geometry::{gidx, ChartSpec, ConnectionField, ConnectionSource};
use crate::jet::{Jet, JetMatrix};
use crate::manifold::ManifoldSpec;
use crate::product::{ProductStructureField, StructureSource};

use super::{Frame, SubmersionSpec};

/// Fiber sample size used to certify that the structure preserves the
/// vertical space.
const FIBER_PROBES: usize = 16;

#[derive(Debug)]
struct FiberPoint {
    spec: SubmersionSpec,
    frozen: Vec<f64>,
    fiber_coords: Vec<usize>,
}

impl FiberPoint {
    fn lift(&self, q: &[f64]) -> Result<Vec<f64>> {
        let nf = self.fiber_coords.len();
        if q.len() != nf {
            return Err(GeomError::Arity {
                expected: nf,
                got: q.len(),
            });
        }
        let mut p = self.frozen.clone();
        p.extend_from_slice(q);
        Ok(p)
    }
}

/// Vertical part of the total connection on fiber coordinate fields.
#[derive(Debug)]
struct FiberInduced {
    at: FiberPoint,
    conn: ConnectionField,
}

impl ConnectionSource for FiberInduced {
    fn dim(&self) -> usize {
        self.at.fiber_coords.len()
    }

    fn jets_at(&self, q: &[f64]) -> Result<Vec<Jet>> {
        let p = self.at.lift(q)?;
        let n = p.len();
        let nf = q.len();
        let nb = n - nf;
        let (_, v, _, _) = Frame::projectors(&self.at.spec, &p)?;
        let gamma = self.conn.jets_at(&p)?;
        let mut out = vec![Jet::ZERO; nf * nf * nf];
        for c in 0..nf {
            for a in 0..nf {
                for b in 0..nf {
                    // (v W)^{nb+c} = W^{nb+c} + v[nb+c][beta] W^beta
                    let mut s = gamma[gidx(n, nb + c, nb + a, nb + b)];
                    for beta in 0..nb {
                        s += v.get(nb + c, beta) * gamma[gidx(n, beta, nb + a, nb + b)];
                    }
                    out[gidx(nf, c, a, b)] = s.select(&self.at.fiber_coords);
                }
            }
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("fiber-induced ({})", self.conn.describe())
    }
}

/// Fiber block of the total structure.
#[derive(Debug)]
struct FiberRestricted {
    at: FiberPoint,
    structure: ProductStructureField,
}

impl StructureSource for FiberRestricted {
    fn dim(&self) -> usize {
        self.at.fiber_coords.len()
    }

    fn jet_at(&self, q: &[f64]) -> Result<JetMatrix> {
        let p = self.at.lift(q)?;
        let nb = p.len() - q.len();
        let m = self.structure.jet_at(&p)?;
        Ok(JetMatrix::from_fn(q.len(), |c, d| {
            m.get(nb + c, nb + d).select(&self.at.fiber_coords)
        }))
    }

    fn describe(&self) -> String {
        format!("fiber restriction of ({})", self.structure.describe())
    }
}

/// Largest base component of `P` applied to a vertical vector, scaled.
pub(crate) fn vertical_leak(p: &JetMatrix, nb: usize) -> f64 {
    let n = p.n;
    let mut leak = 0.0f64;
    for a in 0..nb {
        for c in nb..n {
            leak = leak.max(p.get(a, c).v.abs());
        }
    }
    scaled(leak, p.max_abs_value())
}

/// The fiber through the lift of `base_point` (default: the centre of the
/// base box), with induced metric, connection and, when the total structure
/// preserves vertical vectors, the induced structure.
pub fn induced_fiber_manifold(spec: &SubmersionSpec, base_point: Option<&[f64]>) -> Result<ManifoldSpec> {
    let nb = spec.base_dim();
    let n = spec.total_dim();
    let frozen = match base_point {
        Some(b) => {
            if b.len() != nb {
                return Err(GeomError::Arity {
                    expected: nb,
                    got: b.len(),
                });
            }
            if !spec.base.chart.contains(b) {
                return Err(GeomError::InvalidArgument("base point lies outside the base box".into()));
            }
            b.to_vec()
        }
        None => spec.base.chart.center(),
    };
    let fiber_coords: Vec<usize> = (nb..n).collect();
    let total_chart = &spec.total.chart;
    let chart = ChartSpec::new(
        fiber_coords.iter().map(|&i| total_chart.coords[i].clone()).collect(),
        fiber_coords.iter().map(|&i| total_chart.bounds[i]).collect(),
        total_chart.seed,
    )?;
    let mut full = frozen.clone();
    full.extend(chart.center());
    let metric = spec.total.metric.restrict(&fiber_coords, &full)?;
    let at = || FiberPoint {
        spec: spec.clone(),
        frozen: frozen.clone(),
        fiber_coords: (0..n).filter(|&i| i >= nb).collect(),
    };
    let connection = ConnectionField::from_source(Arc::new(FiberInduced {
        at: at(),
        conn: spec.total.connection.clone(),
    }));
    let structure = match &spec.total.structure {
        None => None,
        Some(p) => {
            let point = at();
            let mut probes = chart.sample_points(FIBER_PROBES)?;
            probes.push(chart.center());
            for q in &probes {
                let leak = vertical_leak(&p.jet_at(&point.lift(q)?)?, nb);
                if !(leak <= TOL_EXACT) {
                    return Err(GeomError::InvalidStructure(format!(
                        "structure does not preserve the vertical space (leak {leak:e})"
                    )));
                }
            }
            Some(ProductStructureField::from_source(Arc::new(FiberRestricted {
                at: point,
                structure: p.clone(),
            })))
        }
    };
    ManifoldSpec::new(chart, metric, Some(connection), structure)
}

/// Conjugate connection induced on the same fiber, for cross-checks.
#[cfg(test)]
pub(crate) fn induced_fiber_dual(spec: &SubmersionSpec, base_point: &[f64]) -> Result<ConnectionField> {
    let nb = spec.base_dim();
    let n = spec.total_dim();
    Ok(ConnectionField::from_source(Arc::new(FiberInduced {
        at: FiberPoint {
            spec: spec.clone(),
            frozen: base_point.to_vec(),
            fiber_coords: (nb..n).collect(),
        },
        conn: spec.dual_connection()?,
    })))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::super::tests::{parse, skewed};
    use super::*;
    use crate::geometry::{conjugate_connection, MetricField};
    use nalgebra::DMatrix;

    /// Same metric as `skewed`, with a torsion-free non-metric connection.
    fn skewed_statistical() -> SubmersionSpec {
        let s = skewed();
        let c = ["x", "u", "w"];
        let mut off = BTreeMap::new();
        off.insert((1, 1, 2), parse("0.2*u", &c));
        off.insert((1, 2, 1), parse("0.2*u", &c));
        off.insert((2, 2, 2), parse("0.1*x", &c));
        let conn = s.total.connection.with_offset(&off).unwrap();
        let total = ManifoldSpec::new(s.total.chart.clone(), s.total.metric.clone(), Some(conn), None).unwrap();
        SubmersionSpec::new(total, s.base.clone()).unwrap()
    }

    #[test]
    fn induced_connections_are_conjugate() {
        let spec = skewed_statistical();
        let b = [0.25];
        let fiber = induced_fiber_manifold(&spec, Some(&b)).unwrap();
        let induced_dual = induced_fiber_dual(&spec, &b).unwrap();
        let conj = conjugate_connection(&fiber.metric, &fiber.connection).unwrap();
        for q in fiber.sample(8).unwrap() {
            let a = induced_dual.values_at(&q).unwrap();
            let c = conj.values_at(&q).unwrap();
            for (x, y) in a.iter().zip(&c) {
                assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn fiber_of_flat_product_is_flat() {
        let chart = ChartSpec::new(vec!["a".into(), "b".into(), "c".into()], vec![(0.0, 1.0); 3], 2).unwrap();
        let g = MetricField::diagonal_constant(&[1.0, 1.0, -1.0]).unwrap();
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 0)] = 1.0;
        m[(1, 2)] = 1.0;
        m[(2, 1)] = 1.0;
        let p = ProductStructureField::constant(&m).unwrap();
        let total = ManifoldSpec::new(chart, g, None, Some(p)).unwrap();
        let bchart = ChartSpec::new(vec!["a".into()], vec![(0.0, 1.0)], 2).unwrap();
        let base = ManifoldSpec::new(bchart, MetricField::diagonal_constant(&[1.0]).unwrap(), None, None).unwrap();
        let spec = SubmersionSpec::new(total, base).unwrap();
        let fiber = induced_fiber_manifold(&spec, None).unwrap();
        assert_eq!(fiber.dim(), 2);
        let q = [0.3, 0.6];
        assert!(fiber.connection.values_at(&q).unwrap().iter().all(|x| *x == 0.0));
        let ph = fiber.structure.as_ref().unwrap().value_at(&q).unwrap();
        assert_eq!(ph[(0, 1)], 1.0);
        assert_eq!(ph[(0, 0)], 0.0);
    }

    #[test]
    fn structure_mixing_base_and_fiber_is_rejected() {
        let chart = ChartSpec::new(vec!["a".into(), "b".into()], vec![(0.0, 1.0); 2], 2).unwrap();
        let g = MetricField::diagonal_constant(&[1.0, -1.0]).unwrap();
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let total = ManifoldSpec::new(chart, g, None, Some(ProductStructureField::constant(&swap).unwrap())).unwrap();
        let bchart = ChartSpec::new(vec!["a".into()], vec![(0.0, 1.0)], 2).unwrap();
        let base = ManifoldSpec::new(bchart, MetricField::diagonal_constant(&[1.0]).unwrap(), None, None).unwrap();
        let spec = SubmersionSpec::new(total, base).unwrap();
        assert!(matches!(
            induced_fiber_manifold(&spec, None),
            Err(GeomError::InvalidStructure(_))
        ));
    }
}
