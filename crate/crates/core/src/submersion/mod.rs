//! Submersions given by dropping trailing coordinates.
//!
//! The vertical space at a point is spanned by the trailing coordinate
//! directions; the horizontal space is its metric-orthogonal complement and
//! is computed, not assumed. Projectors carry exact first derivatives so that
//! covariant derivatives of projected fields are exact.

mod checks;
mod fiber;
mod oneill;

use nalgebra::DMatrix;

use crate::check::CONDITION_LIMIT;
use crate::error::{GeomError, Result};
use crate::expr::ScalarField;
use crate::geometry::metric::det_cutoff;
use crate::geometry::{gidx, ConnectionField};
use crate::jet::{Jet, JetMatrix};
use crate::manifold::ManifoldSpec;

pub use checks::{
    check_para_holomorphic, check_semi_riemannian_submersion, check_statistical_submersion,
    structure_rank_sum_at, verify_submersion_theorems,
};
pub use fiber::induced_fiber_manifold;
pub use oneill::{check_isometric_fibers, check_oneill_identities, oneill_tensors_at, OneillTensors};

#[derive(Debug, Clone)]
pub struct SubmersionSpec {
    pub total: ManifoldSpec,
    pub base: ManifoldSpec,
    dual_override: Option<ConnectionField>,
}

impl SubmersionSpec {
    /// The base is the manifold of the leading `base.dim()` coordinates.
    pub fn new(total: ManifoldSpec, base: ManifoldSpec) -> Result<Self> {
        let (nt, nb) = (total.dim(), base.dim());
        if nb == 0 || nb >= nt {
            return Err(GeomError::InvalidSubmersion(format!(
                "base dimension {nb} must be between 1 and {} for a total space of dimension {nt}",
                nt - 1
            )));
        }
        for a in 0..nb {
            let (tl, th) = total.chart.bounds[a];
            let (bl, bh) = base.chart.bounds[a];
            if tl < bl || th > bh {
                return Err(GeomError::InvalidSubmersion(format!(
                    "projection of the total box leaves the base box on coordinate {a}"
                )));
            }
        }
        Ok(SubmersionSpec {
            total,
            base,
            dual_override: None,
        })
    }

    /// Replace the conjugate connection used for the starred tensors.
    pub fn with_dual_connection(mut self, dual: ConnectionField) -> Result<Self> {
        if dual.dim() != self.total.dim() {
            return Err(GeomError::Arity {
                expected: self.total.dim(),
                got: dual.dim(),
            });
        }
        self.dual_override = Some(dual);
        Ok(self)
    }

    pub fn total_dim(&self) -> usize {
        self.total.dim()
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn fiber_dim(&self) -> usize {
        self.total_dim() - self.base_dim()
    }

    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        p[..self.base_dim()].to_vec()
    }

    pub fn dual_connection(&self) -> Result<ConnectionField> {
        match &self.dual_override {
            Some(c) => Ok(c.clone()),
            None => self.total.dual_connection(),
        }
    }
}

/// Everything needed at one total-space point.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub n: usize,
    pub nb: usize,
    pub g: JetMatrix,
    pub v: JetMatrix,
    pub h: JetMatrix,
    /// Condition number of the fiber block of the metric.
    pub condition: f64,
    pub gamma: Vec<f64>,
    pub gamma_star: Vec<f64>,
    pub structure: Option<JetMatrix>,
}

impl Frame {
    pub fn projectors(spec: &SubmersionSpec, p: &[f64]) -> Result<(JetMatrix, JetMatrix, JetMatrix, f64)> {
        let n = spec.total_dim();
        let nb = spec.base_dim();
        let nf = n - nb;
        let g = spec.total.metric.jet_at(p)?;
        let gff = JetMatrix::from_fn(nf, |c, d| g.get(nb + c, nb + d));
        let gff_val = gff.value();
        let det = gff_val.determinant();
        let ginv = gff
            .inverse(n, det_cutoff(&gff_val))
            .map_err(|_| GeomError::DegenerateFiber { det })?;
        let sv = gff_val.singular_values();
        let condition = sv.max() / sv.min();
        let mut v = JetMatrix::zeros(n);
        for c in 0..nf {
            for b in 0..nb {
                let coupling: Jet = (0..nf).map(|d| ginv.get(c, d) * g.get(nb + d, b)).sum();
                v.set(nb + c, b, coupling);
            }
            v.set(nb + c, nb + c, Jet::constant(1.0));
        }
        let h = JetMatrix::identity(n).sub(&v);
        Ok((g, v, h, condition))
    }

    pub fn at(spec: &SubmersionSpec, dual: &ConnectionField, p: &[f64]) -> Result<Frame> {
        let (g, v, h, condition) = Self::projectors(spec, p)?;
        Ok(Frame {
            n: spec.total_dim(),
            nb: spec.base_dim(),
            g,
            v,
            h,
            condition,
            gamma: spec.total.connection.values_at(p)?,
            gamma_star: dual.values_at(p)?,
            structure: spec.total.structure.as_ref().map(|s| s.jet_at(p)).transpose()?,
        })
    }

    pub fn require_well_conditioned(&self) -> Result<()> {
        if !(self.condition <= CONDITION_LIMIT) {
            return Err(GeomError::IllConditioned(self.condition));
        }
        Ok(())
    }

    pub fn metric_value(&self) -> DMatrix<f64> {
        self.g.value()
    }

    pub fn g(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.g.get(i, j).v * a[i] * b[j];
            }
        }
        s
    }

    pub fn apply(m: &JetMatrix, x: &[f64]) -> Vec<f64> {
        (0..m.n).map(|i| (0..m.n).map(|j| m.get(i, j).v * x[j]).sum()).collect()
    }

    /// `(nabla_X Y)^k = X^i (d_i Y^k + Gamma^k_ij Y^j)`.
    pub fn covariant(&self, gamma: &[f64], x: &[f64], y: &[Jet]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..n {
                    if x[i] == 0.0 {
                        continue;
                    }
                    let mut inner = y[k].di(i);
                    for j in 0..n {
                        inner += gamma[gidx(n, k, i, j)] * y[j].v;
                    }
                    s += x[i] * inner;
                }
                s
            })
            .collect()
    }

    /// `[X, Y]^k = X^i d_i Y^k - Y^i d_i X^k`.
    pub fn bracket(&self, x: &[Jet], y: &[Jet]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| (0..n).map(|i| x[i].v * y[k].di(i) - y[i].v * x[k].di(i)).sum())
            .collect()
    }
}

/// Vector fields on the total space, as needed by the O'Neill tensors.
#[derive(Debug, Clone)]
pub enum VectorField {
    /// The coordinate field `d_i`.
    Coordinate(usize),
    /// Horizontal lift of the base coordinate field `d'_a`.
    BasicLift(usize),
    /// Components given by expressions.
    Components(Vec<ScalarField>),
    /// `f X`.
    Scaled(ScalarField, Box<VectorField>),
    /// `P X` with the total-space structure.
    Structure(Box<VectorField>),
}

impl VectorField {
    pub(crate) fn jets(&self, fr: &Frame, p: &[f64]) -> Result<Vec<Jet>> {
        let n = fr.n;
        match self {
            VectorField::Coordinate(i) => {
                if *i >= n {
                    return Err(GeomError::Arity {
                        expected: n,
                        got: i + 1,
                    });
                }
                Ok((0..n).map(|k| Jet::constant(if k == *i { 1.0 } else { 0.0 })).collect())
            }
            VectorField::BasicLift(a) => {
                if *a >= fr.nb {
                    return Err(GeomError::Arity {
                        expected: fr.nb,
                        got: a + 1,
                    });
                }
                fr.require_well_conditioned()?;
                Ok((0..n).map(|k| fr.h.get(k, *a)).collect())
            }
            VectorField::Components(fs) => {
                if fs.len() != n {
                    return Err(GeomError::Arity {
                        expected: n,
                        got: fs.len(),
                    });
                }
                fs.iter()
                    .map(|f| {
                        let d = f.eval2(p)?;
                        Ok(Jet::new(d.value, &d.grad))
                    })
                    .collect()
            }
            VectorField::Scaled(f, x) => {
                let d = f.eval2(p)?;
                let s = Jet::new(d.value, &d.grad);
                Ok(x.jets(fr, p)?.into_iter().map(|c| s * c).collect())
            }
            VectorField::Structure(x) => {
                let pm = fr
                    .structure
                    .as_ref()
                    .ok_or_else(|| GeomError::InvalidStructure("no structure on the total space".into()))?;
                Ok(pm.matvec(&x.jets(fr, p)?))
            }
        }
    }
}

/// Vertical and horizontal projectors `(v, h)` at a total-space point.
pub fn projectors_at(spec: &SubmersionSpec, p: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (_, v, h, _) = Frame::projectors(spec, p)?;
    Ok((v.value(), h.value()))
}

/// The unique horizontal vector at `p` projecting to `u`.
pub fn horizontal_lift_at(spec: &SubmersionSpec, u: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let nb = spec.base_dim();
    if u.len() != nb {
        return Err(GeomError::Arity {
            expected: nb,
            got: u.len(),
        });
    }
    let (_, _, h, condition) = Frame::projectors(spec, p)?;
    if !(condition <= CONDITION_LIMIT) {
        return Err(GeomError::IllConditioned(condition));
    }
    let mut x = vec![0.0; spec.total_dim()];
    x[..nb].copy_from_slice(u);
    Ok(Frame::apply(&h, &x))
}
