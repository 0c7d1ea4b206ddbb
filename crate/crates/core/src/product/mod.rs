//! Almost product structures and the checks built on them.

mod checks;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::expr::ScalarField;
use crate::geometry::MetricField;
use crate::jet::{Jet, JetMatrix, MAX_DIM};

pub use checks::{
    check_almost_product, check_curvature_commutes_with_structure, check_pairing_identities,
    check_para_kahler_like, check_space_form, conjugate_parallelism_check, covariant_derivative_p_at,
    fit_space_form_constant, space_form_residual, verify_flatness_theorem, SpaceFormFit, WITNESS_THRESHOLD,
};

/// Produces `P` as a jet matrix with `P[i][j] = P^i_j`, i.e. column `j`
/// holds the image of `d_j`.
pub trait StructureSource: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn jet_at(&self, p: &[f64]) -> Result<JetMatrix>;
    fn describe(&self) -> String;
    fn components(&self) -> Option<&[ScalarField]> {
        None
    }
}

/// (1,1)-tensor field `P(d_j) = P^i_j d_i`.
#[derive(Clone)]
pub struct ProductStructureField {
    source: Arc<dyn StructureSource>,
}

impl fmt::Debug for ProductStructureField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProductStructureField({})", self.source.describe())
    }
}

impl ProductStructureField {
    pub fn from_source(source: Arc<dyn StructureSource>) -> Self {
        ProductStructureField { source }
    }

    /// Row-major `n x n` components, entry `i * n + j` being `P^i_j`.
    pub fn from_components(dim: usize, comps: Vec<ScalarField>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GeomError::Dimension(dim));
        }
        if comps.len() != dim * dim {
            return Err(GeomError::Arity {
                expected: dim * dim,
                got: comps.len(),
            });
        }
        if let Some(bad) = comps.iter().find(|f| f.arity() != dim) {
            return Err(GeomError::Arity {
                expected: dim,
                got: bad.arity(),
            });
        }
        Ok(Self::from_source(Arc::new(Components { dim, comps })))
    }

    /// Sparse `(i, j) -> P^i_j`; missing entries are zero.
    pub fn from_entries(dim: usize, entries: &BTreeMap<(usize, usize), ScalarField>) -> Result<Self> {
        let mut comps = vec![ScalarField::zero(dim); dim * dim];
        for (&(i, j), f) in entries {
            if i >= dim || j >= dim {
                return Err(GeomError::Arity {
                    expected: dim,
                    got: i.max(j) + 1,
                });
            }
            comps[i * dim + j] = f.clone();
        }
        Self::from_components(dim, comps)
    }

    /// Constant structure with matrix `m` (`m[(i, j)] = P^i_j`).
    pub fn constant(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(GeomError::InvalidStructure("matrix must be square".into()));
        }
        let comps = (0..n * n).map(|t| ScalarField::constant(n, m[(t / n, t % n)])).collect();
        Self::from_components(n, comps)
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn describe(&self) -> String {
        self.source.describe()
    }

    pub fn components(&self) -> Option<&[ScalarField]> {
        self.source.components()
    }

    pub fn jet_at(&self, p: &[f64]) -> Result<JetMatrix> {
        if p.len() != self.dim() {
            return Err(GeomError::Arity {
                expected: self.dim(),
                got: p.len(),
            });
        }
        let m = self.source.jet_at(p)?;
        if m.data.iter().any(|x| !x.v.is_finite()) {
            return Err(GeomError::NonFinite("structure component"));
        }
        Ok(m)
    }

    pub fn value_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.jet_at(p)?.value())
    }

    pub fn trace_at(&self, p: &[f64]) -> Result<f64> {
        Ok(self.value_at(p)?.trace())
    }
}

#[derive(Debug)]
struct Components {
    dim: usize,
    comps: Vec<ScalarField>,
}

impl StructureSource for Components {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet_at(&self, p: &[f64]) -> Result<JetMatrix> {
        let n = self.dim;
        let mut m = JetMatrix::zeros(n);
        for (t, f) in self.comps.iter().enumerate() {
            let x = match f.as_constant() {
                Some(c) => Jet::constant(c),
                None => {
                    let d = f.eval2(p)?;
                    Jet::new(d.value, &d.grad)
                }
            };
            m.set(t / n, t % n, x);
        }
        Ok(m)
    }

    fn describe(&self) -> String {
        "explicit components".into()
    }

    fn components(&self) -> Option<&[ScalarField]> {
        Some(&self.comps)
    }
}

#[derive(Debug)]
struct Adjoint {
    metric: MetricField,
    base: ProductStructureField,
}

impl StructureSource for Adjoint {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn jet_at(&self, p: &[f64]) -> Result<JetMatrix> {
        let (g, ginv) = self.metric.inverse_jet_at(p)?;
        let pm = self.base.jet_at(p)?;
        Ok(ginv.matmul(&pm.transpose()).matmul(&g).scale(-1.0))
    }

    fn describe(&self) -> String {
        format!("negative adjoint of ({})", self.base.describe())
    }
}

/// `P*` with `g(P E, F) + g(E, P* F) = 0`, i.e. `P* = -G^-1 P^T G`.
pub fn adjoint_structure(g: &MetricField, p: &ProductStructureField) -> Result<ProductStructureField> {
    if g.dim() != p.dim() {
        return Err(GeomError::Arity {
            expected: g.dim(),
            got: p.dim(),
        });
    }
    Ok(ProductStructureField::from_source(Arc::new(Adjoint {
        metric: g.clone(),
        base: p.clone(),
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn swap(n_pairs: usize) -> DMatrix<f64> {
        let n = 2 * n_pairs;
        let mut m = DMatrix::zeros(n, n);
        for a in 0..n_pairs {
            m[(2 * a, 2 * a + 1)] = 1.0;
            m[(2 * a + 1, 2 * a)] = 1.0;
        }
        m
    }

    #[test]
    fn adjoint_of_swap_on_constant_split_metric() {
        let k = 3.0;
        let g = MetricField::diagonal_constant(&[k, -1.0]).unwrap();
        let p = ProductStructureField::constant(&swap(1)).unwrap();
        let ps = adjoint_structure(&g, &p).unwrap().value_at(&[0.0, 0.0]).unwrap();
        // P*(d_x) = k d_y, P*(d_y) = d_x / k
        assert!((ps[(1, 0)] - k).abs() < 1e-14);
        assert!((ps[(0, 1)] - 1.0 / k).abs() < 1e-14);
        assert_eq!(ps[(0, 0)], 0.0);
    }

    #[test]
    fn adjoint_of_swap_on_half_plane_metric() {
        let c = vec!["x".to_string(), "y".to_string()];
        let params: BTreeMap<String, f64> = [("k".to_string(), 1.0), ("l".to_string(), 2.0)].into();
        let mut e = BTreeMap::new();
        e.insert((0, 0), parse_expression("k/(y*y)", &c, &params).unwrap());
        e.insert((1, 1), parse_expression("-l/(y*y)", &c, &params).unwrap());
        let g = MetricField::from_entries(2, &e).unwrap();
        let p = ProductStructureField::constant(&swap(1)).unwrap();
        let ps = adjoint_structure(&g, &p).unwrap().value_at(&[0.3, 1.7]).unwrap();
        assert!((ps[(1, 0)] - 0.5).abs() < 1e-14);
        assert!((ps[(0, 1)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn para_hermitian_structure_is_its_own_adjoint() {
        // g(PX, PY) = -g(X, Y) for the swap on diag(1, -1)
        let g = MetricField::diagonal_constant(&[1.0, -1.0]).unwrap();
        let p = ProductStructureField::constant(&swap(1)).unwrap();
        let ps = adjoint_structure(&g, &p).unwrap().value_at(&[0.0, 0.0]).unwrap();
        assert!((ps - swap(1)).abs().max() < 1e-15);
    }

    #[test]
    fn adjoint_jet_derivatives_match_finite_differences() {
        let c = vec!["x".to_string(), "y".to_string()];
        let mut e = BTreeMap::new();
        e.insert((0, 0), parse_expression("exp(x)", &c, &BTreeMap::new()).unwrap());
        e.insert((0, 1), parse_expression("0.3*y", &c, &BTreeMap::new()).unwrap());
        e.insert((1, 1), parse_expression("-1-x*x", &c, &BTreeMap::new()).unwrap());
        let g = MetricField::from_entries(2, &e).unwrap();
        let p = ProductStructureField::constant(&swap(1)).unwrap();
        let ps = adjoint_structure(&g, &p).unwrap();
        let pt = [0.2, 0.4];
        let jet = ps.jet_at(&pt).unwrap();
        let h = 1e-6;
        for r in 0..2 {
            let mut a = pt;
            let mut b = pt;
            a[r] += h;
            b[r] -= h;
            let fd = (ps.value_at(&a).unwrap() - ps.value_at(&b).unwrap()) / (2.0 * h);
            assert!((fd - jet.derivative(r)).abs().max() < 1e-7);
        }
    }
}
