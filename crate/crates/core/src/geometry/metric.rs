use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use super::chart::ChartSpec;
use crate::check::DEGENERACY_CUTOFF;
use crate::error::{GeomError, Result};
use crate::expr::ScalarField;
use crate::jet::{Jet, JetMatrix, MAX_DIM};

/// Symmetric (0,2)-tensor field given by component expressions. Only the
/// upper triangle is stored, so symmetry holds by construction.
#[derive(Debug, Clone)]
pub struct MetricField {
    dim: usize,
    upper: Vec<ScalarField>,
    /// `partials[m][t]` is `d_m` of the upper-triangle component `t`.
    partials: Vec<Vec<ScalarField>>,
}

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + b
}

/// Determinant cutoff relative to the size of the matrix rows.
pub(crate) fn det_cutoff(m: &DMatrix<f64>) -> f64 {
    let scale: f64 = m.row_iter().map(|r| r.norm().max(f64::MIN_POSITIVE)).product();
    DEGENERACY_CUTOFF * scale
}

impl MetricField {
    /// Build from the upper triangle, row by row: `g_00, g_01, .., g_11, ..`.
    pub fn from_upper(dim: usize, upper: Vec<ScalarField>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GeomError::Dimension(dim));
        }
        let expected = dim * (dim + 1) / 2;
        if upper.len() != expected {
            return Err(GeomError::Arity {
                expected,
                got: upper.len(),
            });
        }
        for f in &upper {
            if f.arity() != dim {
                return Err(GeomError::Arity {
                    expected: dim,
                    got: f.arity(),
                });
            }
        }
        let partials = (0..dim)
            .map(|m| upper.iter().map(|f| f.derivative(m)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricField { dim, upper, partials })
    }

    /// Build from a sparse map of `(i, j)` entries; missing entries are zero.
    /// Both `(i, j)` and `(j, i)` may be given only if they agree textually.
    pub fn from_entries(dim: usize, entries: &BTreeMap<(usize, usize), ScalarField>) -> Result<Self> {
        let mut upper = vec![None; dim * (dim + 1) / 2];
        for (&(i, j), f) in entries {
            if i >= dim || j >= dim {
                return Err(GeomError::Arity {
                    expected: dim,
                    got: i.max(j) + 1,
                });
            }
            let slot = &mut upper[upper_index(dim, i, j)];
            match slot {
                Some(prev) if !same_field(prev, f) => {
                    return Err(GeomError::InvalidArgument(format!(
                        "metric entries ({i},{j}) and ({j},{i}) differ"
                    )))
                }
                _ => *slot = Some(f.clone()),
            }
        }
        let upper = upper
            .into_iter()
            .map(|f| f.unwrap_or_else(|| ScalarField::zero(dim)))
            .collect();
        Self::from_upper(dim, upper)
    }

    /// Constant diagonal metric.
    pub fn diagonal_constant(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut entries = BTreeMap::new();
        for (i, &d) in diag.iter().enumerate() {
            entries.insert((i, i), ScalarField::constant(n, d));
        }
        Self::from_entries(n, &entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarField {
        &self.upper[upper_index(self.dim, i, j)]
    }

    /// Symbolic `d_m g_ij`.
    pub fn partial(&self, m: usize, i: usize, j: usize) -> &ScalarField {
        &self.partials[m][upper_index(self.dim, i, j)]
    }

    pub fn value_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.component(i, j).eval(p)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// `(G, G^-1)` at `p`.
    pub fn metric_matrices_at(&self, p: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let g = self.value_at(p)?;
        let det = g.determinant();
        if !det.is_finite() || det.abs() <= det_cutoff(&g) {
            return Err(GeomError::SingularMetric { det });
        }
        let inv = g.clone().try_inverse().ok_or(GeomError::SingularMetric { det })?;
        Ok((g, inv))
    }

    /// Components with exact first derivatives.
    pub fn jet_at(&self, p: &[f64]) -> Result<JetMatrix> {
        let n = self.dim;
        let mut m = JetMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let d = self.component(i, j).eval2(p)?;
                let x = Jet::new(d.value, &d.grad);
                m.set(i, j, x);
                m.set(j, i, x);
            }
        }
        Ok(m)
    }

    /// `dg[m]` with `dg[m](i, j) = d_m g_ij`, each with exact first derivatives.
    pub fn partial_jets_at(&self, p: &[f64]) -> Result<Vec<JetMatrix>> {
        let n = self.dim;
        (0..n)
            .map(|m| {
                let mut out = JetMatrix::zeros(n);
                for i in 0..n {
                    for j in i..n {
                        let d = self.partial(m, i, j).eval2(p)?;
                        let x = Jet::new(d.value, &d.grad);
                        out.set(i, j, x);
                        out.set(j, i, x);
                    }
                }
                Ok(out)
            })
            .collect()
    }

    /// Inverse metric with exact first derivatives.
    pub fn inverse_jet_at(&self, p: &[f64]) -> Result<(JetMatrix, JetMatrix)> {
        let g = self.jet_at(p)?;
        let cutoff = det_cutoff(&g.value());
        let inv = g.inverse(self.dim, cutoff)?;
        Ok((g, inv))
    }

    /// `(positive, negative)` eigenvalue counts at `p`.
    pub fn signature_at(&self, p: &[f64]) -> Result<(usize, usize)> {
        let (g, _) = self.metric_matrices_at(p)?;
        let eig = SymmetricEigen::new(g);
        let pos = eig.eigenvalues.iter().filter(|&&x| x > 0.0).count();
        Ok((pos, self.dim - pos))
    }

    /// Signature at the box centre; every point in `pts` must be
    /// nondegenerate and share it.
    pub fn validate_on(&self, chart: &ChartSpec, pts: &[Vec<f64>]) -> Result<(usize, usize)> {
        if chart.dim() != self.dim {
            return Err(GeomError::Arity {
                expected: chart.dim(),
                got: self.dim,
            });
        }
        let expected = self.signature_at(&chart.center())?;
        for p in pts {
            let found = self.signature_at(p)?;
            if found != expected {
                return Err(GeomError::Signature { expected, found });
            }
        }
        Ok(expected)
    }

    /// Metric on the coordinates `keep`, with the others frozen at `frozen`.
    pub fn restrict(&self, keep: &[usize], frozen: &[f64]) -> Result<MetricField> {
        let k = keep.len();
        let mut upper = Vec::with_capacity(k * (k + 1) / 2);
        for a in 0..k {
            for b in a..k {
                upper.push(self.component(keep[a], keep[b]).restrict(keep, frozen)?);
            }
        }
        Self::from_upper(k, upper)
    }

    pub fn to_text(&self, coords: &[String]) -> Vec<((usize, usize), String)> {
        let n = self.dim;
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                let f = self.component(i, j);
                if !f.is_zero() {
                    out.push(((i, j), f.to_text(coords)));
                }
            }
        }
        out
    }
}

fn same_field(a: &ScalarField, b: &ScalarField) -> bool {
    a.expr() == b.expr()
}
