use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::metric::MetricField;
use crate::error::{GeomError, Result};
use crate::expr::ScalarField;
use crate::jet::{Jet, MAX_DIM};

/// Flat index of `Gamma^k_ij`.
#[inline]
pub fn gidx(n: usize, k: usize, i: usize, j: usize) -> usize {
    (k * n + i) * n + j
}

/// Anything that can produce connection coefficients with exact first
/// derivatives at a point. Output layout follows [`gidx`].
pub trait ConnectionSource: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn jets_at(&self, p: &[f64]) -> Result<Vec<Jet>>;
    fn describe(&self) -> String;
    /// Component expressions, when the connection was given explicitly.
    fn components(&self) -> Option<&[ScalarField]> {
        None
    }
}

/// Affine connection, `nabla_{d_i} d_j = Gamma^k_ij d_k`.
#[derive(Clone)]
pub struct ConnectionField {
    source: Arc<dyn ConnectionSource>,
}

impl fmt::Debug for ConnectionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConnectionField({})", self.source.describe())
    }
}

impl ConnectionField {
    pub fn from_source(source: Arc<dyn ConnectionSource>) -> Self {
        ConnectionField { source }
    }

    /// All `n^3` coefficients in [`gidx`] order.
    pub fn from_components(dim: usize, comps: Vec<ScalarField>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GeomError::Dimension(dim));
        }
        if comps.len() != dim * dim * dim {
            return Err(GeomError::Arity {
                expected: dim * dim * dim,
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

    /// Sparse `(k, i, j) -> Gamma^k_ij`; missing entries are zero.
    pub fn from_entries(dim: usize, entries: &BTreeMap<(usize, usize, usize), ScalarField>) -> Result<Self> {
        let mut comps = vec![ScalarField::zero(dim); dim * dim * dim];
        for (&(k, i, j), f) in entries {
            if k >= dim || i >= dim || j >= dim {
                return Err(GeomError::Arity {
                    expected: dim,
                    got: k.max(i).max(j) + 1,
                });
            }
            comps[gidx(dim, k, i, j)] = f.clone();
        }
        Self::from_components(dim, comps)
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::from_entries(dim, &BTreeMap::new())
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

    pub fn jets_at(&self, p: &[f64]) -> Result<Vec<Jet>> {
        if p.len() != self.dim() {
            return Err(GeomError::Arity {
                expected: self.dim(),
                got: p.len(),
            });
        }
        let out = self.source.jets_at(p)?;
        if out.iter().any(|x| !x.v.is_finite()) {
            return Err(GeomError::NonFinite("connection coefficient"));
        }
        Ok(out)
    }

    pub fn values_at(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jets_at(p)?.iter().map(|x| x.v).collect())
    }

    /// This connection plus the given coefficient offsets.
    pub fn with_offset(&self, offsets: &BTreeMap<(usize, usize, usize), ScalarField>) -> Result<Self> {
        let n = self.dim();
        let delta = ConnectionField::from_entries(n, offsets)?;
        Ok(Self::from_source(Arc::new(Offset {
            base: self.clone(),
            delta,
        })))
    }
}

#[derive(Debug)]
struct Components {
    dim: usize,
    comps: Vec<ScalarField>,
}

impl ConnectionSource for Components {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jets_at(&self, p: &[f64]) -> Result<Vec<Jet>> {
        self.comps
            .iter()
            .map(|f| {
                if let Some(c) = f.as_constant() {
                    return Ok(Jet::constant(c));
                }
                let d = f.eval2(p)?;
                Ok(Jet::new(d.value, &d.grad))
            })
            .collect()
    }

    fn describe(&self) -> String {
        "explicit components".into()
    }

    fn components(&self) -> Option<&[ScalarField]> {
        Some(&self.comps)
    }
}

#[derive(Debug)]
struct Offset {
    base: ConnectionField,
    delta: ConnectionField,
}

impl ConnectionSource for Offset {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn jets_at(&self, p: &[f64]) -> Result<Vec<Jet>> {
        let a = self.base.jets_at(p)?;
        let b = self.delta.jets_at(p)?;
        Ok(a.into_iter().zip(b).map(|(x, y)| x + y).collect())
    }

    fn describe(&self) -> String {
        format!("{} with offsets", self.base.describe())
    }
}

#[derive(Debug)]
struct LeviCivita {
    metric: MetricField,
}

impl ConnectionSource for LeviCivita {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn jets_at(&self, p: &[f64]) -> Result<Vec<Jet>> {
        let n = self.dim();
        let (_, ginv) = self.metric.inverse_jet_at(p)?;
        let dg = self.metric.partial_jets_at(p)?;
        let mut out = vec![Jet::ZERO; n * n * n];
        for i in 0..n {
            for j in i..n {
                // first-kind symbols Gamma_{ij,m}
                let first: Vec<Jet> = (0..n)
                    .map(|m| (dg[i].get(m, j) + dg[j].get(m, i) - dg[m].get(i, j)) * 0.5)
                    .collect();
                for k in 0..n {
                    let v: Jet = (0..n).map(|m| ginv.get(k, m) * first[m]).sum();
                    out[gidx(n, k, i, j)] = v;
                    out[gidx(n, k, j, i)] = v;
                }
            }
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        "Levi-Civita connection of the metric".into()
    }
}

#[derive(Debug)]
struct Conjugate {
    metric: MetricField,
    base: ConnectionField,
}

impl ConnectionSource for Conjugate {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn jets_at(&self, p: &[f64]) -> Result<Vec<Jet>> {
        let n = self.dim();
        let (g, ginv) = self.metric.inverse_jet_at(p)?;
        let dg = self.metric.partial_jets_at(p)?;
        let gamma = self.base.jets_at(p)?;
        let mut out = vec![Jet::ZERO; n * n * n];
        for i in 0..n {
            for j in 0..n {
                // lowered[k] = d_i g_kj - Gamma^m_ik g_mj
                let lowered: Vec<Jet> = (0..n)
                    .map(|k| {
                        let corr: Jet = (0..n).map(|m| gamma[gidx(n, m, i, k)] * g.get(m, j)).sum();
                        dg[i].get(k, j) - corr
                    })
                    .collect();
                for q in 0..n {
                    out[gidx(n, q, i, j)] = (0..n).map(|k| ginv.get(q, k) * lowered[k]).sum();
                }
            }
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("conjugate of ({})", self.base.describe())
    }
}

/// Levi-Civita connection of `g`.
pub fn levi_civita(g: &MetricField) -> ConnectionField {
    ConnectionField::from_source(Arc::new(LeviCivita { metric: g.clone() }))
}

/// The connection dual to `conn` with respect to `g`:
/// `X g(Y, Z) = g(nabla_X Y, Z) + g(Y, nabla*_X Z)`.
pub fn conjugate_connection(g: &MetricField, conn: &ConnectionField) -> Result<ConnectionField> {
    if g.dim() != conn.dim() {
        return Err(GeomError::Arity {
            expected: g.dim(),
            got: conn.dim(),
        });
    }
    Ok(ConnectionField::from_source(Arc::new(Conjugate {
        metric: g.clone(),
        base: conn.clone(),
    })))
}

/// `K^k_ij = Gamma^k_ij - Gamma*^k_ij` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceTensor {
    pub dim: usize,
    pub components: Vec<f64>,
}

impl DifferenceTensor {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.components[gidx(self.dim, k, i, j)]
    }

    /// `max |K^k_ij - K^k_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut m: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    m = m.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        m
    }
}

pub fn difference_tensor_at(conn: &ConnectionField, dual: &ConnectionField, p: &[f64]) -> Result<DifferenceTensor> {
    if conn.dim() != dual.dim() {
        return Err(GeomError::Arity {
            expected: conn.dim(),
            got: dual.dim(),
        });
    }
    let a = conn.values_at(p)?;
    let b = dual.values_at(p)?;
    Ok(DifferenceTensor {
        dim: conn.dim(),
        components: a.iter().zip(&b).map(|(x, y)| x - y).collect(),
    })
}
