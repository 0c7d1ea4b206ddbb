//! First-order jets: a value together with its exact gradient in chart
//! coordinates.
//!
//! Derived fields (Levi-Civita and conjugate connections, adjoint structures,
//! projectors) are evaluated pointwise in jet arithmetic, so their first
//! derivatives come out exactly without a separate differentiation pass.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};

/// Largest chart dimension supported by the fixed-size jet storage.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; MAX_DIM],
}

impl Jet {
    pub const ZERO: Jet = Jet {
        v: 0.0,
        d: [0.0; MAX_DIM],
    };

    pub fn constant(v: f64) -> Self {
        Jet { v, d: [0.0; MAX_DIM] }
    }

    pub fn new(v: f64, grad: &[f64]) -> Self {
        let mut d = [0.0; MAX_DIM];
        d[..grad.len()].copy_from_slice(grad);
        Jet { v, d }
    }

    /// Derivative along coordinate `i`.
    #[inline]
    pub fn di(&self, i: usize) -> f64 {
        self.d[i]
    }

    pub fn recip(self) -> Jet {
        let r = 1.0 / self.v;
        let s = -r * r;
        let mut d = [0.0; MAX_DIM];
        for (o, x) in d.iter_mut().zip(self.d.iter()) {
            *o = s * x;
        }
        Jet { v: r, d }
    }

    /// Keep only the gradient entries listed in `coords`, in that order.
    pub fn select(&self, coords: &[usize]) -> Jet {
        let mut d = [0.0; MAX_DIM];
        for (slot, &c) in coords.iter().enumerate() {
            d[slot] = self.d[c];
        }
        Jet { v: self.v, d }
    }
}

impl Default for Jet {
    fn default() -> Self {
        Jet::ZERO
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: Jet) -> Jet {
        self += rhs;
        self
    }
}

impl AddAssign for Jet {
    #[inline]
    fn add_assign(&mut self, rhs: Jet) {
        self.v += rhs.v;
        for (a, b) in self.d.iter_mut().zip(rhs.d.iter()) {
            *a += b;
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, rhs: Jet) -> Jet {
        self -= rhs;
        self
    }
}

impl SubAssign for Jet {
    #[inline]
    fn sub_assign(&mut self, rhs: Jet) {
        self.v -= rhs.v;
        for (a, b) in self.d.iter_mut().zip(rhs.d.iter()) {
            *a -= b;
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(mut self) -> Jet {
        self.v = -self.v;
        for a in self.d.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Jet) -> Jet {
        let mut d = [0.0; MAX_DIM];
        for (i, o) in d.iter_mut().enumerate() {
            *o = self.d[i] * rhs.v + self.v * rhs.d[i];
        }
        Jet {
            v: self.v * rhs.v,
            d,
        }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(mut self, rhs: f64) -> Jet {
        self.v *= rhs;
        for a in self.d.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::ZERO, |a, b| a + b)
    }
}

/// Square matrix of jets, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JetMatrix {
    pub n: usize,
    pub data: Vec<Jet>,
}

impl JetMatrix {
    pub fn zeros(n: usize) -> Self {
        JetMatrix {
            n,
            data: vec![Jet::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Jet::constant(1.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Jet) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        JetMatrix { n, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Jet {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: Jet) {
        self.data[i * self.n + j] = x;
    }

    pub fn value(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).v)
    }

    /// Derivative of every entry along coordinate `r`.
    pub fn derivative(&self, r: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).d[r])
    }

    pub fn transpose(&self) -> Self {
        JetMatrix::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, rhs: &JetMatrix) -> Self {
        let n = self.n;
        JetMatrix::from_fn(n, |i, j| (0..n).map(|k| self.get(i, k) * rhs.get(k, j)).sum())
    }

    pub fn matvec(&self, v: &[Jet]) -> Vec<Jet> {
        (0..self.n)
            .map(|i| (0..self.n).map(|k| self.get(i, k) * v[k]).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        JetMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn sub(&self, rhs: &JetMatrix) -> Self {
        JetMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn add(&self, rhs: &JetMatrix) -> Self {
        JetMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    /// Inverse with exact first derivatives, `d(M^-1) = -M^-1 dM M^-1`.
    ///
    /// `dims` is the number of active gradient slots.
    pub fn inverse(&self, dims: usize, det_cutoff: f64) -> Result<JetMatrix> {
        let n = self.n;
        let value = self.value();
        let det = value.determinant();
        if !det.is_finite() || det.abs() <= det_cutoff {
            return Err(GeomError::SingularMetric { det });
        }
        let inv = value
            .clone()
            .try_inverse()
            .ok_or(GeomError::SingularMetric { det })?;
        let mut out = JetMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j].v = inv[(i, j)];
            }
        }
        for r in 0..dims {
            let dm = self.derivative(r);
            let dinv = -(&inv * dm * &inv);
            for i in 0..n {
                for j in 0..n {
                    out.data[i * n + j].d[r] = dinv[(i, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs_value(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.v.abs()))
    }
}
