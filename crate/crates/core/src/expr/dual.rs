//! Second-order forward propagation through expression trees.

use super::{pow_value, unary_value, BinaryOp, ExprNode, UnaryOp};
use crate::error::{GeomError, Result};
use crate::special;

/// Value, gradient and Hessian of a scalar field at a point.
///
/// `hess` is row-major `n x n` and symmetric bit-for-bit: only the upper
/// triangle is ever computed, the lower one is mirrored.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Dual2 {
    pub fn constant(n: usize, value: f64) -> Self {
        Dual2 {
            value,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    pub fn variable(n: usize, i: usize, value: f64) -> Self {
        let mut d = Self::constant(n, value);
        d.grad[i] = 1.0;
        d
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    #[inline]
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|x| x.is_finite())
            && self.hess.iter().all(|x| x.is_finite())
    }

    /// `f(self)` given `f`, `f'` and `f''` at `self.value`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Dual2 {
        let n = self.dim();
        let mut out = Dual2::constant(n, f0);
        for i in 0..n {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let v = f2 * self.grad[i] * self.grad[j] + f1 * self.h(i, j);
                out.hess[i * n + j] = v;
                out.hess[j * n + i] = v;
            }
        }
        out
    }

    fn add(&self, rhs: &Dual2, sign: f64) -> Dual2 {
        let n = self.dim();
        let mut out = Dual2::constant(n, self.value + sign * rhs.value);
        for i in 0..n {
            out.grad[i] = self.grad[i] + sign * rhs.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let v = self.h(i, j) + sign * rhs.h(i, j);
                out.hess[i * n + j] = v;
                out.hess[j * n + i] = v;
            }
        }
        out
    }

    fn mul(&self, rhs: &Dual2) -> Dual2 {
        let n = self.dim();
        let mut out = Dual2::constant(n, self.value * rhs.value);
        for i in 0..n {
            out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let v = self.h(i, j) * rhs.value
                    + self.value * rhs.h(i, j)
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
                out.hess[i * n + j] = v;
                out.hess[j * n + i] = v;
            }
        }
        out
    }
}

fn unary_derivatives(op: UnaryOp, x: f64, fx: f64) -> Result<(f64, f64)> {
    Ok(match op {
        UnaryOp::Neg => (-1.0, 0.0),
        UnaryOp::Exp => (fx, fx),
        UnaryOp::Log => (1.0 / x, -1.0 / (x * x)),
        UnaryOp::Sqrt => {
            if x == 0.0 {
                return Err(GeomError::Domain {
                    op: "sqrt derivative",
                    arg: x,
                });
            }
            (0.5 / fx, -0.25 / (fx * x))
        }
        UnaryOp::Sin => (x.cos(), -fx),
        UnaryOp::Cos => (-x.sin(), -fx),
        UnaryOp::LnGamma => (special::polygamma(0, x), special::polygamma(1, x)),
        UnaryOp::Polygamma(n) => (special::polygamma(n + 1, x), special::polygamma(n + 2, x)),
    })
}

pub(super) fn eval2(node: &ExprNode, p: &[f64]) -> Result<Dual2> {
    let n = p.len();
    let out = match node {
        ExprNode::Const(c) => Dual2::constant(n, *c),
        ExprNode::Var(i) => Dual2::variable(n, *i, p[*i]),
        ExprNode::Unary(op, a) => {
            let a = eval2(a, p)?;
            let f0 = unary_value(*op, a.value)?;
            let (f1, f2) = unary_derivatives(*op, a.value, f0)?;
            a.chain(f0, f1, f2)
        }
        ExprNode::Binary(op, a, b) => {
            let a = eval2(a, p)?;
            let b = eval2(b, p)?;
            match op {
                BinaryOp::Add => a.add(&b, 1.0),
                BinaryOp::Sub => a.add(&b, -1.0),
                BinaryOp::Mul => a.mul(&b),
                BinaryOp::Div => {
                    let y = b.value;
                    if y == 0.0 {
                        return Err(GeomError::Domain { op: "division", arg: y });
                    }
                    let r = 1.0 / y;
                    a.mul(&b.chain(r, -r * r, 2.0 * r * r * r))
                }
            }
        }
        ExprNode::Pow(a, c) => {
            let a = eval2(a, p)?;
            let x = a.value;
            let f0 = pow_value(x, *c)?;
            let f1 = if *c == 0.0 { 0.0 } else { c * pow_value(x, c - 1.0)? };
            let f2 = if *c == 0.0 || *c == 1.0 {
                0.0
            } else {
                c * (c - 1.0) * pow_value(x, c - 2.0)?
            };
            a.chain(f0, f1, f2)
        }
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(GeomError::NonFinite("second-order evaluation"))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::super::parse_expression;

    fn field(text: &str, coords: &[&str]) -> super::super::ScalarField {
        let c: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        parse_expression(text, &c, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn exp_at_zero() {
        let d = field("exp(t)", &["t"]).eval2(&[0.0]).unwrap();
        assert_eq!((d.value, d.grad[0], d.h(0, 0)), (1.0, 1.0, 1.0));
    }

    #[test]
    fn bilinear_form() {
        let d = field("x*y", &["x", "y"]).eval2(&[2.0, 3.0]).unwrap();
        assert_eq!(d.grad, vec![3.0, 2.0]);
        assert_eq!(d.h(0, 1), 1.0);
        assert_eq!(d.h(1, 0), 1.0);
        assert_eq!(d.h(0, 0), 0.0);
    }

    #[test]
    fn inverse_square() {
        // Frozen by hand differentiation of y^-2: -2 y^-3 and 6 y^-4 at y = 2.
        let d = field("1/(y*y)", &["y"]).eval2(&[2.0]).unwrap();
        assert!((d.grad[0] + 0.25).abs() < 1e-15);
        assert!((d.h(0, 0) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let d = field("3.5 * 2", &["x", "y"]).eval2(&[0.1, 0.2]).unwrap();
        assert!(d.grad.iter().all(|&g| g == 0.0));
        assert!(d.hess.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn pow_rules() {
        let d = field("x^3", &["x"]).eval2(&[2.0]).unwrap();
        assert_eq!((d.value, d.grad[0], d.h(0, 0)), (8.0, 12.0, 12.0));
        let d = field("x^0", &["x"]).eval2(&[0.0]).unwrap();
        assert_eq!((d.value, d.grad[0], d.h(0, 0)), (1.0, 0.0, 0.0));
        assert!(field("sqrt(x)", &["x"]).eval2(&[0.0]).is_err());
        assert!(field("x^0.5", &["x"]).eval2(&[0.0]).is_err());
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let f = field("sin(x*y) * exp(z/x) + log(y*z) / (x + 3)", &["x", "y", "z"]);
        let d = f.eval2(&[0.7, 1.3, 2.1]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d.h(i, j).to_bits(), d.h(j, i).to_bits());
            }
        }
    }
}
