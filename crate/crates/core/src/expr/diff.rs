//! Symbolic partial derivatives. Used where more than two derivative levels
//! are needed, e.g. a Fisher metric built as the Hessian of a potential
//! still has to be differentiated twice more for curvature.

use super::{pow_value, unary_value, BinaryOp, ExprNode, UnaryOp};

fn constant(e: &ExprNode) -> Option<f64> {
    e.as_const()
}

pub(super) fn add(a: ExprNode, b: ExprNode) -> ExprNode {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => ExprNode::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => ExprNode::binary(BinaryOp::Add, a, b),
    }
}

pub(super) fn sub(a: ExprNode, b: ExprNode) -> ExprNode {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => ExprNode::Const(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => ExprNode::binary(BinaryOp::Sub, a, b),
    }
}

pub(super) fn mul(a: ExprNode, b: ExprNode) -> ExprNode {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => ExprNode::Const(x * y),
        (Some(x), _) if x == 0.0 => ExprNode::Const(0.0),
        (_, Some(y)) if y == 0.0 => ExprNode::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => ExprNode::binary(BinaryOp::Mul, a, b),
    }
}

fn div(a: ExprNode, b: ExprNode) -> ExprNode {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) if y != 0.0 => ExprNode::Const(x / y),
        (Some(x), _) if x == 0.0 => ExprNode::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => ExprNode::binary(BinaryOp::Div, a, b),
    }
}

fn neg(a: ExprNode) -> ExprNode {
    match a {
        ExprNode::Const(c) => ExprNode::Const(-c),
        ExprNode::Unary(UnaryOp::Neg, inner) => *inner,
        other => ExprNode::unary(UnaryOp::Neg, other),
    }
}

fn pow(a: ExprNode, c: f64) -> ExprNode {
    if c == 0.0 {
        return ExprNode::Const(1.0);
    }
    if c == 1.0 {
        return a;
    }
    ExprNode::Pow(Box::new(a), c)
}

/// Partial derivative of `e` along coordinate `i`.
pub(super) fn derivative(e: &ExprNode, i: usize) -> ExprNode {
    match e {
        ExprNode::Const(_) => ExprNode::Const(0.0),
        ExprNode::Var(j) => ExprNode::Const(if *j == i { 1.0 } else { 0.0 }),
        ExprNode::Unary(op, a) => {
            let da = derivative(a, i);
            if constant(&da) == Some(0.0) {
                return ExprNode::Const(0.0);
            }
            let a = a.as_ref().clone();
            let outer = match op {
                UnaryOp::Neg => return neg(da),
                UnaryOp::Exp => ExprNode::unary(UnaryOp::Exp, a),
                UnaryOp::Log => return div(da, a),
                UnaryOp::Sqrt => {
                    return div(da, mul(ExprNode::Const(2.0), ExprNode::unary(UnaryOp::Sqrt, a)))
                }
                UnaryOp::Sin => ExprNode::unary(UnaryOp::Cos, a),
                UnaryOp::Cos => neg(ExprNode::unary(UnaryOp::Sin, a)),
                UnaryOp::LnGamma => ExprNode::unary(UnaryOp::Polygamma(0), a),
                UnaryOp::Polygamma(n) => ExprNode::unary(UnaryOp::Polygamma(n + 1), a),
            };
            mul(outer, da)
        }
        ExprNode::Binary(op, a, b) => {
            let da = derivative(a, i);
            let db = derivative(b, i);
            let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
            match op {
                BinaryOp::Add => add(da, db),
                BinaryOp::Sub => sub(da, db),
                BinaryOp::Mul => add(mul(da, b.clone()), mul(a, db)),
                BinaryOp::Div => {
                    // (a/b)' = a'/b - a b' / b^2
                    let first = div(da, b.clone());
                    if constant(&db) == Some(0.0) {
                        return first;
                    }
                    sub(first, div(mul(a, db), pow(b, 2.0)))
                }
            }
        }
        ExprNode::Pow(a, c) => {
            let da = derivative(a, i);
            if constant(&da) == Some(0.0) {
                return ExprNode::Const(0.0);
            }
            mul(
                mul(ExprNode::Const(*c), pow(a.as_ref().clone(), c - 1.0)),
                da,
            )
        }
    }
}

/// Collapse constant subtrees whose value is well defined.
pub(super) fn fold_constants(e: &ExprNode) -> ExprNode {
    match e {
        ExprNode::Const(_) | ExprNode::Var(_) => e.clone(),
        ExprNode::Unary(op, a) => {
            let a = fold_constants(a);
            if let Some(x) = constant(&a) {
                if let Ok(v) = unary_value(*op, x) {
                    if v.is_finite() {
                        return ExprNode::Const(v);
                    }
                }
            }
            ExprNode::unary(*op, a)
        }
        ExprNode::Binary(op, a, b) => {
            let (a, b) = (fold_constants(a), fold_constants(b));
            if let (Some(x), Some(y)) = (constant(&a), constant(&b)) {
                let v = match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => x / y,
                };
                if v.is_finite() {
                    return ExprNode::Const(v);
                }
            }
            ExprNode::binary(*op, a, b)
        }
        ExprNode::Pow(a, c) => {
            let a = fold_constants(a);
            if let Some(x) = constant(&a) {
                if let Ok(v) = pow_value(x, *c) {
                    if v.is_finite() {
                        return ExprNode::Const(v);
                    }
                }
            }
            ExprNode::Pow(Box::new(a), *c)
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::super::{parse_expression, ScalarField};
    use super::*;

    fn field(text: &str, coords: &[&str]) -> ScalarField {
        let c: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        parse_expression(text, &c, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn symbolic_matches_forward_mode() {
        let f = field(
            "sin(x*y) * exp(z/x) + log(y*z) / (x + 3) - sqrt(x*x + z) + (y^3) * cos(z)",
            &["x", "y", "z"],
        );
        let p = [0.7, 1.3, 2.1];
        let d = f.eval2(&p).unwrap();
        for i in 0..3 {
            let fi = f.derivative(i).unwrap();
            let di = fi.eval2(&p).unwrap();
            assert!((di.value - d.grad[i]).abs() < 1e-12 * (1.0 + d.grad[i].abs()));
            for j in 0..3 {
                assert!((di.grad[j] - d.h(i, j)).abs() < 1e-11 * (1.0 + d.h(i, j).abs()));
            }
        }
    }

    #[test]
    fn special_function_chain() {
        let lg = ExprNode::unary(UnaryOp::LnGamma, ExprNode::binary(BinaryOp::Mul, ExprNode::Var(0), ExprNode::Var(0)));
        let f = ScalarField::from_expr(lg, 1).unwrap();
        let x: f64 = 1.7;
        let d1 = f.derivative(0).unwrap().eval(&[x]).unwrap();
        assert!((d1 - 2.0 * x * crate::special::digamma(x * x)).abs() < 1e-12);
        let d2 = f.derivative(0).unwrap().derivative(0).unwrap().eval(&[x]).unwrap();
        let expect = 2.0 * crate::special::digamma(x * x)
            + 4.0 * x * x * crate::special::trigamma(x * x);
        assert!((d2 - expect).abs() < 1e-11);
    }

    #[test]
    fn derivative_of_unrelated_variable_is_zero() {
        let f = field("exp(x) * log(x)", &["x", "y"]);
        assert!(f.derivative(1).unwrap().is_zero());
    }
}
