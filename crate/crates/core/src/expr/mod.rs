//! Coordinate expressions: parsing, evaluation, exact first and second
//! derivatives, and finite-difference cross-checks.
//!
//! Every component of every field in this crate (metric entries, connection
//! coefficients, product structure entries, exponential-family potentials) is a
//! [`ScalarField`] over the chart coordinates. Parameters are substituted as
//! constants when the text is parsed, so a field never looks anything up at
//! evaluation time.

mod diff;
mod dual;
pub(crate) mod fd;
mod parser;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

pub use dual::Dual2;
pub use fd::{fd_check, FdReport};
pub use parser::parse_expression;

use crate::error::{GeomError, Result};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    /// log-gamma; only produced programmatically (not part of the text grammar).
    LnGamma,
    /// polygamma of the given order; only produced programmatically.
    Polygamma(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression tree. `Pow` carries a constant exponent; non-constant exponents
/// are rewritten as `exp(b * log(a))` by the parser.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<ExprNode>),
    Binary(BinaryOp, Box<ExprNode>, Box<ExprNode>),
    Pow(Box<ExprNode>, f64),
}

impl ExprNode {
    pub fn unary(op: UnaryOp, a: ExprNode) -> ExprNode {
        ExprNode::Unary(op, Box::new(a))
    }

    pub fn binary(op: BinaryOp, a: ExprNode, b: ExprNode) -> ExprNode {
        ExprNode::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn is_const(&self) -> bool {
        match self {
            ExprNode::Const(_) => true,
            ExprNode::Var(_) => false,
            ExprNode::Unary(_, a) => a.is_const(),
            ExprNode::Binary(_, a, b) => a.is_const() && b.is_const(),
            ExprNode::Pow(a, _) => a.is_const(),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            ExprNode::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            ExprNode::Const(_) => None,
            ExprNode::Var(i) => Some(*i),
            ExprNode::Unary(_, a) | ExprNode::Pow(a, _) => a.max_var(),
            ExprNode::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Replace every variable by the expression returned from `f`.
    pub fn map_vars(&self, f: &impl Fn(usize) -> ExprNode) -> ExprNode {
        match self {
            ExprNode::Const(c) => ExprNode::Const(*c),
            ExprNode::Var(i) => f(*i),
            ExprNode::Unary(op, a) => ExprNode::unary(*op, a.map_vars(f)),
            ExprNode::Binary(op, a, b) => ExprNode::binary(*op, a.map_vars(f), b.map_vars(f)),
            ExprNode::Pow(a, c) => ExprNode::Pow(Box::new(a.map_vars(f)), *c),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            ExprNode::Const(_) | ExprNode::Var(_) => 1,
            ExprNode::Unary(_, a) | ExprNode::Pow(a, _) => 1 + a.node_count(),
            ExprNode::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Plain value at `p`.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        let v = match self {
            ExprNode::Const(c) => *c,
            ExprNode::Var(i) => p[*i],
            ExprNode::Unary(op, a) => {
                let x = a.eval(p)?;
                unary_value(*op, x)?
            }
            ExprNode::Binary(op, a, b) => {
                let x = a.eval(p)?;
                let y = b.eval(p)?;
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y == 0.0 {
                            return Err(GeomError::Domain { op: "division", arg: y });
                        }
                        x / y
                    }
                }
            }
            ExprNode::Pow(a, c) => pow_value(a.eval(p)?, *c)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(GeomError::NonFinite(self.op_name()))
        }
    }

    fn op_name(&self) -> &'static str {
        match self {
            ExprNode::Const(_) => "constant",
            ExprNode::Var(_) => "variable",
            ExprNode::Unary(op, _) => unary_name(*op),
            ExprNode::Binary(op, _, _) => match op {
                BinaryOp::Add => "addition",
                BinaryOp::Sub => "subtraction",
                BinaryOp::Mul => "multiplication",
                BinaryOp::Div => "division",
            },
            ExprNode::Pow(_, _) => "pow",
        }
    }

    /// Fully parenthesised text in the expression grammar. Internal special
    /// functions print as `lgamma(..)` and `polygamma<n>(..)`.
    pub fn to_text(&self, coords: &[String]) -> String {
        let mut s = String::new();
        self.write_text(coords, &mut s);
        s
    }

    fn write_text(&self, coords: &[String], out: &mut String) {
        match self {
            ExprNode::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    let _ = write!(out, "(-{:?})", -c);
                } else {
                    let _ = write!(out, "{c:?}");
                }
            }
            ExprNode::Var(i) => out.push_str(&coords[*i]),
            ExprNode::Unary(UnaryOp::Neg, a) => {
                out.push_str("(-");
                a.write_text(coords, out);
                out.push(')');
            }
            ExprNode::Unary(op, a) => {
                match op {
                    UnaryOp::Polygamma(n) => {
                        let _ = write!(out, "polygamma{n}");
                    }
                    _ => out.push_str(unary_name(*op)),
                }
                out.push('(');
                a.write_text(coords, out);
                out.push(')');
            }
            ExprNode::Binary(op, a, b) => {
                out.push('(');
                a.write_text(coords, out);
                out.push_str(match op {
                    BinaryOp::Add => " + ",
                    BinaryOp::Sub => " - ",
                    BinaryOp::Mul => " * ",
                    BinaryOp::Div => " / ",
                });
                b.write_text(coords, out);
                out.push(')');
            }
            ExprNode::Pow(a, c) => {
                out.push('(');
                a.write_text(coords, out);
                out.push_str(" ^ ");
                ExprNode::Const(*c).write_text(coords, out);
                out.push(')');
            }
        }
    }
}

fn unary_name(op: UnaryOp) -> &'static str {
    match op {
        UnaryOp::Neg => "neg",
        UnaryOp::Exp => "exp",
        UnaryOp::Log => "log",
        UnaryOp::Sqrt => "sqrt",
        UnaryOp::Sin => "sin",
        UnaryOp::Cos => "cos",
        UnaryOp::LnGamma => "lgamma",
        UnaryOp::Polygamma(_) => "polygamma",
    }
}

pub(crate) fn unary_value(op: UnaryOp, x: f64) -> Result<f64> {
    Ok(match op {
        UnaryOp::Neg => -x,
        UnaryOp::Exp => x.exp(),
        UnaryOp::Log => {
            if x <= 0.0 {
                return Err(GeomError::Domain { op: "log", arg: x });
            }
            x.ln()
        }
        UnaryOp::Sqrt => {
            if x < 0.0 {
                return Err(GeomError::Domain { op: "sqrt", arg: x });
            }
            x.sqrt()
        }
        UnaryOp::Sin => x.sin(),
        UnaryOp::Cos => x.cos(),
        UnaryOp::LnGamma => {
            if x <= 0.0 {
                return Err(GeomError::Domain { op: "lgamma", arg: x });
            }
            special::ln_gamma(x)
        }
        UnaryOp::Polygamma(n) => {
            if x <= 0.0 {
                return Err(GeomError::Domain { op: "polygamma", arg: x });
            }
            special::polygamma(n, x)
        }
    })
}

pub(crate) fn pow_value(base: f64, exponent: f64) -> Result<f64> {
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(GeomError::Domain { op: "pow", arg: base });
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(GeomError::Domain { op: "pow", arg: base });
    }
    Ok(base.powf(exponent))
}

/// A smooth real function of the chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    expr: Arc<ExprNode>,
    arity: usize,
    params: Arc<BTreeMap<String, f64>>,
}

impl ScalarField {
    /// Wrap an expression tree; fails if it references a coordinate `>= arity`.
    pub fn from_expr(expr: ExprNode, arity: usize) -> Result<Self> {
        if arity == 0 {
            return Err(GeomError::Arity { expected: 1, got: 0 });
        }
        if let Some(m) = expr.max_var() {
            if m >= arity {
                return Err(GeomError::Arity {
                    expected: arity,
                    got: m + 1,
                });
            }
        }
        Ok(ScalarField {
            expr: Arc::new(expr),
            arity,
            params: Arc::new(BTreeMap::new()),
        })
    }

    pub(crate) fn with_params(mut self, params: &BTreeMap<String, f64>) -> Self {
        self.params = Arc::new(params.clone());
        self
    }

    pub fn constant(arity: usize, c: f64) -> Self {
        ScalarField {
            expr: Arc::new(ExprNode::Const(c)),
            arity,
            params: Arc::new(BTreeMap::new()),
        }
    }

    pub fn zero(arity: usize) -> Self {
        Self::constant(arity, 0.0)
    }

    pub fn coordinate(arity: usize, i: usize) -> Result<Self> {
        Self::from_expr(ExprNode::Var(i), arity)
    }

    pub fn expr(&self) -> &ExprNode {
        &self.expr
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Parameter values frozen into this field when it was parsed.
    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self.expr, ExprNode::Const(c) if c == 0.0)
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.expr.as_const()
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.arity {
            return Err(GeomError::Arity {
                expected: self.arity,
                got: p.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        self.expr.eval(p)
    }

    /// Value, gradient and Hessian at `p` by second-order forward propagation.
    pub fn eval2(&self, p: &[f64]) -> Result<Dual2> {
        self.check_point(p)?;
        dual::eval2(&self.expr, p)
    }

    /// Exact partial derivative along coordinate `i`, as a new field.
    pub fn derivative(&self, i: usize) -> Result<ScalarField> {
        if i >= self.arity {
            return Err(GeomError::Arity {
                expected: self.arity,
                got: i + 1,
            });
        }
        Ok(ScalarField {
            expr: Arc::new(diff::derivative(&self.expr, i)),
            arity: self.arity,
            params: self.params.clone(),
        })
    }

    /// Restrict to the coordinates in `keep` (in that order), freezing every
    /// other coordinate at the matching entry of `frozen_point`.
    pub fn restrict(&self, keep: &[usize], frozen_point: &[f64]) -> Result<ScalarField> {
        self.check_point(frozen_point)?;
        let map = |i: usize| match keep.iter().position(|&k| k == i) {
            Some(pos) => ExprNode::Var(pos),
            None => ExprNode::Const(frozen_point[i]),
        };
        let expr = diff::fold_constants(&self.expr.map_vars(&map));
        Ok(ScalarField {
            expr: Arc::new(expr),
            arity: keep.len(),
            params: self.params.clone(),
        })
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        self.map_expr(|e| diff::mul(ExprNode::Const(s), e))
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        let rhs = other.expr.as_ref().clone();
        self.map_expr(|e| diff::add(e, rhs))
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        let rhs = other.expr.as_ref().clone();
        self.map_expr(|e| diff::mul(e, rhs))
    }

    fn map_expr(&self, f: impl FnOnce(ExprNode) -> ExprNode) -> ScalarField {
        ScalarField {
            expr: Arc::new(f(self.expr.as_ref().clone())),
            arity: self.arity,
            params: self.params.clone(),
        }
    }

    pub fn to_text(&self, coords: &[String]) -> String {
        self.expr.to_text(coords)
    }
}
