//! Recursive-descent parser for coordinate expressions.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! Unary minus binds looser than `^` (`-x^2` is `-(x^2)`) and `^` is
//! right-associative. Identifiers resolve to coordinates first, then to
//! parameters, which are substituted as constants.

use std::collections::BTreeMap;

use super::{BinaryOp, ExprNode, ScalarField, UnaryOp};
use crate::error::{GeomError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| GeomError::Syntax {
                    offset: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                if !v.is_finite() {
                    return Err(GeomError::Syntax {
                        offset: start,
                        message: format!("number `{lit}` overflows"),
                    });
                }
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(GeomError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    coords: &'a [String],
    params: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(GeomError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<ExprNode> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = ExprNode::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<ExprNode> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = ExprNode::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<ExprNode> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.factor()?;
            return Ok(ExprNode::unary(UnaryOp::Neg, inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprNode> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exponent = self.factor()?;
        if exponent.is_const() {
            let c = exponent.eval(&[]).map_err(|e| GeomError::Syntax {
                offset: self.offset(),
                message: format!("constant exponent does not evaluate: {e}"),
            })?;
            Ok(ExprNode::Pow(Box::new(base), c))
        } else {
            // a^b = exp(b * log(a)) for non-constant exponents
            let log_a = ExprNode::unary(UnaryOp::Log, base);
            Ok(ExprNode::unary(
                UnaryOp::Exp,
                ExprNode::binary(BinaryOp::Mul, exponent, log_a),
            ))
        }
    }

    fn atom(&mut self) -> Result<ExprNode> {
        let offset = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(ExprNode::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return self.syntax("expected `)`");
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let op = match name.as_str() {
                        "exp" => UnaryOp::Exp,
                        "log" => UnaryOp::Log,
                        "sqrt" => UnaryOp::Sqrt,
                        "sin" => UnaryOp::Sin,
                        "cos" => UnaryOp::Cos,
                        _ => {
                            return Err(GeomError::Syntax {
                                offset,
                                message: format!("unknown function `{name}`"),
                            })
                        }
                    };
                    self.bump();
                    let arg = self.expr()?;
                    if *self.peek() != Tok::RParen {
                        return self.syntax("expected `)` after function argument");
                    }
                    self.bump();
                    return Ok(ExprNode::unary(op, arg));
                }
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    return Ok(ExprNode::Var(i));
                }
                match self.params.get(&name) {
                    Some(&v) => Ok(ExprNode::Const(v)),
                    None => Err(GeomError::UnknownIdentifier(name)),
                }
            }
            Tok::End => Err(GeomError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            }),
            t => Err(GeomError::Syntax {
                offset,
                message: format!("unexpected token {t:?}"),
            }),
        }
    }
}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parse `text` into a field over the coordinates `coords`, substituting the
/// values in `params`.
pub fn parse_expression(
    text: &str,
    coords: &[String],
    params: &BTreeMap<String, f64>,
) -> Result<ScalarField> {
    if coords.is_empty() {
        return Err(GeomError::Arity { expected: 1, got: 0 });
    }
    for (i, c) in coords.iter().enumerate() {
        if !valid_identifier(c) {
            return Err(GeomError::Syntax {
                offset: 0,
                message: format!("invalid coordinate name `{c}`"),
            });
        }
        if coords[..i].contains(c) || params.contains_key(c) {
            return Err(GeomError::Syntax {
                offset: 0,
                message: format!("identifier `{c}` is declared twice"),
            });
        }
    }
    let mut parser = Parser {
        toks: tokenize(text)?,
        pos: 0,
        coords,
        params,
    };
    let expr = parser.expr()?;
    if *parser.peek() != Tok::End {
        return parser.syntax("unexpected trailing input");
    }
    Ok(ScalarField::from_expr(expr, coords.len())?.with_params(params))
}
