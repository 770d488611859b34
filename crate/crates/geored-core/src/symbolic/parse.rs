//! Infix expression syntax shared by scalars, forms and vector fields.
//!
//! `+ - * / ^`, parentheses, calls `f(a, b)`, integer literals and juxtaposition as product.
//! A `^` directly followed by a letter continues a name (`p^t`); any other `^` is an operator.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::{Bindings, Expr, OpaqueDef, Point, Q};
use crate::error::{Error, Result};

/// Unnormalized syntax tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Num(BigInt),
    Name(String),
    Neg(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Div(Box<Term>, Box<Term>),
    Pow(Box<Term>, Box<Term>),
    Call(String, Vec<Term>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Name(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push((Tok::Num(s.parse::<BigInt>().unwrap()), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            loop {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                if i + 1 < chars.len() && chars[i] == '^' && chars[i + 1].is_ascii_alphabetic() {
                    i += 1;
                    continue;
                }
                break;
            }
            out.push((Tok::Name(chars[start..i].iter().collect()), col));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else {
            return Err(Error::Parse { col, msg: alloc::format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end_col)
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse { col: self.col(), msg: msg.to_string() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Term> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Term::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Term::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Some(Tok::Num(_)) | Some(Tok::Name(_)) | Some(Tok::Op('(')))
    }

    fn term(&mut self) -> Result<Term> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Term::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Term::Div(Box::new(lhs), Box::new(self.unary()?));
            } else if self.starts_atom() {
                lhs = Term::Mul(Box::new(lhs), Box::new(self.power()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Term> {
        if self.eat('-') {
            return Ok(Term::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Term> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Term::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Term> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Term::Num(n))
            }
            Some(Tok::Name(n)) => {
                self.pos += 1;
                if self.eat('(') {
                    let mut args = Vec::new();
                    if !self.eat(')') {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(')') {
                                break;
                            }
                            if !self.eat(',') {
                                return self.err("expected `,` or `)`");
                            }
                        }
                    }
                    Ok(Term::Call(n, args))
                } else {
                    Ok(Term::Name(n))
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(Tok::Op(c)) => self.err(&alloc::format!("unexpected `{c}`")),
            None => self.err("unexpected end of expression"),
        }
    }
}

/// Parses `src` into a syntax tree; errors carry a 1-based column.
pub fn parse_term(src: &str) -> Result<Term> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, end_col: src.chars().count() + 1 };
    let t = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(t)
}

/// Declared opaque functions and their arities.
pub type Opaques = BTreeMap<String, usize>;

/// Splits `C__1_2` into `("C", [1, 1])` for a declared `C` of arity 2.
pub fn split_partial(name: &str, opaques: &Opaques) -> Option<(String, Vec<u32>)> {
    if let Some(&ar) = opaques.get(name) {
        return Some((name.to_string(), alloc::vec![0; ar]));
    }
    let (base, suffix) = name.rsplit_once("__")?;
    let &ar = opaques.get(base)?;
    let mut partials = alloc::vec![0u32; ar];
    for piece in suffix.split('_') {
        let j: usize = piece.parse().ok()?;
        if j == 0 || j > ar {
            return None;
        }
        partials[j - 1] += 1;
    }
    Some((base.to_string(), partials))
}

fn exponent(t: &Term) -> Result<i32> {
    let v = match t {
        Term::Num(n) => n.to_i32(),
        Term::Neg(inner) => match inner.as_ref() {
            Term::Num(n) => n.to_i32().map(|v| -v),
            _ => None,
        },
        _ => None,
    };
    v.ok_or_else(|| Error::Invalid(alloc::format!("exponent `{t}` is not an integer literal")))
}

impl Term {
    /// Normal form; calls must be declared opaque functions or their partials.
    pub fn to_expr(&self, opaques: &Opaques) -> Result<Expr> {
        Ok(match self {
            Term::Num(n) => Expr::constant(Q::from_integer(n.clone())),
            Term::Name(n) => Expr::sym(n),
            Term::Neg(a) => -a.to_expr(opaques)?,
            Term::Add(a, b) => a.to_expr(opaques)? + b.to_expr(opaques)?,
            Term::Sub(a, b) => a.to_expr(opaques)? - b.to_expr(opaques)?,
            Term::Mul(a, b) => a.to_expr(opaques)? * b.to_expr(opaques)?,
            Term::Div(a, b) => {
                let d = b.to_expr(opaques)?;
                if d.is_zero() {
                    return Err(Error::DivisionByZero { subterm: self.to_string() });
                }
                a.to_expr(opaques)?.checked_div(&d)?
            }
            Term::Pow(a, b) => {
                let base = a.to_expr(opaques)?;
                let e = exponent(b)?;
                if e < 0 && base.is_zero() {
                    return Err(Error::DivisionByZero { subterm: self.to_string() });
                }
                base.powi(e)?
            }
            Term::Call(name, args) => {
                let (base, partials) = split_partial(name, opaques)
                    .ok_or_else(|| Error::UnknownName(alloc::format!("{name}(..)")))?;
                if partials.len() != args.len() {
                    return Err(Error::Invalid(alloc::format!(
                        "opaque `{base}` takes {} argument(s), got {}",
                        partials.len(),
                        args.len()
                    )));
                }
                let args = args.iter().map(|a| a.to_expr(opaques)).collect::<Result<Vec<_>>>()?;
                Expr::apply_partial(&base, partials, args)
            }
        })
    }

    /// Literal evaluation without normalizing; a vanishing divisor is reported with its subterm.
    pub fn evaluate(&self, p: &Point, b: &Bindings) -> Result<Q> {
        Ok(match self {
            Term::Num(n) => Q::from_integer(n.clone()),
            Term::Name(n) => p.get(n).cloned().ok_or_else(|| Error::MissingValue(n.clone()))?,
            Term::Neg(a) => -a.evaluate(p, b)?,
            Term::Add(x, y) => x.evaluate(p, b)? + y.evaluate(p, b)?,
            Term::Sub(x, y) => x.evaluate(p, b)? - y.evaluate(p, b)?,
            Term::Mul(x, y) => x.evaluate(p, b)? * y.evaluate(p, b)?,
            Term::Div(x, y) => {
                let d = y.evaluate(p, b)?;
                if d.is_zero() {
                    return Err(Error::DivisionByZero { subterm: self.to_string() });
                }
                x.evaluate(p, b)? / d
            }
            Term::Pow(x, y) => {
                let v = x.evaluate(p, b)?;
                let e = exponent(y)?;
                if e < 0 {
                    if v.is_zero() {
                        return Err(Error::DivisionByZero { subterm: self.to_string() });
                    }
                    num_traits::pow(v.recip(), (-e) as usize)
                } else {
                    num_traits::pow(v, e as usize)
                }
            }
            Term::Call(name, args) => {
                let opaques: Opaques = b.0.iter().map(|(k, d)| (k.clone(), d.arity)).collect();
                let (base, partials) =
                    split_partial(name, &opaques).ok_or_else(|| Error::UnboundOpaque(name.clone()))?;
                let def: &OpaqueDef = &b.0[&base];
                let mut inner = p.clone();
                for (j, a) in args.iter().enumerate() {
                    inner.set(&OpaqueDef::formal(j), a.evaluate(p, b)?);
                }
                def.derived(&partials).evaluate(&inner, b)?
            }
        })
    }
}

impl Term {
    /// Floating-point evaluation with `sin cos tan exp log sqrt` and the constant `pi`.
    pub fn eval_f64(&self, vars: &BTreeMap<String, f64>) -> Result<f64> {
        let v = match self {
            Term::Num(n) => n.to_f64().unwrap_or(f64::NAN),
            Term::Name(n) => match vars.get(n) {
                Some(v) => *v,
                None if n == "pi" => core::f64::consts::PI,
                None => return Err(Error::MissingValue(n.clone())),
            },
            Term::Neg(a) => -a.eval_f64(vars)?,
            Term::Add(x, y) => x.eval_f64(vars)? + y.eval_f64(vars)?,
            Term::Sub(x, y) => x.eval_f64(vars)? - y.eval_f64(vars)?,
            Term::Mul(x, y) => x.eval_f64(vars)? * y.eval_f64(vars)?,
            Term::Div(x, y) => {
                let d = y.eval_f64(vars)?;
                if d == 0.0 {
                    return Err(Error::DivisionByZero { subterm: self.to_string() });
                }
                x.eval_f64(vars)? / d
            }
            Term::Pow(x, y) => libm::pow(x.eval_f64(vars)?, y.eval_f64(vars)?),
            Term::Call(name, args) => {
                let [a] = args.as_slice() else {
                    return Err(Error::Invalid(alloc::format!("`{name}` takes one argument")));
                };
                let a = a.eval_f64(vars)?;
                match name.as_str() {
                    "sin" => libm::sin(a),
                    "cos" => libm::cos(a),
                    "tan" => libm::tan(a),
                    "exp" => libm::exp(a),
                    "log" => libm::log(a),
                    "sqrt" => libm::sqrt(a),
                    _ => return Err(Error::UnknownName(alloc::format!("{name}(..)"))),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(self.to_string()))
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Num(n) => write!(f, "{n}"),
            Term::Name(n) => f.write_str(n),
            Term::Neg(a) => write!(f, "-({a})"),
            Term::Add(a, b) => write!(f, "({a} + {b})"),
            Term::Sub(a, b) => write!(f, "({a} - {b})"),
            Term::Mul(a, b) => write!(f, "{a}*{b}"),
            Term::Div(a, b) => write!(f, "{a}/{b}"),
            Term::Pow(a, b) => write!(f, "{a}^{b}"),
            Term::Call(n, args) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses straight to normal form.
pub fn parse_expr(src: &str, opaques: &Opaques) -> Result<Expr> {
    parse_term(src)?.to_expr(opaques)
}
