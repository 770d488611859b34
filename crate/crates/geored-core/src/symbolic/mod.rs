//! Exact rational-function expressions over coordinates, parameters and opaque functions.
//!
//! An [`Expr`] is kept as a quotient of two sparse polynomials with rational coefficients. Atoms
//! are plain symbols or applications of opaque functions, and an opaque application carries the
//! multi-index of partial derivatives taken so far. Equality of normal forms is decided by
//! cross-multiplication, which is exact for everything built from polynomial and rational
//! operations on algebraically independent atoms.

mod chart;
mod display;
mod equal;
mod eval;
mod parse;
mod poly;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub use chart::{Chart, Point, PointF64};
pub use equal::{expr_equal, Equality};
pub use eval::{Bindings, Compiled, OpaqueDef};
pub use parse::{parse_expr, parse_term, split_partial, Opaques, Term};
pub use poly::{Application, Atom, Mono, Poly};
pub use display::partial_name;

pub type Q = num_rational::BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Rational function `num / den` in normal form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl Expr {
    pub fn zero() -> Self {
        Expr { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        Expr::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Expr { num: Poly::constant(c), den: Poly::one() }
    }

    pub fn int(n: i64) -> Self {
        Expr::constant(qi(n))
    }

    pub fn rational(n: i64, d: i64) -> Self {
        Expr::constant(q(n, d))
    }

    pub fn sym(name: &str) -> Self {
        Expr::from_poly(Poly::from_atom(Atom::Sym(Arc::from(name))))
    }

    /// Underived opaque application `name(args)`.
    pub fn apply(name: &str, args: Vec<Expr>) -> Self {
        let partials = alloc::vec![0; args.len()];
        Expr::apply_partial(name, partials, args)
    }

    pub fn apply_partial(name: &str, partials: Vec<u32>, args: Vec<Expr>) -> Self {
        debug_assert_eq!(partials.len(), args.len());
        let app = Application { name: Arc::from(name), partials, args };
        Expr::from_poly(Poly::from_atom(Atom::Apply(Arc::new(app))))
    }

    pub fn from_poly(p: Poly) -> Self {
        Expr { num: p, den: Poly::one() }
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    /// Builds `num / den` and brings it to normal form. `den` must be nonzero.
    pub fn from_parts(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        normalize(num, den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        if !self.den.is_one() || self.num.0.len() != 1 {
            return None;
        }
        let (m, c) = self.num.0.iter().next()?;
        match (m.0.as_slice(), c.is_one()) {
            ([(Atom::Sym(s), 1)], true) => Some(s),
            _ => None,
        }
    }

    pub fn checked_div(&self, other: &Expr) -> Result<Expr> {
        if other.is_zero() {
            return Err(Error::DivisionByZero { subterm: alloc::format!("({self})/({other})") });
        }
        Ok(normalize(self.num.mul(&other.den), self.den.mul(&other.num)))
    }

    pub fn recip(&self) -> Result<Expr> {
        Expr::one().checked_div(self)
    }

    pub fn powi(&self, n: i32) -> Result<Expr> {
        if n >= 0 {
            let n = n as u32;
            Ok(Expr { num: self.num.pow(n), den: self.den.pow(n) })
        } else {
            self.recip()?.powi(-n)
        }
    }

    pub fn scale(&self, c: &Q) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr { num: self.num.scale(c), den: self.den.clone() }
    }

    /// Partial derivative with respect to the symbol `v`.
    pub fn diff(&self, v: &str) -> Expr {
        let dn = poly_diff(&self.num, v);
        if self.den.is_one() {
            return dn;
        }
        let dd = poly_diff(&self.den, v);
        if dd.is_zero() {
            return dn * Expr::from_parts(Poly::one(), self.den.clone());
        }
        // (n/d)' = (n' - e d') / d
        let inv_den = Expr::from_parts(Poly::one(), self.den.clone());
        (dn - self.clone() * dd) * inv_den
    }

    /// Simultaneous substitution of symbols; unmapped symbols are left untouched.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Result<Expr> {
        let mut memo = BTreeMap::new();
        let n = subst_poly(&self.num, map, &mut memo)?;
        if self.den.is_one() {
            return Ok(n);
        }
        let d = subst_poly(&self.den, map, &mut memo)?;
        if d.is_zero() {
            return Err(Error::DivisionByZero { subterm: alloc::format!("{}", Expr::from_poly(self.den.clone())) });
        }
        n.checked_div(&d)
    }

    /// Substitution that insists every symbol of `coords` occurring in `self` is mapped.
    pub fn substitute_checked(&self, map: &BTreeMap<String, Expr>, coords: &[Arc<str>]) -> Result<Expr> {
        let used = self.symbols();
        for c in coords {
            if used.contains(c.as_ref()) && !map.contains_key(c.as_ref()) {
                return Err(Error::MissingValue(c.to_string()));
            }
        }
        self.substitute(map)
    }

    /// Every symbol name occurring anywhere, including inside opaque arguments.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        for p in [&self.num, &self.den] {
            for m in p.0.keys() {
                for (a, _) in &m.0 {
                    match a {
                        Atom::Sym(s) => {
                            out.insert(s.to_string());
                        }
                        Atom::Apply(app) => app.args.iter().for_each(|e| e.collect_symbols(out)),
                    }
                }
            }
        }
    }

    /// Every opaque application occurring anywhere (outermost first).
    pub fn applications(&self) -> Vec<Arc<Application>> {
        let mut out = Vec::new();
        self.collect_apps(&mut out);
        out
    }

    fn collect_apps(&self, out: &mut Vec<Arc<Application>>) {
        for p in [&self.num, &self.den] {
            for m in p.0.keys() {
                for (a, _) in &m.0 {
                    if let Atom::Apply(app) = a {
                        if !out.contains(app) {
                            out.push(app.clone());
                        }
                        app.args.iter().for_each(|e| e.collect_apps(out));
                    }
                }
            }
        }
    }

    pub fn depends_on(&self, v: &str) -> bool {
        self.symbols().contains(v)
    }

    /// Total number of stored terms; a rough size measure.
    pub fn size(&self) -> usize {
        self.num.0.len() + self.den.0.len()
    }
}

fn normalize(mut num: Poly, mut den: Poly) -> Expr {
    if num.is_zero() {
        return Expr::zero();
    }
    if let Some(c) = den.as_constant() {
        return Expr { num: num.scale(&c.recip()), den: Poly::one() };
    }
    let g = num.mono_content().gcd(&den.mono_content());
    if !g.is_one() {
        num = num.div_mono(&g);
        den = den.div_mono(&g);
    }
    if let Some(c) = den.as_constant() {
        return Expr { num: num.scale(&c.recip()), den: Poly::one() };
    }
    if let Some(qt) = num.div_exact(&den) {
        return Expr { num: qt, den: Poly::one() };
    }
    if num.0.len() > 1 || !num.mono_content().is_one() {
        if let Some(qt) = den.div_exact(&num) {
            num = Poly::one();
            den = qt;
            if let Some(c) = den.as_constant() {
                return Expr { num: num.scale(&c.recip()), den: Poly::one() };
            }
        }
    }
    let lc = den.leading().map(|(_, c)| c.clone()).unwrap();
    if !lc.is_one() {
        let inv = lc.recip();
        num = num.scale(&inv);
        den = den.scale(&inv);
    }
    Expr { num, den }
}

fn atom_diff(a: &Atom, v: &str) -> Expr {
    match a {
        Atom::Sym(s) => {
            if s.as_ref() == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Apply(app) => {
            let mut acc = Expr::zero();
            for (j, arg) in app.args.iter().enumerate() {
                let da = arg.diff(v);
                if da.is_zero() {
                    continue;
                }
                let mut partials = app.partials.clone();
                partials[j] += 1;
                let inner = Application { name: app.name.clone(), partials, args: app.args.clone() };
                let f = Expr::from_poly(Poly::from_atom(Atom::Apply(Arc::new(inner))));
                acc = acc + f * da;
            }
            acc
        }
    }
}

fn poly_diff(p: &Poly, v: &str) -> Expr {
    let mut poly_part = Poly::zero();
    let mut rational_part = Expr::zero();
    for (m, c) in p.terms() {
        for (idx, (atom, e)) in m.0.iter().enumerate() {
            let da = atom_diff(atom, v);
            if da.is_zero() {
                continue;
            }
            let mut rest = m.0.clone();
            if *e == 1 {
                rest.remove(idx);
            } else {
                rest[idx].1 = e - 1;
            }
            let coef = c * qi(*e as i64);
            let term = Poly::from_term(Mono(rest), coef);
            match da.as_constant() {
                Some(k) => poly_part = poly_part.add(&term.scale(&k)),
                None => rational_part = rational_part + Expr::from_poly(term) * da,
            }
        }
    }
    Expr::from_poly(poly_part) + rational_part
}

fn subst_atom(a: &Atom, map: &BTreeMap<String, Expr>, memo: &mut BTreeMap<Atom, Expr>) -> Result<Expr> {
    if let Some(e) = memo.get(a) {
        return Ok(e.clone());
    }
    let out = match a {
        Atom::Sym(s) => match map.get(s.as_ref()) {
            Some(e) => e.clone(),
            None => Expr::from_poly(Poly::from_atom(a.clone())),
        },
        Atom::Apply(app) => {
            let args = app.args.iter().map(|e| e.substitute(map)).collect::<Result<Vec<_>>>()?;
            let inner = Application { name: app.name.clone(), partials: app.partials.clone(), args };
            Expr::from_poly(Poly::from_atom(Atom::Apply(Arc::new(inner))))
        }
    };
    memo.insert(a.clone(), out.clone());
    Ok(out)
}

fn subst_poly(p: &Poly, map: &BTreeMap<String, Expr>, memo: &mut BTreeMap<Atom, Expr>) -> Result<Expr> {
    let mut acc = Expr::zero();
    for (m, c) in p.terms() {
        let mut t = Expr::constant(c.clone());
        for (a, e) in &m.0 {
            t = t * subst_atom(a, map, memo)?.powi(*e as i32)?;
        }
        acc = acc + t;
    }
    Ok(acc)
}

fn add_exprs(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.den == b.den {
        if a.den.is_one() {
            return Expr { num: a.num.add(&b.num), den: Poly::one() };
        }
        return normalize(a.num.add(&b.num), a.den.clone());
    }
    if let Some(qt) = b.den.div_exact(&a.den) {
        return normalize(a.num.mul(&qt).add(&b.num), b.den.clone());
    }
    if let Some(qt) = a.den.div_exact(&b.den) {
        return normalize(a.num.add(&b.num.mul(&qt)), a.den.clone());
    }
    normalize(a.num.mul(&b.den).add(&b.num.mul(&a.den)), a.den.mul(&b.den))
}

fn mul_exprs(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::zero();
    }
    if a.den.is_one() && b.den.is_one() {
        return Expr { num: a.num.mul(&b.num), den: Poly::one() };
    }
    normalize(a.num.mul(&b.num), a.den.mul(&b.den))
}

impl Add<&Expr> for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        add_exprs(self, rhs)
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        add_exprs(&self, &rhs)
    }
}

impl Sub<&Expr> for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        add_exprs(self, &-rhs)
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        add_exprs(&self, &-&rhs)
    }
}

impl Mul<&Expr> for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        mul_exprs(self, rhs)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        mul_exprs(&self, &rhs)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr { num: self.num.neg(), den: self.den.clone() }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Q> for Expr {
    fn from(c: Q) -> Self {
        Expr::constant(c)
    }
}

impl core::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a + b)
    }
}
