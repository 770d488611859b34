use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::{ToPrimitive, Zero};

use super::{Atom, Expr, Point, Poly, Q};
use crate::error::{Error, Result};

/// Concrete stand-in for an opaque function: `body` is written over the formals `_1 .. _n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpaqueDef {
    pub arity: usize,
    pub body: Expr,
}

impl OpaqueDef {
    pub fn new(arity: usize, body: Expr) -> Self {
        OpaqueDef { arity, body }
    }

    pub fn formal(j: usize) -> String {
        alloc::format!("_{}", j + 1)
    }

    /// Body differentiated according to a partial multi-index.
    pub fn derived(&self, partials: &[u32]) -> Expr {
        let mut b = self.body.clone();
        for (j, &n) in partials.iter().enumerate() {
            let f = OpaqueDef::formal(j);
            for _ in 0..n {
                b = b.diff(&f);
            }
        }
        b
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bindings(pub BTreeMap<String, OpaqueDef>);

impl Bindings {
    pub fn new() -> Self {
        Bindings(BTreeMap::new())
    }

    pub fn with(mut self, name: &str, def: OpaqueDef) -> Self {
        self.0.insert(name.to_string(), def);
        self
    }

    fn lookup(&self, name: &str, arity: usize) -> Result<&OpaqueDef> {
        let def = self.0.get(name).ok_or_else(|| Error::UnboundOpaque(name.to_string()))?;
        if def.arity != arity {
            return Err(Error::Invalid(alloc::format!(
                "opaque `{name}` bound with arity {} but applied to {arity} argument(s)",
                def.arity
            )));
        }
        Ok(def)
    }
}

impl Expr {
    /// Exact value at `p`; opaque applications are resolved through `b`.
    pub fn evaluate(&self, p: &Point, b: &Bindings) -> Result<Q> {
        let n = eval_poly(&self.num, p, b)?;
        if self.den.is_one() {
            return Ok(n);
        }
        let d = eval_poly(&self.den, p, b)?;
        if d.is_zero() {
            return Err(Error::DivisionByZero { subterm: alloc::format!("{}", Expr::from_poly(self.den.clone())) });
        }
        Ok(n / d)
    }

    /// Replaces every opaque application by its bound body, leaving a plain rational function.
    pub fn bind_opaques(&self, b: &Bindings) -> Result<Expr> {
        if self.applications().is_empty() {
            return Ok(self.clone());
        }
        let n = bind_poly(&self.num, b)?;
        let d = bind_poly(&self.den, b)?;
        n.checked_div(&d)
    }
}

fn eval_atom(a: &Atom, p: &Point, b: &Bindings) -> Result<Q> {
    match a {
        Atom::Sym(s) => p.get(s).cloned().ok_or_else(|| Error::MissingValue(s.to_string())),
        Atom::Apply(app) => {
            let def = b.lookup(&app.name, app.args.len())?;
            let mut inner = p.clone();
            for (j, arg) in app.args.iter().enumerate() {
                inner.set(&OpaqueDef::formal(j), arg.evaluate(p, b)?);
            }
            def.derived(&app.partials).evaluate(&inner, b)
        }
    }
}

fn eval_poly(poly: &Poly, p: &Point, b: &Bindings) -> Result<Q> {
    let mut memo: BTreeMap<&Atom, Q> = BTreeMap::new();
    let mut acc = Q::zero();
    for (m, c) in poly.terms() {
        let mut t = c.clone();
        for (a, e) in &m.0 {
            let v = match memo.get(a) {
                Some(v) => v.clone(),
                None => {
                    let v = eval_atom(a, p, b)?;
                    memo.insert(a, v.clone());
                    v
                }
            };
            t *= num_traits::pow(v, *e as usize);
        }
        acc += t;
    }
    Ok(acc)
}

fn bind_poly(poly: &Poly, b: &Bindings) -> Result<Expr> {
    let mut acc = Expr::zero();
    for (m, c) in poly.terms() {
        let mut t = Expr::constant(c.clone());
        for (a, e) in &m.0 {
            let base = match a {
                Atom::Sym(s) => Expr::sym(s),
                Atom::Apply(app) => {
                    let def = b.lookup(&app.name, app.args.len())?;
                    let mut map = BTreeMap::new();
                    for (j, arg) in app.args.iter().enumerate() {
                        map.insert(OpaqueDef::formal(j), arg.bind_opaques(b)?);
                    }
                    def.derived(&app.partials).substitute(&map)?
                }
            };
            t = t * base.powi(*e as i32)?;
        }
        acc = acc + t;
    }
    Ok(acc)
}

/// Terms `(coefficient, [(variable, exponent)])`.
type Lowered = Vec<(f64, Vec<(usize, i32)>)>;

/// Flat `f64` evaluator for an opaque-free expression over a fixed variable order.
#[derive(Clone, Debug)]
pub struct Compiled {
    num: Lowered,
    den: Option<Lowered>,
}

impl Compiled {
    /// Compiles `e`; every free symbol must appear in `vars`.
    pub fn new(e: &Expr, vars: &[&str]) -> Result<Self> {
        let lower = |p: &Poly| -> Result<Lowered> {
            p.terms()
                .map(|(m, c)| {
                    let coef = c.to_f64().ok_or_else(|| Error::NonFinite(alloc::format!("{c}")))?;
                    let factors = m
                        .0
                        .iter()
                        .map(|(a, k)| match a {
                            Atom::Sym(s) => vars
                                .iter()
                                .position(|v| *v == s.as_ref())
                                .map(|i| (i, *k as i32))
                                .ok_or_else(|| Error::UnknownName(s.to_string())),
                            Atom::Apply(app) => Err(Error::UnboundOpaque(app.name.to_string())),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((coef, factors))
                })
                .collect()
        };
        let num = lower(&e.num)?;
        let den = if e.den.is_one() { None } else { Some(lower(&e.den)?) };
        Ok(Compiled { num, den })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let run = |terms: &[(f64, Vec<(usize, i32)>)]| {
            terms
                .iter()
                .map(|(c, fs)| fs.iter().fold(*c, |acc, &(i, k)| acc * int_pow(x[i], k)))
                .sum::<f64>()
        };
        let n = run(&self.num);
        match &self.den {
            None => n,
            Some(d) => n / run(d),
        }
    }
}

fn int_pow(x: f64, k: i32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..k {
        acc *= x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::super::{q, qi};
    use super::*;

    #[test]
    fn evaluate_exact() {
        let e = Expr::int(2) * Expr::sym("x");
        let p = Point::new().with("x", q(3, 2));
        assert_eq!(e.evaluate(&p, &Bindings::new()).unwrap(), qi(3));
    }

    #[test]
    fn damped_wave_hamiltonian_value() {
        let two = Expr::int(2);
        let h = Expr::sym("pt").powi(2).unwrap().checked_div(&(&two * &Expr::sym("rho"))).unwrap()
            - Expr::sym("px").powi(2).unwrap().checked_div(&(&two * &Expr::sym("tau"))).unwrap()
            + Expr::sym("k") * Expr::sym("s_t");
        let p = Point::new()
            .with("pt", qi(1))
            .with("px", qi(0))
            .with("s_t", qi(0))
            .with("u", qi(0))
            .with("rho", qi(1))
            .with("tau", qi(1))
            .with("k", q(1, 10));
        assert_eq!(h.evaluate(&p, &Bindings::new()).unwrap(), q(1, 2));
    }

    #[test]
    fn unbound_opaque_is_an_error() {
        let e = Expr::apply("C", alloc::vec![Expr::sym("x")]);
        let p = Point::new().with("x", qi(1));
        assert_eq!(e.evaluate(&p, &Bindings::new()), Err(Error::UnboundOpaque("C".into())));
    }

    #[test]
    fn opaque_partials_use_the_bound_body() {
        let body = Expr::sym("_1").powi(3).unwrap();
        let b = Bindings::new().with("C", OpaqueDef::new(1, body));
        let arg = Expr::sym("q1") - Expr::sym("q2");
        let e = Expr::apply("C", alloc::vec![arg]).diff("q1").diff("q1");
        let p = Point::new().with("q1", qi(5)).with("q2", qi(2));
        assert_eq!(e.evaluate(&p, &b).unwrap(), qi(18));
        let bound = e.bind_opaques(&b).unwrap();
        assert_eq!(bound, Expr::int(6) * (Expr::sym("q1") - Expr::sym("q2")));
    }

    #[test]
    fn compiled_matches_exact() {
        let e = (Expr::sym("x") * Expr::sym("x") + Expr::int(3))
            .checked_div(&(Expr::sym("y") - Expr::rational(1, 2)))
            .unwrap();
        let c = Compiled::new(&e, &["x", "y"]).unwrap();
        let p = Point::new().with("x", q(3, 4)).with("y", q(5, 2));
        let exact = e.evaluate(&p, &Bindings::new()).unwrap().to_f64().unwrap();
        assert!((c.eval(&[0.75, 2.5]) - exact).abs() < 1e-14);
    }
}
