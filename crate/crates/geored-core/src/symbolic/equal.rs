use alloc::collections::BTreeMap;
use alloc::string::ToString;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Atom, Expr, Poly, Q};

/// Outcome of [`expr_equal`]; `probabilistic` marks a verdict reached by random evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Equality {
    pub equal: bool,
    pub probabilistic: bool,
}

const FALLBACK_POINTS: usize = 64;
const FALLBACK_SEED: u64 = 0x5eed_e9a1;

/// Decides `a = b`.
///
/// Normal forms are compared by cross-multiplication. A nonzero difference is conclusive unless
/// some opaque argument has a non-monomial denominator, in which case equal arguments need not
/// share a representation; then 64 seeded random points decide, with opaque functions modeled by
/// a deterministic hash of their evaluated arguments.
pub fn expr_equal(a: &Expr, b: &Expr) -> Equality {
    let diff = a - b;
    if diff.is_zero() {
        return Equality { equal: true, probabilistic: false };
    }
    if args_canonical(&diff) {
        return Equality { equal: false, probabilistic: false };
    }
    Equality { equal: random_zero(&diff), probabilistic: true }
}

fn args_canonical(e: &Expr) -> bool {
    e.applications().iter().all(|app| {
        app.args.iter().all(|arg| arg.denom().is_monomial() || arg.denom().as_constant().is_some())
    })
}

fn fnv(bytes: &[u8], mut h: u64) -> u64 {
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

struct Oracle {
    values: BTreeMap<alloc::string::String, Q>,
}

impl Oracle {
    fn atom(&self, a: &Atom) -> Option<Q> {
        match a {
            Atom::Sym(s) => self.values.get(s.as_ref()).cloned(),
            Atom::Apply(app) => {
                let mut h = fnv(app.name.as_bytes(), 0xcbf2_9ce4_8422_2325);
                for p in &app.partials {
                    h = fnv(&p.to_le_bytes(), h);
                }
                for arg in &app.args {
                    let v = self.expr(arg)?;
                    h = fnv(v.to_string().as_bytes(), h);
                    h = fnv(b";", h);
                }
                let n = (h % 2003) as i64 - 1001;
                Some(Q::new(BigInt::from(n), BigInt::from(97 + (h >> 32) as i64 % 89)))
            }
        }
    }

    fn poly(&self, p: &Poly) -> Option<Q> {
        let mut acc = Q::zero();
        for (m, c) in p.terms() {
            let mut t = c.clone();
            for (a, e) in &m.0 {
                t *= num_traits::pow(self.atom(a)?, *e as usize);
            }
            acc += t;
        }
        Some(acc)
    }

    fn expr(&self, e: &Expr) -> Option<Q> {
        let d = self.poly(e.denom())?;
        if d.is_zero() {
            return None;
        }
        Some(self.poly(e.numer())? / d)
    }
}

fn random_zero(e: &Expr) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(FALLBACK_SEED);
    let names = e.symbols();
    let mut tried = 0;
    let mut attempts = 0;
    while tried < FALLBACK_POINTS && attempts < 8 * FALLBACK_POINTS {
        attempts += 1;
        let values = names
            .iter()
            .map(|n| {
                let num: i64 = rng.random_range(-1000..=1000);
                let den: i64 = rng.random_range(1..=97);
                (n.clone(), Q::new(BigInt::from(num), BigInt::from(den)))
            })
            .collect();
        let oracle = Oracle { values };
        let Some(num) = oracle.poly(e.numer()) else { continue };
        let Some(den) = oracle.poly(e.denom()) else { continue };
        if den.is_zero() {
            continue;
        }
        if !num.is_zero() {
            return false;
        }
        tried += 1;
    }
    tried > 0
}
