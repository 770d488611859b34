use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use super::{Expr, Q};

/// Opaque function application `name(args)` carrying a partial-derivative multi-index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Application {
    pub name: Arc<str>,
    /// `partials[j]` counts derivatives with respect to argument `j`.
    pub partials: Vec<u32>,
    pub args: Vec<Expr>,
}

impl Application {
    pub fn is_underived(&self) -> bool {
        self.partials.iter().all(|&n| n == 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Sym(Arc<str>),
    Apply(Arc<Application>),
}

/// Power product of atoms, sorted by atom, all exponents positive.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mono(pub Vec<(Atom, u32)>);

impl Mono {
    pub fn one() -> Self {
        Mono(Vec::new())
    }

    pub fn atom(a: Atom) -> Self {
        Mono(alloc::vec![(a, 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Mono(out)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Mono) -> Option<Mono> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (atom, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 == *atom {
                let f = other.0[j].1;
                if f > *e {
                    return None;
                }
                if e - f > 0 {
                    out.push((atom.clone(), e - f));
                }
                j += 1;
            } else if j < other.0.len() && other.0[j].0 < *atom {
                return None;
            } else {
                out.push((atom.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    pub fn gcd(&self, other: &Mono) -> Mono {
        let mut out = Vec::new();
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1.min(b[j].1)));
                    i += 1;
                    j += 1;
                }
            }
        }
        Mono(out)
    }

    /// Lexicographic monomial order; atoms earlier in the atom order are more significant.
    pub fn lex_cmp(&self, other: &Mono) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(x), Some(y)) => match x.0.cmp(&y.0) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if x.1 != y.1 {
                            return x.1.cmp(&y.1);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

/// Sparse polynomial with exact rational coefficients over [`Atom`]s.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly(pub BTreeMap<Mono, Q>);

impl Poly {
    pub fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    pub fn constant(c: Q) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(Mono::one(), c);
        }
        Poly(m)
    }

    pub fn one() -> Self {
        Poly::constant(Q::one())
    }

    pub fn from_atom(a: Atom) -> Self {
        let mut m = BTreeMap::new();
        m.insert(Mono::atom(a), Q::one());
        Poly(m)
    }

    pub fn from_term(m: Mono, c: Q) -> Self {
        let mut t = BTreeMap::new();
        if !c.is_zero() {
            t.insert(m, c);
        }
        Poly(t)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.0.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_monomial(&self) -> bool {
        self.0.len() == 1
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Q)> {
        self.0.iter()
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.0.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.0.remove(&m);
                }
            }
            None => {
                self.0.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c.clone())).collect())
    }

    pub fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * k)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn mul_mono(&self, m: &Mono) -> Poly {
        Poly(self.0.iter().map(|(k, c)| (k.mul(m), c.clone())).collect())
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Leading term under [`Mono::lex_cmp`].
    pub fn leading(&self) -> Option<(&Mono, &Q)> {
        self.0.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    /// Gcd of all monomials (the largest monomial factor).
    pub fn mono_content(&self) -> Mono {
        let mut it = self.0.keys();
        match it.next() {
            None => Mono::one(),
            Some(first) => it.fold(first.clone(), |g, m| g.gcd(m)),
        }
    }

    pub fn div_mono(&self, m: &Mono) -> Poly {
        Poly(
            self.0
                .iter()
                .map(|(k, c)| (k.div(m).expect("monomial divides every term"), c.clone()))
                .collect(),
        )
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (dm, dc) = d.leading()?;
        let (dm, dc) = (dm.clone(), dc.clone());
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        let mut guard = 0usize;
        while !rem.is_zero() {
            guard += 1;
            if guard > 10_000 {
                return None;
            }
            let (rm, rc) = rem.leading().unwrap();
            let qm = rm.div(&dm)?;
            let qc = rc / &dc;
            let step = d.mul_mono(&qm).scale(&qc);
            rem = rem.sub(&step);
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    pub fn atoms(&self, out: &mut alloc::collections::BTreeSet<Atom>) {
        for m in self.0.keys() {
            for (a, _) in &m.0 {
                out.insert(a.clone());
            }
        }
    }

    pub fn leading_coefficient_sign_negative(&self) -> bool {
        self.leading().is_some_and(|(_, c)| c.is_negative())
    }
}
