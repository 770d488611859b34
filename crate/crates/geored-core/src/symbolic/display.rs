use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use num_traits::{One, Signed};

use super::{Application, Atom, Expr, Mono, Poly, Q};

/// Text name of an opaque partial: `C__1_2` is the mixed partial in arguments 1 and 2.
pub fn partial_name(app: &Application) -> String {
    let mut s = String::from(app.name.as_ref());
    if !app.is_underived() {
        s.push_str("__");
        let mut first = true;
        for (j, &n) in app.partials.iter().enumerate() {
            for _ in 0..n {
                if !first {
                    s.push('_');
                }
                first = false;
                let _ = write!(s, "{}", j + 1);
            }
        }
    }
    s
}

fn write_atom(f: &mut fmt::Formatter<'_>, a: &Atom) -> fmt::Result {
    match a {
        Atom::Sym(s) => f.write_str(s),
        Atom::Apply(app) => {
            f.write_str(&partial_name(app))?;
            f.write_str("(")?;
            for (i, e) in app.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str(")")
        }
    }
}

fn write_mono(f: &mut fmt::Formatter<'_>, m: &Mono) -> fmt::Result {
    for (i, (a, e)) in m.0.iter().enumerate() {
        if i > 0 {
            f.write_str("*")?;
        }
        write_atom(f, a)?;
        if *e > 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

fn write_poly(f: &mut fmt::Formatter<'_>, p: &Poly) -> fmt::Result {
    if p.is_zero() {
        return f.write_str("0");
    }
    let mut terms: Vec<(&Mono, &Q)> = p.terms().collect();
    terms.sort_by(|a, b| b.0.lex_cmp(a.0));
    for (i, (m, c)) in terms.into_iter().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        match (i, neg) {
            (0, true) => f.write_str("-")?,
            (0, false) => {}
            (_, true) => f.write_str(" - ")?,
            (_, false) => f.write_str(" + ")?,
        }
        if m.is_one() {
            write!(f, "{mag}")?;
        } else {
            if !mag.is_one() {
                write!(f, "{mag}*")?;
            }
            write_mono(f, m)?;
        }
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write_poly(f, &self.num);
        }
        f.write_str("(")?;
        write_poly(f, &self.num)?;
        f.write_str(")/(")?;
        write_poly(f, &self.den)?;
        f.write_str(")")
    }
}
