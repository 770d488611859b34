//! Seeded random rational sample points inside declared open conditions.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::symbolic::{Bindings, Chart, Expr, Point, Q};

#[derive(Clone, Debug)]
pub struct SampleSpec<'a> {
    pub chart: &'a Chart,
    /// Values for (some) parameters; the rest are drawn like coordinates.
    pub fixed: &'a Point,
    /// Expressions required to be nonzero.
    pub open: &'a [Expr],
    pub bindings: &'a Bindings,
}

pub struct Sampler {
    rng: ChaCha8Rng,
    pub seed: u64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), seed }
    }

    pub fn rational(&mut self) -> Q {
        let n: i64 = self.rng.random_range(-40..=40);
        let d: i64 = self.rng.random_range(1..=9);
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    pub fn nonzero_rational(&mut self) -> Q {
        loop {
            let r = self.rational();
            if !r.is_zero() {
                return r;
            }
        }
    }

    /// Draws `n` points, retrying any that violate an open condition.
    pub fn points(&mut self, spec: &SampleSpec<'_>, n: usize) -> Result<Vec<Point>> {
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0usize;
        while out.len() < n {
            attempts += 1;
            if attempts > 50 * n + 1000 {
                return Err(Error::Invalid(alloc::format!(
                    "could not draw {n} points satisfying the open conditions of `{}`",
                    spec.chart.name
                )));
            }
            let mut p = spec.fixed.clone();
            for c in &spec.chart.coords {
                let v = self.rational();
                p.set(c, v);
            }
            for c in &spec.chart.params {
                if spec.fixed.get(c).is_none() {
                    let v = self.nonzero_rational();
                    p.set(c, v);
                }
            }
            let ok = spec.open.iter().all(|e| matches!(e.evaluate(&p, spec.bindings), Ok(v) if !v.is_zero()));
            if ok {
                out.push(p);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_respects_open_conditions() {
        let chart = Chart::new("c", &["x", "s"], &["k"]).unwrap();
        let fixed = Point::new();
        let open = [Expr::sym("s")];
        let b = Bindings::new();
        let spec = SampleSpec { chart: &chart, fixed: &fixed, open: &open, bindings: &b };
        let a = Sampler::new(7).points(&spec, 50).unwrap();
        let c = Sampler::new(7).points(&spec, 50).unwrap();
        assert_eq!(a, c);
        assert!(a.iter().all(|p| !p.get("s").unwrap().is_zero() && p.get("k").is_some()));
    }

    #[test]
    fn unsatisfiable_conditions_error() {
        let chart = Chart::new("c", &["x"], &[]).unwrap();
        let fixed = Point::new();
        let open = [Expr::zero()];
        let b = Bindings::new();
        let spec = SampleSpec { chart: &chart, fixed: &fixed, open: &open, bindings: &b };
        assert!(Sampler::new(1).points(&spec, 3).is_err());
    }
}
