use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{Expr, Q};
use crate::error::{Error, Result};

/// Named coordinate system: ordered coordinates (the tangent basis order) plus parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chart {
    pub name: String,
    pub coords: Vec<Arc<str>>,
    pub params: Vec<Arc<str>>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(name: &str, coords: &[S], params: &[S]) -> Result<Self> {
        let coords: Vec<Arc<str>> = coords.iter().map(|c| Arc::from(c.as_ref())).collect();
        let params: Vec<Arc<str>> = params.iter().map(|c| Arc::from(c.as_ref())).collect();
        let mut seen = alloc::collections::BTreeSet::new();
        for n in coords.iter().chain(params.iter()) {
            if !seen.insert(n.clone()) {
                return Err(Error::Invalid(alloc::format!("chart `{name}`: name `{n}` declared twice")));
            }
        }
        Ok(Chart { name: name.to_string(), coords, params })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn index_of(&self, coord: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.as_ref() == coord)
    }

    pub fn coord(&self, i: usize) -> Expr {
        Expr::sym(&self.coords[i])
    }

    pub fn is_param(&self, n: &str) -> bool {
        self.params.iter().any(|p| p.as_ref() == n)
    }

    /// `∂e/∂v`, rejecting names that are not coordinates of this chart.
    pub fn differentiate(&self, e: &Expr, v: &str) -> Result<Expr> {
        if self.index_of(v).is_none() {
            return Err(Error::UnknownName(v.to_string()));
        }
        Ok(e.diff(v))
    }

    /// Checks that every free symbol of `e` is a coordinate or parameter.
    pub fn check_expr(&self, e: &Expr) -> Result<()> {
        for s in e.symbols() {
            if self.index_of(&s).is_none() && !self.is_param(&s) {
                return Err(Error::UnknownName(s));
            }
        }
        Ok(())
    }

    /// Same coordinate list (names may differ).
    pub fn same_coords(&self, other: &Chart) -> bool {
        self.coords == other.coords
    }

    pub fn expect_same(&self, other: &Chart) -> Result<()> {
        if self.same_coords(other) {
            Ok(())
        } else {
            Err(Error::ChartMismatch { expected: self.name.clone(), found: other.name.clone() })
        }
    }
}

/// Exact assignment of rationals to names.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point(pub BTreeMap<String, Q>);

impl Point {
    pub fn new() -> Self {
        Point(BTreeMap::new())
    }

    pub fn with(mut self, name: &str, v: Q) -> Self {
        self.0.insert(name.to_string(), v);
        self
    }

    pub fn set(&mut self, name: &str, v: Q) {
        self.0.insert(name.to_string(), v);
    }

    pub fn get(&self, name: &str) -> Option<&Q> {
        self.0.get(name)
    }

    /// Coordinate values in chart order.
    pub fn coords_of(&self, chart: &Chart) -> Result<Vec<Q>> {
        chart
            .coords
            .iter()
            .map(|c| self.0.get(c.as_ref()).cloned().ok_or_else(|| Error::MissingValue(c.to_string())))
            .collect()
    }

    pub fn covers(&self, chart: &Chart) -> bool {
        chart.coords.iter().chain(chart.params.iter()).all(|c| self.0.contains_key(c.as_ref()))
    }

    /// Keeps the parameter values, replaces coordinates.
    pub fn params_only(&self, chart: &Chart) -> Point {
        let mut p = Point::new();
        for n in &chart.params {
            if let Some(v) = self.0.get(n.as_ref()) {
                p.set(n, v.clone());
            }
        }
        p
    }
}

/// Floating assignment used on numerical paths.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointF64(pub BTreeMap<String, f64>);

impl PointF64 {
    pub fn with(mut self, name: &str, v: f64) -> Self {
        self.0.insert(name.to_string(), v);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_rejected() {
        assert!(Chart::new("c", &["x", "y"], &["x"]).is_err());
        assert!(Chart::new("c", &["x", "x"], &[]).is_err());
        assert!(Chart::new("c", &["x", "y"], &["k"]).is_ok());
    }

    #[test]
    fn differentiate_unknown_coordinate() {
        let c = Chart::new("c", &["x"], &["k"]).unwrap();
        let e = Expr::sym("k") * Expr::sym("x");
        assert_eq!(c.differentiate(&e, "x").unwrap(), Expr::sym("k"));
        assert_eq!(c.differentiate(&e, "k"), Err(Error::UnknownName("k".into())));
    }
}
