use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::exterior::VectorField;
use crate::reduction::QuotientPresentation;
use crate::symbolic::{Bindings, Chart, Compiled, Expr, Point};

/// Substitutes parameter values, inlines opaque bindings and compiles over `vars`.
pub(crate) fn compile(e: &Expr, vars: &[&str], params: &Point, b: &Bindings) -> Result<Compiled> {
    let map: BTreeMap<String, Expr> = params.0.iter().map(|(k, v)| (k.clone(), Expr::constant(v.clone()))).collect();
    let e = e.bind_opaques(b)?.substitute(&map)?;
    Compiled::new(&e, vars)
}

/// Components of a vector field compiled over its chart coordinates.
#[derive(Clone, Debug)]
pub struct CompiledField {
    pub coords: Vec<String>,
    comps: Vec<Compiled>,
}

impl CompiledField {
    pub fn new(v: &VectorField, params: &Point, b: &Bindings) -> Result<Self> {
        let coords: Vec<String> = v.chart.coords.iter().map(|c| c.to_string()).collect();
        let vars: Vec<&str> = coords.iter().map(String::as_str).collect();
        let comps = v.comps.iter().map(|c| compile(c, &vars, params, b)).collect::<Result<_>>()?;
        Ok(CompiledField { coords, comps })
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }
}

/// Classical RK4; returns every state including the initial one.
pub fn rk4(f: impl Fn(&[f64]) -> Vec<f64>, y0: &[f64], dt: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    let axpy = |y: &[f64], k: &[f64], h: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y0.to_vec());
    let mut y = y0.to_vec();
    for n in 0..steps {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, dt / 2.0));
        let k3 = f(&axpy(&y, &k2, dt / 2.0));
        let k4 = f(&axpy(&y, &k3, dt));
        for i in 0..y.len() {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(alloc::format!("component {i} at t = {}", (n + 1) as f64 * dt)));
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Largest deviation between the projected parent flow and the reduced flow.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowComparison {
    pub max_error: f64,
    pub steps: usize,
    pub t_end: f64,
}

fn point_f64(chart: &Chart, p: &Point) -> Result<Vec<f64>> {
    p.coords_of(chart)?
        .iter()
        .map(|v| v.to_f64().ok_or_else(|| Error::NonFinite(v.to_string())))
        .collect()
}

/// Integrates `parent` from the embedded `y0` and `reduced` from its projection, then compares
/// `π(parent flow)` with the reduced flow. Level-set coordinates must be parent coordinates.
#[allow(clippy::too_many_arguments)]
pub fn flow_commutation(
    parent: &VectorField,
    reduced: &VectorField,
    q: &QuotientPresentation,
    y0: &Point,
    t_end: f64,
    dt: f64,
    params: &Point,
    b: &Bindings,
) -> Result<FlowComparison> {
    let steps = libm::round(t_end / dt) as usize;
    if steps == 0 || libm::fabs(steps as f64 * dt - t_end) > 1e-9 * t_end.max(1.0) {
        return Err(Error::Invalid(alloc::format!("t_end = {t_end} is not a multiple of dt = {dt}")));
    }
    let pchart = &parent.chart;
    let param_idx: Vec<usize> = q
        .level
        .param
        .coords
        .iter()
        .map(|c| pchart.index_of(c).ok_or_else(|| Error::UnknownName(alloc::format!("level-set coordinate `{c}` in the parent chart"))))
        .collect::<Result<_>>()?;
    let pvars: Vec<&str> = q.level.param.coords.iter().map(|c| c.as_ref()).collect();
    let proj: Vec<Compiled> = q.projection.exprs.iter().map(|e| compile(e, &pvars, params, b)).collect::<Result<_>>()?;
    let fp = CompiledField::new(parent, params, b)?;
    let fr = CompiledField::new(reduced, params, b)?;
    let mut full = y0.clone();
    for (k, v) in &params.0 {
        full.set(k, v.clone());
    }
    let x0 = point_f64(pchart, &q.level.embed(&full, b)?)?;
    let z0 = point_f64(&reduced.chart, &q.projection.apply_point(&full, b)?)?;
    let xs = rk4(|x| fp.eval(x), &x0, dt, steps)?;
    let zs = rk4(|z| fr.eval(z), &z0, dt, steps)?;
    let mut max_error: f64 = 0.0;
    for (x, z) in xs.iter().zip(&zs) {
        let y: Vec<f64> = param_idx.iter().map(|&i| x[i]).collect();
        for (pj, zj) in proj.iter().zip(z) {
            max_error = max_error.max(libm::fabs(pj.eval(&y) - zj));
        }
    }
    Ok(FlowComparison { max_error, steps, t_end })
}
