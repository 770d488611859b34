//! Method-of-lines integrator for two-parameter field equations on a periodic interval.
//!
//! The fields `q^i` and their time momenta `p_i^1` are evolved; the space momenta `p_i^2` are
//! recovered from `∂_x q^i` on the half nodes through the affine relation
//! `∂h/∂p_i^2 = a_i p_i^2 + b_i(q, p^1)`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::ToPrimitive;

use super::ode::compile;
use super::Darboux;
use crate::error::{Error, Result};
use crate::structures::KContact;
use crate::symbolic::{Bindings, Compiled, Expr, Point};

/// Grid and time window.
#[derive(Clone, Debug, PartialEq)]
pub struct K2Params {
    pub nodes: usize,
    pub steps: usize,
    pub t_end: f64,
    pub x0: f64,
    pub length: f64,
}

impl K2Params {
    pub fn new(nodes: usize, steps: usize, t_end: f64) -> Self {
        K2Params { nodes, steps, t_end, x0: 0.0, length: 2.0 * core::f64::consts::PI }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.nodes as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }
}

/// Compiled right-hand side of the field equations for `k = 2`.
#[derive(Clone, Debug)]
pub struct K2System {
    pub q: Vec<String>,
    pub pt: Vec<String>,
    pub px: Vec<String>,
    /// `∂²h/∂(p_i^1)²`, constant.
    pub a_t: Vec<f64>,
    /// `∂²h/∂(p_i^2)²`, constant.
    pub a_x: Vec<f64>,
    pub wave_speed: f64,
    qdot: Vec<Compiled>,
    b_x: Vec<Compiled>,
    force: Vec<Compiled>,
}

fn constant(e: &Expr, what: &str) -> Result<f64> {
    e.as_constant()
        .and_then(|c| c.to_f64())
        .ok_or_else(|| Error::Invalid(alloc::format!("{what} must be constant, got {e}")))
}

fn forbid(e: &Expr, names: &[String], what: &str) -> Result<()> {
    match names.iter().find(|n| e.depends_on(n)) {
        Some(n) => Err(Error::Invalid(alloc::format!("{what} depends on `{n}`: {e}"))),
        None => Ok(()),
    }
}

impl K2System {
    /// Builds the system from `h` in Darboux coordinates; `params` fixes every chart parameter.
    pub fn new(kc: &KContact, h: &Expr, d: &Darboux, params: &Point, b: &Bindings) -> Result<Self> {
        d.check_contact(kc)?;
        if kc.k() != 2 {
            return Err(Error::Invalid(alloc::format!("the integrator needs k = 2, got k = {}", kc.k())));
        }
        for p in &kc.chart.params {
            if params.get(p).is_none() {
                return Err(Error::MissingValue(p.to_string()));
            }
        }
        let map: BTreeMap<String, Expr> = params.0.iter().map(|(k, v)| (k.clone(), Expr::constant(v.clone()))).collect();
        let h = h.bind_opaques(b)?.substitute(&map)?;
        let pt: Vec<String> = d.p.iter().map(|r| r[0].clone()).collect();
        let px: Vec<String> = d.p.iter().map(|r| r[1].clone()).collect();
        let mut vars: Vec<&str> = d.q.iter().chain(&pt).map(String::as_str).collect();
        let state_vars = vars.clone();
        vars.extend(px.iter().map(String::as_str));
        let none = Point::new();
        let (mut a_t, mut a_x, mut qdot, mut b_x, mut force) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..d.q.len() {
            let ht = h.diff(&pt[i]);
            forbid(&ht, &px, "dh/dp^1")?;
            forbid(&ht, &d.z, "dh/dp^1")?;
            a_t.push(constant(&ht.diff(&pt[i]), "d2h/d(p^1)^2")?);
            qdot.push(compile(&ht, &state_vars, &none, b)?);
            let hx = h.diff(&px[i]);
            let ax = hx.diff(&px[i]);
            let axv = constant(&ax, "d2h/d(p^2)^2")?;
            if axv == 0.0 {
                return Err(Error::Invalid(alloc::format!("dh/d{} does not determine {}", px[i], px[i])));
            }
            a_x.push(axv);
            let bx = &hx - &(&ax * &Expr::sym(&px[i]));
            forbid(&bx, &px, "dh/dp^2 - a p^2")?;
            forbid(&bx, &d.z, "dh/dp^2 - a p^2")?;
            b_x.push(compile(&bx, &state_vars, &none, b)?);
            let mut f = h.diff(&d.q[i]);
            for (a, za) in d.z.iter().enumerate() {
                f = f + Expr::sym(&d.p[i][a]) * h.diff(za);
            }
            forbid(&f, &d.z, "source term")?;
            force.push(compile(&f, &vars, &none, b)?);
        }
        let c2 = a_t.iter().zip(&a_x).map(|(t, x)| -t / x).fold(f64::NEG_INFINITY, f64::max);
        if c2.is_nan() || c2 <= 0.0 {
            return Err(Error::Invalid(alloc::format!("field equations are not hyperbolic: c^2 = {c2}")));
        }
        Ok(K2System { q: d.q.clone(), pt, px, a_t, a_x, wave_speed: libm::sqrt(c2), qdot, b_x, force })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// Column names of a stored level: fields, time momenta, space momenta.
    pub fn names(&self) -> Vec<String> {
        self.q.iter().chain(&self.pt).chain(&self.px).cloned().collect()
    }

    /// Space momenta on half nodes `j + 1/2`, laid out `[i * N + j]`.
    fn half_momenta(&self, y: &[f64], nn: usize, dx: f64) -> Vec<f64> {
        let n = self.n();
        let mut out = alloc::vec![0.0; n * nn];
        let mut s = alloc::vec![0.0; 2 * n];
        for j in 0..nn {
            let jp = (j + 1) % nn;
            for f in 0..2 * n {
                s[f] = 0.5 * (y[f * nn + j] + y[f * nn + jp]);
            }
            for i in 0..n {
                let ux = (y[i * nn + jp] - y[i * nn + j]) / dx;
                out[i * nn + j] = (ux - self.b_x[i].eval(&s)) / self.a_x[i];
            }
        }
        out
    }

    fn node_momenta(&self, half: &[f64], nn: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; half.len()];
        for i in 0..self.n() {
            for j in 0..nn {
                let jm = (j + nn - 1) % nn;
                out[i * nn + j] = 0.5 * (half[i * nn + j] + half[i * nn + jm]);
            }
        }
        out
    }

    fn rhs(&self, y: &[f64], nn: usize, dx: f64) -> Vec<f64> {
        let n = self.n();
        let half = self.half_momenta(y, nn, dx);
        let mut out = alloc::vec![0.0; 2 * n * nn];
        let mut v = alloc::vec![0.0; 3 * n];
        for j in 0..nn {
            let jm = (j + nn - 1) % nn;
            for f in 0..2 * n {
                v[f] = y[f * nn + j];
            }
            for i in 0..n {
                v[2 * n + i] = 0.5 * (half[i * nn + j] + half[i * nn + jm]);
            }
            for i in 0..n {
                out[i * nn + j] = self.qdot[i].eval(&v[..2 * n]);
                let dpx = (half[i * nn + j] - half[i * nn + jm]) / dx;
                out[(n + i) * nn + j] = -dpx - self.force[i].eval(&v);
            }
        }
        out
    }

    /// `Σ_j Σ_i (½ a_t (p^1)² − ½ a_x (p^2)²) Δx` with `p^2` on half nodes.
    pub fn energy(&self, grid: &SectionGrid, level: usize) -> f64 {
        let (n, nn) = (self.n(), grid.x.len());
        let y = &grid.state[level];
        let half = self.half_momenta(y, nn, grid.dx);
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..nn {
                let p1 = y[(n + i) * nn + j];
                let p2 = half[i * nn + j];
                e += 0.5 * self.a_t[i] * p1 * p1 - 0.5 * self.a_x[i] * p2 * p2;
            }
        }
        e * grid.dx
    }

    /// Centred-in-time residual of the discrete field equations at each interior level `1..L-1`.
    pub fn level_residuals(&self, grid: &SectionGrid) -> Vec<f64> {
        let nn = grid.x.len();
        let mut out = Vec::new();
        for l in 1..grid.state.len().saturating_sub(1) {
            let f = self.rhs(&grid.state[l], nn, grid.dx);
            let mut r: f64 = 0.0;
            for (c, fc) in f.iter().enumerate() {
                let d = (grid.state[l + 1][c] - grid.state[l - 1][c]) / (2.0 * grid.dt);
                r = r.max(libm::fabs(d - fc));
            }
            out.push(r);
        }
        out
    }

    /// Largest residual over interior levels.
    pub fn residual(&self, grid: &SectionGrid) -> f64 {
        self.level_residuals(grid).into_iter().fold(0.0, f64::max)
    }
}

/// Stored solution: one state vector per time level, fields then time momenta, `[f * N + j]`.
#[derive(Clone, Debug)]
pub struct SectionGrid {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub dx: f64,
    pub dt: f64,
    pub state: Vec<Vec<f64>>,
}

impl SectionGrid {
    /// Values of field `f` (fields, then time momenta) at `level`.
    pub fn column(&self, level: usize, f: usize) -> &[f64] {
        let nn = self.x.len();
        &self.state[level][f * nn..(f + 1) * nn]
    }

    /// Rows `t, x, q…, p^1…, p^2…` with `p^2` averaged onto nodes.
    pub fn rows(&self, sys: &K2System) -> Vec<Vec<f64>> {
        let (n, nn) = (sys.n(), self.x.len());
        let mut out = Vec::with_capacity(self.t.len() * nn);
        for (l, y) in self.state.iter().enumerate() {
            let px = sys.node_momenta(&sys.half_momenta(y, nn, self.dx), nn);
            for j in 0..nn {
                let mut row = alloc::vec![self.t[l], self.x[j]];
                row.extend((0..2 * n).map(|f| y[f * nn + j]));
                row.extend((0..n).map(|i| px[i * nn + j]));
                out.push(row);
            }
        }
        out
    }
}

/// Integrates from `initial` (fields then time momenta, each sampled on the nodes) with RK4.
pub fn integrate_k2(sys: &K2System, p: &K2Params, initial: &[Vec<f64>]) -> Result<SectionGrid> {
    let (n, nn) = (sys.n(), p.nodes);
    if nn < 3 || p.steps == 0 {
        return Err(Error::Invalid(alloc::format!("grid {}x{} is too small", nn, p.steps)));
    }
    if initial.len() != 2 * n || initial.iter().any(|c| c.len() != nn) {
        return Err(Error::DimensionMismatch(alloc::format!("initial data needs {} columns of {nn} values", 2 * n)));
    }
    let (dx, dt) = (p.dx(), p.dt());
    let max_dt = dx / sys.wave_speed;
    if dt > max_dt {
        return Err(Error::Cfl { dt, max_dt });
    }
    let y0: Vec<f64> = initial.iter().flatten().copied().collect();
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial data".into()));
    }
    let state = super::rk4(|y| sys.rhs(y, nn, dx), &y0, dt, p.steps)?;
    Ok(SectionGrid {
        t: (0..=p.steps).map(|l| l as f64 * dt).collect(),
        x: (0..nn).map(|j| p.x0 + j as f64 * dx).collect(),
        dx,
        dt,
        state,
    })
}

/// Second-order equation for a single field, in jet symbols `u, u_t, u_x, u_tt, u_xx`
/// (with `u` the field name), normalized so that `u_tt` has coefficient one.
pub fn derive_second_order(kc: &KContact, h: &Expr, d: &Darboux) -> Result<Expr> {
    d.check_contact(kc)?;
    if kc.k() != 2 || d.q.len() != 1 {
        return Err(Error::Invalid("second-order form is derived for one field and k = 2".into()));
    }
    let u = &d.q[0];
    let (pt, px) = (&d.p[0][0], &d.p[0][1]);
    let jet = |s: &str| Expr::sym(&alloc::format!("{u}_{s}"));
    let mut solved = Vec::new();
    for (pc, dir) in [(pt, "t"), (px, "x")] {
        let hp = h.diff(pc);
        let a = hp.diff(pc);
        if a.is_zero() || !a.symbols().iter().all(|s| kc.chart.is_param(s)) || !a.applications().is_empty() {
            return Err(Error::Invalid(alloc::format!("d2h/d{pc}^2 must be a nonzero constant")));
        }
        let bterm = &hp - &(&a * &Expr::sym(pc));
        let others: Vec<String> = kc.chart.coords.iter().filter(|c| c.as_ref() != u.as_str()).map(|c| c.to_string()).collect();
        forbid(&bterm, &others, &alloc::format!("dh/d{pc} - a {pc}"))?;
        // p = (u_s − b(u)) / a and ∂_s p = (u_ss − b'(u) u_s) / a
        let p_of = (jet(dir) - bterm.clone()).checked_div(&a)?;
        let dp = (jet(&alloc::format!("{dir}{dir}")) - bterm.diff(u) * jet(dir)).checked_div(&a)?;
        solved.push((pc.clone(), p_of, dp, a));
    }
    let mut f = h.diff(u);
    for (a, za) in d.z.iter().enumerate() {
        f = f + Expr::sym(&d.p[0][a]) * h.diff(za);
    }
    forbid(&f, &d.z, "source term")?;
    let map: BTreeMap<String, Expr> = solved.iter().map(|(pc, p, _, _)| (pc.clone(), p.clone())).collect();
    let f = f.substitute(&map)?;
    let eq = &solved[0].2 + &solved[1].2 + f;
    Ok(&eq * &solved[0].3)
}
