//! Hamiltonian k-vector fields: Darboux solutions with explicit gauge, verification of the field
//! equations, integrability, and projection to a reduced space.

mod k2;
mod ode;

pub use k2::{derive_second_order, integrate_k2, K2Params, K2System, SectionGrid};
pub use ode::{flow_commutation, rk4, CompiledField, FlowComparison};

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exterior::{contract_kv, Form, KVectorField, SmoothMap, VectorField};
use crate::linalg;
use crate::reduction::{MomentumData, QuotientPresentation};
use crate::report::{SampleEntry, StructureReport};
use crate::structures::{flat_eta, lift_field, reeb_at, solve_reeb, KContact, KSymplectic, Symplectization};
use crate::symbolic::{expr_equal, Bindings, Chart, Expr, Point, Q};

/// Darboux coordinate names: `p[i][α]` is the momentum of `q[i]` along `t^α`.
///
/// `determined` is the index α whose diagonal momentum and `z` components absorb the summed
/// field equations; every other component is a gauge slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Darboux {
    pub q: Vec<String>,
    pub p: Vec<Vec<String>>,
    pub z: Vec<String>,
    pub determined: usize,
}

impl Darboux {
    pub fn new(q: Vec<String>, p: Vec<Vec<String>>, z: Vec<String>) -> Self {
        let k = p.first().map_or(z.len(), Vec::len);
        Darboux { q, p, z, determined: k.saturating_sub(1) }
    }

    pub fn with_determined(mut self, alpha: usize) -> Self {
        self.determined = alpha;
        self
    }

    /// Names used by the canonical models: `q{i}`, `p{i}_{α}`, `z{α}`.
    pub fn canonical(n: usize, k: usize, with_z: bool) -> Self {
        let q = (1..=n).map(|i| alloc::format!("q{i}")).collect();
        let p = (1..=n).map(|i| (1..=k).map(|a| alloc::format!("p{i}_{a}")).collect()).collect();
        let z = if with_z { (1..=k).map(|a| alloc::format!("z{a}")).collect() } else { Vec::new() };
        Darboux::new(q, p, z)
    }

    pub fn k(&self) -> usize {
        self.p.first().map_or(self.z.len(), Vec::len)
    }

    fn validate_names(&self, chart: &Chart, with_z: bool) -> Result<()> {
        let k = self.k();
        if self.p.len() != self.q.len() || self.p.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch("Darboux momenta must form an n x k table".into()));
        }
        if with_z && self.z.len() != k {
            return Err(Error::DimensionMismatch(alloc::format!("expected {k} z coordinates, got {}", self.z.len())));
        }
        if self.determined >= k {
            return Err(Error::Invalid(alloc::format!("determined index {} out of range for k = {k}", self.determined + 1)));
        }
        let mut all: Vec<&String> = self.q.iter().chain(self.p.iter().flatten()).collect();
        if with_z {
            all.extend(self.z.iter());
        }
        for name in &all {
            if chart.index_of(name).is_none() {
                return Err(Error::UnknownName((*name).clone()));
            }
        }
        if all.len() != chart.dim() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "Darboux coordinates cover {} of {} chart coordinates",
                all.len(),
                chart.dim()
            )));
        }
        Ok(())
    }

    /// Checks `η^α = dz^α − p_i^α dq^i`.
    pub fn check_contact(&self, kc: &KContact) -> Result<()> {
        self.validate_names(&kc.chart, true)?;
        if kc.k() != self.k() {
            return Err(Error::DimensionMismatch(alloc::format!("structure has k = {}, Darboux data k = {}", kc.k(), self.k())));
        }
        for (a, eta) in kc.eta.0.iter().enumerate() {
            let mut want = Form::d_coord(&kc.chart, &self.z[a])?;
            for (i, qi) in self.q.iter().enumerate() {
                want = want.sub(&Form::d_coord(&kc.chart, qi)?.scale(&Expr::sym(&self.p[i][a])))?;
            }
            if !eta.equal(&want).equal {
                return Err(Error::Invalid(alloc::format!("eta{} is not dz - p dq in the given Darboux coordinates", a + 1)));
            }
        }
        Ok(())
    }

    /// Orientation `ε` with `ω^α = ε Σ_i dq^i ∧ dp_i^α`.
    pub fn check_symplectic(&self, ks: &KSymplectic) -> Result<i8> {
        self.validate_names(&ks.chart, false)?;
        if ks.k() != self.k() {
            return Err(Error::DimensionMismatch(alloc::format!("structure has k = {}, Darboux data k = {}", ks.k(), self.k())));
        }
        let mut sign = None;
        for (a, om) in ks.omega.0.iter().enumerate() {
            let mut want = Form::zero(&ks.chart, 2);
            for (i, qi) in self.q.iter().enumerate() {
                want = want.add(&Form::d_coord(&ks.chart, qi)?.wedge(&Form::d_coord(&ks.chart, &self.p[i][a])?)?)?;
            }
            let s = if om.equal(&want).equal {
                1
            } else if om.equal(&want.neg()).equal {
                -1
            } else {
                return Err(Error::Invalid(alloc::format!("omega{} is not +-dq ^ dp in the given Darboux coordinates", a + 1)));
            };
            if sign.is_some_and(|t| t != s) {
                return Err(Error::Invalid("omega components have mixed orientation".into()));
            }
            sign = Some(s);
        }
        sign.ok_or_else(|| Error::Invalid("k = 0".into()))
    }

    /// Free component names, in chart order per α.
    pub fn slots(&self) -> Vec<String> {
        let k = self.k();
        let mut out = Vec::new();
        for a in 0..k {
            for row in &self.p {
                for (b, pc) in row.iter().enumerate() {
                    if !(a == self.determined && b == self.determined) {
                        out.push(slot_name('A', a, pc));
                    }
                }
            }
            for (b, zc) in self.z.iter().enumerate() {
                if !(a == self.determined && b == self.determined) {
                    out.push(slot_name('B', a, zc));
                }
            }
        }
        out
    }
}

fn slot_name(kind: char, alpha: usize, coord: &str) -> String {
    alloc::format!("{kind}{}_{coord}", alpha + 1)
}

/// Gauge slot name to expression; missing slots stay opaque functions of every coordinate.
pub type GaugeAssignment = BTreeMap<String, Expr>;

/// A Hamiltonian k-vector field with its gauge bookkeeping.
#[derive(Clone, Debug)]
pub struct HamKVF {
    pub x: KVectorField,
    pub slots: Vec<String>,
    /// Slots left as opaque functions.
    pub free: Vec<String>,
}

struct Slots<'a> {
    chart: &'a Arc<Chart>,
    gauge: &'a GaugeAssignment,
    free: Vec<String>,
}

impl Slots<'_> {
    fn get(&mut self, name: String) -> Expr {
        match self.gauge.get(&name) {
            Some(e) => e.clone(),
            None => {
                let args = self.chart.coords.iter().map(|c| Expr::sym(c)).collect();
                let e = Expr::apply(&name, args);
                self.free.push(name);
                e
            }
        }
    }
}

fn check_gauge_keys(d: &Darboux, gauge: &GaugeAssignment) -> Result<Vec<String>> {
    let slots = d.slots();
    for key in gauge.keys() {
        if !slots.contains(key) {
            let det = d.determined;
            let fixed = d.p.iter().map(|r| slot_name('A', det, &r[det])).chain(d.z.get(det).map(|z| slot_name('B', det, z)));
            if fixed.into_iter().any(|f| &f == key) {
                return Err(Error::Invalid(alloc::format!(
                    "inconsistent gauge assignment: `{key}` is fixed by the summed field equations"
                )));
            }
            return Err(Error::Invalid(alloc::format!("unknown gauge slot `{key}`; slots: {}", slots.join(", "))));
        }
    }
    Ok(slots)
}

fn coord_index(chart: &Chart, name: &str) -> usize {
    chart.index_of(name).expect("validated Darboux name")
}

/// Darboux solution of the k-contact field equations with the given gauge.
pub fn solve_hdw_contact(kc: &KContact, h: &Expr, d: &Darboux, gauge: &GaugeAssignment) -> Result<HamKVF> {
    d.check_contact(kc)?;
    kc.chart.check_expr(h)?;
    let slots = check_gauge_keys(d, gauge)?;
    for (name, e) in gauge {
        kc.chart.check_expr(e).map_err(|err| Error::Invalid(alloc::format!("gauge slot `{name}`: {err}")))?;
    }
    let (k, det) = (d.k(), d.determined);
    let chart = &kc.chart;
    let mut s = Slots { chart, gauge, free: Vec::new() };
    let mut comps = alloc::vec![alloc::vec![Expr::zero(); chart.dim()]; k];
    let dh = |v: &str| h.diff(v);
    for a in 0..k {
        for (i, qi) in d.q.iter().enumerate() {
            comps[a][coord_index(chart, qi)] = dh(&d.p[i][a]);
        }
        for row in &d.p {
            for (b, pc) in row.iter().enumerate() {
                if !(a == det && b == det) {
                    comps[a][coord_index(chart, pc)] = s.get(slot_name('A', a, pc));
                }
            }
        }
        for (b, zc) in d.z.iter().enumerate() {
            if !(a == det && b == det) {
                comps[a][coord_index(chart, zc)] = s.get(slot_name('B', a, zc));
            }
        }
    }
    for (i, qi) in d.q.iter().enumerate() {
        let mut total = -dh(qi);
        for (a, za) in d.z.iter().enumerate() {
            total = total - Expr::sym(&d.p[i][a]) * dh(za);
        }
        for a in (0..k).filter(|&a| a != det) {
            total = total - comps[a][coord_index(chart, &d.p[i][a])].clone();
        }
        comps[det][coord_index(chart, &d.p[i][det])] = total;
    }
    let mut total = -h.clone();
    for row in &d.p {
        for pc in row {
            total = total + Expr::sym(pc) * dh(pc);
        }
    }
    for a in (0..k).filter(|&a| a != det) {
        total = total - comps[a][coord_index(chart, &d.z[a])].clone();
    }
    comps[det][coord_index(chart, &d.z[det])] = total;
    let fields = comps.into_iter().map(|c| VectorField::new(chart, c)).collect::<Result<Vec<_>>>()?;
    let x = KVectorField::new(fields)?;
    Ok(HamKVF { x, slots, free: s.free })
}

/// Darboux solution of `Σ ι_{X_α} ω^α = dh`, with the orientation read off the structure.
pub fn solve_hdw_ksymplectic(ks: &KSymplectic, h: &Expr, d: &Darboux, gauge: &GaugeAssignment) -> Result<HamKVF> {
    let eps = Expr::int(d.check_symplectic(ks)? as i64);
    ks.chart.check_expr(h)?;
    let slots = check_gauge_keys(d, gauge)?;
    let (k, det) = (d.k(), d.determined);
    let chart = &ks.chart;
    let mut s = Slots { chart, gauge, free: Vec::new() };
    let mut comps = alloc::vec![alloc::vec![Expr::zero(); chart.dim()]; k];
    for a in 0..k {
        for (i, qi) in d.q.iter().enumerate() {
            comps[a][coord_index(chart, qi)] = &eps * &h.diff(&d.p[i][a]);
        }
        for row in &d.p {
            for (b, pc) in row.iter().enumerate() {
                if !(a == det && b == det) {
                    comps[a][coord_index(chart, pc)] = s.get(slot_name('A', a, pc));
                }
            }
        }
    }
    for (i, qi) in d.q.iter().enumerate() {
        let mut total = -(&eps * &h.diff(qi));
        for a in (0..k).filter(|&a| a != det) {
            total = total - comps[a][coord_index(chart, &d.p[i][a])].clone();
        }
        comps[det][coord_index(chart, &d.p[i][det])] = total;
    }
    let fields = comps.into_iter().map(|c| VectorField::new(chart, c)).collect::<Result<Vec<_>>>()?;
    Ok(HamKVF { x: KVectorField::new(fields)?, slots, free: s.free })
}

fn push_form_eq(rep: &mut StructureReport, name: &str, lhs: &Form, rhs: &Form) {
    let eq = lhs.equal(rhs);
    let res = (!eq.equal).then(|| lhs.sub(rhs).map(|d| d.to_string()).unwrap_or_default());
    rep.push_symbolic(name, eq, res);
}

fn push_expr_eq(rep: &mut StructureReport, name: &str, lhs: &Expr, rhs: &Expr) {
    let eq = expr_equal(lhs, rhs);
    let res = (!eq.equal).then(|| (lhs - rhs).to_string());
    rep.push_symbolic(name, eq, res);
}

/// Both formulations of the k-contact field equations for `X`, given symbolic Reeb fields.
pub fn verify_hdw(kc: &KContact, h: &Expr, x: &KVectorField, reeb: &[VectorField]) -> StructureReport {
    let mut rep = StructureReport::new("hdw");
    let res = (|| -> Result<(bool, bool)> {
        if x.k() != kc.k() || reeb.len() != kc.k() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "k = {} but X has {} and R has {} components",
                kc.k(),
                x.k(),
                reeb.len()
            )));
        }
        let chart = &kc.chart;
        let mut correction = Form::zero(chart, 1);
        for (r, eta) in reeb.iter().zip(&kc.eta.0) {
            correction = correction.add(&eta.scale(&r.apply(h)))?;
        }
        let dh = Form::function(chart, h.clone()).d();
        let (lhs1, lhs2) = flat_eta(kc, x)?;
        let rhs1 = dh.sub(&correction)?;
        push_form_eq(&mut rep, "sum iota X_a d eta^a = dh - (R_a h) eta^a", &lhs1, &rhs1);
        push_expr_eq(&mut rep, "sum iota X_a eta^a = -h", &lhs2, &-h.clone());
        let first = rep.symbolic.iter().rev().take(2).all(|c| c.equal);
        let mut lie = Form::zero(chart, 1);
        for (xa, eta) in x.0.iter().zip(&kc.eta.0) {
            lie = lie.add(&eta.lie_derivative(xa)?)?;
        }
        push_form_eq(&mut rep, "sum L_X_a eta^a = -(R_a h) eta^a", &lie, &correction.neg());
        let second = rep.symbolic.iter().rev().take(2).all(|c| c.equal);
        Ok((first, second))
    })();
    match res {
        Ok((a, b)) if a == b => rep.note(alloc::format!("both formulations agree ({})", if a { "hold" } else { "fail" })),
        Ok((a, b)) => rep.fail(alloc::format!("formulations disagree: contraction form {a}, Lie derivative form {b}")),
        Err(e) => rep.fail(e.to_string()),
    }
    rep
}

/// `Σ ι_{X_α} ω^α = dh`.
pub fn verify_hdw_ksymplectic(ks: &KSymplectic, h: &Expr, x: &KVectorField) -> StructureReport {
    let mut rep = StructureReport::new("hdw_ksymplectic");
    match contract_kv(x, &ks.omega) {
        Ok(lhs) => push_form_eq(&mut rep, "sum iota X_a omega^a = dh", &lhs, &Form::function(&ks.chart, h.clone()).d()),
        Err(e) => rep.fail(e.to_string()),
    }
    rep
}

/// `X̃_α = X_α + s (R_α h) ∂/∂s` on the symplectisation; solves `Σ ι_{X̃_α} ω̃^α = d(s h)`.
pub fn symplectic_lift(x: &KVectorField, reeb: &[VectorField], h: &Expr, sy: &Symplectization) -> Result<KVectorField> {
    let chart = &sy.ks.chart;
    let s = Expr::sym(&sy.s);
    let fields = x
        .0
        .iter()
        .zip(reeb)
        .map(|(xa, ra)| {
            let mut f = lift_field(xa, chart);
            f.comps[0] = &s * &ra.apply(h);
            f
        })
        .collect();
    KVectorField::new(fields)
}

/// `Σ ι_{X̃_α} ω̃^α = d(s h)` on the symplectisation.
pub fn verify_symplectic_lift(sy: &Symplectization, h: &Expr, lifted: &KVectorField) -> StructureReport {
    let sh = &Expr::sym(&sy.s) * h;
    let mut rep = verify_hdw_ksymplectic(&sy.ks, &sh, lifted);
    rep.check = "hdw_symplectised".into();
    rep
}

/// Two solutions differ by a gauge field: the difference lies in the kernel of the flat map.
pub fn check_gauge_difference(kc: &KContact, x: &KVectorField, y: &KVectorField) -> StructureReport {
    let mut rep = StructureReport::new("gauge_difference");
    let diff = x.0.iter().zip(&y.0).map(|(a, b)| a.sub(b)).collect::<Result<Vec<_>>>().and_then(KVectorField::new);
    match diff.and_then(|d| flat_eta(kc, &d)) {
        Ok((f, s)) => {
            push_form_eq(&mut rep, "sum iota Y_a d eta^a = 0", &f, &Form::zero(&kc.chart, 1));
            push_expr_eq(&mut rep, "sum iota Y_a eta^a = 0", &s, &Expr::zero());
        }
        Err(e) => rep.fail(e.to_string()),
    }
    rep
}

/// Pointwise solution space of the field equations: dimension of the gauge kernel and one
/// particular solution per sample.
pub fn hdw_pointwise(kc: &KContact, h: &Expr, samples: &[Point], b: &Bindings) -> StructureReport {
    let mut rep = StructureReport::new("hdw_pointwise");
    let (n, k) = (kc.dim(), kc.k());
    for (s, x) in samples.iter().enumerate() {
        let mut e = SampleEntry::new(s, x);
        let res = (|| -> Result<()> {
            let reeb = reeb_at(kc, x)?;
            let grad: Vec<Q> = (0..n).map(|c| h.diff(&kc.chart.coords[c]).evaluate(x, b)).collect::<Result<_>>()?;
            let hv = h.evaluate(x, b)?;
            let etas: Vec<Vec<Q>> = kc.eta.0.iter().map(|f| f.eval_1(x, b)).collect::<Result<_>>()?;
            let detas: Vec<_> = kc.deta.0.iter().map(|f| f.eval_2(x, b)).collect::<Result<_>>()?;
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            for j in 0..n {
                let mut row = alloc::vec![Q::from_integer(0.into()); n * k];
                for a in 0..k {
                    for c in 0..n {
                        row[a * n + c] = detas[a][c][j].clone();
                    }
                }
                let mut r = grad[j].clone();
                for a in 0..k {
                    let rh: Q = (0..n).map(|c| &reeb[a][c] * &grad[c]).sum();
                    r -= rh * &etas[a][j];
                }
                rows.push(row);
                rhs.push(r);
            }
            let mut row = alloc::vec![Q::from_integer(0.into()); n * k];
            for a in 0..k {
                for c in 0..n {
                    row[a * n + c] = etas[a][c].clone();
                }
            }
            rows.push(row);
            rhs.push(-hv);
            let rank = linalg::rank(&rows, n * k);
            e.rank("gauge_dim", n * k - rank);
            match linalg::solve(&rows, &rhs, n * k) {
                Some(sol) => e.basis("particular", &sol.chunks(n).map(<[Q]>::to_vec).collect::<Vec<_>>()),
                None => e.fail("field equations have no solution at this point".into()),
            }
            Ok(())
        })();
        if let Err(err) = res {
            e.fail(err.to_string());
        }
        rep.push_sample(e);
    }
    rep
}

/// `[X_α, X_β] = 0`, optionally only on the named coordinate components.
pub fn integrability_check(x: &KVectorField, subset: Option<&[String]>) -> StructureReport {
    let mut rep = StructureReport::new("integrability");
    let Some(chart) = x.0.first().map(|f| f.chart.clone()) else {
        return rep;
    };
    let idx: Vec<usize> = match subset {
        Some(names) => {
            let mut v = Vec::new();
            for n in names {
                match chart.index_of(n) {
                    Some(i) => v.push(i),
                    None => {
                        rep.fail(Error::UnknownName(n.clone()).to_string());
                        return rep;
                    }
                }
            }
            rep.note(alloc::format!("components restricted to {}", names.join(", ")));
            v
        }
        None => (0..chart.dim()).collect(),
    };
    for a in 0..x.k() {
        for b in a + 1..x.k() {
            match x.0[a].bracket(&x.0[b]) {
                Ok(br) => {
                    for &i in &idx {
                        push_expr_eq(
                            &mut rep,
                            &alloc::format!("[X{}, X{}]^{} = 0", a + 1, b + 1, chart.coords[i]),
                            &br.comps[i],
                            &Expr::zero(),
                        );
                    }
                }
                Err(e) => rep.fail(e.to_string()),
            }
        }
    }
    rep
}

/// Reduced dynamics and the checks that produced it.
#[derive(Clone, Debug)]
pub struct ProjectedDynamics {
    pub x: Option<KVectorField>,
    pub h_red: Option<Expr>,
    pub report: StructureReport,
}

fn pull_field(level_map: &SmoothMap, v: &VectorField) -> Result<Vec<Expr>> {
    v.comps.iter().map(|c| level_map.pull_expr(c)).collect()
}

/// Projects `X` along the quotient: invariance under `𝔨_[μ]`, tangency to the level set,
/// well-definedness on the quotient, the reduced Hamiltonian and the reduced field equations.
pub fn project_dynamics(
    x: &KVectorField,
    q: &QuotientPresentation,
    kc: &KContact,
    h: &Expr,
    md: &MomentumData,
) -> ProjectedDynamics {
    let mut rep = StructureReport::new("project_dynamics");
    let res = project_inner(x, q, kc, h, md, &mut rep);
    match res {
        Ok((z, h_red)) => ProjectedDynamics { x: Some(z), h_red: Some(h_red), report: rep },
        Err(e) => {
            rep.fail(e.to_string());
            ProjectedDynamics { x: None, h_red: None, report: rep }
        }
    }
}

fn project_inner(
    x: &KVectorField,
    q: &QuotientPresentation,
    kc: &KContact,
    h: &Expr,
    md: &MomentumData,
    rep: &mut StructureReport,
) -> Result<(KVectorField, Expr)> {
    let emb = &q.level.embedding;
    let pdim = q.level.param.dim();
    for (s, v) in md.iso.k_bracket_mu.basis().iter().enumerate() {
        let xi = md.act.field_of(v);
        push_expr_eq(rep, &alloc::format!("xi{}_M h = 0 on the level set", s + 1), &emb.pull_expr(&xi.apply(h))?, &Expr::zero());
        for (a, xa) in x.0.iter().enumerate() {
            let br = xi.bracket(xa)?;
            for (c, comp) in pull_field(emb, &br)?.iter().enumerate() {
                push_expr_eq(
                    rep,
                    &alloc::format!("[xi{}_M, X{}]^{} = 0 on the level set", s + 1, a + 1, kc.chart.coords[c]),
                    comp,
                    &Expr::zero(),
                );
            }
        }
    }
    for (a, xa) in x.0.iter().enumerate() {
        for (e, eq) in q.level.equations.iter().enumerate() {
            push_expr_eq(
                rep,
                &alloc::format!("X{} tangent to level equation {}", a + 1, e + 1),
                &emb.pull_expr(&xa.apply(eq))?,
                &Expr::zero(),
            );
        }
    }
    if !rep.verdict {
        return Err(Error::Invalid("X does not descend to the quotient".into()));
    }
    let di = emb.jacobian();
    let rhs: Vec<Vec<Expr>> = {
        let pulled: Vec<Vec<Expr>> = x.0.iter().map(|xa| pull_field(emb, xa)).collect::<Result<_>>()?;
        (0..kc.dim()).map(|c| pulled.iter().map(|p| p[c].clone()).collect()).collect()
    };
    let ys = linalg::solve_expr(di, rhs, pdim)
        .ok_or_else(|| Error::Invalid("restriction of X to the level set could not be solved for".into()))?;
    let dpi = q.projection.jacobian();
    let section = q.section.as_ref();
    let mut red_fields = Vec::new();
    for (a, y) in ys.iter().enumerate() {
        let mut comps = Vec::new();
        for (j, row) in dpi.iter().enumerate() {
            let zj: Expr = row.iter().zip(y).map(|(d, c)| d * c).sum();
            let name = &q.reduced.coords[j];
            match section {
                Some(sec) => {
                    let down = sec.pull_expr(&zj)?;
                    let back = q.projection.pull_expr(&down)?;
                    push_expr_eq(rep, &alloc::format!("Z{}^{} is constant on fibres", a + 1, name), &back, &zj);
                    comps.push(down);
                }
                None => {
                    if zj.symbols().iter().any(|s| q.level.param.index_of(s).is_some() && q.reduced.index_of(s).is_none()) {
                        return Err(Error::Invalid(alloc::format!(
                            "Z{}^{name} is written in level-set coordinates and no section was given",
                            a + 1
                        )));
                    }
                    comps.push(zj);
                }
            }
        }
        red_fields.push(VectorField::new(&q.reduced, comps)?);
    }
    let ih = emb.pull_expr(h)?;
    let h_red = match section {
        Some(sec) => sec.pull_expr(&ih)?,
        None => ih.clone(),
    };
    push_expr_eq(rep, "pi* h_red = i* h", &q.projection.pull_expr(&h_red)?, &ih);
    let z = KVectorField::new(red_fields)?;
    let red = KContact::new(q.eta_red.clone())?;
    let reeb = solve_reeb(&red, &[]);
    match reeb.fields {
        Some(r) => rep.absorb(verify_hdw(&red, &h_red, &z, &r)),
        None => rep.fail("reduced Reeb fields are not available symbolically".into()),
    }
    Ok((z, h_red))
}

#[cfg(test)]
mod tests;
