//! Momentum level sets, pointwise tangent calculus, the reduction conditions, quotient
//! verification and the reduction-group probe.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exterior::{SmoothMap, VForm};
use crate::lie::{isotropy, InfAction, IsotropyReport, Momentum};
use crate::linalg::{self, Matrix, Subspace};
use crate::report::{ConditionReport, ProbeMatch, ProbeReport, ProbeSample, SampleEntry, StructureReport};
use crate::sampling::{SampleSpec, Sampler};
use crate::structures::{fmt_vector, kernel_at_with, orthogonal_deta, orthogonal_k, reeb_at, verify_kcontact, KContact, KSymplectic, Symplectization};
use crate::symbolic::{expr_equal, Bindings, Chart, Expr, Point, Q};

/// Which subalgebra plays the role of the reduction algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Candidate {
    /// `𝔨_[μ] = ker μ ∩ 𝔤_[μ]`.
    Projective,
    /// `𝔨_μ = ker μ ∩ 𝔤_μ`.
    Isotropy,
}

/// An action, its momentum map and a value `μ`, with the derived data used pointwise.
#[derive(Clone, Debug)]
pub struct MomentumData {
    pub act: InfAction,
    pub j: Momentum,
    pub mu: Vec<Vec<Q>>,
    pub iso: IsotropyReport,
    /// `∂J[α][i] / ∂x^c`.
    dj: Vec<Vec<Vec<Expr>>>,
}

impl MomentumData {
    pub fn new(act: InfAction, j: Momentum, mu: Vec<Vec<Q>>) -> Result<Self> {
        act.chart.expect_same(&j.chart)?;
        let n = act.algebra.dim();
        if mu.len() != j.k() || mu.iter().any(|r| r.len() != n) || (j.k() > 0 && j.n() != n) {
            return Err(Error::DimensionMismatch(alloc::format!(
                "momentum is {}x{}, value is {}x{}, algebra has dimension {n}",
                j.k(),
                j.n(),
                mu.len(),
                mu.first().map_or(0, Vec::len)
            )));
        }
        let iso = isotropy(&act.algebra, &mu);
        let dj = j
            .entries
            .iter()
            .map(|row| row.iter().map(|e| j.chart.coords.iter().map(|c| e.diff(c)).collect()).collect())
            .collect();
        Ok(MomentumData { act, j, mu, iso, dj })
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    fn dim(&self) -> usize {
        self.j.chart.dim()
    }

    /// Per-row reduction subalgebra and the overall one.
    pub fn candidate(&self, c: Candidate) -> (Vec<Subspace>, Subspace) {
        let rows = match c {
            Candidate::Projective => &self.iso.proj_iso_rows,
            Candidate::Isotropy => &self.iso.iso_rows,
        };
        let per: Vec<Subspace> = self.iso.ker_rows.iter().zip(rows).map(|(a, b)| a.intersect(b)).collect();
        let all = match c {
            Candidate::Projective => self.iso.k_bracket_mu.clone(),
            Candidate::Isotropy => self.iso.k_mu.clone(),
        };
        (per, all)
    }

    fn values(&self, x: &Point, b: &Bindings) -> Result<Vec<Vec<Q>>> {
        self.j.entries.iter().map(|row| row.iter().map(|e| e.evaluate(x, b)).collect()).collect()
    }

    /// `J(x) ∈ ℝ^× μ^α` for every row, with `μ^α = 0` read as the fixed value 0.
    pub fn on_level(&self, x: &Point, b: &Bindings) -> Result<()> {
        let vals = self.values(x, b)?;
        for (a, (v, m)) in vals.iter().zip(&self.mu).enumerate() {
            let off = match m.iter().position(|c| !c.is_zero()) {
                None => v.iter().any(|c| !c.is_zero()),
                Some(j0) => {
                    v[j0].is_zero()
                        || (0..m.len()).any(|j| (j + 1..m.len()).any(|l| &v[j] * &m[l] != &v[l] * &m[j]))
                }
            };
            if off {
                return Err(Error::Invalid(alloc::format!("point is off the level set: J{} = {}", a + 1, fmt_vector(v))));
            }
        }
        Ok(())
    }

    fn row_equations(&self, a: usize, x: &Point, b: &Bindings) -> Result<Matrix> {
        let grads: Matrix = self.dj[a]
            .iter()
            .map(|g| g.iter().map(|e| e.evaluate(x, b)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let m = &self.mu[a];
        if m.iter().all(Q::is_zero) {
            return Ok(grads);
        }
        let n = self.dim();
        let mut rows = Vec::new();
        for j in 0..m.len() {
            for l in j + 1..m.len() {
                if m[l].is_zero() && m[j].is_zero() {
                    continue;
                }
                rows.push((0..n).map(|c| &grads[j][c] * &m[l] - &grads[l][c] * &m[j]).collect());
            }
        }
        Ok(rows)
    }

    /// `T_x J_α^{-1}(ℝ^× μ^α)`.
    pub fn tangent_row(&self, a: usize, x: &Point, b: &Bindings) -> Result<Subspace> {
        self.on_level(x, b)?;
        Ok(Subspace::kernel(self.dim(), &self.row_equations(a, x, b)?))
    }

    /// `T_x J^{-1}(ℝ^{×k} μ)`.
    pub fn tangent(&self, x: &Point, b: &Bindings) -> Result<Subspace> {
        self.on_level(x, b)?;
        let mut rows = Vec::new();
        for a in 0..self.k() {
            rows.extend(self.row_equations(a, x, b)?);
        }
        Ok(Subspace::kernel(self.dim(), &rows))
    }

    /// Tangent space of the fixed-value level set `J^{-1}(J(x))`.
    pub fn tangent_fixed(&self, x: &Point, b: &Bindings) -> Result<Subspace> {
        let mut rows = Vec::new();
        for row in &self.dj {
            for g in row {
                rows.push(g.iter().map(|e| e.evaluate(x, b)).collect::<Result<Vec<_>>>()?);
            }
        }
        Ok(Subspace::kernel(self.dim(), &rows))
    }

    pub fn orbit(&self, s: &Subspace, x: &Point, b: &Bindings) -> Result<Subspace> {
        orbit_tangent(&self.act, s, x, b)
    }

    fn notes(&self) -> Vec<String> {
        self.iso
            .zero_rows
            .iter()
            .map(|a| alloc::format!("mu{} = 0: the ray is read as the fixed value 0", a + 1))
            .collect()
    }
}

/// `T_x(K x)`: fundamental fields of the subalgebra basis evaluated at `x`.
pub fn orbit_tangent(act: &InfAction, s: &Subspace, x: &Point, b: &Bindings) -> Result<Subspace> {
    let n = act.chart.dim();
    let mut vs = Vec::new();
    for xi in s.basis() {
        vs.push(act.field_of(xi).eval(x, b)?);
    }
    Ok(Subspace::span(n, &vs))
}

/// Level set with a parametrizing chart and embedding `i`.
#[derive(Clone, Debug)]
pub struct LevelSet {
    pub parent: Arc<Chart>,
    pub equations: Vec<Expr>,
    pub open: Vec<Expr>,
    pub param: Arc<Chart>,
    pub embedding: SmoothMap,
    /// Open conditions on the parametrizing chart (including pulled-back ones).
    pub param_open: Vec<Expr>,
}

impl LevelSet {
    /// Draws parametrizing-chart samples respecting all open conditions.
    pub fn sample(&self, sampler: &mut Sampler, n: usize, fixed: &Point, b: &Bindings) -> Result<Vec<Point>> {
        let spec = SampleSpec { chart: &self.param, fixed, open: &self.param_open, bindings: b };
        sampler.points(&spec, n)
    }

    pub fn embed(&self, y: &Point, b: &Bindings) -> Result<Point> {
        self.embedding.apply_point(y, b)
    }

    pub fn dim(&self) -> usize {
        self.param.dim()
    }

    /// Full-rank differential of the embedding at each sample.
    pub fn check_immersion(&self, ys: &[Point], b: &Bindings) -> StructureReport {
        let mut rep = StructureReport::new("level set immersion");
        for (i, y) in ys.iter().enumerate() {
            let mut e = SampleEntry::new(i, y);
            match self.embedding.jacobian_at(y, b) {
                Ok(m) => {
                    let r = linalg::rank(&m, self.param.dim());
                    e.rank("di", r);
                    if r != self.param.dim() {
                        e.fail(alloc::format!("rank di = {r} < {}", self.param.dim()));
                    }
                }
                Err(err) => e.fail(err.to_string()),
            }
            rep.push_sample(e);
        }
        rep
    }
}

/// Defining equalities and open conditions of `J^{-1}(ℝ^{×k} μ)`, validated against an optional
/// parametrization. Without one the equalities must vanish identically.
pub fn level_set_of(md: &MomentumData, embedding: Option<SmoothMap>, param_open: Vec<Expr>) -> Result<LevelSet> {
    let parent = md.j.chart.clone();
    let mut equations = Vec::new();
    let mut open = Vec::new();
    for (row, m) in md.j.entries.iter().zip(&md.mu) {
        match m.iter().position(|c| !c.is_zero()) {
            None => equations.extend(row.iter().filter(|e| !e.is_zero()).cloned()),
            Some(j0) => {
                for j in 0..m.len() {
                    for l in j + 1..m.len() {
                        let e = row[j].scale(&m[l]) - row[l].scale(&m[j]);
                        if !e.is_zero() {
                            equations.push(e);
                        }
                    }
                }
                open.push(row[j0].clone());
            }
        }
    }
    let embedding = match embedding {
        Some(e) => {
            parent.expect_same(&e.target)?;
            e
        }
        None => {
            if let Some(e) = equations.iter().find(|e| !expr_equal(e, &Expr::zero()).equal) {
                return Err(Error::Invalid(alloc::format!("level set needs a parametrization: `{e} = 0` is not automatic")));
            }
            SmoothMap::identity(&parent)
        }
    };
    for e in &equations {
        let pulled = embedding.pull_expr(e)?;
        if !expr_equal(&pulled, &Expr::zero()).equal {
            return Err(Error::Invalid(alloc::format!("parametrization leaves the level set: `{e}` pulls back to `{pulled}`")));
        }
    }
    let mut popen = param_open;
    for e in &open {
        popen.push(embedding.pull_expr(e)?);
    }
    Ok(LevelSet { param: embedding.source.clone(), parent, equations, open, embedding, param_open: popen })
}

/// Level set of the extended momentum map `(s, x) ↦ s J(x)`, parametrized by `(s, y)`.
pub fn lift_level_set(level: &LevelSet, sy: &Symplectization, md_lifted: &MomentumData) -> Result<LevelSet> {
    let mut s = sy.s.clone();
    while level.param.index_of(&s).is_some() || level.param.is_param(&s) {
        s.push('_');
    }
    let mut coords = alloc::vec![s.clone()];
    coords.extend(level.param.coords.iter().map(|c| c.to_string()));
    let params: Vec<String> = level.param.params.iter().map(|c| c.to_string()).collect();
    let chart = Arc::new(Chart::new(&alloc::format!("{}_symplectised", level.param.name), &coords, &params)?);
    let mut exprs = alloc::vec![Expr::sym(&s)];
    exprs.extend(level.embedding.exprs.iter().cloned());
    let emb = SmoothMap::new(&chart, &sy.ks.chart, exprs)?;
    let mut open = alloc::vec![Expr::sym(&s)];
    open.extend(level.param_open.iter().cloned());
    level_set_of(md_lifted, Some(emb), open)
}

fn rank_names(e: &mut SampleEntry, name: &str, s: &Subspace) {
    e.rank(name, s.rank());
}

fn compare(e: &mut SampleEntry, what: &str, lhs: &Subspace, rhs: &Subspace) -> bool {
    if lhs.equals(rhs) {
        return true;
    }
    let w = lhs
        .witness_outside(rhs)
        .map(|v| alloc::format!("{} in lhs only", fmt_vector(&v)))
        .or_else(|| rhs.witness_outside(lhs).map(|v| alloc::format!("{} in rhs only", fmt_vector(&v))))
        .unwrap_or_default();
    e.fail(alloc::format!("{what}: rank {} vs {}; {w}", lhs.rank(), rhs.rank()));
    false
}

/// Both reduction conditions at one point, given the per-row kernels `ker η^α ∩ ker dη^α` (or `ker ω^α`).
fn conditions_at(
    i: usize,
    x: &Point,
    kers: &[Subspace],
    md: &MomentumData,
    cand: Candidate,
    b: &Bindings,
) -> Result<SampleEntry> {
    let mut e = SampleEntry::new(i, x);
    let (per, all) = md.candidate(cand);
    let t = md.tangent(x, b)?;
    rank_names(&mut e, "level", &t);
    let orbit = md.orbit(&all, x, b)?;
    rank_names(&mut e, "orbit", &orbit);
    let mut meet = t.clone();
    for a in 0..md.k() {
        let ta = md.tangent_row(a, x, b)?;
        let oa = md.orbit(&per[a], x, b)?;
        let ka = &kers[a];
        rank_names(&mut e, &alloc::format!("level_{}", a + 1), &ta);
        rank_names(&mut e, &alloc::format!("ker_{}", a + 1), ka);
        rank_names(&mut e, &alloc::format!("orbit_{}", a + 1), &oa);
        let rhs1 = ka.sum(&t).sum(&oa);
        compare(&mut e, &alloc::format!("condition 1 (alpha = {})", a + 1), &ta, &rhs1);
        meet = meet.intersect(&ka.sum(&oa));
    }
    rank_names(&mut e, "condition_2_rhs", &meet);
    compare(&mut e, "condition 2", &orbit, &meet);
    Ok(e)
}

fn orbit_constancy(rep: &mut StructureReport, key: &str) {
    let ranks = rep.ranks(key);
    if let Some(first) = ranks.first() {
        if let Some((i, r)) = ranks.iter().enumerate().find(|(_, r)| *r != first) {
            rep.fail(alloc::format!("non-free locus: orbit rank {first} at sample 0 but {r} at sample {i}"));
        }
    }
}

fn run_conditions(
    name: &str,
    md: &MomentumData,
    samples: &[Point],
    cand: Candidate,
    b: &Bindings,
    kers: impl Fn(usize, &Point) -> Result<Subspace>,
) -> ConditionReport {
    let mut rep = StructureReport::new(name);
    for n in md.notes() {
        rep.note(n);
    }
    if cand == Candidate::Isotropy {
        rep.note("reduction algebra: k_mu".into());
    }
    for (i, x) in samples.iter().enumerate() {
        let res = (0..md.k()).map(|a| kers(a, x)).collect::<Result<Vec<_>>>().and_then(|ks| conditions_at(i, x, &ks, md, cand, b));
        match res {
            Ok(e) => rep.push_sample(e),
            Err(err) => {
                let mut e = SampleEntry::new(i, x);
                e.fail(err.to_string());
                rep.push_sample(e);
            }
        }
    }
    orbit_constancy(&mut rep, "orbit");
    rep
}

/// Both reduction conditions at every sample on the level set in `M`.
pub fn check_contact_conditions(kc: &KContact, md: &MomentumData, samples: &[Point], cand: Candidate, b: &Bindings) -> ConditionReport {
    if let Err(e) = kc.chart.expect_same(&md.j.chart) {
        let mut r = StructureReport::new("contact conditions");
        r.fail(e.to_string());
        return r;
    }
    run_conditions("contact conditions", md, samples, cand, b, |a, x| {
        kernel_at_with(&VForm(alloc::vec![kc.eta.0[a].clone(), kc.deta.0[a].clone()]), x, b)
    })
}

/// The same conditions with `ker ω^α` in place of `ker η^α ∩ ker dη^α`.
pub fn check_symplectic_conditions(ks: &KSymplectic, md: &MomentumData, samples: &[Point], cand: Candidate, b: &Bindings) -> ConditionReport {
    if let Err(e) = ks.chart.expect_same(&md.j.chart) {
        let mut r = StructureReport::new("symplectic conditions");
        r.fail(e.to_string());
        return r;
    }
    run_conditions("symplectic conditions", md, samples, cand, b, |a, x| {
        kernel_at_with(&VForm(alloc::vec![ks.omega.0[a].clone()]), x, b)
    })
}

/// Pointwise agreement of two condition reports over matched samples.
pub fn cross_check_conditions(contact: &ConditionReport, symplectic: &ConditionReport) -> StructureReport {
    let mut rep = StructureReport::new("transcription");
    if contact.samples.len() != symplectic.samples.len() {
        rep.fail(alloc::format!("{} contact samples vs {} symplectic samples", contact.samples.len(), symplectic.samples.len()));
        return rep;
    }
    for (c, s) in contact.samples.iter().zip(&symplectic.samples) {
        let mut e = SampleEntry { index: c.index, point: s.point.clone(), ..Default::default() };
        e.verdict = true;
        if c.verdict != s.verdict {
            e.fail(alloc::format!("contact verdict {} but symplectic verdict {}", c.verdict, s.verdict));
        }
        let lvl_c = c.ranks.get("level").copied().unwrap_or(0);
        let lvl_s = s.ranks.get("level").copied().unwrap_or(0);
        e.rank("level_contact", lvl_c);
        e.rank("level_symplectic", lvl_s);
        if lvl_s != lvl_c + 1 {
            e.fail(alloc::format!("lifted level tangent has rank {lvl_s}, expected {}", lvl_c + 1));
        }
        rep.push_sample(e);
    }
    rep
}

/// `ker i*η ∩ ker i*dη = T(K_[μ] x)` on the parametrizing chart, together with the orbit/level
/// lemma: `T(G_[μ] x) = T(Gx) ∩ T J^{-1}` and `T J^{-1} = (T(Gx) ∩ ker η)^{⊥dη}`.
pub fn check_kernel_identity(kc: &KContact, md: &MomentumData, level: &LevelSet, ys: &[Point], b: &Bindings) -> StructureReport {
    let mut rep = StructureReport::new("kernel identity");
    for n in md.notes() {
        rep.note(n);
    }
    let pulled = match kc.eta.pullback(&level.embedding) {
        Ok(p) => p,
        Err(e) => {
            rep.fail(e.to_string());
            return rep;
        }
    };
    let mut both = pulled.0.clone();
    both.extend(pulled.d().0);
    let forms = VForm(both);
    let g = Subspace::full(md.act.algebra.dim());
    let g_bracket = md.iso.g_bracket_mu.clone();
    let mut k_mu_hits = 0usize;
    for (i, y) in ys.iter().enumerate() {
        let mut e = SampleEntry::new(i, y);
        let res = (|| -> Result<()> {
            let x = level.embed(y, b)?;
            let di = level.embedding.jacobian_at(y, b)?;
            let kern = kernel_at_with(&forms, y, b)?;
            let pre = |s: &Subspace| -> Result<Subspace> {
                let orbit = md.orbit(s, &x, b)?;
                let rows: Matrix = orbit.annihilator().iter().map(|r| linalg::mat_vec(&linalg::transpose(&di, level.dim()), r)).collect();
                Ok(Subspace::kernel(level.dim(), &rows))
            };
            let ob = pre(&md.iso.k_bracket_mu)?;
            let om = pre(&md.iso.k_mu)?;
            rank_names(&mut e, "kernel", &kern);
            rank_names(&mut e, "orbit_k_bracket", &ob);
            rank_names(&mut e, "orbit_k_mu", &om);
            compare(&mut e, "ker i*eta ∩ ker i*d eta = T(K_[mu] x)", &kern, &ob);
            if kern.equals(&om) {
                k_mu_hits += 1;
            }
            let t = md.tangent(&x, b)?;
            let gx = md.orbit(&g, &x, b)?;
            let gbx = md.orbit(&g_bracket, &x, b)?;
            compare(&mut e, "T(G_[mu] x) = T(Gx) ∩ T J^-1", &gbx, &gx.intersect(&t));
            let ker_eta = kernel_at_with(&kc.eta, &x, b)?;
            let perp = orthogonal_deta(kc, &gx.intersect(&ker_eta), &x)?;
            compare(&mut e, "T J^-1 = (T(Gx) ∩ ker eta)^perp", &t, &perp);
            Ok(())
        })();
        if let Err(err) = res {
            e.fail(err.to_string());
        }
        rep.push_sample(e);
    }
    rep.note(alloc::format!("k_mu orbit matches the kernel at {k_mu_hits}/{} samples", ys.len()));
    orbit_constancy(&mut rep, "orbit_k_bracket");
    rep
}

/// Fixed-value and ray level-set characterizations by orthogonal complements, at points of the
/// ray level set in an exact k-symplectic manifold.
pub fn check_ksymplectic_level_lemma(ks: &KSymplectic, md: &MomentumData, samples: &[Point], b: &Bindings) -> StructureReport {
    let mut rep = StructureReport::new("k-symplectic level lemma");
    let Some(theta) = &ks.theta else {
        rep.fail("the k-symplectic structure has no potential".into());
        return rep;
    };
    if ks.k() != 1 {
        rep.note("ray level-set characterization checked only for k = 1".into());
    }
    let g = Subspace::full(md.act.algebra.dim());
    for (i, p) in samples.iter().enumerate() {
        let mut e = SampleEntry::new(i, p);
        let res = (|| -> Result<()> {
            let gp = md.orbit(&g, p, b)?;
            let fixed = md.tangent_fixed(p, b)?;
            let value = md.values(p, b)?;
            let g_val = value.iter().fold(g.clone(), |acc, r| acc.intersect(&md.act.algebra.isotropy_of(r)));
            compare(&mut e, "T(G_mu p) = T(Gp) ∩ T J^-1(mu)", &md.orbit(&g_val, p, b)?, &gp.intersect(&fixed));
            compare(&mut e, "T J^-1(mu) = T(Gp)^perp", &fixed, &orthogonal_k(ks, &gp, p)?);
            rank_names(&mut e, "fixed", &fixed);
            if ks.k() != 1 {
                return Ok(());
            }
            let ray = md.tangent(p, b)?;
            rank_names(&mut e, "ray", &ray);
            compare(&mut e, "T(G_[mu] p) = T(Gp) ∩ T J^-1(R mu)", &md.orbit(&md.iso.g_bracket_mu, p, b)?, &gp.intersect(&ray));
            let ker_theta = kernel_at_with(theta, p, b)?;
            compare(&mut e, "T J^-1(R mu) = (T(Gp) ∩ ker theta)^perp", &ray, &orthogonal_k(ks, &gp.intersect(&ker_theta), p)?);
            Ok(())
        })();
        if let Err(err) = res {
            e.fail(err.to_string());
        }
        rep.push_sample(e);
    }
    rep
}

/// Quotient chart, projection and claimed reduced form for a level set.
#[derive(Clone, Debug)]
pub struct QuotientPresentation {
    pub level: LevelSet,
    pub reduced: Arc<Chart>,
    pub projection: SmoothMap,
    pub eta_red: VForm,
    /// Optional section `reduced → param` used to lift reduced points.
    pub section: Option<SmoothMap>,
}

impl QuotientPresentation {
    pub fn new(level: LevelSet, projection: SmoothMap, eta_red: VForm, section: Option<SmoothMap>) -> Result<Self> {
        level.param.expect_same(&projection.source)?;
        projection.target.expect_same(eta_red.chart())?;
        if let Some(s) = &section {
            s.source.expect_same(&projection.target)?;
            s.target.expect_same(&level.param)?;
        }
        Ok(QuotientPresentation { reduced: projection.target.clone(), level, projection, eta_red, section })
    }
}

/// `π*η_red = i*η`, the reduced structure is k-contact, and the dimensions and Reeb fields match.
pub fn verify_reduction(q: &QuotientPresentation, kc: &KContact, md: Option<&MomentumData>, ys: &[Point], b: &Bindings) -> StructureReport {
    let mut rep = StructureReport::new("reduction");
    let lhs = q.eta_red.pullback(&q.projection);
    let rhs = kc.eta.pullback(&q.level.embedding);
    match (lhs, rhs) {
        (Ok(l), Ok(r)) => {
            for (a, (lf, rf)) in l.0.iter().zip(&r.0).enumerate() {
                let eq = lf.equal(rf);
                let res = (!eq.equal).then(|| lf.sub(rf).map(|d| d.to_string()).unwrap_or_default());
                rep.push_symbolic(&alloc::format!("pi* eta_red{0} = i* eta{0}", a + 1), eq, res);
            }
        }
        (Err(e), _) | (_, Err(e)) => rep.fail(e.to_string()),
    }
    let red = match KContact::new(q.eta_red.clone()) {
        Ok(r) => r,
        Err(e) => {
            rep.fail(e.to_string());
            return rep;
        }
    };
    let zs: Result<Vec<Point>> = ys.iter().map(|y| q.projection.apply_point(y, b)).collect();
    let zs = match zs {
        Ok(z) => z,
        Err(e) => {
            rep.fail(e.to_string());
            return rep;
        }
    };
    rep.absorb(verify_kcontact(&red, &zs));
    let (dp, dr) = (q.level.dim(), q.reduced.dim());
    for (i, (y, z)) in ys.iter().zip(&zs).enumerate() {
        let mut e = SampleEntry::new(i, y);
        let res = (|| -> Result<()> {
            let dpi = q.projection.jacobian_at(y, b)?;
            let r = linalg::rank(&dpi, dp);
            e.rank("dpi", r);
            if r != dr {
                e.fail(alloc::format!("projection has rank {r} < {dr}"));
            }
            let x = q.level.embed(y, b)?;
            let di = q.level.embedding.jacobian_at(y, b)?;
            if let Some(md) = md {
                let orbit = md.orbit(&md.iso.k_bracket_mu, &x, b)?;
                e.rank("orbit", orbit.rank());
                let fibre = Subspace::kernel(dp, &dpi);
                for v in orbit.basis() {
                    match linalg::solve(&di, v, dp) {
                        Some(w) if fibre.contains_vector(&w) => {}
                        Some(w) => e.fail(alloc::format!("orbit direction {} is not vertical for the projection", fmt_vector(&w))),
                        None => e.fail(alloc::format!("orbit direction {} is not tangent to the level set", fmt_vector(v))),
                    }
                }
                if dr + orbit.rank() != dp {
                    e.fail(alloc::format!("dim reduced = {dr} but dim level set - orbit rank = {}", dp - orbit.rank()));
                }
            }
            let parent_reeb = reeb_at(kc, &x)?;
            let red_reeb = reeb_at(&red, z)?;
            for (a, (rp, rr)) in parent_reeb.iter().zip(&red_reeb).enumerate() {
                let Some(w) = linalg::solve(&di, rp, dp) else {
                    e.fail(alloc::format!("R{} is not tangent to the level set", a + 1));
                    continue;
                };
                let pushed = linalg::mat_vec(&dpi, &w);
                if &pushed != rr {
                    e.fail(alloc::format!("pushforward of R{} is {} but the reduced Reeb field is {}", a + 1, fmt_vector(&pushed), fmt_vector(rr)));
                }
            }
            Ok(())
        })();
        if let Err(err) = res {
            e.fail(err.to_string());
        }
        rep.push_sample(e);
    }
    orbit_constancy(&mut rep, "orbit");
    rep
}

/// Kernel of the restricted 2-form against the orbits of `𝔨_μ` and `𝔨_[μ]`, on a symplectised
/// level set.
pub fn probe_reduction_group(ks: &KSymplectic, md: &MomentumData, samples: &[Point], b: &Bindings) -> Result<ProbeReport> {
    ks.chart.expect_same(&md.j.chart)?;
    let (km, kb) = (md.iso.k_mu.clone(), md.iso.k_bracket_mu.clone());
    let mut out = Vec::new();
    let mut notes = md.notes();
    let mut qm = None;
    let mut qb = None;
    let mut kinds = Vec::new();
    for (i, p) in samples.iter().enumerate() {
        let t = md.tangent(p, b)?;
        let kern = t.intersect(&orthogonal_k(ks, &t, p)?);
        let om = md.orbit(&km, p, b)?;
        let ob = md.orbit(&kb, p, b)?;
        let s = ProbeSample {
            index: i,
            point: crate::report::point_strings(p),
            level_tangent_rank: t.rank(),
            kernel_rank: kern.rank(),
            k_mu_orbit_rank: om.rank(),
            k_bracket_orbit_rank: ob.rank(),
            kernel_equals_k_bracket: kern.equals(&ob),
            kernel_equals_k_mu: kern.equals(&om),
            kernel_strictly_contains_k_mu: kern.contains(&om) && kern.rank() > om.rank(),
        };
        let contact_level = t.rank().saturating_sub(1);
        qm.get_or_insert(contact_level.saturating_sub(om.rank()));
        qb.get_or_insert(contact_level.saturating_sub(ob.rank()));
        kinds.push(match (s.kernel_equals_k_bracket, s.kernel_equals_k_mu) {
            (true, true) => ProbeMatch::Both,
            (true, false) => ProbeMatch::ProjectiveIsotropy,
            (false, true) => ProbeMatch::Isotropy,
            (false, false) => ProbeMatch::Neither,
        });
        out.push(s);
    }
    let matches = match kinds.first() {
        Some(k) if kinds.iter().all(|x| x == k) => *k,
        Some(_) => {
            notes.push("the matching subalgebra varies between samples".into());
            ProbeMatch::Neither
        }
        None => ProbeMatch::Neither,
    };
    let odd = |d: Option<usize>| d.map(|d| d % 2 == 1);
    if ks.k() == 1 {
        for (name, d) in [("k_mu", qm), ("k_[mu]", qb)] {
            if let Some(d) = d {
                if d % 2 == 0 {
                    notes.push(alloc::format!("quotient by {name} has even dimension {d} and cannot be contact"));
                }
            }
        }
    }
    Ok(ProbeReport {
        matches,
        k_mu_dim: km.rank(),
        k_bracket_dim: kb.rank(),
        quotient_dim_k_mu: qm,
        quotient_dim_k_bracket: qb,
        quotient_k_mu_odd: odd(qm),
        quotient_k_bracket_odd: odd(qb),
        samples: out,
        notes,
    })
}

/// `i*ω` restricted kernel contains the `𝔨_[μ]` orbit on a level set in an exact k-symplectic manifold.
pub fn check_orbit_in_kernel(ks: &KSymplectic, md: &MomentumData, samples: &[Point], b: &Bindings) -> StructureReport {
    let mut rep = StructureReport::new("orbit in kernel");
    for (i, p) in samples.iter().enumerate() {
        let mut e = SampleEntry::new(i, p);
        let res = (|| -> Result<()> {
            let t = md.tangent(p, b)?;
            let kern = t.intersect(&orthogonal_k(ks, &t, p)?);
            let ob = md.orbit(&md.iso.k_bracket_mu, p, b)?;
            if !kern.contains(&ob) {
                e.fail(alloc::format!("orbit direction {} is not in the kernel", fmt_vector(&ob.witness_outside(&kern).unwrap_or_default())));
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{parse_field, parse_form, VectorField};
    use crate::lie::{lift_action, extend_momentum, momentum_from_action, LieAlgebra};
    use crate::structures::symplectize;
    use crate::symbolic::{parse_expr, qi, Opaques};

    fn chart(name: &str, coords: &[&str]) -> Arc<Chart> {
        Arc::new(Chart::new(name, coords, &[] as &[&str]).unwrap())
    }

    fn exprs(src: &[&str]) -> Vec<Expr> {
        src.iter().map(|s| parse_expr(s, &Opaques::new()).unwrap()).collect()
    }

    struct Strings {
        kc: KContact,
        md: MomentumData,
        level: LevelSet,
    }

    fn strings() -> Strings {
        let m = chart("strings", &["q1", "q2", "p1t", "p2t", "p1x", "p2x", "st", "sx"]);
        let o = Opaques::new();
        let eta = VForm::new(alloc::vec![
            parse_form("d(st) - p1t d(q1) - p2t d(q2)", &m, 1, &o).unwrap(),
            parse_form("d(sx) - p1x d(q1) - p2x d(q2)", &m, 1, &o).unwrap(),
        ])
        .unwrap();
        let kc = KContact::new(eta).unwrap();
        let fields: Vec<VectorField> = ["D(sx)", "D(q1) + D(q2)"].iter().map(|f| parse_field(f, &m, &o).unwrap()).collect();
        let act = InfAction::new(LieAlgebra::abelian(2), &m, fields, -1).unwrap();
        let j = momentum_from_action(&act, &kc.eta).unwrap();
        let md = MomentumData::new(act, j, alloc::vec![alloc::vec![qi(0), qi(0)], alloc::vec![qi(1), qi(0)]]).unwrap();
        let y = chart("strings_level", &["q1", "q2", "p1t", "p1x", "st", "sx"]);
        let emb = SmoothMap::new(&y, &m, exprs(&["q1", "q2", "p1t", "-p1t", "p1x", "-p1x", "st", "sx"])).unwrap();
        let level = level_set_of(&md, Some(emb), Vec::new()).unwrap();
        Strings { kc, md, level }
    }

    fn samples(s: &Strings, n: usize) -> (Vec<Point>, Vec<Point>) {
        let b = Bindings::new();
        let ys = s.level.sample(&mut Sampler::new(3), n, &Point::new(), &b).unwrap();
        let xs = ys.iter().map(|y| s.level.embed(y, &b).unwrap()).collect();
        (ys, xs)
    }

    #[test]
    fn strings_level_set_and_tangent() {
        let s = strings();
        assert_eq!(s.level.equations.len(), 2);
        let (_, xs) = samples(&s, 5);
        let b = Bindings::new();
        for x in &xs {
            assert_eq!(s.md.tangent(x, &b).unwrap().rank(), 6);
            let o = s.md.orbit(&s.md.iso.k_bracket_mu, x, &b).unwrap();
            assert!(o.equals(&Subspace::span(8, &[alloc::vec![qi(1), qi(1), qi(0), qi(0), qi(0), qi(0), qi(0), qi(0)]])));
        }
        let off = xs[0].clone().with("p2t", qi(100));
        assert!(s.md.tangent(&off, &b).is_err());
    }

    #[test]
    fn strings_conditions_and_kernel_identity() {
        let s = strings();
        let (ys, xs) = samples(&s, 10);
        let b = Bindings::new();
        let r = check_contact_conditions(&s.kc, &s.md, &xs, Candidate::Projective, &b);
        assert!(r.verdict, "{:?}", r.witness);
        let r = check_kernel_identity(&s.kc, &s.md, &s.level, &ys, &b);
        assert!(r.verdict, "{:?}", r.witness);
    }

    #[test]
    fn strings_symplectised_conditions_agree() {
        let s = strings();
        let (ys, xs) = samples(&s, 8);
        let b = Bindings::new();
        let sy = symplectize(&s.kc, None);
        let md2 = MomentumData::new(lift_action(&s.md.act, &sy), extend_momentum(&s.md.j, &sy).unwrap(), s.md.mu.clone()).unwrap();
        let lifted = lift_level_set(&s.level, &sy, &md2).unwrap();
        let mut sampler = Sampler::new(5);
        let ps: Vec<Point> = xs.iter().map(|x| x.clone().with(&sy.s, sampler.nonzero_rational())).collect();
        let c = check_contact_conditions(&s.kc, &s.md, &xs, Candidate::Projective, &b);
        let sp = check_symplectic_conditions(&sy.ks, &md2, &ps, Candidate::Projective, &b);
        assert!(sp.verdict, "{:?}", sp.witness);
        assert!(cross_check_conditions(&c, &sp).verdict);
        assert_eq!(lifted.dim(), ys[0].0.len() + 1);
        assert!(check_orbit_in_kernel(&sy.ks, &md2, &ps, &b).verdict);
    }

    #[test]
    fn strings_reduction_verifies() {
        let s = strings();
        let (ys, _) = samples(&s, 6);
        let b = Bindings::new();
        let red = chart("strings_reduced", &["q", "pt", "px", "st", "sx"]);
        let pi = SmoothMap::new(&s.level.param, &red, exprs(&["q1 - q2", "2 p1t", "2 p1x", "st", "sx"])).unwrap();
        let o = Opaques::new();
        let eta_red = VForm::new(alloc::vec![
            parse_form("d(st) - 1/2 pt d(q)", &red, 1, &o).unwrap(),
            parse_form("d(sx) - 1/2 px d(q)", &red, 1, &o).unwrap(),
        ])
        .unwrap();
        let q = QuotientPresentation::new(s.level.clone(), pi.clone(), eta_red, None).unwrap();
        let r = verify_reduction(&q, &s.kc, Some(&s.md), &ys, &b);
        assert!(r.verdict, "{:?}", r.witness);
        let wrong = VForm::new(alloc::vec![
            parse_form("d(st) - pt d(q)", &red, 1, &o).unwrap(),
            parse_form("d(sx) - 1/2 px d(q)", &red, 1, &o).unwrap(),
        ])
        .unwrap();
        let q = QuotientPresentation::new(s.level.clone(), pi, wrong, None).unwrap();
        let r = verify_reduction(&q, &s.kc, Some(&s.md), &ys, &b);
        assert!(!r.verdict);
        assert!(r.witness.unwrap().contains("eta_red1"));
    }

    #[test]
    fn bad_parametrization_is_rejected() {
        let s = strings();
        let m = s.kc.chart.clone();
        let emb = SmoothMap::new(&s.level.param, &m, exprs(&["q1", "q2", "p1t", "p1t", "p1x", "-p1x", "st", "sx"])).unwrap();
        assert!(level_set_of(&s.md, Some(emb), Vec::new()).is_err());
        assert!(level_set_of(&s.md, None, Vec::new()).is_err());
    }

    #[test]
    fn trivial_action_zero_value() {
        let m = chart("c", &["q", "p", "z"]);
        let o = Opaques::new();
        let kc = KContact::new(VForm::new(alloc::vec![parse_form("d(z) - p d(q)", &m, 1, &o).unwrap()]).unwrap()).unwrap();
        let act = InfAction::new(LieAlgebra::abelian(1), &m, alloc::vec![VectorField::zero(&m)], -1).unwrap();
        let j = momentum_from_action(&act, &kc.eta).unwrap();
        let md = MomentumData::new(act, j, alloc::vec![alloc::vec![qi(0)]]).unwrap();
        let level = level_set_of(&md, None, Vec::new()).unwrap();
        let b = Bindings::new();
        let ys = level.sample(&mut Sampler::new(1), 5, &Point::new(), &b).unwrap();
        assert_eq!(md.tangent(&ys[0], &b).unwrap().rank(), 3);
        let r = check_kernel_identity(&kc, &md, &level, &ys, &b);
        assert!(r.verdict, "{:?}", r.witness);
        assert_eq!(r.ranks("kernel"), alloc::vec![0; 5]);
    }

    fn translations(k: usize, mu: Vec<Vec<Q>>, p: Point) -> StructureReport {
        let ks = crate::structures::canonical_ksymplectic(2, k);
        let m = ks.chart.clone();
        let fields = alloc::vec![VectorField::coord(&m, 0), VectorField::coord(&m, 1)];
        let act = InfAction::new(LieAlgebra::abelian(2), &m, fields, -1).unwrap();
        let j = momentum_from_action(&act, ks.theta.as_ref().unwrap()).unwrap();
        let md = MomentumData::new(act, j, mu).unwrap();
        check_ksymplectic_level_lemma(&ks, &md, &[p], &Bindings::new())
    }

    #[test]
    fn translations_on_canonical_ksymplectic() {
        let p = Point::new().with("q1", qi(5)).with("q2", qi(-2)).with("p1_1", qi(2)).with("p2_1", qi(4));
        let r = translations(1, alloc::vec![alloc::vec![qi(1), qi(2)]], p.clone());
        assert!(r.verdict, "{:?}", r.witness);
        assert_eq!(r.ranks("ray"), alloc::vec![3]);
        let p = p.with("p1_2", qi(-3)).with("p2_2", qi(1));
        let r = translations(2, alloc::vec![alloc::vec![qi(1), qi(2)], alloc::vec![qi(-3), qi(1)]], p);
        assert!(r.verdict, "{:?}", r.witness);
        assert_eq!(r.ranks("fixed"), alloc::vec![2]);
    }
}
