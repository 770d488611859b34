//! k-contact and k-symplectic structures: pointwise verification, Reeb fields, flat maps,
//! orthogonal complements, canonical models and symplectisation.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exterior::{contract_kv, Form, KVectorField, SmoothMap, VForm, VectorField};
use crate::linalg::{self, Matrix, Subspace};
use crate::report::{SampleEntry, StructureReport};
use crate::symbolic::{expr_equal, Bindings, Chart, Equality, Expr, Point, Q};


#[derive(Clone, Debug)]
pub struct KContact {
    pub chart: Arc<Chart>,
    pub eta: VForm,
    pub deta: VForm,
    pub polarization: Option<Vec<VectorField>>,
    /// Domain: expressions required to be nonzero.
    pub open: Vec<Expr>,
}

impl KContact {
    pub fn new(eta: VForm) -> Result<Self> {
        if eta.degree() != 1 {
            return Err(Error::DegreeMismatch(alloc::format!("eta must be a 1-form, got degree {}", eta.degree())));
        }
        let deta = eta.d();
        Ok(KContact { chart: eta.chart().clone(), eta, deta, polarization: None, open: Vec::new() })
    }

    pub fn with_open(mut self, open: Vec<Expr>) -> Self {
        self.open = open;
        self
    }

    pub fn with_polarization(mut self, fields: Vec<VectorField>) -> Self {
        self.polarization = Some(fields);
        self
    }

    pub fn k(&self) -> usize {
        self.eta.k()
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
}

#[derive(Clone, Debug)]
pub struct KSymplectic {
    pub chart: Arc<Chart>,
    pub omega: VForm,
    pub theta: Option<VForm>,
    pub open: Vec<Expr>,
}

impl KSymplectic {
    pub fn new(omega: VForm) -> Result<Self> {
        if omega.degree() != 2 {
            return Err(Error::DegreeMismatch(alloc::format!("omega must be a 2-form, got degree {}", omega.degree())));
        }
        Ok(KSymplectic { chart: omega.chart().clone(), omega, theta: None, open: Vec::new() })
    }

    /// Exact structure `ω = dΘ`.
    pub fn exact(theta: VForm) -> Result<Self> {
        let mut ks = KSymplectic::new(theta.d())?;
        ks.theta = Some(theta);
        Ok(ks)
    }

    pub fn with_open(mut self, open: Vec<Expr>) -> Self {
        self.open = open;
        self
    }

    pub fn k(&self) -> usize {
        self.omega.k()
    }
}

/// Rows of `v ↦ ι_v a^α` at `x`, stacked over α.
pub fn contraction_rows(a: &VForm, x: &Point, b: &Bindings) -> Result<Matrix> {
    let n = a.chart().dim();
    let mut rows = Vec::new();
    for comp in &a.0 {
        match comp.degree {
            1 => rows.push(comp.eval_1(x, b)?),
            2 => {
                let w = comp.eval_2(x, b)?;
                rows.extend(linalg::transpose(&w, n));
            }
            d => return Err(Error::DegreeMismatch(alloc::format!("kernel of a {d}-form"))),
        }
    }
    Ok(rows)
}

/// Exact kernel of the stacked contraction `v ↦ (ι_v a^α)(x)`.
pub fn kernel_at(a: &VForm, x: &Point) -> Result<Subspace> {
    kernel_at_with(a, x, &Bindings::new())
}

pub fn kernel_at_with(a: &VForm, x: &Point, b: &Bindings) -> Result<Subspace> {
    Ok(Subspace::kernel(a.chart().dim(), &contraction_rows(a, x, b)?))
}

pub fn fmt_vector(v: &[Q]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    alloc::format!("({})", parts.join(", "))
}

/// Pointwise check of the three defining conditions (plus polarization, when present).
pub fn verify_kcontact(kc: &KContact, samples: &[Point]) -> StructureReport {
    let mut rep = StructureReport::new("kcontact");
    let (n, k) = (kc.dim(), kc.k());
    if k >= n {
        rep.fail(alloc::format!("k = {k} >= dim = {n}: ker eta must be a nonzero distribution of corank k"));
        return rep;
    }
    let b = Bindings::new();
    for (i, x) in samples.iter().enumerate() {
        let mut e = SampleEntry::new(i, x);
        let res = (|| -> Result<()> {
            let ker_eta = kernel_at_with(&kc.eta, x, &b)?;
            let ker_deta = kernel_at_with(&kc.deta, x, &b)?;
            let cap = ker_eta.intersect(&ker_deta);
            e.rank("ker_eta", ker_eta.rank());
            e.rank("ker_deta", ker_deta.rank());
            e.rank("ker_eta_cap_ker_deta", cap.rank());
            if ker_eta.rank() != n - k {
                e.fail(alloc::format!("rank ker η = {} ≠ {}", ker_eta.rank(), n - k));
            }
            if ker_deta.rank() != k {
                e.fail(alloc::format!("rank ker dη = {} ≠ {k}", ker_deta.rank()));
            }
            if !cap.is_zero() {
                e.fail(alloc::format!("ker η ∩ ker dη contains {}", fmt_vector(&cap.basis()[0])));
            }
            if let Some(pol) = &kc.polarization {
                let vals: Vec<Vec<Q>> = pol.iter().map(|v| v.eval(x, &b)).collect::<Result<_>>()?;
                let span = Subspace::span(n, &vals);
                e.rank("polarization", span.rank());
                if let Some(w) = span.witness_outside(&ker_eta) {
                    e.fail(alloc::format!("polarization vector {} not in ker η", fmt_vector(&w)));
                }
                for (a, va) in pol.iter().enumerate() {
                    for vb in &pol[a + 1..] {
                        let br = va.bracket(vb)?.eval(x, &b)?;
                        if !span.contains_vector(&br) {
                            e.fail(alloc::format!("polarization not involutive: bracket {} leaves the span", fmt_vector(&br)));
                        }
                    }
                }
            }
            Ok(())
        })();
        if let Err(err) = res {
            e.fail(alloc::format!("evaluation failed: {err}"));
        }
        rep.push_sample(e);
    }
    rep
}

pub fn verify_ksymplectic(ks: &KSymplectic, samples: &[Point]) -> StructureReport {
    let mut rep = StructureReport::new("ksymplectic");
    let dw = ks.omega.d();
    let closed = dw.0.iter().all(Form::is_zero);
    rep.push_symbolic("d omega = 0", Equality { equal: closed, probabilistic: false }, None);
    if let Some(theta) = &ks.theta {
        rep.push_symbolic("d theta = omega", theta.d().equal(&ks.omega), None);
    }
    let b = Bindings::new();
    for (i, x) in samples.iter().enumerate() {
        let mut e = SampleEntry::new(i, x);
        match kernel_at_with(&ks.omega, x, &b) {
            Ok(ker) => {
                e.rank("ker_omega", ker.rank());
                if !ker.is_zero() {
                    e.fail(alloc::format!("rank ker ω = {} ≠ 0", ker.rank()));
                }
            }
            Err(err) => e.fail(alloc::format!("evaluation failed: {err}")),
        }
        rep.push_sample(e);
    }
    rep
}

/// Reeb fields, symbolic when elimination succeeds, otherwise one pointwise solution per sample.
#[derive(Clone, Debug)]
pub struct ReebSolution {
    pub fields: Option<Vec<VectorField>>,
    pub pointwise: Vec<Vec<Vec<Q>>>,
    pub report: StructureReport,
}

fn reeb_system(kc: &KContact) -> (Vec<Vec<Expr>>, Vec<Vec<Expr>>) {
    let (n, k) = (kc.dim(), kc.k());
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (beta, eta) in kc.eta.0.iter().enumerate() {
        rows.push((0..n).map(|i| eta.coeff(&[i])).collect());
        rhs.push((0..k).map(|a| if a == beta { Expr::one() } else { Expr::zero() }).collect());
    }
    for deta in &kc.deta.0 {
        // (ι_R dη)_j = Σ_i R^i W_ij with W_ij the coefficient of dx^i ∧ dx^j
        for j in 0..n {
            let row = (0..n)
                .map(|i| match i.cmp(&j) {
                    core::cmp::Ordering::Less => deta.coeff(&[i, j]),
                    core::cmp::Ordering::Greater => -deta.coeff(&[j, i]),
                    core::cmp::Ordering::Equal => Expr::zero(),
                })
                .collect::<Vec<_>>();
            if row.iter().all(Expr::is_zero) {
                continue;
            }
            rows.push(row);
            rhs.push(alloc::vec![Expr::zero(); k]);
        }
    }
    (rows, rhs)
}

/// Checks the Reeb identities and commutation for candidate fields.
pub fn check_reeb(kc: &KContact, fields: &[VectorField]) -> StructureReport {
    let mut rep = StructureReport::new("reeb");
    for (a, r) in fields.iter().enumerate() {
        for (bta, eta) in kc.eta.0.iter().enumerate() {
            let lhs = eta.iota(r).map(|f| f.scalar()).unwrap_or_default();
            let want = if a == bta { Expr::one() } else { Expr::zero() };
            let eq = expr_equal(&lhs, &want);
            let res = (!eq.equal).then(|| (&lhs - &want).to_string());
            rep.push_symbolic(&alloc::format!("iota R{} eta{} = delta", a + 1, bta + 1), eq, res);
        }
        for (bta, deta) in kc.deta.0.iter().enumerate() {
            let f = deta.iota(r).unwrap_or_else(|_| Form::zero(&kc.chart, 1));
            rep.push_symbolic(
                &alloc::format!("iota R{} d eta{} = 0", a + 1, bta + 1),
                f.equal(&Form::zero(&kc.chart, 1)),
                (!f.is_zero()).then(|| f.to_string()),
            );
        }
    }
    for a in 0..fields.len() {
        for c in a + 1..fields.len() {
            let br = fields[a].bracket(&fields[c]).unwrap_or_else(|_| VectorField::zero(&kc.chart));
            rep.push_symbolic(
                &alloc::format!("[R{}, R{}] = 0", a + 1, c + 1),
                br.equal(&VectorField::zero(&kc.chart)),
                (!br.is_zero()).then(|| br.to_string()),
            );
        }
    }
    rep
}

/// Pointwise Reeb vectors at `x`, one per α.
pub fn reeb_at(kc: &KContact, x: &Point) -> Result<Vec<Vec<Q>>> {
    let (n, k) = (kc.dim(), kc.k());
    let b = Bindings::new();
    let mut rows = contraction_rows(&kc.deta, x, &b)?;
    let eta_rows = contraction_rows(&kc.eta, x, &b)?;
    let zero_count = rows.len();
    rows.extend(eta_rows);
    (0..k)
        .map(|a| {
            let mut rhs = alloc::vec![Q::zero(); zero_count];
            rhs.extend((0..k).map(|bta| if a == bta { Q::one() } else { Q::zero() }));
            let sol = linalg::solve(&rows, &rhs, n).ok_or_else(|| Error::Invalid("no Reeb vector at sample".into()))?;
            if linalg::rank(&rows, n) != n {
                return Err(Error::Invalid("Reeb vector not unique at sample".into()));
            }
            Ok(sol)
        })
        .collect()
}

pub fn solve_reeb(kc: &KContact, samples: &[Point]) -> ReebSolution {
    let n = kc.dim();
    let (rows, rhs) = reeb_system(kc);
    if let Some(sol) = linalg::solve_expr(rows, rhs, n) {
        let fields: Vec<VectorField> = sol.into_iter().map(|c| VectorField { chart: kc.chart.clone(), comps: c }).collect();
        let report = check_reeb(kc, &fields);
        if report.verdict {
            return ReebSolution { fields: Some(fields), pointwise: Vec::new(), report };
        }
    }
    let mut report = StructureReport::new("reeb");
    report.note("pointwise only: symbolic elimination was inconclusive".into());
    let mut pointwise = Vec::new();
    for (i, x) in samples.iter().enumerate() {
        let mut e = SampleEntry::new(i, x);
        match reeb_at(kc, x) {
            Ok(v) => {
                e.rank("reeb_fields", v.len());
                pointwise.push(v);
            }
            Err(err) => e.fail(err.to_string()),
        }
        report.push_sample(e);
    }
    ReebSolution { fields: None, pointwise, report }
}

/// `(Σ_α ι_{X_α} dη^α, Σ_α ι_{X_α} η^α)`.
pub fn flat_eta(kc: &KContact, x: &KVectorField) -> Result<(Form, Expr)> {
    Ok((contract_kv(x, &kc.deta)?, contract_kv(x, &kc.eta)?.scalar()))
}

/// `Σ_α ι_{X_α} ω^α`.
pub fn flat_omega(ks: &KSymplectic, x: &KVectorField) -> Result<Form> {
    contract_kv(x, &ks.omega)
}

fn orthogonal(forms: &VForm, w: &Subspace, x: &Point) -> Result<Subspace> {
    let n = forms.chart().dim();
    let b = Bindings::new();
    let mut rows = Vec::new();
    for comp in &forms.0 {
        let m = comp.eval_2(x, &b)?;
        for v in w.basis() {
            rows.push((0..n).map(|j| (0..n).map(|i| &v[i] * &m[i][j]).sum()).collect());
        }
    }
    Ok(Subspace::kernel(n, &rows))
}

/// `{v : dη^α(w, v) = 0 for all w ∈ W and all α}`.
pub fn orthogonal_deta(kc: &KContact, w: &Subspace, x: &Point) -> Result<Subspace> {
    orthogonal(&kc.deta, w, x)
}

/// `{v : ω^α(w, v) = 0 for all w ∈ W and all α}`.
pub fn orthogonal_k(ks: &KSymplectic, w: &Subspace, x: &Point) -> Result<Subspace> {
    orthogonal(&ks.omega, w, x)
}

/// Canonical k-contact model on `ℝ^n × (ℝ^n)^k × ℝ^k`, `η^α = dz^α − p_i^α dq^i`.
pub fn canonical_kcontact(n: usize, k: usize) -> KContact {
    let mut coords: Vec<String> = (1..=n).map(|i| alloc::format!("q{i}")).collect();
    for i in 1..=n {
        for a in 1..=k {
            coords.push(alloc::format!("p{i}_{a}"));
        }
    }
    coords.extend((1..=k).map(|a| alloc::format!("z{a}")));
    let chart = Arc::new(Chart::new("canonical_kcontact", &coords, &[]).unwrap());
    let comps = (1..=k)
        .map(|a| {
            let mut f = Form::dx(&chart, chart.index_of(&alloc::format!("z{a}")).unwrap());
            for i in 1..=n {
                let p = Expr::sym(&alloc::format!("p{i}_{a}"));
                f = f.sub(&Form::dx(&chart, i - 1).scale(&p)).unwrap();
            }
            f
        })
        .collect();
    KContact::new(VForm(comps)).unwrap()
}

/// Canonical k-symplectic model on `(T^1_k)^* ℝ^n`, `θ^α = p_i^α dq^i`, `ω = dθ`.
pub fn canonical_ksymplectic(n: usize, k: usize) -> KSymplectic {
    let mut coords: Vec<String> = (1..=n).map(|i| alloc::format!("q{i}")).collect();
    for i in 1..=n {
        for a in 1..=k {
            coords.push(alloc::format!("p{i}_{a}"));
        }
    }
    let chart = Arc::new(Chart::new("canonical_ksymplectic", &coords, &[]).unwrap());
    let comps = (1..=k)
        .map(|a| {
            let mut f = Form::zero(&chart, 1);
            for i in 1..=n {
                let p = Expr::sym(&alloc::format!("p{i}_{a}"));
                f = f.add(&Form::dx(&chart, i - 1).scale(&p)).unwrap();
            }
            f
        })
        .collect();
    KSymplectic::exact(VForm(comps)).unwrap()
}

/// Exact k-symplectic manifold `(ℝ^× × M, d(s pr*η))` with its attached fields.
#[derive(Clone, Debug)]
pub struct Symplectization {
    pub ks: KSymplectic,
    pub s: String,
    pub projection: SmoothMap,
    pub lifted_reeb: Option<Vec<VectorField>>,
    pub euler: VectorField,
}

fn fresh_name(chart: &Chart, base: &str) -> String {
    let mut s = base.to_string();
    while chart.index_of(&s).is_some() || chart.is_param(&s) {
        s.push('_');
    }
    s
}

/// Lifts a vector field of `M` to `ℝ^× × M` with zero `∂/∂s` component.
pub fn lift_field(v: &VectorField, target: &Arc<Chart>) -> VectorField {
    let mut comps = alloc::vec![Expr::zero()];
    comps.extend(v.comps.iter().cloned());
    VectorField { chart: target.clone(), comps }
}

pub fn symplectize(kc: &KContact, reeb: Option<&[VectorField]>) -> Symplectization {
    let s = fresh_name(&kc.chart, "s");
    let mut coords: Vec<String> = alloc::vec![s.clone()];
    coords.extend(kc.chart.coords.iter().map(|c| c.to_string()));
    let params: Vec<String> = kc.chart.params.iter().map(|c| c.to_string()).collect();
    let chart = Arc::new(Chart::new(&alloc::format!("{}_symplectised", kc.chart.name), &coords, &params).unwrap());
    let projection = SmoothMap::new(&chart, &kc.chart, kc.chart.coords.iter().map(|c| Expr::sym(c)).collect()).unwrap();
    let theta = kc.eta.pullback(&projection).unwrap().scale(&Expr::sym(&s));
    let mut open = alloc::vec![Expr::sym(&s)];
    open.extend(kc.open.iter().cloned());
    let ks = KSymplectic::exact(theta).unwrap().with_open(open);
    let lifted_reeb = reeb.map(|rs| rs.iter().map(|r| lift_field(r, &chart)).collect());
    let mut euler = VectorField::zero(&chart);
    euler.comps[0] = Expr::sym(&s);
    Symplectization { ks, s, projection, lifted_reeb, euler }
}

/// Identities attached to a symplectisation: `ι_∇ω = Θ`, `ι_{R̃_α}ω^β = −δ ds`, `R̃_α s = 0`.
pub fn verify_symplectization(sy: &Symplectization) -> StructureReport {
    let mut rep = StructureReport::new("symplectisation");
    let chart = &sy.ks.chart;
    let theta = sy.ks.theta.as_ref().expect("symplectisation is exact");
    let lhs = sy.ks.omega.iota(&sy.euler).unwrap();
    rep.push_symbolic("iota euler omega = theta", lhs.equal(theta), None);
    if let Some(rs) = &sy.lifted_reeb {
        let ds = Form::dx(chart, 0);
        for (a, r) in rs.iter().enumerate() {
            for (b, w) in sy.ks.omega.0.iter().enumerate() {
                let want = if a == b { ds.neg() } else { Form::zero(chart, 1) };
                let got = w.iota(r).unwrap();
                rep.push_symbolic(&alloc::format!("iota R{} omega{} = -delta ds", a + 1, b + 1), got.equal(&want), None);
            }
            let rs_s = r.apply(&Expr::sym(&sy.s));
            rep.push_symbolic(&alloc::format!("R{} s = 0", a + 1), expr_equal(&rs_s, &Expr::zero()), None);
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::parse_form;
    use crate::sampling::{SampleSpec, Sampler};
    use crate::symbolic::{qi, Opaques};

    fn samples(chart: &Chart, open: &[Expr], n: usize) -> Vec<Point> {
        let fixed = Point::new();
        let b = Bindings::new();
        Sampler::new(11).points(&SampleSpec { chart, fixed: &fixed, open, bindings: &b }, n).unwrap()
    }

    #[test]
    fn canonical_kernel_of_eta() {
        let kc = canonical_kcontact(2, 2);
        let x = &samples(&kc.chart, &[], 1)[0];
        let ker = kernel_at(&kc.eta, x).unwrap();
        assert_eq!(ker.rank(), 2 + 2 * 2);
        // ∂/∂q^1 + p_1^α ∂/∂z^α
        let mut v = alloc::vec![Q::zero(); kc.dim()];
        v[0] = qi(1);
        v[kc.chart.index_of("z1").unwrap()] = x.get("p1_1").unwrap().clone();
        v[kc.chart.index_of("z2").unwrap()] = x.get("p1_2").unwrap().clone();
        assert!(ker.contains_vector(&v));
        for i in 0..4 {
            let mut e = alloc::vec![Q::zero(); kc.dim()];
            e[2 + i] = qi(1);
            assert!(ker.contains_vector(&e));
        }
    }

    #[test]
    fn kernel_of_dx_on_plane() {
        let c = Arc::new(Chart::new("R2", &["x", "y"], &[]).unwrap());
        let eta = VForm(alloc::vec![Form::dx(&c, 0)]);
        let ker = kernel_at(&eta, &Point::new().with("x", qi(0)).with("y", qi(0))).unwrap();
        assert!(ker.equals(&Subspace::span(2, &[alloc::vec![qi(0), qi(1)]])));
    }

    #[test]
    fn canonical_model_passes_and_reeb_is_dz() {
        let kc = canonical_kcontact(2, 2);
        let pts = samples(&kc.chart, &[], 20);
        assert!(verify_kcontact(&kc, &pts).verdict);
        let sol = solve_reeb(&kc, &pts);
        let fields = sol.fields.unwrap();
        for (a, r) in fields.iter().enumerate() {
            let want = VectorField::coord_named(&kc.chart, &alloc::format!("z{}", a + 1)).unwrap();
            assert_eq!(r, &want);
        }
    }

    #[test]
    fn one_dimensional_degenerate_case_fails() {
        let c = Arc::new(Chart::new("R1", &["x"], &[]).unwrap());
        let kc = KContact::new(VForm(alloc::vec![Form::dx(&c, 0)])).unwrap();
        let rep = verify_kcontact(&kc, &samples(&c, &[], 3));
        assert!(!rep.verdict);
        assert!(rep.witness.unwrap().contains("ker eta must be"));
    }

    #[test]
    fn non_example_fails_with_deta_rank_witness() {
        let c = Arc::new(Chart::new("R4", &["x1", "x2", "x3", "x4"], &[]).unwrap());
        let o = Opaques::new();
        let eta = VForm(alloc::vec![
            parse_form("d(x1) + x3*d(x4)", &c, 1, &o).unwrap(),
            parse_form("d(x2) + x2*d(x1)", &c, 1, &o).unwrap()
        ]);
        let kc = KContact::new(eta).unwrap();
        let pts = samples(&c, &[], 10);
        let rep = verify_kcontact(&kc, &pts);
        assert!(!rep.verdict);
        assert_eq!(rep.witness.as_deref(), Some("sample 0: rank ker dη = 0 ≠ 2"));
        let sy = symplectize(&kc, None);
        let pts = samples(&sy.ks.chart, &sy.ks.open, 10);
        let rep = verify_ksymplectic(&sy.ks, &pts);
        assert!(rep.verdict, "{:?}", rep.witness);
    }

    #[test]
    fn symplectisation_of_canonical_contact_three_space() {
        let c = Arc::new(Chart::new("R3", &["q", "p", "z"], &[]).unwrap());
        let o = Opaques::new();
        let kc = KContact::new(VForm(alloc::vec![parse_form("d(z) - p*d(q)", &c, 1, &o).unwrap()])).unwrap();
        let reeb = solve_reeb(&kc, &[]).fields.unwrap();
        let sy = symplectize(&kc, Some(&reeb));
        let want = parse_form("d(s)^(d(z) - p*d(q)) + s*d(q)^d(p)", &sy.ks.chart, 2, &o).unwrap();
        assert_eq!(sy.ks.omega.0[0], want);
        assert!(verify_symplectization(&sy).verdict);
    }

    #[test]
    fn zero_omega_is_degenerate() {
        let c = Arc::new(Chart::new("R2", &["x", "y"], &[]).unwrap());
        let ks = KSymplectic::new(VForm(alloc::vec![Form::zero(&c, 2)])).unwrap();
        assert!(!verify_ksymplectic(&ks, &samples(&c, &[], 2)).verdict);
        let can = canonical_ksymplectic(2, 2);
        assert!(verify_ksymplectic(&can, &samples(&can.chart, &[], 5)).verdict);
    }

    #[test]
    fn orthogonals() {
        let c = Arc::new(Chart::new("R3", &["q", "p", "z"], &[]).unwrap());
        let kc = KContact::new(VForm(alloc::vec![parse_form("d(z) - p*d(q)", &c, 1, &Opaques::new()).unwrap()])).unwrap();
        let x = Point::new().with("q", qi(1)).with("p", qi(2)).with("z", qi(3));
        let full = orthogonal_deta(&kc, &Subspace::full(3), &x).unwrap();
        assert!(full.equals(&Subspace::span(3, &[alloc::vec![qi(0), qi(0), qi(1)]])));
        assert!(orthogonal_deta(&kc, &Subspace::zero(3), &x).unwrap().equals(&Subspace::full(3)));
    }

    #[test]
    fn flat_of_reeb_fields() {
        let kc = canonical_kcontact(2, 2);
        let reeb = solve_reeb(&kc, &[]).fields.unwrap();
        let (f, s) = flat_eta(&kc, &KVectorField::new(reeb).unwrap()).unwrap();
        assert!(f.is_zero());
        assert_eq!(s, Expr::int(2));
    }
}
