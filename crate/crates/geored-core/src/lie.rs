//! Lie algebras by structure constants, infinitesimal actions, coadjoint calculus, momentum maps
//! and isotropy subalgebras.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exterior::{VForm, VectorField};
use crate::linalg::{Matrix, Subspace};
use crate::report::StructureReport;
use crate::structures::{lift_field, Symplectization};
use crate::symbolic::{expr_equal, Chart, Expr, Q};

/// `[ξ_i, ξ_j] = c[i][j][k] ξ_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieAlgebra {
    pub names: Vec<String>,
    pub c: Vec<Vec<Vec<Q>>>,
}

/// `[e_i, e_j] = Σ c_k e_k` as `(i, j, [(k, c)])`.
pub type Bracket = (usize, usize, Vec<(usize, Q)>);

impl LieAlgebra {
    /// Builds from the nonzero brackets `(i, j, [(k, c)])` with `i < j`; checks Jacobi.
    pub fn new(names: Vec<String>, brackets: &[Bracket]) -> Result<Self> {
        let n = names.len();
        let mut c = alloc::vec![alloc::vec![alloc::vec![Q::zero(); n]; n]; n];
        for (i, j, terms) in brackets {
            if *i >= n || *j >= n || i == j {
                return Err(Error::Invalid(alloc::format!("bracket indices ({i}, {j}) out of range")));
            }
            for (k, v) in terms {
                c[*i][*j][*k] += v.clone();
                c[*j][*i][*k] -= v.clone();
            }
        }
        let g = LieAlgebra { names, c };
        g.check_jacobi()?;
        Ok(g)
    }

    pub fn abelian(n: usize) -> Self {
        LieAlgebra::new((1..=n).map(|i| alloc::format!("e{i}")).collect(), &[]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn bracket(&self, x: &[Q], y: &[Q]) -> Vec<Q> {
        let n = self.dim();
        let mut out = alloc::vec![Q::zero(); n];
        for i in 0..n {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if y[j].is_zero() {
                    continue;
                }
                let f = &x[i] * &y[j];
                for k in 0..n {
                    if !self.c[i][j][k].is_zero() {
                        out[k] += &f * &self.c[i][j][k];
                    }
                }
            }
        }
        out
    }

    fn unit(&self, i: usize) -> Vec<Q> {
        (0..self.dim()).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()
    }

    pub fn check_jacobi(&self) -> Result<()> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (a, b, c) = (self.unit(i), self.unit(j), self.unit(k));
                    let t1 = self.bracket(&a, &self.bracket(&b, &c));
                    let t2 = self.bracket(&b, &self.bracket(&c, &a));
                    let t3 = self.bracket(&c, &self.bracket(&a, &b));
                    if (0..n).any(|m| !(&t1[m] + &t2[m] + &t3[m]).is_zero()) {
                        return Err(Error::Invalid(alloc::format!(
                            "Jacobi identity fails for ({}, {}, {})",
                            self.names[i],
                            self.names[j],
                            self.names[k]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Matrix `A` with `(ad*_ξ μ)_j = Σ_i ξ^i A[i][j]`.
    fn ad_star_matrix(&self, mu: &[Q]) -> Matrix {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| &mu[k] * &self.c[i][j][k]).sum()).collect())
            .collect()
    }

    /// `⟨ad*_ξ μ, ν⟩ = ⟨μ, [ξ, ν]⟩`.
    pub fn ad_star(&self, xi: &[Q], mu: &[Q]) -> Vec<Q> {
        let a = self.ad_star_matrix(mu);
        (0..self.dim()).map(|j| (0..self.dim()).map(|i| &xi[i] * &a[i][j]).sum()).collect()
    }

    /// `ad*_{ξ_i}` applied to an expression-valued covector.
    pub fn ad_star_expr(&self, i: usize, mu: &[Expr]) -> Vec<Expr> {
        let n = self.dim();
        (0..n)
            .map(|j| {
                (0..n)
                    .filter(|&k| !self.c[i][j][k].is_zero())
                    .map(|k| mu[k].scale(&self.c[i][j][k]))
                    .sum()
            })
            .collect()
    }

    pub fn is_subalgebra(&self, s: &Subspace) -> bool {
        s.basis().iter().all(|a| s.basis().iter().all(|b| s.contains_vector(&self.bracket(a, b))))
    }

    /// `ker μ`.
    pub fn annihilator_of(&self, mu: &[Q]) -> Subspace {
        Subspace::kernel(self.dim(), &[mu.to_vec()])
    }

    /// `𝔤_μ = {ξ : ad*_ξ μ = 0}`.
    pub fn isotropy_of(&self, mu: &[Q]) -> Subspace {
        let a = self.ad_star_matrix(mu);
        Subspace::kernel(self.dim(), &crate::linalg::transpose(&a, self.dim()))
    }

    /// `𝔤_[μ] = {ξ : ad*_ξ μ ∈ ℝμ}` via the 2×2 minors of `(ad*_ξ μ, μ)`.
    pub fn projective_isotropy_of(&self, mu: &[Q]) -> Subspace {
        let n = self.dim();
        let a = self.ad_star_matrix(mu);
        let mut rows = Vec::new();
        for j in 0..n {
            for l in j + 1..n {
                let row: Vec<Q> = (0..n).map(|i| &a[i][j] * &mu[l] - &a[i][l] * &mu[j]).collect();
                if row.iter().any(|x| !x.is_zero()) {
                    rows.push(row);
                }
            }
        }
        Subspace::kernel(n, &rows)
    }
}

/// Subalgebra bases and flags for a value `μ ∈ (𝔤*)^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsotropyReport {
    pub ker_rows: Vec<Subspace>,
    pub iso_rows: Vec<Subspace>,
    pub proj_iso_rows: Vec<Subspace>,
    pub ker_mu: Subspace,
    pub g_mu: Subspace,
    pub g_bracket_mu: Subspace,
    pub k_mu: Subspace,
    pub k_bracket_mu: Subspace,
    pub willett: Vec<bool>,
    pub k_bracket_closed: bool,
    pub zero_rows: Vec<usize>,
}

pub fn isotropy(g: &LieAlgebra, mu: &[Vec<Q>]) -> IsotropyReport {
    let n = g.dim();
    let ker_rows: Vec<Subspace> = mu.iter().map(|m| g.annihilator_of(m)).collect();
    let iso_rows: Vec<Subspace> = mu.iter().map(|m| g.isotropy_of(m)).collect();
    let proj_iso_rows: Vec<Subspace> = mu.iter().map(|m| g.projective_isotropy_of(m)).collect();
    let meet = |xs: &[Subspace]| xs.iter().fold(Subspace::full(n), |acc, s| acc.intersect(s));
    let ker_mu = meet(&ker_rows);
    let g_mu = meet(&iso_rows);
    let g_bracket_mu = meet(&proj_iso_rows);
    let k_mu = ker_mu.intersect(&g_mu);
    let k_bracket_mu = ker_mu.intersect(&g_bracket_mu);
    let willett = mu.iter().map(|m| willett_condition(g, m)).collect();
    let k_bracket_closed = g.is_subalgebra(&k_bracket_mu);
    let zero_rows = mu.iter().enumerate().filter(|(_, m)| m.iter().all(Q::is_zero)).map(|(i, _)| i).collect();
    IsotropyReport {
        ker_rows,
        iso_rows,
        proj_iso_rows,
        ker_mu,
        g_mu,
        g_bracket_mu,
        k_mu,
        k_bracket_mu,
        willett,
        k_bracket_closed,
        zero_rows,
    }
}

/// `ker μ + 𝔤_μ = 𝔤`.
pub fn willett_condition(g: &LieAlgebra, mu: &[Q]) -> bool {
    g.annihilator_of(mu).sum(&g.isotropy_of(mu)).rank() == g.dim()
}

/// Fundamental vector fields of a Lie algebra action; `sigma = -1` for an anti-homomorphism.
#[derive(Clone, Debug)]
pub struct InfAction {
    pub algebra: LieAlgebra,
    pub chart: Arc<Chart>,
    pub fields: Vec<VectorField>,
    pub sigma: i8,
}

impl InfAction {
    pub fn new(algebra: LieAlgebra, chart: &Arc<Chart>, fields: Vec<VectorField>, sigma: i8) -> Result<Self> {
        if fields.len() != algebra.dim() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} fundamental fields for an algebra of dimension {}",
                fields.len(),
                algebra.dim()
            )));
        }
        if sigma != 1 && sigma != -1 {
            return Err(Error::Invalid("sign convention must be +1 or -1".into()));
        }
        Ok(InfAction { algebra, chart: chart.clone(), fields, sigma })
    }

    /// Fundamental field of `Σ ξ^i e_i`.
    pub fn field_of(&self, xi: &[Q]) -> VectorField {
        let mut acc = VectorField::zero(&self.chart);
        for (x, f) in xi.iter().zip(&self.fields) {
            if !x.is_zero() {
                acc = acc.add(&f.scale(&Expr::constant(x.clone()))).unwrap();
            }
        }
        acc
    }

    /// `[ξ_iM, ξ_jM] = σ c_ij^k ξ_kM`.
    pub fn check_brackets(&self) -> StructureReport {
        let mut rep = StructureReport::new("action brackets");
        let n = self.algebra.dim();
        for i in 0..n {
            for j in i + 1..n {
                let lhs = self.fields[i].bracket(&self.fields[j]).unwrap();
                let coeffs: Vec<Q> = self.algebra.c[i][j].iter().map(|c| c * Q::from_integer(self.sigma.into())).collect();
                let rhs = self.field_of(&coeffs);
                let eq = lhs.equal(&rhs);
                let res = (!eq.equal).then(|| lhs.sub(&rhs).unwrap().to_string());
                rep.push_symbolic(&alloc::format!("[{}, {}]", self.algebra.names[i], self.algebra.names[j]), eq, res);
            }
        }
        rep
    }
}

/// `(α, i) ↦ ⟨J_α, ξ_i⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Momentum {
    pub chart: Arc<Chart>,
    pub entries: Vec<Vec<Expr>>,
}

impl Momentum {
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn n(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }
}

/// `⟨J_α, ξ_i⟩ = ι_{ξ_iM} η^α`; also the exact k-symplectic momentum map when given `Θ`.
pub fn momentum_from_action(act: &InfAction, form: &VForm) -> Result<Momentum> {
    act.chart.expect_same(form.chart())?;
    let entries = form
        .0
        .iter()
        .map(|eta| act.fields.iter().map(|x| eta.iota(x).map(|f| f.scalar())).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(Momentum { chart: act.chart.clone(), entries })
}

/// `(s, x) ↦ s J(x)` on the symplectised chart.
pub fn extend_momentum(j: &Momentum, sy: &Symplectization) -> Result<Momentum> {
    if sy.projection.target.coords != j.chart.coords {
        return Err(Error::ChartMismatch { expected: sy.projection.target.name.clone(), found: j.chart.name.clone() });
    }
    let s = Expr::sym(&sy.s);
    let entries = j.entries.iter().map(|row| row.iter().map(|e| e * &s).collect()).collect();
    Ok(Momentum { chart: sy.ks.chart.clone(), entries })
}

/// The action lifted to `ℝ^× × M` (trivially on the `s` factor).
pub fn lift_action(act: &InfAction, sy: &Symplectization) -> InfAction {
    let fields = act.fields.iter().map(|f| lift_field(f, &sy.ks.chart)).collect();
    InfAction { algebra: act.algebra.clone(), chart: sy.ks.chart.clone(), fields, sigma: act.sigma }
}

/// `ℒ_{ξ_iM} θ^α = 0` for every basis element and component.
pub fn check_invariance(act: &InfAction, form: &VForm) -> StructureReport {
    let mut rep = StructureReport::new("invariance");
    rep.note("infinitesimal invariance only".into());
    for (i, x) in act.fields.iter().enumerate() {
        for (a, eta) in form.0.iter().enumerate() {
            match eta.lie_derivative(x) {
                Ok(l) => rep.push_symbolic(
                    &alloc::format!("L_{} eta{} = 0", act.algebra.names[i], a + 1),
                    l.equal(&crate::exterior::Form::zero(&act.chart, l.degree)),
                    (!l.is_zero()).then(|| l.to_string()),
                ),
                Err(e) => rep.fail(e.to_string()),
            }
        }
    }
    rep
}

/// `T J_α(ξ_iM) = σ ad*_{ξ_i} J_α`, entrywise.
pub fn check_equivariance_inf(j: &Momentum, act: &InfAction) -> StructureReport {
    let mut rep = StructureReport::new("equivariance");
    rep.note("infinitesimal equivariance only".into());
    let sigma = Q::from_integer(act.sigma.into());
    for (i, x) in act.fields.iter().enumerate() {
        for (a, row) in j.entries.iter().enumerate() {
            let rhs = act.algebra.ad_star_expr(i, row);
            for (c, (e, r)) in row.iter().zip(&rhs).enumerate() {
                let lhs = x.apply(e);
                let r = r.scale(&sigma);
                let eq = expr_equal(&lhs, &r);
                let res = (!eq.equal).then(|| (&lhs - &r).to_string());
                rep.push_symbolic(
                    &alloc::format!("T J{}({}M)[{}]", a + 1, act.algebra.names[i], act.algebra.names[c]),
                    eq,
                    res,
                );
            }
        }
    }
    rep
}

/// `ι_{ξ_M} dη^α = −d⟨J_α, ξ⟩` and `R_β ⟨J_α, ξ⟩ = 0`.
pub fn check_momentum_identities(act: &InfAction, eta: &VForm, j: &Momentum, reeb: Option<&[VectorField]>) -> StructureReport {
    let mut rep = StructureReport::new("momentum identities");
    let deta = eta.d();
    for (i, x) in act.fields.iter().enumerate() {
        for (a, dw) in deta.0.iter().enumerate() {
            let lhs = dw.iota(x).unwrap();
            let rhs = crate::exterior::Form::function(&act.chart, j.entries[a][i].clone()).d().neg();
            rep.push_symbolic(&alloc::format!("iota {}M d eta{} = -d J{}", act.algebra.names[i], a + 1, a + 1), lhs.equal(&rhs), None);
            if let Some(rs) = reeb {
                for (b, r) in rs.iter().enumerate() {
                    let v = r.apply(&j.entries[a][i]);
                    rep.push_symbolic(
                        &alloc::format!("R{} <J{}, {}> = 0", b + 1, a + 1, act.algebra.names[i]),
                        expr_equal(&v, &Expr::zero()),
                        (!v.is_zero()).then(|| v.to_string()),
                    );
                }
            }
        }
    }
    rep
}

pub fn basis_names(g: &LieAlgebra, s: &Subspace) -> Vec<String> {
    s.basis()
        .iter()
        .map(|v| {
            let mut parts = Vec::new();
            for (c, name) in v.iter().zip(&g.names) {
                if c.is_zero() {
                    continue;
                }
                if c.is_one() {
                    parts.push(name.clone());
                } else {
                    parts.push(alloc::format!("{c}*{name}"));
                }
            }
            parts.join(" + ")
        })
        .map(|s| s.to_string())
        .collect()
}

/// `sl(2)`: `[ξ1, ξ2] = 2ξ2`, `[ξ1, ξ3] = −2ξ3`, `[ξ2, ξ3] = ξ1`.
pub fn sl2() -> LieAlgebra {
    use crate::symbolic::qi;
    LieAlgebra::new(
        alloc::vec!["xi1".into(), "xi2".into(), "xi3".into()],
        &[(0, 1, alloc::vec![(1, qi(2))]), (0, 2, alloc::vec![(2, qi(-2))]), (1, 2, alloc::vec![(0, qi(1))])],
    )
    .unwrap()
}

/// `gl(2)` in the basis `ϑ1..ϑ4`: `[ϑ1, ϑ2] = ϑ3`, `[ϑ1, ϑ3] = −2ϑ1`, `[ϑ2, ϑ3] = 2ϑ2`, `ϑ4` central.
pub fn gl2() -> LieAlgebra {
    use crate::symbolic::qi;
    LieAlgebra::new(
        alloc::vec!["th1".into(), "th2".into(), "th3".into(), "th4".into()],
        &[(0, 1, alloc::vec![(2, qi(1))]), (0, 2, alloc::vec![(0, qi(-2))]), (1, 2, alloc::vec![(1, qi(2))])],
    )
    .unwrap()
}
