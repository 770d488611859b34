//! Differential forms, vector fields and smooth maps on a chart.
//!
//! Sign conventions: `d(f dx^I) = Σ_j ∂_j f dx^j ∧ dx^I`, and `ι_X` contracts the first slot, so
//! `ι_X(dx^{i_1} ∧ … ∧ dx^{i_p}) = Σ_r (−1)^r X^{i_r} dx^{I∖i_r}`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::symbolic::{expr_equal, parse_term, Bindings, Chart, Equality, Expr, Opaques, Point, Term, Q};

fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<()> {
    if Arc::ptr_eq(a, b) {
        return Ok(());
    }
    a.expect_same(b)
}

/// Merges `j` into the sorted tuple `idx`; returns the sign `(−1)^{#{i ∈ idx : i < j}}`.
fn insert_index(idx: &[usize], j: usize) -> Option<(Vec<usize>, bool)> {
    if idx.contains(&j) {
        return None;
    }
    let pos = idx.iter().filter(|&&i| i < j).count();
    let mut out = idx.to_vec();
    out.insert(pos, j);
    Some((out, pos % 2 == 1))
}

/// Concatenation `a ++ b` sorted, with the sign of the sorting permutation.
fn merge_indices(a: &[usize], b: &[usize]) -> Option<(Vec<usize>, bool)> {
    let mut inversions = 0usize;
    for &x in a {
        for &y in b {
            if x == y {
                return None;
            }
            if x > y {
                inversions += 1;
            }
        }
    }
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    Some((out, inversions % 2 == 1))
}

/// Scalar-valued exterior form stored over sorted index tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    pub chart: Arc<Chart>,
    pub degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

impl Form {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> Self {
        Form { chart: chart.clone(), degree, terms: BTreeMap::new() }
    }

    pub fn function(chart: &Arc<Chart>, f: Expr) -> Self {
        let mut out = Form::zero(chart, 0);
        out.add_term(Vec::new(), f);
        out
    }

    /// `dx^i` for the `i`-th coordinate.
    pub fn dx(chart: &Arc<Chart>, i: usize) -> Self {
        let mut out = Form::zero(chart, 1);
        out.add_term(alloc::vec![i], Expr::one());
        out
    }

    /// Differential of a coordinate given by name.
    pub fn d_coord(chart: &Arc<Chart>, name: &str) -> Result<Self> {
        let i = chart.index_of(name).ok_or_else(|| Error::UnknownName(name.to_string()))?;
        Ok(Form::dx(chart, i))
    }

    /// Builds a form from unsorted index tuples, antisymmetrizing on the fly.
    pub fn from_terms(chart: &Arc<Chart>, degree: usize, terms: Vec<(Vec<usize>, Expr)>) -> Result<Self> {
        let mut out = Form::zero(chart, degree);
        for (idx, c) in terms {
            if idx.len() != degree {
                return Err(Error::DegreeMismatch(alloc::format!("index tuple {idx:?} in a {degree}-form")));
            }
            if idx.iter().any(|&i| i >= chart.dim()) {
                return Err(Error::DimensionMismatch(alloc::format!("index tuple {idx:?} on chart `{}`", chart.name)));
            }
            let mut sorted = idx.clone();
            let mut sign = false;
            for i in 0..sorted.len() {
                for j in 0..sorted.len() - 1 - i {
                    if sorted[j] > sorted[j + 1] {
                        sorted.swap(j, j + 1);
                        sign = !sign;
                    }
                }
            }
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                continue;
            }
            out.add_term(sorted, if sign { -c } else { c });
        }
        Ok(out)
    }

    fn add_term(&mut self, idx: Vec<usize>, c: Expr) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&idx) {
            Some(v) => {
                *v = &*v + &c;
                if v.is_zero() {
                    self.terms.remove(&idx);
                }
            }
            None => {
                self.terms.insert(idx, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.terms.iter()
    }

    pub fn coeff(&self, idx: &[usize]) -> Expr {
        self.terms.get(idx).cloned().unwrap_or_default()
    }

    /// Value of a 0-form.
    pub fn scalar(&self) -> Expr {
        self.coeff(&[])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Form) -> Result<Form> {
        same_chart(&self.chart, &other.chart)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch(alloc::format!("adding a {}-form to a {}-form", self.degree, other.degree)));
        }
        let mut out = self.clone();
        for (i, c) in &other.terms {
            out.add_term(i.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Form) -> Result<Form> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Form {
        self.scale(&Expr::int(-1))
    }

    pub fn scale(&self, f: &Expr) -> Form {
        let mut out = Form::zero(&self.chart, self.degree);
        for (i, c) in &self.terms {
            out.add_term(i.clone(), c * f);
        }
        out
    }

    pub fn wedge(&self, other: &Form) -> Result<Form> {
        same_chart(&self.chart, &other.chart)?;
        let mut out = Form::zero(&self.chart, self.degree + other.degree);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                if let Some((idx, neg)) = merge_indices(ia, ib) {
                    let c = ca * cb;
                    out.add_term(idx, if neg { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative.
    pub fn d(&self) -> Form {
        let mut out = Form::zero(&self.chart, self.degree + 1);
        for (idx, f) in &self.terms {
            for j in 0..self.chart.dim() {
                let df = f.diff(&self.chart.coords[j]);
                if df.is_zero() {
                    continue;
                }
                if let Some((new, neg)) = insert_index(idx, j) {
                    out.add_term(new, if neg { -df } else { df });
                }
            }
        }
        out
    }

    /// Interior product; 0-forms are rejected.
    pub fn iota(&self, x: &VectorField) -> Result<Form> {
        same_chart(&self.chart, &x.chart)?;
        if self.degree == 0 {
            return Err(Error::DegreeMismatch("interior product of a 0-form".into()));
        }
        let mut out = Form::zero(&self.chart, self.degree - 1);
        for (idx, f) in &self.terms {
            for (r, &i) in idx.iter().enumerate() {
                if x.comps[i].is_zero() {
                    continue;
                }
                let mut rest = idx.clone();
                rest.remove(r);
                let c = &x.comps[i] * f;
                out.add_term(rest, if r % 2 == 1 { -c } else { c });
            }
        }
        Ok(out)
    }

    /// `ℒ_X = ι_X d + d ι_X`.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<Form> {
        let a = self.d().iota(x)?;
        if self.degree == 0 {
            return Ok(a);
        }
        a.add(&self.iota(x)?.d())
    }

    pub fn pullback(&self, f: &SmoothMap) -> Result<Form> {
        same_chart(&self.chart, &f.target)?;
        let subst = f.substitution();
        let dfs: Vec<Form> = f.exprs.iter().map(|e| Form::function(&f.source, e.clone()).d()).collect();
        let mut out = Form::zero(&f.source, self.degree);
        for (idx, c) in &self.terms {
            let mut acc = Form::function(&f.source, c.substitute(&subst)?);
            for &i in idx {
                acc = acc.wedge(&dfs[i])?;
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }

    /// Substitutes into every coefficient, keeping the chart.
    pub fn map_coeffs(&self, mut g: impl FnMut(&Expr) -> Result<Expr>) -> Result<Form> {
        let mut out = Form::zero(&self.chart, self.degree);
        for (i, c) in &self.terms {
            out.add_term(i.clone(), g(c)?);
        }
        Ok(out)
    }

    /// Pointwise values: a row vector for 1-forms, an antisymmetric matrix for 2-forms.
    pub fn eval_1(&self, p: &Point, b: &Bindings) -> Result<Vec<Q>> {
        if self.degree != 1 {
            return Err(Error::DegreeMismatch(alloc::format!("expected a 1-form, got degree {}", self.degree)));
        }
        let mut v = alloc::vec![Q::zero(); self.chart.dim()];
        for (idx, c) in &self.terms {
            v[idx[0]] = c.evaluate(p, b)?;
        }
        Ok(v)
    }

    pub fn eval_2(&self, p: &Point, b: &Bindings) -> Result<Matrix> {
        if self.degree != 2 {
            return Err(Error::DegreeMismatch(alloc::format!("expected a 2-form, got degree {}", self.degree)));
        }
        let n = self.chart.dim();
        let mut w = alloc::vec![alloc::vec![Q::zero(); n]; n];
        for (idx, c) in &self.terms {
            let v = c.evaluate(p, b)?;
            w[idx[1]][idx[0]] = -v.clone();
            w[idx[0]][idx[1]] = v;
        }
        Ok(w)
    }

    /// Coefficientwise [`expr_equal`].
    pub fn equal(&self, other: &Form) -> Equality {
        let mut probabilistic = false;
        let mut keys: Vec<&Vec<usize>> = self.terms.keys().collect();
        keys.extend(other.terms.keys());
        keys.sort();
        keys.dedup();
        for k in keys {
            let e = expr_equal(&self.coeff(k), &other.coeff(k));
            probabilistic |= e.probabilistic;
            if !e.equal {
                return Equality { equal: false, probabilistic };
            }
        }
        Equality { equal: self.degree == other.degree, probabilistic }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, (idx, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            if idx.is_empty() {
                write!(f, "({c})")?;
                continue;
            }
            if !c.is_one() {
                write!(f, "({c})*")?;
            }
            for (r, &i) in idx.iter().enumerate() {
                if r > 0 {
                    f.write_str("^")?;
                }
                write!(f, "d({})", self.chart.coords[i])?;
            }
        }
        Ok(())
    }
}

/// Vector field with one component per chart coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    pub chart: Arc<Chart>,
    pub comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, comps: Vec<Expr>) -> Result<Self> {
        if comps.len() != chart.dim() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} components for chart `{}` of dimension {}",
                comps.len(),
                chart.name,
                chart.dim()
            )));
        }
        Ok(VectorField { chart: chart.clone(), comps })
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        VectorField { chart: chart.clone(), comps: alloc::vec![Expr::zero(); chart.dim()] }
    }

    /// `∂/∂x^i`.
    pub fn coord(chart: &Arc<Chart>, i: usize) -> Self {
        let mut v = VectorField::zero(chart);
        v.comps[i] = Expr::one();
        v
    }

    pub fn coord_named(chart: &Arc<Chart>, name: &str) -> Result<Self> {
        let i = chart.index_of(name).ok_or_else(|| Error::UnknownName(name.to_string()))?;
        Ok(VectorField::coord(chart, i))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        self.comps
            .iter()
            .zip(&self.chart.coords)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, x)| c * &f.diff(x))
            .sum()
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        same_chart(&self.chart, &other.chart)?;
        Ok(VectorField { chart: self.chart.clone(), comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(|c| c * f).collect() }
    }

    /// `[X, Y]^i = X(Y^i) − Y(X^i)`.
    pub fn bracket(&self, other: &VectorField) -> Result<VectorField> {
        same_chart(&self.chart, &other.chart)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(xi, yi)| self.apply(yi) - other.apply(xi))
            .collect();
        Ok(VectorField { chart: self.chart.clone(), comps })
    }

    pub fn eval(&self, p: &Point, b: &Bindings) -> Result<Vec<Q>> {
        self.comps.iter().map(|c| c.evaluate(p, b)).collect()
    }

    pub fn map_comps(&self, mut g: impl FnMut(&Expr) -> Result<Expr>) -> Result<VectorField> {
        Ok(VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(&mut g).collect::<Result<_>>()? })
    }

    pub fn equal(&self, other: &VectorField) -> Equality {
        let mut probabilistic = false;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            let e = expr_equal(a, b);
            probabilistic |= e.probabilistic;
            if !e.equal {
                return Equality { equal: false, probabilistic };
            }
        }
        Equality { equal: self.comps.len() == other.comps.len(), probabilistic }
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, x) in self.comps.iter().zip(&self.chart.coords) {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if c.is_one() {
                write!(f, "D({x})")?;
            } else {
                write!(f, "({c})*D({x})")?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Ordered tuple `(X_1, …, X_k)` on one chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KVectorField(pub Vec<VectorField>);

impl KVectorField {
    pub fn new(fields: Vec<VectorField>) -> Result<Self> {
        let Some(first) = fields.first() else {
            return Err(Error::Invalid("a k-vector field needs k >= 1".into()));
        };
        for f in &fields[1..] {
            same_chart(&first.chart, &f.chart)?;
        }
        Ok(KVectorField(fields))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }
}

/// `ℝ^k`-valued form `θ^α ⊗ e_α`; all components share chart and degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VForm(pub Vec<Form>);

impl VForm {
    pub fn new(comps: Vec<Form>) -> Result<Self> {
        let Some(first) = comps.first() else {
            return Err(Error::Invalid("an R^k-valued form needs k >= 1".into()));
        };
        for c in &comps[1..] {
            same_chart(&first.chart, &c.chart)?;
            if c.degree != first.degree {
                return Err(Error::DegreeMismatch(alloc::format!(
                    "components of degree {} and {}",
                    first.degree,
                    c.degree
                )));
            }
        }
        Ok(VForm(comps))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0[0].degree
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.0[0].chart
    }

    pub fn d(&self) -> VForm {
        VForm(self.0.iter().map(Form::d).collect())
    }

    pub fn iota(&self, x: &VectorField) -> Result<VForm> {
        Ok(VForm(self.0.iter().map(|f| f.iota(x)).collect::<Result<_>>()?))
    }

    pub fn lie_derivative(&self, x: &VectorField) -> Result<VForm> {
        Ok(VForm(self.0.iter().map(|f| f.lie_derivative(x)).collect::<Result<_>>()?))
    }

    pub fn pullback(&self, f: &SmoothMap) -> Result<VForm> {
        Ok(VForm(self.0.iter().map(|c| c.pullback(f)).collect::<Result<_>>()?))
    }

    pub fn scale(&self, e: &Expr) -> VForm {
        VForm(self.0.iter().map(|c| c.scale(e)).collect())
    }

    pub fn equal(&self, other: &VForm) -> Equality {
        if self.k() != other.k() {
            return Equality { equal: false, probabilistic: false };
        }
        let mut probabilistic = false;
        for (a, b) in self.0.iter().zip(&other.0) {
            let e = a.equal(b);
            probabilistic |= e.probabilistic;
            if !e.equal {
                return Equality { equal: false, probabilistic };
            }
        }
        Equality { equal: true, probabilistic }
    }
}

/// `Σ_α ι_{X_α} θ^α`.
pub fn contract_kv(x: &KVectorField, theta: &VForm) -> Result<Form> {
    if x.k() != theta.k() {
        return Err(Error::DimensionMismatch(alloc::format!("k-vector field has k = {}, form has k = {}", x.k(), theta.k())));
    }
    let mut acc = Form::zero(theta.chart(), theta.degree().saturating_sub(1));
    for (xa, ta) in x.0.iter().zip(&theta.0) {
        acc = acc.add(&ta.iota(xa)?)?;
    }
    Ok(acc)
}

/// Map between charts given by one source expression per target coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmoothMap {
    pub source: Arc<Chart>,
    pub target: Arc<Chart>,
    pub exprs: Vec<Expr>,
}

impl SmoothMap {
    pub fn new(source: &Arc<Chart>, target: &Arc<Chart>, exprs: Vec<Expr>) -> Result<Self> {
        if exprs.len() != target.dim() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "map into `{}` needs {} components, got {}",
                target.name,
                target.dim(),
                exprs.len()
            )));
        }
        Ok(SmoothMap { source: source.clone(), target: target.clone(), exprs })
    }

    pub fn identity(chart: &Arc<Chart>) -> Self {
        SmoothMap { source: chart.clone(), target: chart.clone(), exprs: (0..chart.dim()).map(|i| chart.coord(i)).collect() }
    }

    /// Target coordinate name → source expression.
    pub fn substitution(&self) -> BTreeMap<String, Expr> {
        self.target.coords.iter().map(|c| c.to_string()).zip(self.exprs.iter().cloned()).collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SmoothMap) -> Result<SmoothMap> {
        same_chart(&inner.target, &self.source)?;
        let s = inner.substitution();
        let exprs = self.exprs.iter().map(|e| e.substitute(&s)).collect::<Result<_>>()?;
        Ok(SmoothMap { source: inner.source.clone(), target: self.target.clone(), exprs })
    }

    /// Symbolic Jacobian, rows indexed by target coordinates.
    pub fn jacobian(&self) -> Vec<Vec<Expr>> {
        self.exprs.iter().map(|e| self.source.coords.iter().map(|x| e.diff(x)).collect()).collect()
    }

    pub fn jacobian_at(&self, p: &Point, b: &Bindings) -> Result<Matrix> {
        self.jacobian().iter().map(|row| row.iter().map(|e| e.evaluate(p, b)).collect()).collect()
    }

    /// Image point; parameters are carried over.
    pub fn apply_point(&self, p: &Point, b: &Bindings) -> Result<Point> {
        let mut out = p.params_only(&self.source);
        for (c, e) in self.target.coords.iter().zip(&self.exprs) {
            out.set(c, e.evaluate(p, b)?);
        }
        Ok(out)
    }

    /// Expression in target coordinates pulled back to the source.
    pub fn pull_expr(&self, e: &Expr) -> Result<Expr> {
        e.substitute(&self.substitution())
    }

    /// Pushforward `Df(X)` as source-chart expressions, one per target coordinate.
    pub fn push_components(&self, x: &VectorField) -> Result<Vec<Expr>> {
        same_chart(&self.source, &x.chart)?;
        Ok(self.exprs.iter().map(|e| x.apply(e)).collect())
    }
}

enum Val {
    Scalar(Expr),
    Form(Form),
    Field(VectorField),
}

fn interpret(t: &Term, chart: &Arc<Chart>, opaques: &Opaques) -> Result<Val> {
    let kind_err = |what: &str| Error::Invalid(alloc::format!("cannot {what} in `{t}`"));
    Ok(match t {
        Term::Call(name, args) if name == "d" || name == "D" => {
            if args.len() != 1 {
                return Err(Error::Invalid(alloc::format!("`{name}` takes one argument")));
            }
            if name == "D" {
                let Term::Name(x) = &args[0] else {
                    return Err(Error::Invalid(alloc::format!("`D` expects a coordinate name in `{t}`")));
                };
                Val::Field(VectorField::coord_named(chart, x)?)
            } else {
                match interpret(&args[0], chart, opaques)? {
                    Val::Scalar(e) => {
                        chart.check_expr(&e)?;
                        Val::Form(Form::function(chart, e).d())
                    }
                    Val::Form(f) => Val::Form(f.d()),
                    Val::Field(_) => return Err(kind_err("differentiate a vector field")),
                }
            }
        }
        Term::Num(_) | Term::Name(_) | Term::Call(..) => {
            let e = t.to_expr(opaques)?;
            Val::Scalar(e)
        }
        Term::Neg(a) => match interpret(a, chart, opaques)? {
            Val::Scalar(e) => Val::Scalar(-e),
            Val::Form(f) => Val::Form(f.neg()),
            Val::Field(x) => Val::Field(x.scale(&Expr::int(-1))),
        },
        Term::Add(a, b) | Term::Sub(a, b) => {
            let neg = matches!(t, Term::Sub(..));
            let lhs = interpret(a, chart, opaques)?;
            let rhs = interpret(b, chart, opaques)?;
            match (lhs, rhs) {
                (Val::Scalar(x), Val::Scalar(y)) => Val::Scalar(if neg { x - y } else { x + y }),
                (Val::Form(x), Val::Form(y)) => Val::Form(if neg { x.sub(&y)? } else { x.add(&y)? }),
                (Val::Field(x), Val::Field(y)) => Val::Field(if neg { x.sub(&y)? } else { x.add(&y)? }),
                (Val::Form(x), Val::Scalar(y)) | (Val::Scalar(y), Val::Form(x)) if y.is_zero() => Val::Form(x),
                _ => return Err(kind_err("add objects of different kinds")),
            }
        }
        Term::Mul(a, b) => {
            let lhs = interpret(a, chart, opaques)?;
            let rhs = interpret(b, chart, opaques)?;
            match (lhs, rhs) {
                (Val::Scalar(x), Val::Scalar(y)) => Val::Scalar(x * y),
                (Val::Scalar(x), Val::Form(f)) | (Val::Form(f), Val::Scalar(x)) => Val::Form(f.scale(&x)),
                (Val::Scalar(x), Val::Field(v)) | (Val::Field(v), Val::Scalar(x)) => Val::Field(v.scale(&x)),
                _ => return Err(kind_err("multiply two forms or fields (use `^` for wedge)")),
            }
        }
        Term::Div(a, b) => {
            let lhs = interpret(a, chart, opaques)?;
            let Val::Scalar(d) = interpret(b, chart, opaques)? else {
                return Err(kind_err("divide by a form or field"));
            };
            if d.is_zero() {
                return Err(Error::DivisionByZero { subterm: t.to_string() });
            }
            let inv = d.recip()?;
            match lhs {
                Val::Scalar(x) => Val::Scalar(x * inv),
                Val::Form(f) => Val::Form(f.scale(&inv)),
                Val::Field(v) => Val::Field(v.scale(&inv)),
            }
        }
        Term::Pow(a, b) => {
            let lhs = interpret(a, chart, opaques)?;
            match lhs {
                Val::Scalar(_) => Val::Scalar(t.to_expr(opaques)?),
                Val::Form(f) => match interpret(b, chart, opaques)? {
                    Val::Form(g) => Val::Form(f.wedge(&g)?),
                    _ => return Err(kind_err("wedge a form with a non-form")),
                },
                Val::Field(_) => return Err(kind_err("raise a vector field to a power")),
            }
        }
    })
}

/// Parses a form of the given degree (`d(x)` differentials, `^` wedge).
pub fn parse_form(src: &str, chart: &Arc<Chart>, degree: usize, opaques: &Opaques) -> Result<Form> {
    let t = parse_term(src)?;
    let f = match interpret(&t, chart, opaques)? {
        Val::Form(f) => f,
        Val::Scalar(e) if e.is_zero() => Form::zero(chart, degree),
        Val::Scalar(e) => Form::function(chart, e),
        Val::Field(_) => return Err(Error::Invalid(alloc::format!("`{src}` is a vector field, not a form"))),
    };
    if f.degree != degree {
        return Err(Error::DegreeMismatch(alloc::format!("`{src}` has degree {}, expected {degree}", f.degree)));
    }
    for (_, c) in f.terms() {
        chart.check_expr(c)?;
    }
    Ok(f)
}

/// Parses a vector field written with `D(x)` basis fields.
pub fn parse_field(src: &str, chart: &Arc<Chart>, opaques: &Opaques) -> Result<VectorField> {
    let t = parse_term(src)?;
    let v = match interpret(&t, chart, opaques)? {
        Val::Field(v) => v,
        Val::Scalar(e) if e.is_zero() => VectorField::zero(chart),
        _ => return Err(Error::Invalid(alloc::format!("`{src}` is not a vector field"))),
    };
    for c in &v.comps {
        chart.check_expr(c)?;
    }
    Ok(v)
}

/// Parses a scalar expression and checks its names against the chart.
pub fn parse_scalar(src: &str, chart: &Chart, opaques: &Opaques) -> Result<Expr> {
    let e = crate::symbolic::parse_expr(src, opaques)?;
    chart.check_expr(&e)?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(coords: &[&str]) -> Arc<Chart> {
        Arc::new(Chart::new("M", coords, &[]).unwrap())
    }

    fn f(src: &str, c: &Arc<Chart>, deg: usize) -> Form {
        parse_form(src, c, deg, &Opaques::new()).unwrap()
    }

    #[test]
    fn wedge_is_antisymmetric() {
        let c = chart(&["q", "p"]);
        let dq = Form::dx(&c, 0);
        let dp = Form::dx(&c, 1);
        assert!(dq.wedge(&dq).unwrap().is_zero());
        assert_eq!(dq.wedge(&dp).unwrap(), dp.wedge(&dq).unwrap().neg());
    }

    #[test]
    fn contact_volume_sign() {
        let c = chart(&["q", "p", "z"]);
        let eta = f("d(z) - p*d(q)", &c, 1);
        let vol = eta.wedge(&eta.d()).unwrap();
        // η ∧ dη = dz∧dq∧dp = dq∧dp∧dz (even permutation)
        assert_eq!(vol.coeff(&[0, 1, 2]), Expr::one());
    }

    #[test]
    fn d_of_coupled_strings_eta_t() {
        let c = chart(&["q1", "q2", "p1t", "p2t", "s_t"]);
        let eta = f("d(s_t) - p1t*d(q1) - p2t*d(q2)", &c, 1);
        let expect = f("d(q1)^d(p1t) + d(q2)^d(p2t)", &c, 2);
        assert_eq!(eta.d(), expect);
    }

    #[test]
    fn interior_of_zero_form_rejected() {
        let c = chart(&["x"]);
        let x = VectorField::coord(&c, 0);
        assert!(matches!(Form::function(&c, Expr::sym("x")).iota(&x), Err(Error::DegreeMismatch(_))));
    }

    #[test]
    fn lie_derivative_of_dx_along_euler_field() {
        let c = chart(&["x"]);
        let x = VectorField::new(&c, alloc::vec![Expr::sym("x")]).unwrap();
        assert_eq!(Form::dx(&c, 0).lie_derivative(&x).unwrap(), Form::dx(&c, 0));
    }

    #[test]
    fn pullback_by_identity_and_projection() {
        let m = chart(&["q", "p", "z"]);
        let eta = f("d(z) - p*d(q)", &m, 1);
        assert_eq!(eta.pullback(&SmoothMap::identity(&m)).unwrap(), eta);
        let p = chart(&["s", "q", "p", "z"]);
        let pr = SmoothMap::new(&p, &m, alloc::vec![Expr::sym("q"), Expr::sym("p"), Expr::sym("z")]).unwrap();
        let back = eta.pullback(&pr).unwrap();
        assert_eq!(back, f("d(z) - p*d(q)", &p, 1));
    }

    #[test]
    fn bracket_of_coordinate_fields() {
        let c = chart(&["x", "y"]);
        let a = VectorField::coord(&c, 0);
        let b = VectorField::coord(&c, 1);
        assert!(a.bracket(&b).unwrap().is_zero());
        let xy = parse_field("x*D(y)", &c, &Opaques::new()).unwrap();
        assert_eq!(a.bracket(&xy).unwrap(), b);
    }

    #[test]
    fn vform_degrees_must_agree() {
        let c = chart(&["x", "y"]);
        let err = VForm::new(alloc::vec![Form::dx(&c, 0), Form::dx(&c, 0).wedge(&Form::dx(&c, 1)).unwrap()]).unwrap_err();
        assert!(err.to_string().starts_with("VForm degree mismatch"));
    }

    #[test]
    fn form_text_round_trips() {
        let c = chart(&["x", "y", "z"]);
        let a = f("x^2*d(x)^d(y) - (y + 1)/z*d(y)^d(z)", &c, 2);
        let back = f(&a.to_string(), &c, 2);
        assert_eq!(a, back);
        let v = parse_field("x*D(y) - 3*D(z)", &c, &Opaques::new()).unwrap();
        assert_eq!(parse_field(&v.to_string(), &c, &Opaques::new()).unwrap(), v);
    }
}
