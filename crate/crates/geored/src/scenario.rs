//! Validated scenarios built from scenario files.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use geored_core::dynamics::{Darboux, GaugeAssignment, K2Params};
use geored_core::exterior::{parse_field, parse_form, parse_scalar, Form, SmoothMap, VForm, VectorField};
use geored_core::lie::{momentum_from_action, InfAction, LieAlgebra};
use geored_core::reduction::{level_set_of, LevelSet, MomentumData, QuotientPresentation};
use geored_core::structures::{KContact, KSymplectic};
use geored_core::symbolic::{parse_expr, parse_term, Bindings, OpaqueDef, Opaques, Term};
use geored_core::{Chart, Error, Expr, Point, Q};

use crate::format::{self, line_col, LoadError, ScenarioFile};

#[derive(Clone, Debug)]
pub enum Structure {
    Contact(KContact),
    Symplectic(KSymplectic),
}

impl Structure {
    /// `η` for k-contact, `θ` (when exact) for k-symplectic.
    pub fn potential(&self) -> Option<&VForm> {
        match self {
            Structure::Contact(kc) => Some(&kc.eta),
            Structure::Symplectic(ks) => ks.theta.as_ref(),
        }
    }

    pub fn open(&self) -> &[Expr] {
        match self {
            Structure::Contact(kc) => &kc.open,
            Structure::Symplectic(ks) => &ks.open,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub h: Expr,
    pub darboux: Darboux,
    pub gauge: GaugeAssignment,
    pub integrable_on: Option<Vec<String>>,
}

#[derive(Clone, Debug)]
pub struct Flow {
    pub start: Point,
    pub t_end: f64,
    pub dt: f64,
}

/// Objects built from a file; every invariant the core constructors enforce has been checked.
#[derive(Clone, Debug)]
pub struct Model {
    pub opaques: Opaques,
    pub chart: Arc<Chart>,
    pub structure: Structure,
    pub md: Option<MomentumData>,
    pub level: Option<LevelSet>,
    pub quotient: Option<QuotientPresentation>,
    pub hamiltonian: Option<Hamiltonian>,
    pub params: Point,
    pub bindings: Bindings,
    pub initial: Vec<(String, Term)>,
    pub simulate: Option<K2Params>,
    pub flow: Option<Flow>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub model: Model,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.file == other.file
    }
}

impl Scenario {
    pub fn id(&self) -> &str {
        &self.file.scenario.id
    }

    pub fn from_file(file: ScenarioFile, src: Option<&str>) -> Result<Self, LoadError> {
        let model = Builder { src, ops: file.opaques.clone() }.build(&file)?;
        Ok(Scenario { file, model })
    }

    pub fn to_text(&self) -> String {
        format::write_file(&self.file)
    }
}

pub fn parse_scenario(src: &str) -> Result<Scenario, LoadError> {
    let file = format::parse_file(src)?;
    Scenario::from_file(file, Some(src))
}

pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let src = std::fs::read_to_string(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&src)
}

struct Builder<'a> {
    src: Option<&'a str>,
    ops: Opaques,
}

fn sem(what: &str, e: impl std::fmt::Display) -> LoadError {
    LoadError::Semantic(format!("{what}: {e}"))
}

impl Builder<'_> {
    /// Maps a core error on the expression `text` to a positioned parse error or a semantic one.
    fn err(&self, what: &str, text: &str, e: Error) -> LoadError {
        if let Error::Parse { col, msg } = &e {
            let quoted = format!("\"{text}\"");
            if let Some(off) = self.src.and_then(|s| s.find(&quoted)) {
                let (line, c) = line_col(self.src.unwrap(), off + 1);
                return LoadError::Parse { line, col: c + col - 1, msg: format!("{what}: {msg}") };
            }
            return LoadError::Parse { line: 0, col: *col, msg: format!("{what}: {msg}") };
        }
        sem(what, e)
    }

    fn scalar(&self, what: &str, text: &str, chart: &Chart) -> Result<Expr, LoadError> {
        parse_scalar(text, chart, &self.ops).map_err(|e| self.err(what, text, e))
    }

    fn scalars(&self, what: &str, texts: &[String], chart: &Chart) -> Result<Vec<Expr>, LoadError> {
        texts.iter().map(|t| self.scalar(what, t, chart)).collect()
    }

    fn rational(&self, what: &str, text: &str) -> Result<Q, LoadError> {
        let e = parse_expr(text, &Opaques::new()).map_err(|e| self.err(what, text, e))?;
        e.as_constant().ok_or_else(|| LoadError::Semantic(format!("{what}: `{text}` is not a rational constant")))
    }

    fn field(&self, what: &str, text: &str, chart: &Arc<Chart>) -> Result<VectorField, LoadError> {
        parse_field(text, chart, &self.ops).map_err(|e| self.err(what, text, e))
    }

    /// Components keyed `1..k` in order.
    fn vform(&self, what: &str, comps: &BTreeMap<String, String>, chart: &Arc<Chart>, degree: usize) -> Result<VForm, LoadError> {
        let mut forms: Vec<(usize, Form)> = Vec::new();
        for (key, text) in comps {
            let idx: usize = key
                .parse()
                .ok()
                .filter(|i| *i >= 1)
                .ok_or_else(|| LoadError::Semantic(format!("{what}: component key `{key}` must be an index 1..k")))?;
            let f = parse_form(text, chart, degree, &self.ops).map_err(|e| self.err(&format!("{what}.{key}"), text, e))?;
            forms.push((idx, f));
        }
        forms.sort_by_key(|(i, _)| *i);
        if forms.iter().enumerate().any(|(n, (i, _))| *i != n + 1) {
            return Err(LoadError::Semantic(format!("{what}: component indices must be 1..k without gaps")));
        }
        VForm::new(forms.into_iter().map(|(_, f)| f).collect()).map_err(|e| sem(what, e))
    }

    fn chart(&self, what: &str, name: &str, coords: &[String], params: &[String]) -> Result<Arc<Chart>, LoadError> {
        Chart::new(name, coords, params).map(Arc::new).map_err(|e| sem(what, e))
    }

    fn build(&self, f: &ScenarioFile) -> Result<Model, LoadError> {
        let params_list = &f.chart.params;
        let chart = self.chart("chart", &f.chart.name, &f.chart.coords, params_list)?;
        let open = match &f.open_conditions {
            Some(o) => self.scalars("open_conditions", &o.nonzero, &chart)?,
            None => Vec::new(),
        };
        let structure = match (&f.form.eta, &f.form.theta, &f.form.omega) {
            (Some(eta), None, None) => {
                let eta = self.vform("form.eta", eta, &chart, 1)?;
                let mut kc = KContact::new(eta).map_err(|e| sem("form.eta", e))?.with_open(open);
                if let Some(p) = &f.polarization {
                    let fields = p.fields.iter().map(|t| self.field("polarization", t, &chart)).collect::<Result<_, _>>()?;
                    kc = kc.with_polarization(fields);
                }
                Structure::Contact(kc)
            }
            (None, Some(theta), None) => {
                let theta = self.vform("form.theta", theta, &chart, 1)?;
                Structure::Symplectic(KSymplectic::exact(theta).map_err(|e| sem("form.theta", e))?.with_open(open))
            }
            (None, None, Some(omega)) => {
                let omega = self.vform("form.omega", omega, &chart, 2)?;
                Structure::Symplectic(KSymplectic::new(omega).map_err(|e| sem("form.omega", e))?.with_open(open))
            }
            _ => return Err(LoadError::Semantic("form: exactly one of eta, theta, omega must be given".into())),
        };
        if f.polarization.is_some() && !matches!(structure, Structure::Contact(_)) {
            return Err(LoadError::Semantic("polarization: only k-contact structures carry one here".into()));
        }

        let mut params = Point::new();
        for (name, v) in &f.params {
            if !chart.is_param(name) {
                return Err(LoadError::Semantic(format!("params: `{name}` is not a chart parameter")));
            }
            params.set(name, self.rational(&format!("params.{name}"), v)?);
        }
        let mut bindings = Bindings::new();
        for (name, body) in &f.bindings {
            let Some(&arity) = self.ops.get(name) else {
                return Err(LoadError::Semantic(format!("bindings: `{name}` is not a declared opaque function")));
            };
            let e = parse_expr(body, &Opaques::new()).map_err(|e| self.err(&format!("bindings.{name}"), body, e))?;
            let formals: Vec<String> = (0..arity).map(OpaqueDef::formal).collect();
            if let Some(s) = e.symbols().into_iter().find(|s| !formals.contains(s)) {
                return Err(LoadError::Semantic(format!("bindings.{name}: `{s}` is not one of the formals _1.._{arity}")));
            }
            bindings = bindings.with(name, OpaqueDef::new(arity, e));
        }

        let md = self.momentum(f, &chart, &structure)?;
        let level = match (&md, &f.level_set) {
            (Some(md), Some(ls)) => {
                let pchart = self.chart("level_set", &ls.name, &ls.coords, params_list)?;
                let emb = SmoothMap::new(&pchart, &chart, self.scalars("level_set.embedding", &ls.embedding, &pchart)?)
                    .map_err(|e| sem("level_set.embedding", e))?;
                let popen = self.scalars("level_set.open", &ls.open, &pchart)?;
                Some(level_set_of(md, Some(emb), popen).map_err(|e| sem("level_set", e))?)
            }
            (Some(md), None) => Some(level_set_of(md, None, Vec::new()).map_err(|e| sem("level_set", e))?),
            (None, Some(_)) => return Err(LoadError::Semantic("level_set: needs [action] and [mu]".into())),
            (None, None) => None,
        };
        let quotient = match (&level, &f.quotient) {
            (Some(level), Some(q)) => {
                let rchart = self.chart("quotient", &q.name, &q.coords, params_list)?;
                let proj = SmoothMap::new(&level.param, &rchart, self.scalars("quotient.projection", &q.projection, &level.param)?)
                    .map_err(|e| sem("quotient.projection", e))?;
                let section = match &q.section {
                    Some(s) => Some(
                        SmoothMap::new(&rchart, &level.param, self.scalars("quotient.section", s, &rchart)?)
                            .map_err(|e| sem("quotient.section", e))?,
                    ),
                    None => None,
                };
                let eta_red = self.vform("quotient.eta_red", &q.eta_red, &rchart, 1)?;
                if eta_red.k() != md.as_ref().map_or(0, MomentumData::k) {
                    return Err(LoadError::Semantic("quotient.eta_red: needs one component per momentum row".into()));
                }
                Some(QuotientPresentation::new(level.clone(), proj, eta_red, section).map_err(|e| sem("quotient", e))?)
            }
            (None, Some(_)) => return Err(LoadError::Semantic("quotient: needs a level set".into())),
            (_, None) => None,
        };

        let hamiltonian = match &f.hamiltonian {
            Some(hs) => {
                let h = self.scalar("hamiltonian.h", &hs.h, &chart)?;
                let mut d = Darboux::new(hs.darboux.q.clone(), hs.darboux.p.clone(), hs.darboux.z.clone());
                if let Some(a) = hs.darboux.determined {
                    d = d.with_determined(a);
                }
                match &structure {
                    Structure::Contact(kc) => d.check_contact(kc).map(|_| ()),
                    Structure::Symplectic(ks) => d.check_symplectic(ks).map(|_| ()),
                }
                .map_err(|e| sem("hamiltonian.darboux", e))?;
                let mut gauge = GaugeAssignment::new();
                for (slot, text) in &hs.gauge {
                    gauge.insert(slot.clone(), self.scalar(&format!("hamiltonian.gauge.{slot}"), text, &chart)?);
                }
                if let Some(c) = hs.integrable_on.iter().flatten().find(|c| chart.index_of(c).is_none()) {
                    return Err(LoadError::Semantic(format!("hamiltonian.integrable_on: `{c}` is not a coordinate")));
                }
                Some(Hamiltonian { h, darboux: d, gauge, integrable_on: hs.integrable_on.clone() })
            }
            None => None,
        };

        let mut initial = Vec::new();
        for (name, text) in &f.initial {
            let Some(h) = &hamiltonian else {
                return Err(LoadError::Semantic("initial: needs [hamiltonian]".into()));
            };
            let known = h.darboux.q.iter().chain(h.darboux.p.iter().map(|r| &r[0]));
            if !known.into_iter().any(|c| c == name) {
                return Err(LoadError::Semantic(format!("initial: `{name}` is neither a field nor a time momentum")));
            }
            let t = parse_term(text).map_err(|e| self.err(&format!("initial.{name}"), text, e))?;
            initial.push((name.clone(), t));
        }
        let simulate = match &f.simulate {
            Some(s) => {
                if hamiltonian.is_none() || initial.is_empty() {
                    return Err(LoadError::Semantic("simulate: needs [hamiltonian] and [initial]".into()));
                }
                if s.nodes < 3 || s.steps == 0 || !s.t_end.is_finite() || s.t_end <= 0.0 {
                    return Err(LoadError::Semantic("simulate: needs nodes >= 3, steps >= 1 and t_end > 0".into()));
                }
                Some(K2Params::new(s.nodes, s.steps, s.t_end))
            }
            None => None,
        };
        let flow = match &f.flow {
            Some(fl) => {
                let Some(level) = &level else {
                    return Err(LoadError::Semantic("flow: needs a level set".into()));
                };
                let mut start = Point::new();
                for c in level.param.coords.iter() {
                    let Some(v) = fl.start.get(c.as_ref()) else {
                        return Err(LoadError::Semantic(format!("flow.start: no value for `{c}`")));
                    };
                    start.set(c, self.rational(&format!("flow.start.{c}"), v)?);
                }
                if let Some(k) = fl.start.keys().find(|k| level.param.index_of(k).is_none()) {
                    return Err(LoadError::Semantic(format!("flow.start: `{k}` is not a level-set coordinate")));
                }
                if !(fl.dt > 0.0 && fl.t_end > 0.0) {
                    return Err(LoadError::Semantic("flow: dt and t_end must be positive".into()));
                }
                Some(Flow { start, t_end: fl.t_end, dt: fl.dt })
            }
            None => None,
        };
        Ok(Model {
            opaques: self.ops.clone(),
            chart,
            structure,
            md,
            level,
            quotient,
            hamiltonian,
            params,
            bindings,
            initial,
            simulate,
            flow,
        })
    }

    fn algebra(&self, f: &ScenarioFile) -> Result<Option<LieAlgebra>, LoadError> {
        let Some(a) = &f.algebra else { return Ok(None) };
        let basis: Vec<&str> = a.names.iter().map(String::as_str).collect();
        let mut brackets = Vec::new();
        for (key, text) in &a.brackets {
            let parts: Vec<&str> = key.split(',').map(str::trim).collect();
            let idx = |n: &str| basis.iter().position(|b| *b == n);
            let (Some(i), Some(j)) = (parts.first().and_then(|p| idx(p)), parts.get(1).and_then(|p| idx(p))) else {
                return Err(LoadError::Semantic(format!("algebra: bracket key `{key}` must name two basis elements")));
            };
            if parts.len() != 2 || i == j {
                return Err(LoadError::Semantic(format!("algebra: bracket key `{key}` must name two distinct basis elements")));
            }
            let e = parse_expr(text, &Opaques::new()).map_err(|e| self.err(&format!("algebra.\"{key}\""), text, e))?;
            let lin = linear_combination(&e, &basis)
                .ok_or_else(|| LoadError::Semantic(format!("algebra.\"{key}\": `{text}` is not a linear combination of the basis")))?;
            let (i, j, lin) = if i < j { (i, j, lin) } else { (j, i, lin.into_iter().map(|(k, c)| (k, -c)).collect()) };
            if brackets.iter().any(|(a, b, _): &(usize, usize, Vec<(usize, Q)>)| (*a, *b) == (i, j)) {
                return Err(LoadError::Semantic(format!("algebra: bracket `{key}` is given twice")));
            }
            brackets.push((i, j, lin));
        }
        LieAlgebra::new(a.names.clone(), &brackets).map(Some).map_err(|e| sem("algebra", e))
    }

    fn momentum(&self, f: &ScenarioFile, chart: &Arc<Chart>, structure: &Structure) -> Result<Option<MomentumData>, LoadError> {
        let Some(g) = self.algebra(f)? else {
            if f.action.is_some() || f.mu.is_some() {
                return Err(LoadError::Semantic("action: needs [algebra]".into()));
            }
            return Ok(None);
        };
        let Some(a) = &f.action else {
            if f.mu.is_some() {
                return Err(LoadError::Semantic("mu: needs [action]".into()));
            }
            return Ok(None);
        };
        let fields = a.fields.iter().map(|t| self.field("action", t, chart)).collect::<Result<Vec<_>, _>>()?;
        let act = InfAction::new(g, chart, fields, a.sigma).map_err(|e| sem("action", e))?;
        let Some(m) = &f.mu else {
            return Err(LoadError::Semantic("action: needs [mu] to define the momentum level".into()));
        };
        let form = structure
            .potential()
            .ok_or_else(|| LoadError::Semantic("action: the momentum map needs eta or theta".into()))?;
        let j = momentum_from_action(&act, form).map_err(|e| sem("action", e))?;
        let mu = m
            .rows
            .iter()
            .map(|r| r.iter().map(|v| self.rational("mu", v)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        MomentumData::new(act, j, mu).map(Some).map_err(|e| sem("mu", e))
    }
}

/// Constant coefficients of `e` in the symbols `basis`, if `e` is linear in them.
fn linear_combination(e: &Expr, basis: &[&str]) -> Option<Vec<(usize, Q)>> {
    let mut out = Vec::new();
    let mut rest = e.clone();
    for (k, b) in basis.iter().enumerate() {
        let c = e.diff(b).as_constant()?;
        if c != Q::from_integer(0.into()) {
            rest = rest - Expr::constant(c.clone()) * Expr::sym(b);
            out.push((k, c));
        }
    }
    rest.is_zero().then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_combinations() {
        let e = parse_expr("2 a - b/3", &Opaques::new()).unwrap();
        let lin = linear_combination(&e, &["a", "b", "c"]).unwrap();
        assert_eq!(lin.len(), 2);
        assert!(linear_combination(&parse_expr("a b", &Opaques::new()).unwrap(), &["a", "b"]).is_none());
        assert!(linear_combination(&parse_expr("a + 1", &Opaques::new()).unwrap(), &["a"]).is_none());
    }
}
