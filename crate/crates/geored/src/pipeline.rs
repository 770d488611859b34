//! Staged verification of a scenario against its expected outcomes.

use std::cell::{OnceCell, RefCell};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use geored_core::dynamics::{
    flow_commutation, integrability_check, project_dynamics, solve_hdw_contact, solve_hdw_ksymplectic, verify_hdw,
    verify_hdw_ksymplectic, HamKVF,
};
use geored_core::exterior::{parse_field, parse_scalar, VectorField};
use geored_core::lie::{
    basis_names, check_equivariance_inf, check_invariance, check_momentum_identities, extend_momentum, lift_action,
};
use geored_core::reduction::{
    check_contact_conditions, check_kernel_identity, check_ksymplectic_level_lemma, check_orbit_in_kernel,
    check_symplectic_conditions, cross_check_conditions, lift_level_set, probe_reduction_group, verify_reduction,
    Candidate, LevelSet, MomentumData,
};
use geored_core::report::{ProbeMatch, ProbeReport, StructureReport};
use geored_core::sampling::{SampleSpec, Sampler};
use geored_core::structures::{
    check_reeb, solve_reeb, symplectize, verify_kcontact, verify_ksymplectic, verify_symplectization, KContact,
    Symplectization,
};
use geored_core::symbolic::expr_equal;
use geored_core::Point;
use serde::Serialize;
use serde_json::{json, Value};

use crate::scenario::{Model, Scenario, Structure};
use crate::simulate::simulate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Structure,
    Action,
    Momentum,
    Isotropy,
    Conditions,
    Kernel,
    Reduction,
    Dynamics,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Structure,
        Stage::Action,
        Stage::Momentum,
        Stage::Isotropy,
        Stage::Conditions,
        Stage::Kernel,
        Stage::Reduction,
        Stage::Dynamics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Structure => "structure",
            Stage::Action => "action",
            Stage::Momentum => "momentum",
            Stage::Isotropy => "isotropy",
            Stage::Conditions => "conditions",
            Stage::Kernel => "kernel",
            Stage::Reduction => "reduction",
            Stage::Dynamics => "dynamics",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub status: StageStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub reports: Vec<StructureReport>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl StageReport {
    fn new(stage: Stage) -> Self {
        StageReport { stage, status: StageStatus::Pass, reason: None, reports: Vec::new(), details: BTreeMap::new() }
    }

    fn not_applicable(stage: Stage, why: &str) -> Self {
        StageReport { status: StageStatus::NotApplicable, reason: Some(why.to_string()), ..StageReport::new(stage) }
    }

    fn push(&mut self, r: StructureReport) -> bool {
        let ok = r.verdict;
        if !ok && self.status == StageStatus::Pass {
            self.status = StageStatus::Fail;
            self.reason = Some(match &r.witness {
                Some(w) => format!("{}: {w}", r.check),
                None => format!("{} fails", r.check),
            });
        }
        self.reports.push(r);
        ok
    }

    fn fail(&mut self, why: String) {
        if self.status != StageStatus::Fail {
            self.status = StageStatus::Fail;
            self.reason = Some(why);
        }
    }

    fn detail(&mut self, key: &str, v: Value) {
        self.details.insert(key.to_string(), v);
    }

    pub fn report(&self, check: &str) -> Option<&StructureReport> {
        self.reports.iter().find(|r| r.check == check)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Expectation {
    pub stage: Stage,
    pub name: String,
    pub expected: Value,
    pub observed: Value,
    pub ok: bool,
}

/// Machine-readable outcome of one pipeline run. Timings are kept out of the JSON so that
/// equal inputs produce identical bytes.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub samples: usize,
    pub verdict: bool,
    pub stages: Vec<StageReport>,
    pub expectations: Vec<Expectation>,
    #[serde(skip)]
    pub timings: Vec<(Stage, f64)>,
}

impl RunReport {
    pub fn stage(&self, s: Stage) -> Option<&StageReport> {
        self.stages.iter().find(|r| r.stage == s)
    }

    pub fn expectation(&self, name: &str) -> Option<&Expectation> {
        self.expectations.iter().find(|e| e.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self, timings: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}: {} (seed {}, {} samples)", self.scenario, if self.verdict { "PASS" } else { "FAIL" }, self.seed, self.samples);
        for s in &self.stages {
            let status = match s.status {
                StageStatus::Pass => "pass",
                StageStatus::Fail => "fail",
                StageStatus::NotApplicable => "not applicable",
            };
            let _ = write!(out, "  {:<11} {status}", s.stage.name());
            if let Some(r) = &s.reason {
                let _ = write!(out, " ({r})");
            }
            if timings {
                if let Some((_, t)) = self.timings.iter().find(|(st, _)| *st == s.stage) {
                    let _ = write!(out, " [{t:.3} s]");
                }
            }
            out.push('\n');
        }
        for e in &self.expectations {
            let _ = writeln!(
                out,
                "  expect {:<22} {} (expected {}, observed {})",
                e.name,
                if e.ok { "ok" } else { "MISMATCH" },
                e.expected,
                e.observed
            );
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub seed: u64,
    pub samples: usize,
    pub stages: Vec<Stage>,
    /// Runs the `[simulate]` grid inside the dynamics stage.
    pub simulate: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { seed: 1, samples: 100, stages: Stage::ALL.to_vec(), simulate: true }
    }
}

/// Lazily built objects shared between stages.
struct Ctx<'a> {
    m: &'a Model,
    s: &'a Scenario,
    opts: &'a Options,
    reeb: OnceCell<Option<Vec<VectorField>>>,
    points: OnceCell<Result<Vec<Point>, String>>,
    level_points: OnceCell<Result<LevelSamples, String>>,
    lifted: OnceCell<Result<Lifted, String>>,
    hdw: OnceCell<Result<HamKVF, String>>,
}

/// Level-set parameters and their embedded images.
type LevelSamples = (Vec<Point>, Vec<Point>);

struct Lifted {
    sy: Symplectization,
    md: MomentumData,
    level: LevelSet,
}

impl<'a> Ctx<'a> {
    fn kc(&self) -> Option<&'a KContact> {
        match &self.m.structure {
            Structure::Contact(kc) => Some(kc),
            Structure::Symplectic(_) => None,
        }
    }

    fn sampler(&self, salt: u64) -> Sampler {
        Sampler::new(self.opts.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(salt))
    }

    fn reeb(&self) -> Option<&Vec<VectorField>> {
        self.reeb.get_or_init(|| self.kc().and_then(|kc| solve_reeb(kc, &[]).fields)).as_ref()
    }

    fn points(&self) -> Result<&Vec<Point>, String> {
        self.points
            .get_or_init(|| {
                let spec = SampleSpec {
                    chart: &self.m.chart,
                    fixed: &self.m.params,
                    open: self.m.structure.open(),
                    bindings: &self.m.bindings,
                };
                self.sampler(1).points(&spec, self.opts.samples).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Level-set samples on the parametrizing chart and their images.
    fn level_points(&self) -> Result<&LevelSamples, String> {
        self.level_points
            .get_or_init(|| {
                let level = self.m.level.as_ref().ok_or("no level set")?;
                let ys = level
                    .sample(&mut self.sampler(2), self.opts.samples, &self.m.params, &self.m.bindings)
                    .map_err(|e| e.to_string())?;
                let xs = ys.iter().map(|y| level.embed(y, &self.m.bindings)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
                Ok((ys, xs))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn lifted(&self) -> Result<&Lifted, String> {
        self.lifted
            .get_or_init(|| {
                let kc = self.kc().ok_or("no k-contact structure")?;
                let md = self.m.md.as_ref().ok_or("no momentum data")?;
                let level = self.m.level.as_ref().ok_or("no level set")?;
                let sy = symplectize(kc, None);
                let j = extend_momentum(&md.j, &sy).map_err(|e| e.to_string())?;
                let md2 = MomentumData::new(lift_action(&md.act, &sy), j, md.mu.clone()).map_err(|e| e.to_string())?;
                let level2 = lift_level_set(level, &sy, &md2).map_err(|e| e.to_string())?;
                Ok(Lifted { sy, md: md2, level: level2 })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Attaches a nonzero `s` value to each point.
    fn with_s(&self, xs: &[Point], s: &str) -> Vec<Point> {
        let mut sampler = self.sampler(3);
        xs.iter().map(|x| x.clone().with(s, sampler.nonzero_rational())).collect()
    }

    fn hdw(&self) -> Option<Result<&HamKVF, String>> {
        let ham = self.m.hamiltonian.as_ref()?;
        Some(
            self.hdw
                .get_or_init(|| {
                    match &self.m.structure {
                        Structure::Contact(kc) => solve_hdw_contact(kc, &ham.h, &ham.darboux, &ham.gauge),
                        Structure::Symplectic(ks) => solve_hdw_ksymplectic(ks, &ham.h, &ham.darboux, &ham.gauge),
                    }
                    .map_err(|e| e.to_string())
                })
                .as_ref()
                .map_err(Clone::clone),
        )
    }
}

struct Run<'a> {
    expectations: RefCell<Vec<Expectation>>,
    ctx: Ctx<'a>,
}

impl Run<'_> {
    fn expect(&self, stage: Stage, name: &str, expected: Value, observed: Value, ok: bool) {
        self.expectations.borrow_mut().push(Expectation { stage, name: name.to_string(), expected, observed, ok });
    }

    fn expect_bool(&self, stage: Stage, name: &str, expected: Option<bool>, observed: bool) {
        if let Some(e) = expected {
            self.expect(stage, name, json!(e), json!(observed), e == observed);
        }
    }
}

pub fn run_pipeline(s: &Scenario, opts: &Options) -> RunReport {
    let ctx = Ctx {
        m: &s.model,
        s,
        opts,
        reeb: OnceCell::new(),
        points: OnceCell::new(),
        level_points: OnceCell::new(),
        lifted: OnceCell::new(),
        hdw: OnceCell::new(),
    };
    let run = Run { expectations: RefCell::new(Vec::new()), ctx };
    let mut stages = Vec::new();
    let mut timings = Vec::new();
    for stage in Stage::ALL {
        if !opts.stages.contains(&stage) {
            continue;
        }
        let t0 = Instant::now();
        let rep = match stage {
            Stage::Structure => structure(&run),
            Stage::Action => action(&run),
            Stage::Momentum => momentum(&run),
            Stage::Isotropy => isotropy(&run),
            Stage::Conditions => conditions(&run),
            Stage::Kernel => kernel(&run),
            Stage::Reduction => reduction(&run),
            Stage::Dynamics => dynamics(&run),
        };
        timings.push((stage, t0.elapsed().as_secs_f64()));
        stages.push(rep);
    }
    let expectations = run.expectations.into_inner();
    let verdict = expectations.iter().all(|e| e.ok)
        && stages.iter().all(|st| st.status != StageStatus::Fail || expectations.iter().any(|e| e.stage == st.stage));
    RunReport { scenario: s.id().to_string(), seed: opts.seed, samples: opts.samples, verdict, stages, expectations, timings }
}

fn strings<T: ToString>(xs: &[T]) -> Value {
    json!(xs.iter().map(ToString::to_string).collect::<Vec<_>>())
}

fn structure(run: &Run) -> StageReport {
    let c = &run.ctx;
    let ex = &c.s.file.expect;
    let mut st = StageReport::new(Stage::Structure);
    let xs = match c.points() {
        Ok(p) => p.clone(),
        Err(e) => {
            st.fail(format!("sampling failed: {e}"));
            return st;
        }
    };
    match &c.m.structure {
        Structure::Contact(kc) => {
            let mut rep = verify_kcontact(kc, &xs);
            rep.seed = Some(c.opts.seed);
            let ok = st.push(rep.clone());
            let (e_kc, e_w, e_reeb, e_ks) = (ex.kcontact, ex.kcontact_witness.clone(), ex.reeb.clone(), ex.ksymplectic);
            let mut lifted_reeb = None;
            if ok {
                match c.reeb() {
                    Some(fields) => {
                        st.detail("reeb", strings(fields));
                        st.push(check_reeb(kc, fields));
                        lifted_reeb = Some(fields.clone());
                    }
                    None => {
                        st.push(solve_reeb(kc, &xs).report);
                        st.detail("reeb", json!("pointwise only"));
                    }
                }
            } else {
                st.detail("reeb", json!("not computed: the form is not k-contact"));
            }
            let sy = symplectize(kc, lifted_reeb.as_deref());
            let ps = c.with_s(&xs, &sy.s);
            let mut ks_rep = verify_ksymplectic(&sy.ks, &ps);
            ks_rep.check = "ksymplectic (symplectisation)".into();
            let ks_ok = st.push(ks_rep);
            st.push(verify_symplectization(&sy));
            run.expect_bool(Stage::Structure, "kcontact", e_kc, ok);
            if let Some(w) = e_w {
                let got = rep.witness.clone().unwrap_or_default();
                let hit = got.contains(&w);
                run.expect(Stage::Structure, "kcontact_witness", json!(w), json!(got), hit);
            }
            if let Some(want) = e_reeb {
                let got = run.ctx.reeb().cloned();
                let ok = match &got {
                    Some(fields) if fields.len() == want.len() => want.iter().zip(fields).all(|(w, f)| {
                        parse_field(w, &kc.chart, &run.ctx.m.opaques).map(|wf| wf.equal(f).equal).unwrap_or(false)
                    }),
                    _ => false,
                };
                let observed = got.map_or(Value::Null, |f| strings(&f));
                run.expect(Stage::Structure, "reeb", json!(want), observed, ok);
            }
            run.expect_bool(Stage::Structure, "ksymplectic", e_ks, ks_ok);
        }
        Structure::Symplectic(ks) => {
            let mut rep = verify_ksymplectic(ks, &xs);
            rep.seed = Some(c.opts.seed);
            let ok = st.push(rep);
            run.expect_bool(Stage::Structure, "ksymplectic", ex.ksymplectic, ok);
            if ex.kcontact.is_some() {
                run.expect(Stage::Structure, "kcontact", json!(ex.kcontact), json!("not a k-contact scenario"), false);
            }
        }
    }
    st
}

fn action(run: &Run) -> StageReport {
    let c = &run.ctx;
    let Some(md) = &c.m.md else {
        return StageReport::not_applicable(Stage::Action, "no [action]");
    };
    let mut st = StageReport::new(Stage::Action);
    st.push(md.act.check_brackets());
    let form = c.m.structure.potential().expect("momentum data implies a potential");
    let ok = st.push(check_invariance(&md.act, form));
    st.detail("sigma", json!(md.act.sigma));
    st.detail("jacobi", json!(md.act.algebra.check_jacobi().is_ok()));
    let e = c.s.file.expect.invariance;
    run.expect_bool(Stage::Action, "invariance", e, ok);
    st
}

fn momentum(run: &Run) -> StageReport {
    let c = &run.ctx;
    let Some(md) = &c.m.md else {
        return StageReport::not_applicable(Stage::Momentum, "no [action]");
    };
    let mut st = StageReport::new(Stage::Momentum);
    let entries: Vec<Value> = md.j.entries.iter().map(|r| strings(r)).collect();
    st.detail("J", json!(entries));
    let mut ok = st.push(check_equivariance_inf(&md.j, &md.act));
    if let Some(kc) = c.kc() {
        let reeb = c.reeb().map(|v| v.as_slice());
        if reeb.is_none() {
            st.detail("reeb_identity", json!("skipped: no symbolic Reeb fields"));
        }
        ok &= st.push(check_momentum_identities(&md.act, &kc.eta, &md.j, reeb));
    }
    let e = c.s.file.expect.momentum;
    run.expect_bool(Stage::Momentum, "momentum", e, ok);
    st
}

fn isotropy(run: &Run) -> StageReport {
    let c = &run.ctx;
    let Some(md) = &c.m.md else {
        return StageReport::not_applicable(Stage::Isotropy, "no [mu]");
    };
    let mut st = StageReport::new(Stage::Isotropy);
    let g = &md.act.algebra;
    let iso = &md.iso;
    for (key, s) in [
        ("ker_mu", &iso.ker_mu),
        ("g_mu", &iso.g_mu),
        ("g_bracket_mu", &iso.g_bracket_mu),
        ("k_mu", &iso.k_mu),
        ("k_bracket_mu", &iso.k_bracket_mu),
    ] {
        st.detail(key, json!(basis_names(g, s)));
    }
    st.detail("willett", json!(iso.willett));
    st.detail("zero_rows", json!(iso.zero_rows.iter().map(|a| a + 1).collect::<Vec<_>>()));
    let mut rep = StructureReport::new("isotropy");
    if !iso.k_bracket_closed {
        rep.fail("k_[mu] is not closed under the bracket".into());
    }
    if !g.is_subalgebra(&iso.k_mu) {
        rep.fail("k_mu is not closed under the bracket".into());
    }
    st.push(rep);
    let ex = c.s.file.expect.clone();
    run.expect_bool(Stage::Isotropy, "willett", ex.willett, iso.willett.iter().all(|w| *w));
    for (name, want, s) in [("k_mu", &ex.k_mu, &iso.k_mu), ("k_bracket_mu", &ex.k_bracket_mu, &iso.k_bracket_mu)] {
        if let Some(want) = want {
            let got = basis_names(g, s);
            let ok = &got == want;
            run.expect(Stage::Isotropy, name, json!(want), json!(got), ok);
        }
    }
    st
}

fn conditions(run: &Run) -> StageReport {
    let c = &run.ctx;
    if c.m.md.is_none() {
        return StageReport::not_applicable(Stage::Conditions, "no [mu]");
    }
    let md = c.m.md.as_ref().unwrap();
    let mut st = StageReport::new(Stage::Conditions);
    let (_, xs) = match c.level_points() {
        Ok(p) => p,
        Err(e) => {
            st.fail(format!("level-set sampling failed: {e}"));
            return st;
        }
    };
    let b = &c.m.bindings;
    let ok = match &c.m.structure {
        Structure::Contact(kc) => {
            let contact = check_contact_conditions(kc, md, xs, Candidate::Projective, b);
            let ok = contact.verdict;
            match c.lifted() {
                Ok(l) => {
                    let ps = c.with_s(xs, &l.sy.s);
                    let sym = check_symplectic_conditions(&l.sy.ks, &l.md, &ps, Candidate::Projective, b);
                    st.push(cross_check_conditions(&contact, &sym));
                    st.push(check_orbit_in_kernel(&l.sy.ks, &l.md, &ps, b));
                    st.push(contact);
                    st.push(sym);
                }
                Err(e) => {
                    st.push(contact);
                    st.fail(format!("symplectisation failed: {e}"));
                }
            }
            ok
        }
        Structure::Symplectic(ks) => st.push(check_symplectic_conditions(ks, md, xs, Candidate::Projective, b)),
    };
    let e = c.s.file.expect.conditions;
    run.expect_bool(Stage::Conditions, "conditions", e, ok);
    st
}

/// `H` and `N` from the note "k_mu orbit matches the kernel at H/N samples".
fn k_mu_hits(rep: &StructureReport) -> Option<(usize, usize)> {
    let note = rep.notes.iter().find_map(|n| n.strip_prefix("k_mu orbit matches the kernel at "))?;
    let (h, rest) = note.split_once('/')?;
    let n = rest.split_whitespace().next()?;
    Some((h.parse().ok()?, n.parse().ok()?))
}

fn probe_summary(p: &ProbeReport) -> Value {
    let count = |f: fn(&geored_core::report::ProbeSample) -> bool| p.samples.iter().filter(|s| f(s)).count();
    json!({
        "matches": p.matches,
        "k_mu_dim": p.k_mu_dim,
        "k_bracket_dim": p.k_bracket_dim,
        "quotient_dim_k_mu": p.quotient_dim_k_mu,
        "quotient_dim_k_bracket": p.quotient_dim_k_bracket,
        "samples": p.samples.len(),
        "kernel_equals_k_bracket": count(|s| s.kernel_equals_k_bracket),
        "kernel_equals_k_mu": count(|s| s.kernel_equals_k_mu),
        "kernel_strictly_contains_k_mu": count(|s| s.kernel_strictly_contains_k_mu),
        "kernel_ranks": p.samples.iter().map(|s| s.kernel_rank).collect::<std::collections::BTreeSet<_>>(),
        "notes": p.notes,
    })
}

fn match_name(m: ProbeMatch) -> &'static str {
    match m {
        ProbeMatch::Both => "both",
        ProbeMatch::ProjectiveIsotropy => "projective_isotropy",
        ProbeMatch::Isotropy => "isotropy",
        ProbeMatch::Neither => "neither",
    }
}

fn probe_report(p: &ProbeReport) -> StructureReport {
    let mut rep = StructureReport::new("reduction group probe");
    if let Some(s) = p.samples.iter().find(|s| !s.kernel_equals_k_bracket) {
        rep.fail(format!(
            "sample {}: kernel rank {} but k_[mu] orbit rank {}",
            s.index, s.kernel_rank, s.k_bracket_orbit_rank
        ));
    }
    for n in &p.notes {
        rep.note(n.clone());
    }
    rep
}

fn kernel(run: &Run) -> StageReport {
    let c = &run.ctx;
    let (Some(md), Some(level)) = (&c.m.md, &c.m.level) else {
        return StageReport::not_applicable(Stage::Kernel, "no [mu] / level set");
    };
    let mut st = StageReport::new(Stage::Kernel);
    let b = &c.m.bindings;
    let (ys, xs) = match c.level_points() {
        Ok(p) => p,
        Err(e) => {
            st.fail(format!("level-set sampling failed: {e}"));
            return st;
        }
    };
    let mut identity_ok = None;
    let mut mismatch = None;
    let probe = match &c.m.structure {
        Structure::Contact(kc) => {
            let rep = check_kernel_identity(kc, md, level, ys, b);
            if let Some((h, n)) = k_mu_hits(&rep) {
                st.detail("k_mu_kernel_matches", json!(format!("{h}/{n}")));
                mismatch = Some(h < n);
            }
            identity_ok = Some(st.push(rep));
            match c.lifted() {
                Ok(l) => l
                    .level
                    .sample(&mut c.sampler(4), c.opts.samples, &c.m.params, b)
                    .and_then(|lys| lys.iter().map(|y| l.level.embed(y, b)).collect::<Result<Vec<_>, _>>())
                    .and_then(|lps| probe_reduction_group(&l.sy.ks, &l.md, &lps, b)),
                Err(e) => {
                    st.fail(format!("symplectisation failed: {e}"));
                    return st;
                }
            }
        }
        Structure::Symplectic(ks) => {
            st.push(check_ksymplectic_level_lemma(ks, md, xs, b));
            probe_reduction_group(ks, md, xs, b)
        }
    };
    let ex = c.s.file.expect.clone();
    match probe {
        Ok(p) => {
            st.detail("probe", probe_summary(&p));
            st.push(probe_report(&p));
            if let Some(want) = &ex.probe {
                let got = match_name(p.matches);
                run.expect(Stage::Kernel, "probe", json!(want), json!(got), want == got);
            }
        }
        Err(e) => st.fail(format!("probe failed: {e}")),
    }
    if let Some(ok) = identity_ok {
        run.expect_bool(Stage::Kernel, "kernel_identity", ex.kernel_identity, ok);
    }
    if let (Some(want), Some(got)) = (ex.kernel_k_mu_mismatch, mismatch) {
        run.expect(Stage::Kernel, "kernel_k_mu_mismatch", json!(want), json!(got), want == got);
    }
    st
}

fn reduction(run: &Run) -> StageReport {
    let c = &run.ctx;
    let Some(q) = &c.m.quotient else {
        return StageReport::not_applicable(Stage::Reduction, "no [quotient]");
    };
    let Some(kc) = c.kc() else {
        return StageReport::not_applicable(Stage::Reduction, "quotients are checked for k-contact structures only");
    };
    let mut st = StageReport::new(Stage::Reduction);
    let ys = match c.level_points() {
        Ok((ys, _)) => ys,
        Err(e) => {
            st.fail(format!("level-set sampling failed: {e}"));
            return st;
        }
    };
    st.detail("eta_red", strings(&q.eta_red.0));
    st.detail("reduced_chart", json!(q.reduced.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>()));
    let ok = st.push(verify_reduction(q, kc, c.m.md.as_ref(), ys, &c.m.bindings));
    let e = c.s.file.expect.reduction;
    run.expect_bool(Stage::Reduction, "reduction", e, ok);
    st
}

fn dynamics(run: &Run) -> StageReport {
    let c = &run.ctx;
    let Some(ham) = &c.m.hamiltonian else {
        return StageReport::not_applicable(Stage::Dynamics, "no [hamiltonian]");
    };
    let mut st = StageReport::new(Stage::Dynamics);
    let sol = match c.hdw().expect("hamiltonian present") {
        Ok(s) => s,
        Err(e) => {
            st.fail(format!("field equations: {e}"));
            return st;
        }
    };
    st.detail("X", json!(sol.x.0.iter().map(|f| f.to_string()).collect::<Vec<_>>()));
    st.detail("free_slots", json!(sol.free));
    let ex = c.s.file.expect.clone();
    let kc = match &c.m.structure {
        Structure::Symplectic(ks) => {
            let ok = st.push(verify_hdw_ksymplectic(ks, &ham.h, &sol.x));
            run.expect_bool(Stage::Dynamics, "hdw", ex.hdw, ok);
            return st;
        }
        Structure::Contact(kc) => kc,
    };
    let Some(reeb) = c.reeb() else {
        st.fail("no symbolic Reeb fields for the field equations".into());
        return st;
    };
    let hdw_ok = st.push(verify_hdw(kc, &ham.h, &sol.x, reeb));
    run.expect_bool(Stage::Dynamics, "hdw", ex.hdw, hdw_ok);
    if let Some(subset) = &ham.integrable_on {
        st.push(integrability_check(&sol.x, Some(subset)));
    }
    if let (Some(q), Some(md)) = (&c.m.quotient, &c.m.md) {
        let pd = project_dynamics(&sol.x, q, kc, &ham.h, md);
        st.push(pd.report.clone());
        if let Some(h_red) = &pd.h_red {
            st.detail("h_red", json!(h_red.to_string()));
        }
        if let Some(want) = &ex.h_red {
            let ok = match (&pd.h_red, parse_scalar(want, &q.reduced, &c.m.opaques)) {
                (Some(got), Ok(w)) => expr_equal(got, &w).equal,
                _ => false,
            };
            let observed = pd.h_red.as_ref().map_or(Value::Null, |h| json!(h.to_string()));
            run.expect(Stage::Dynamics, "h_red", json!(want), observed, ok);
        }
        if let (Some(z), Some(h_red)) = (&pd.x, &pd.h_red) {
            st.detail("X_red", json!(z.0.iter().map(|f| f.to_string()).collect::<Vec<_>>()));
            match KContact::new(q.eta_red.clone()) {
                Ok(red) => match solve_reeb(&red, &[]).fields {
                    Some(rr) => {
                        let mut rep = verify_hdw(&red, h_red, z, &rr);
                        rep.check = "reduced hdw".into();
                        st.push(rep);
                    }
                    None => st.fail("no symbolic Reeb fields on the quotient".into()),
                },
                Err(e) => st.fail(format!("reduced form: {e}")),
            }
            if let Some(flow) = &c.m.flow {
                match flow_commutation(&sol.x.0[0], &z.0[0], q, &flow.start, flow.t_end, flow.dt, &c.m.params, &c.m.bindings) {
                    Ok(cmp) => {
                        st.detail("flow_max_error", json!(cmp.max_error));
                        st.detail("flow_steps", json!(cmp.steps));
                        let mut rep = StructureReport::new("flow commutation");
                        if let Some(bound) = ex.flow_max_error {
                            let ok = cmp.max_error <= bound;
                            if !ok {
                                rep.fail(format!("max error {:e} exceeds {bound:e}", cmp.max_error));
                            }
                            run.expect(Stage::Dynamics, "flow_max_error", json!(bound), json!(cmp.max_error), ok);
                        }
                        st.push(rep);
                    }
                    Err(e) => st.fail(format!("flow commutation: {e}")),
                }
            }
        }
    }
    if let (Some(p), true) = (&c.m.simulate, c.opts.simulate) {
        match simulate(c.m, p) {
            Ok(sim) => {
                let energies = sim.energies();
                let e0 = energies[0];
                let mut rep = StructureReport::new("simulation");
                if let Some(l) = energies.windows(2).position(|w| w[1] > w[0] + 1e-6 * e0.abs()) {
                    rep.fail(format!("discrete energy increases at step {}", l + 1));
                }
                st.detail("grid", json!(format!("{}x{}", p.nodes, p.steps)));
                st.detail("max_residual", json!(sim.residual()));
                st.detail("energy_initial", json!(e0));
                st.detail("energy_final", json!(energies[energies.len() - 1]));
                st.push(rep);
            }
            Err(e) => st.fail(format!("simulation: {e}")),
        }
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hit_counts_are_read_from_the_note() {
        let mut rep = StructureReport::new("kernel identity");
        assert_eq!(k_mu_hits(&rep), None);
        rep.note("k_mu orbit matches the kernel at 0/12 samples".into());
        assert_eq!(k_mu_hits(&rep), Some((0, 12)));
    }

    #[test]
    fn first_failure_sets_the_reason() {
        let mut st = StageReport::new(Stage::Action);
        assert!(st.push(StructureReport::new("a")));
        let mut bad = StructureReport::new("b");
        bad.fail("first".into());
        assert!(!st.push(bad));
        st.fail("second".into());
        assert_eq!(st.status, StageStatus::Fail);
        assert_eq!(st.reason.as_deref(), Some("b: first"));
    }

    #[test]
    fn unexpected_failures_fail_the_verdict() {
        let s = crate::registry::get("canonical_kcontact").unwrap();
        let mut file = s.file.clone();
        file.expect = Default::default();
        file.form.eta.as_mut().unwrap().insert("2".into(), "d(z1) - p1_2 d(q1) - p2_2 d(q2)".into());
        let broken = Scenario::from_file(file, None).unwrap();
        let opts = Options { samples: 5, stages: vec![Stage::Structure], ..Options::default() };
        let r = run_pipeline(&broken, &opts);
        assert_eq!(r.stages[0].status, StageStatus::Fail);
        assert!(r.expectations.is_empty());
        assert!(!r.verdict);
    }

    #[test]
    fn text_rendering_lists_stages() {
        let s = crate::registry::get("canonical_kcontact").unwrap();
        let r = run_pipeline(&s, &Options { samples: 5, ..Options::default() });
        let text = r.to_text(true);
        assert!(text.lines().next().unwrap().starts_with("canonical_kcontact: PASS"));
        assert!(text.contains("reduction   not applicable"));
        assert!(text.contains(" s]"));
        assert!(!r.to_json().contains("timings"));
    }
}
