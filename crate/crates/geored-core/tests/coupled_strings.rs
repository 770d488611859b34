use std::sync::Arc;

use geored_core::dynamics::{flow_commutation, project_dynamics, solve_hdw_contact, verify_hdw, Darboux, GaugeAssignment};
use geored_core::exterior::{parse_field, parse_form, SmoothMap, VForm, VectorField};
use geored_core::lie::{momentum_from_action, InfAction, LieAlgebra};
use geored_core::reduction::{level_set_of, MomentumData, QuotientPresentation};
use geored_core::structures::{solve_reeb, KContact};
use geored_core::symbolic::{expr_equal, parse_expr, qi, Bindings, Opaques, OpaqueDef};
use geored_core::{Chart, Expr, Point, Q};

struct Setup {
    kc: KContact,
    h: Expr,
    md: MomentumData,
    quotient: QuotientPresentation,
    ops: Opaques,
}

fn chart(name: &str, coords: &[&str], params: &[&str]) -> Arc<Chart> {
    Arc::new(Chart::new(name, coords, params).unwrap())
}

fn setup() -> Setup {
    let mut ops = Opaques::new();
    ops.insert("C".into(), 1);
    ops.insert("G".into(), 6);
    let m = chart("strings", &["q1", "q2", "p1t", "p2t", "p1x", "p2x", "st", "sx"], &["gamma"]);
    let eta = VForm::new(vec![
        parse_form("d(st) - p1t d(q1) - p2t d(q2)", &m, 1, &ops).unwrap(),
        parse_form("d(sx) - p1x d(q1) - p2x d(q2)", &m, 1, &ops).unwrap(),
    ])
    .unwrap();
    let kc = KContact::new(eta).unwrap();
    let h = parse_expr("(p1t^2 + p2t^2 - p1x^2 - p2x^2)/2 + C(q1 - q2) + gamma st", &ops).unwrap();
    let fields: Vec<VectorField> = ["D(sx)", "D(q1) + D(q2)"].iter().map(|f| parse_field(f, &m, &ops).unwrap()).collect();
    let act = InfAction::new(LieAlgebra::abelian(2), &m, fields, -1).unwrap();
    let j = momentum_from_action(&act, &kc.eta).unwrap();
    let md = MomentumData::new(act, j, vec![vec![qi(0), qi(0)], vec![qi(1), qi(0)]]).unwrap();
    let y = chart("strings_level", &["q1", "q2", "p1t", "p1x", "st", "sx"], &["gamma"]);
    let ex = |v: &[&str]| v.iter().map(|s| parse_expr(s, &ops).unwrap()).collect::<Vec<_>>();
    let emb = SmoothMap::new(&y, &m, ex(&["q1", "q2", "p1t", "-p1t", "p1x", "-p1x", "st", "sx"])).unwrap();
    let level = level_set_of(&md, Some(emb), Vec::new()).unwrap();
    let r = chart("strings_reduced", &["q", "pt", "px", "st", "sx"], &["gamma"]);
    let proj = SmoothMap::new(&y, &r, ex(&["q1 - q2", "2 p1t", "2 p1x", "st", "sx"])).unwrap();
    let section = SmoothMap::new(&r, &y, ex(&["q", "0", "pt/2", "px/2", "st", "sx"])).unwrap();
    let eta_red = VForm::new(vec![
        parse_form("d(st) - pt/2 d(q)", &r, 1, &ops).unwrap(),
        parse_form("d(sx) - px/2 d(q)", &r, 1, &ops).unwrap(),
    ])
    .unwrap();
    let quotient = QuotientPresentation::new(level, proj, eta_red, Some(section)).unwrap();
    Setup { kc, h, md, quotient, ops }
}

fn gauge(ops: &Opaques) -> GaugeAssignment {
    let g = parse_expr("G(q1 - q2, p1t, p2t, p1x, p2x, st)", ops).unwrap();
    let mut out = GaugeAssignment::new();
    for slot in ["A1_p1x", "A1_p2x", "A2_p1t", "A2_p2t", "B1_sx", "B2_st", "B2_sx"] {
        out.insert(slot.into(), Expr::zero());
    }
    out.insert("A2_p1x".into(), g.clone());
    out.insert("A2_p2x".into(), -g);
    out
}

#[test]
fn field_descends_and_reduced_field_solves_reduced_equations() {
    let s = setup();
    let d = Darboux::new(
        vec!["q1".into(), "q2".into()],
        vec![vec!["p1t".into(), "p1x".into()], vec!["p2t".into(), "p2x".into()]],
        vec!["st".into(), "sx".into()],
    )
    .with_determined(0);
    let sol = solve_hdw_contact(&s.kc, &s.h, &d, &gauge(&s.ops)).unwrap();
    assert!(sol.free.is_empty());
    let reeb = solve_reeb(&s.kc, &[]).fields.unwrap();
    assert!(verify_hdw(&s.kc, &s.h, &sol.x, &reeb).verdict);
    let pd = project_dynamics(&sol.x, &s.quotient, &s.kc, &s.h, &s.md);
    assert!(pd.report.verdict, "{:?}", pd.report.witness);
    let h_red = pd.h_red.unwrap();
    let want = parse_expr("(pt^2 - px^2)/4 + C(q) + gamma st", &s.ops).unwrap();
    assert!(expr_equal(&h_red, &want).equal, "{h_red}");
    let z = pd.x.unwrap();
    let zt = parse_expr("-(2 C__1(q) + gamma pt + 2 G(q, pt/2, -pt/2, px/2, -px/2, st))", &s.ops).unwrap();
    assert!(expr_equal(&z.0[0].comps[1], &zt).equal, "{}", z.0[0].comps[1]);
    assert_eq!(z.0[0].comps[0], parse_expr("pt", &s.ops).unwrap());

    let b = Bindings::new()
        .with("C", OpaqueDef::new(1, parse_expr("_1^2/2", &Opaques::new()).unwrap()))
        .with("G", OpaqueDef::new(6, Expr::zero()));
    let params = Point::new().with("gamma", Q::new(1.into(), 10.into()));
    let y0 = Point::new()
        .with("q1", Q::new(3.into(), 10.into()))
        .with("q2", Q::new((-1).into(), 5.into()))
        .with("p1t", Q::new(1.into(), 2.into()))
        .with("p1x", qi(0))
        .with("st", Q::new(1.into(), 10.into()))
        .with("sx", Q::new(1.into(), 5.into()));
    let cmp = flow_commutation(&sol.x.0[0], &z.0[0], &s.quotient, &y0, 1.0, 1e-3, &params, &b).unwrap();
    assert_eq!(cmp.steps, 1000);
    assert!(cmp.max_error <= 1e-6, "{}", cmp.max_error);
}

#[test]
fn non_invariant_gauge_is_rejected() {
    let s = setup();
    let d = Darboux::new(
        vec!["q1".into(), "q2".into()],
        vec![vec!["p1t".into(), "p1x".into()], vec!["p2t".into(), "p2x".into()]],
        vec!["st".into(), "sx".into()],
    )
    .with_determined(0);
    let mut g = gauge(&s.ops);
    g.insert("A2_p1x".into(), parse_expr("q1", &s.ops).unwrap());
    let sol = solve_hdw_contact(&s.kc, &s.h, &d, &g).unwrap();
    let pd = project_dynamics(&sol.x, &s.quotient, &s.kc, &s.h, &s.md);
    assert!(!pd.report.verdict);
    assert!(pd.x.is_none());
}
