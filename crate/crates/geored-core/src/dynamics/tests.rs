use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::*;
use crate::exterior::VForm;
use crate::structures::{canonical_kcontact, canonical_ksymplectic, symplectize};
use crate::symbolic::{parse_expr, Opaques, OpaqueDef};

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn wave() -> (KContact, Expr, Darboux) {
    let chart = Arc::new(Chart::new("wave", &["u", "pt", "px", "st", "sx"], &["rho", "tau", "k"]).unwrap());
    let eta = |z: &str, p: &str| {
        Form::d_coord(&chart, z).unwrap().sub(&Form::d_coord(&chart, "u").unwrap().scale(&Expr::sym(p))).unwrap()
    };
    let kc = KContact::new(VForm(alloc::vec![eta("st", "pt"), eta("sx", "px")])).unwrap();
    let h = parse_expr("pt^2/(2 rho) - px^2/(2 tau) + k st", &Opaques::new()).unwrap();
    let d = Darboux::new(s(&["u"]), alloc::vec![s(&["pt", "px"])], s(&["st", "sx"]));
    (kc, h, d)
}

fn ex(src: &str) -> Expr {
    parse_expr(src, &Opaques::new()).unwrap()
}

fn reeb(kc: &KContact) -> Vec<VectorField> {
    solve_reeb(kc, &[]).fields.unwrap()
}

#[test]
fn damped_wave_field_matches_display() {
    let (kc, h, d) = wave();
    let sol = solve_hdw_contact(&kc, &h, &d, &GaugeAssignment::new()).unwrap();
    assert_eq!(sol.slots, s(&["A1_pt", "A1_px", "B1_st", "B1_sx", "A2_pt", "B2_st"]));
    let slot = |n: &str| Expr::apply(n, kc.chart.coords.iter().map(|c| Expr::sym(c)).collect());
    let x1 = &sol.x.0[0].comps;
    let x2 = &sol.x.0[1].comps;
    assert_eq!(x1[0], ex("pt/rho"));
    assert_eq!(x1[1], slot("A1_pt"));
    assert_eq!(x1[2], slot("A1_px"));
    assert_eq!(x1[3], slot("B1_st"));
    assert_eq!(x1[4], slot("B1_sx"));
    assert_eq!(x2[0], ex("-px/tau"));
    assert_eq!(x2[1], slot("A2_pt"));
    assert_eq!(x2[2], -(ex("k pt") + slot("A1_pt")));
    assert_eq!(x2[3], slot("B2_st"));
    assert_eq!(x2[4], ex("pt^2/(2 rho) - px^2/(2 tau) - k st") - slot("B1_st"));
    let rep = verify_hdw(&kc, &h, &sol.x, &reeb(&kc));
    assert!(rep.verdict, "{:?}", rep.witness);
    assert!(rep.notes.iter().any(|n| n.contains("agree")));
}

fn wave_gauge() -> GaugeAssignment {
    let mut g = GaugeAssignment::new();
    for slot in ["A2_pt", "B1_st", "A1_px"] {
        g.insert(slot.into(), Expr::zero());
    }
    g.insert("A1_pt".into(), ex("-k pt"));
    g
}

#[test]
fn damped_wave_gauge_integrable_on_field_components() {
    let (kc, h, d) = wave();
    let sol = solve_hdw_contact(&kc, &h, &d, &wave_gauge()).unwrap();
    assert_eq!(sol.free, s(&["B1_sx", "B2_st"]));
    let part = integrability_check(&sol.x, Some(&s(&["u", "pt", "px"])));
    assert!(part.verdict, "{:?}", part.witness);
    let full = integrability_check(&sol.x, None);
    assert!(!full.verdict);
}

#[test]
fn gauge_errors() {
    let (kc, h, d) = wave();
    let mut g = GaugeAssignment::new();
    g.insert("A2_px".into(), Expr::zero());
    let e = solve_hdw_contact(&kc, &h, &d, &g).unwrap_err().to_string();
    assert!(e.contains("inconsistent gauge assignment"), "{e}");
    let mut g = GaugeAssignment::new();
    g.insert("A7_pt".into(), Expr::zero());
    assert!(solve_hdw_contact(&kc, &h, &d, &g).unwrap_err().to_string().contains("unknown gauge slot"));
}

#[test]
fn zero_hamiltonian_gives_gauge_only() {
    let (kc, _, d) = wave();
    let zero = solve_hdw_contact(&kc, &Expr::zero(), &d, &GaugeAssignment::new()).unwrap();
    let mut g = GaugeAssignment::new();
    for slot in d.slots() {
        g.insert(slot, Expr::zero());
    }
    let trivial = solve_hdw_contact(&kc, &Expr::zero(), &d, &g).unwrap();
    assert!(trivial.x.0.iter().all(VectorField::is_zero));
    assert!(check_gauge_difference(&kc, &zero.x, &trivial.x).verdict);
}

#[test]
fn scaled_component_fails() {
    let (kc, h, d) = wave();
    let mut x = solve_hdw_contact(&kc, &h, &d, &wave_gauge()).unwrap().x;
    x.0[0].comps[0] = &x.0[0].comps[0] * &Expr::int(2);
    let rep = verify_hdw(&kc, &h, &x, &reeb(&kc));
    assert!(!rep.verdict);
    assert!(rep.notes.iter().any(|n| n.contains("agree (fail)")));
}

#[test]
fn pointwise_gauge_dimension() {
    let kc = canonical_kcontact(1, 2);
    let h = ex("p1_1^2/2 + q1 z2");
    let pt = Point::new().with("q1", Q::from_integer(2.into())).with("p1_1", Q::from_integer(3.into()));
    let pt = pt.with("p1_2", Q::from_integer(5.into())).with("z1", Q::from_integer(1.into())).with("z2", Q::from_integer(7.into()));
    let rep = hdw_pointwise(&kc, &h, &[pt], &Bindings::new());
    assert!(rep.verdict);
    // 10 unknowns, constraints: 1 (dq) + 2 (dp) + 1 (eta) = 4
    assert_eq!(rep.ranks("gauge_dim"), alloc::vec![6]);
    let d = Darboux::canonical(1, 2, true);
    assert_eq!(d.slots().len(), 6);
}

#[test]
fn integrability_failure() {
    let chart = Arc::new(Chart::new("plane", &["x", "y"], &[]).unwrap());
    let x = KVectorField::new(alloc::vec![
        VectorField::new(&chart, alloc::vec![Expr::one(), Expr::zero()]).unwrap(),
        VectorField::new(&chart, alloc::vec![Expr::zero(), Expr::sym("x")]).unwrap(),
    ])
    .unwrap();
    let rep = integrability_check(&x, None);
    assert!(!rep.verdict);
    assert_eq!(rep.witness.as_deref(), Some("[X1, X2]^y = 0: residual 1"));
}

#[test]
fn ksymplectic_orientation() {
    let ks = canonical_ksymplectic(1, 2);
    let d = Darboux::canonical(1, 2, false);
    assert_eq!(d.check_symplectic(&ks).unwrap(), -1);
    let h = ex("(p1_1^2 + p1_2^2)/2 + q1^2/2");
    let x = solve_hdw_ksymplectic(&ks, &h, &d, &GaugeAssignment::new()).unwrap().x;
    assert_eq!(x.0[0].comps[0], ex("-p1_1"));
    assert_eq!(x.0[1].comps[0], ex("-p1_2"));
    assert!(verify_hdw_ksymplectic(&ks, &h, &x).verdict);

    let theta = VForm(ks.theta.clone().unwrap().0.iter().map(Form::neg).collect());
    let flipped = KSymplectic::exact(theta).unwrap();
    assert_eq!(d.check_symplectic(&flipped).unwrap(), 1);
    let x = solve_hdw_ksymplectic(&flipped, &h, &d, &GaugeAssignment::new()).unwrap().x;
    assert_eq!(x.0[0].comps[0], ex("p1_1"));
    assert!(verify_hdw_ksymplectic(&flipped, &h, &x).verdict);
    assert!(!verify_hdw_ksymplectic(&ks, &h, &x).verdict);
}

#[test]
fn lift_to_symplectisation() {
    let (kc, h, d) = wave();
    let x = solve_hdw_contact(&kc, &h, &d, &wave_gauge()).unwrap().x;
    let r = reeb(&kc);
    let sy = symplectize(&kc, Some(&r));
    let lifted = symplectic_lift(&x, &r, &h, &sy).unwrap();
    let rep = verify_symplectic_lift(&sy, &h, &lifted);
    assert!(rep.verdict, "{:?}", rep.witness);
    let bare = KVectorField::new(x.0.iter().map(|f| lift_field(f, &sy.ks.chart)).collect()).unwrap();
    assert!(!verify_symplectic_lift(&sy, &h, &bare).verdict);
}

#[test]
fn second_order_form() {
    let (kc, h, d) = wave();
    let pde = derive_second_order(&kc, &h, &d).unwrap();
    assert_eq!(pde, ex("u_tt - tau/rho u_xx + k u_t"));
}

fn wave_params(k: (i64, i64)) -> Point {
    Point::new()
        .with("rho", Q::from_integer(1.into()))
        .with("tau", Q::from_integer(1.into()))
        .with("k", Q::new(k.0.into(), k.1.into()))
}

#[test]
fn zero_initial_data_stays_zero() {
    let (kc, h, d) = wave();
    let sys = K2System::new(&kc, &h, &d, &wave_params((1, 10)), &Bindings::new()).unwrap();
    let p = K2Params::new(16, 8, 0.5);
    let g = integrate_k2(&sys, &p, &[alloc::vec![0.0; 16], alloc::vec![0.0; 16]]).unwrap();
    assert!(g.state.iter().flatten().all(|v| *v == 0.0));
    assert_eq!(g.rows(&sys).len(), 9 * 16);
}

#[test]
fn cfl_and_missing_parameter() {
    let (kc, h, d) = wave();
    let sys = K2System::new(&kc, &h, &d, &wave_params((1, 10)), &Bindings::new()).unwrap();
    let p = K2Params::new(64, 2, 1.0);
    match integrate_k2(&sys, &p, &[alloc::vec![0.0; 64], alloc::vec![0.0; 64]]) {
        Err(Error::Cfl { dt, max_dt }) => {
            assert_eq!(dt, 0.5);
            assert!((max_dt - p.dx()).abs() < 1e-15);
        }
        other => panic!("{other:?}"),
    }
    let missing = Point::new().with("rho", Q::from_integer(1.into()));
    assert!(K2System::new(&kc, &h, &d, &missing, &Bindings::new()).is_err());
}

fn sine_run(nodes: usize, steps: usize) -> (K2System, SectionGrid) {
    let (kc, h, d) = wave();
    let sys = K2System::new(&kc, &h, &d, &wave_params((1, 10)), &Bindings::new()).unwrap();
    let p = K2Params::new(nodes, steps, 1.0);
    let xs: Vec<f64> = (0..nodes).map(|j| j as f64 * p.dx()).collect();
    let u0 = xs.iter().map(|x| libm::sin(*x)).collect();
    let g = integrate_k2(&sys, &p, &[u0, alloc::vec![0.0; nodes]]).unwrap();
    (sys, g)
}

#[test]
fn decaying_mode_and_energy() {
    let (sys, g) = sine_run(64, 128);
    let (k, t) = (0.1f64, 1.0f64);
    let w = libm::sqrt(1.0 - k * k / 4.0);
    let amp = libm::exp(-k * t / 2.0) * (libm::cos(w * t) + k / (2.0 * w) * libm::sin(w * t));
    let last = g.state.len() - 1;
    let err = g.column(last, 0).iter().zip(&g.x).map(|(u, x)| (u - amp * libm::sin(*x)).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
    let e0 = sys.energy(&g, 0);
    for l in 0..last {
        assert!(sys.energy(&g, l + 1) <= sys.energy(&g, l) + 1e-6 * e0);
    }
    assert!(sys.energy(&g, last) < e0);
}

#[test]
fn residual_is_second_order() {
    let r: Vec<f64> = [(16, 32), (32, 64), (64, 128)].iter().map(|&(n, m)| {
        let (sys, g) = sine_run(n, m);
        sys.residual(&g)
    }).collect();
    for w in r.windows(2) {
        let order = libm::log2(w[0] / w[1]);
        assert!(order > 1.9, "{r:?}");
    }
}

#[test]
fn opaque_free_source_is_required() {
    let (kc, _, d) = wave();
    let h = ex("pt^2/2 - px^2/2 + st^2");
    let e = K2System::new(&kc, &h, &d, &wave_params((0, 1)), &Bindings::new()).unwrap_err();
    assert!(e.to_string().contains("source term depends on `st`"), "{e}");
    let b = Bindings::new().with("V", OpaqueDef::new(1, ex("_1^2/2")));
    let mut op = Opaques::new();
    op.insert("V".into(), 1);
    let h = parse_expr("pt^2/2 - px^2/2 + V(u)", &op).unwrap();
    assert!(K2System::new(&kc, &h, &d, &wave_params((0, 1)), &b).is_ok());
}
