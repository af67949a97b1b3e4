//! Frozen reference values. Each expected number comes from a closed form or
//! an independent computation noted next to it.

use std::f64::consts::{FRAC_PI_2, TAU};

use foliage::formulas::{evaluate, FormulaId, FormulaInputs, FrameConvention, Structure, AS_PRINTED};
use foliage::harness::{limit_study, SamplePlan};
use foliage::jet::jet_eval;
use foliage::scenario::Scenario;
use nalgebra::DVector;

fn builtin(q: &str) -> Scenario {
    Scenario::builtin(q).unwrap()
}

fn approx(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() < tol, "{a} vs {b}");
}

#[test]
fn berger_sectional_and_scalar() {
    // classical: ε² on vertical planes, 4 − 3ε² on horizontal, s = 8 − 2ε²
    for eps in [0.25, 0.5, 0.8, 1.0] {
        let sc = builtin(&format!("berger:eps={eps}"));
        for pt in SamplePlan::new(sc.name(), 4, 3).sample_points(&sc) {
            let fp = sc.foliation().at(&pt).unwrap();
            let o = sc.warped().oracle_at(&pt).unwrap();
            let (u, x0, x1) = (fp.frame().tangent(0), fp.frame().orthogonal(0), fp.frame().orthogonal(1));
            approx(o.sectional(u.as_slice(), x1.as_slice()).unwrap(), eps * eps, 1e-10);
            approx(o.sectional(x0.as_slice(), x1.as_slice()).unwrap(), 4.0 - 3.0 * eps * eps, 1e-10);
            approx(o.scalar(), 8.0 - 2.0 * eps * eps, 1e-9);
        }
    }
    let o = builtin("berger").warped().oracle_at(&[0.0, 0.7, 0.0]).unwrap();
    let fp = builtin("berger").foliation().at(&[0.0, 0.7, 0.0]).unwrap();
    approx(o.sectional(fp.frame().tangent(0).as_slice(), fp.frame().orthogonal(0).as_slice()).unwrap(), 0.25, 1e-10);
}

#[test]
fn unit_three_sphere_is_einstein() {
    // Ric = 2g and s = 6 for the round unit 3-sphere
    let sc = builtin("round-S3-hopf").with_constant_warp(1.0).unwrap();
    for pt in SamplePlan::new(sc.name(), 5, 8).sample_points(&sc) {
        let o = sc.warped().oracle_at(&pt).unwrap();
        let g = o.local().g();
        let ric = o.local().ricci();
        assert!((ric - g * 2.0).amax() < 1e-9);
        approx(o.scalar(), 6.0, 1e-9);
    }
}

#[test]
fn hopf_integrability_has_unit_norm() {
    let sc = builtin("round-S3-hopf");
    for pt in SamplePlan::new(sc.name(), 5, 2).sample_points(&sc) {
        let fp = sc.foliation().at(&pt).unwrap();
        let (x0, x1) = (fp.frame().orthogonal(0), fp.frame().orthogonal(1));
        let a = fp.a(x0.as_slice(), x1.as_slice());
        approx(fp.inner(a.as_slice(), a.as_slice()).sqrt(), 1.0, 1e-10);
        assert!(fp.s_norm() < 1e-12);
    }
}

#[test]
fn surface_warp_values() {
    // g_f = (2 + sin y)² dx² + dy²: K = −f''/f = sin y/(2 + sin y)
    let sc = builtin("f1-surface");
    for k in 0..16 {
        let y = TAU * k as f64 / 16.0;
        let pt = [1.0, y];
        let fp = sc.foliation().at(&pt).unwrap();
        let jet = jet_eval(sc.warp().expr(), sc.coords(), &pt, 3).unwrap();
        let st = Structure::new(&fp, &jet, FrameConvention::G).unwrap();
        let (x, u) = (DVector::from_vec(vec![0.0, 1.0]), DVector::from_vec(vec![1.0, 0.0]));
        let k_xu = evaluate(FormulaId::KXU, AS_PRINTED, &FormulaInputs::vectors(vec![x.clone(), u.clone()]), &st)
            .unwrap()
            .total_scalar();
        approx(k_xu, y.sin() / (2.0 + y.sin()), 1e-12);
        // R_XUYV on unit X, U is f f'' = −(2 + sin y) sin y
        let r = evaluate(FormulaId::RXUYV, AS_PRINTED, &FormulaInputs::vectors(vec![x.clone(), u.clone(), x, u]), &st)
            .unwrap()
            .total_scalar();
        approx(r, -(2.0 + y.sin()) * y.sin(), 1e-12);
        approx(st.warp_derivatives().h(&[0.0, 1.0], &[0.0, 1.0]), -y.sin(), 1e-12);
    }
    let o = sc.warped().oracle_at(&[0.0, FRAC_PI_2]).unwrap();
    approx(o.sectional(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0 / 3.0, 1e-12);
    approx(o.scalar(), 2.0 / 3.0, 1e-12);
}

#[test]
fn sheared_torus_frame_and_tensors() {
    let sc = builtin("sheared-torus");
    let fp = sc.foliation().at(&[0.0, 0.0]).unwrap();
    // chart metric at x = 0: g_xx = 1.09, g_xy = 0.3, g_yy = 1
    let u = fp.frame().tangent(0);
    approx(u[0], 1.0 / 1.09f64.sqrt(), 1e-12);
    approx(u[1], 0.0, 1e-15);
    let x = fp.frame().orthogonal(0);
    approx(fp.inner(x.as_slice(), u.as_slice()), 0.0, 1e-12);
    approx(x[0] / x[1], -0.3 / 1.09, 1e-12);
    // flat, yet not Riemannian
    assert!(fp.local().curvature().max_abs() < 1e-10);
    let s_max = SamplePlan::new(sc.name(), 20, 1)
        .sample_points(&sc)
        .iter()
        .map(|p| sc.foliation().at(p).unwrap().s_norm())
        .fold(0.0, f64::max);
    assert!(s_max > 0.01);
    assert!(fp.tensors().a.max_abs() < 1e-14);
}

#[test]
fn leaf_curvatures() {
    // hopf-cylinder leaves are flat 2-tori, s2xr leaves are unit spheres
    let sc = builtin("hopf-cylinder");
    let fp = sc.foliation().at(&[0.3, 1.0, 0.6, 2.0]).unwrap();
    let (u, v) = (fp.frame().tangent(0), fp.frame().tangent(1));
    approx(fp.leaf_curvature(u.as_slice(), v.as_slice()).unwrap(), 0.0, 1e-10);
    let sc = builtin("s2xr");
    let fp = sc.foliation().at(&[1.1, 0.4, 2.0]).unwrap();
    let (u, v) = (fp.frame().tangent(0), fp.frame().tangent(1));
    approx(fp.leaf_curvature(u.as_slice(), v.as_slice()).unwrap(), 1.0, 1e-10);
}

#[test]
fn sheared_torus_limit_study() {
    // oracle limit from constant warps; magnitude matches the symbolic bracket
    let s = limit_study(&builtin("sheared-torus"), &[0.0, 0.0], 8).unwrap();
    approx(s.kappa, 0.0, 1e-12);
    approx(s.oracle_limit, -0.0757511993939904, 1e-9);
    approx(s.limit, 0.0757511993939904, 1e-12);
    approx(s.rows[0].oracle, 0.0, 1e-12);
    for r in &s.rows {
        let n2 = (r.n * r.n) as f64;
        approx(r.oracle, -(1.0 - 1.0 / n2) * 0.0757511993939904, 1e-10);
    }
}
