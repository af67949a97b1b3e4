mod common;

use foliage::expr::{parse_expression, Expr};
use foliage::foliation::FoliatedPoint;
use foliage::formulas::{evaluate, FormulaId, FormulaInputs, FrameConvention, Structure, AS_PRINTED};
use foliage::harness::{constant_warp_mixed, oracle_limit_value, random_orthogonal, run_comparisons, Outcome, SamplePlan};
use foliage::jet::{jet_eval, Jet};
use foliage::scenario::{builtin_names, Scenario};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario(k: usize) -> Scenario {
    let names = builtin_names();
    Scenario::builtin(names[k % names.len()]).unwrap()
}

fn point_in(sc: &Scenario, rng: &mut impl Rng) -> Vec<f64> {
    sc.domain()
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let m = if sc.periodic(i) { 0.0 } else { 0.1 };
            rng.gen_range(lo + m..hi - m)
        })
        .collect()
}

/// Foliated point with a randomly rotated adapted frame, plus the warp jet.
fn rotated_point(sc: &Scenario, pt: &[f64], rng: &mut impl Rng) -> (FoliatedPoint, Jet) {
    let mut fp = sc.foliation().at(pt).unwrap();
    let frame = fp
        .frame()
        .rotated(&random_orthogonal(rng, fp.p()), &random_orthogonal(rng, fp.q()));
    fp.set_frame(frame);
    let jet = jet_eval(sc.warp().expr(), sc.coords(), pt, 3).unwrap();
    (fp, jet)
}

fn unit(rng: &mut impl Rng, basis: &[DVector<f64>]) -> DVector<f64> {
    let c: Vec<f64> = basis.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-6);
    basis.iter().zip(&c).fold(DVector::zeros(basis[0].len()), |acc, (b, ci)| acc + b * (ci / n))
}

fn same_eval(a: Result<f64, String>, b: Result<f64, String>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y || (x.is_nan() && y.is_nan()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expressions_parse_back(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = common::random_expr(&mut rng, 6, &["x", "y", "z"]);
        let back = parse_expression(&e.to_string()).unwrap();
        prop_assert_eq!(&back, &e);
        let coords: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let pt = [0.3, -1.1, 2.0];
        prop_assert!(same_eval(e.eval_at(&coords, &pt), back.eval_at(&coords, &pt)));
    }

    #[test]
    fn jet_value_matches_evaluation(seed in any::<u64>(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = common::smooth_expr(&mut rng, 5, &["x", "y"]);
        let coords = vec!["x".to_string(), "y".to_string()];
        let v = e.eval_at(&coords, &[x, y]).unwrap();
        let j = jet_eval(&e, &coords, &[x, y], 3).unwrap();
        prop_assert!((j.value() - v).abs() <= 1e-15 * v.abs().max(1.0));
    }

    #[test]
    fn jet_derivatives_match_richardson(seed in any::<u64>(), x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = common::smooth_expr(&mut rng, 4, &["x", "y", "z"]);
        let coords: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let pt = [x, y, z];
        let j = jet_eval(&e, &coords, &pt, 3).unwrap();
        let f = |p: &[f64]| e.eval_at(&coords, p).unwrap();
        for i in 0..3 {
            let fd = common::richardson(&f, &pt, i, 1e-2);
            prop_assert!(common::rel(j.d(&[i]).unwrap(), fd) < 1e-6, "d{} {} vs {}", i, j.d(&[i]).unwrap(), fd);
            // higher orders: difference the jet's own lower derivatives
            let di = |p: &[f64]| jet_eval(&e, &coords, p, 1).unwrap().d(&[i]).unwrap();
            for k in 0..3 {
                let fd2 = common::richardson(&di, &pt, k, 1e-2);
                prop_assert!(common::rel(j.d(&[i, k]).unwrap(), fd2) < 1e-6);
            }
            let dii = |p: &[f64]| jet_eval(&e, &coords, p, 2).unwrap().d(&[i, i]).unwrap();
            let fd3 = common::richardson(&dii, &pt, i, 1e-2);
            prop_assert!(common::rel(j.d(&[i, i, i]).unwrap(), fd3) < 1e-6);
        }
    }
}

/// Polynomials of degree at most the jet order are differentiated exactly.
#[test]
fn jets_exact_on_polynomials() {
    let coords = vec!["x".to_string(), "y".to_string()];
    let e = parse_expression("3*x^3 - 2*x*y^2 + 5*y - 7").unwrap();
    let j = jet_eval(&e, &coords, &[1.5, -2.0], 3).unwrap();
    assert_eq!(j.d(&[0]).unwrap(), 9.0 * 2.25 - 2.0 * 4.0);
    assert_eq!(j.d(&[1]).unwrap(), -4.0 * 1.5 * -2.0 + 5.0);
    assert_eq!(j.d(&[0, 0]).unwrap(), 18.0 * 1.5);
    assert_eq!(j.d(&[0, 1]).unwrap(), 8.0);
    assert_eq!(j.d(&[0, 0, 0]).unwrap(), 18.0);
    assert_eq!(j.d(&[0, 1, 1]).unwrap(), -4.0);
    assert_eq!(j.d(&[1, 1, 1]).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oracle_tensor_identities(k in 0usize..7, seed in any::<u64>()) {
        let sc = scenario(k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pt = point_in(&sc, &mut rng);
        let oracle = sc.warped().oracle_at(&pt).unwrap();
        let local = oracle.local();
        prop_assert!(local.compatibility_residual() < 1e-8);
        prop_assert!(local.torsion_residual() < 1e-8);
        prop_assert!(local.curvature().symmetry_residual() < 1e-8);
        prop_assert!(local.curvature().bianchi_residual() < 1e-8);
    }

    #[test]
    fn sectional_is_a_plane_invariant(k in 0usize..7, seed in any::<u64>()) {
        let sc = scenario(k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pt = point_in(&sc, &mut rng);
        let oracle = sc.warped().oracle_at(&pt).unwrap();
        let n = pt.len();
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = loop {
            let m = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-2.0..2.0f64));
            if m.determinant().abs() > 0.1 {
                break m;
            }
        };
        let a2: Vec<f64> = (0..n).map(|i| m[(0, 0)] * a[i] + m[(0, 1)] * b[i]).collect();
        let b2: Vec<f64> = (0..n).map(|i| m[(1, 0)] * a[i] + m[(1, 1)] * b[i]).collect();
        let k1 = oracle.sectional(&a, &b).unwrap();
        let k2 = oracle.sectional(&a2, &b2).unwrap();
        prop_assert!(common::rel(k2, k1) < 1e-9, "{} vs {}", k1, k2);
    }

    /// Scalar curvature is twice the sum of sectional curvatures over any
    /// g_f-orthonormal frame, and the Ricci trace over that frame.
    #[test]
    fn scalar_is_frame_trace(k in 0usize..7, seed in any::<u64>()) {
        let sc = scenario(k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pt = point_in(&sc, &mut rng);
        let (fp, jet) = rotated_point(&sc, &pt, &mut rng);
        let f = jet.value();
        let oracle = sc.warped().oracle_at(&pt).unwrap();
        let mut frame: Vec<DVector<f64>> = fp.frame().tangents().into_iter().map(|u| u / f).collect();
        frame.extend(fp.frame().orthogonals());
        let mut pairs = 0.0;
        let mut ric = 0.0;
        for i in 0..frame.len() {
            ric += oracle.ricci(frame[i].as_slice(), frame[i].as_slice());
            for j in i + 1..frame.len() {
                pairs += oracle.sectional(frame[i].as_slice(), frame[j].as_slice()).unwrap();
            }
        }
        prop_assert!(common::rel(2.0 * pairs, oracle.scalar()) < 1e-9);
        prop_assert!(common::rel(ric, oracle.scalar()) < 1e-9);
    }

    #[test]
    fn breakdown_terms_sum_to_value(k in 0usize..7, seed in 0u64..1000) {
        let sc = scenario(k);
        let records = run_comparisons(&sc, &SamplePlan::new(sc.name(), 2, seed), &FormulaId::ALL);
        for r in records {
            if let Outcome::Evaluated { structural, breakdown, .. } = &r.outcome {
                for (c, s) in structural.iter().enumerate() {
                    let sum: f64 = breakdown.terms.iter().map(|t| t.value[c]).sum();
                    let scale: f64 = breakdown.terms.iter().map(|t| t.value[c].abs()).sum::<f64>().max(1.0);
                    prop_assert!((sum - s).abs() <= 1e-12 * scale);
                }
                prop_assert!(breakdown.terms.iter().all(|t| !t.label.is_empty()));
            }
        }
    }

    /// The two pure directions of the mixed Ricci formula reproduce the
    /// tangent and orthogonal Ricci formulas.
    #[test]
    fn mixed_ricci_contains_pure_cases(k in 0usize..7, seed in any::<u64>()) {
        let sc = scenario(k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pt = point_in(&sc, &mut rng);
        let (fp, jet) = rotated_point(&sc, &pt, &mut rng);
        let st = Structure::new(&fp, &jet, FrameConvention::G).unwrap();
        let f = st.f();
        let u = unit(&mut rng, &fp.frame().tangents());
        let x = unit(&mut rng, &fp.frame().orthogonals());
        let ric_e = |a: f64, b: f64| {
            let inputs = FormulaInputs { vectors: vec![u.clone(), x.clone()], ab: Some((a, b)) };
            evaluate(FormulaId::RicE, AS_PRINTED, &inputs, &st).unwrap().total_scalar()
        };
        let pure = |id: FormulaId, v: &DVector<f64>| {
            evaluate(id, AS_PRINTED, &FormulaInputs::vectors(vec![v.clone(), v.clone()]), &st).unwrap().total_scalar()
        };
        let uu = pure(FormulaId::RicUV, &u) / (f * f);
        let xx = pure(FormulaId::RicXY, &x);
        prop_assert!((ric_e(1.0, 0.0) - uu).abs() <= 1e-12 * uu.abs().max(1.0), "{} vs {}", ric_e(1.0, 0.0), uu);
        prop_assert!((ric_e(0.0, 1.0) - xx).abs() <= 1e-12 * xx.abs().max(1.0));
    }
}

/// For constant warps c the unnormalized mixed curvature on a g-orthonormal
/// pair is affine in c²: value(c) = κ + (1 − c²)·value(0).
#[test]
fn constant_warp_mixed_curvature_is_affine_in_c_squared() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in ["sheared-torus", "sheared-torus:a=0.6", "flat-torus", "s2xr", "f1-surface"] {
        let sc = Scenario::builtin(name).unwrap();
        for _ in 0..5 {
            let pt = point_in(&sc, &mut rng);
            let fp = sc.foliation().at(&pt).unwrap();
            let (x, u) = (fp.frame().orthogonal(0), fp.frame().tangent(0));
            let kappa = fp.local().sectional(x.as_slice(), u.as_slice()).unwrap();
            let zero = oracle_limit_value(&sc, &pt, x.as_slice(), u.as_slice()).unwrap();
            for c in [0.9, 0.5, 0.3, 0.1] {
                let got = constant_warp_mixed(&sc, &pt, c, x.as_slice(), u.as_slice()).unwrap();
                assert!((got - kappa - (1.0 - c * c) * zero).abs() < 1e-9, "{name} c={c}");
            }
        }
    }
}

/// The sign-corrected limit value agrees with the oracle limit, the printed
/// one with its negative.
#[test]
fn limit_value_against_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for name in ["sheared-torus", "sheared-torus:a=0.6"] {
        let sc = Scenario::builtin(name).unwrap();
        for _ in 0..6 {
            let pt = point_in(&sc, &mut rng);
            let fp = sc.foliation().at(&pt).unwrap();
            let (x, u) = (fp.frame().orthogonal(0), fp.frame().tangent(0));
            let st = Structure::new(&fp, &Jet::constant(2, 3, 1.0), FrameConvention::G).unwrap();
            let inputs = FormulaInputs::vectors(vec![x.clone(), u.clone()]);
            let printed = evaluate(FormulaId::LimitK, AS_PRINTED, &inputs, &st).unwrap().total_scalar();
            let fixed = evaluate(FormulaId::LimitK, "limit-sign", &inputs, &st).unwrap().total_scalar();
            let oracle = oracle_limit_value(&sc, &pt, x.as_slice(), u.as_slice()).unwrap();
            assert!((fixed - oracle).abs() < 1e-7, "{name}: {fixed} vs {oracle}");
            assert!((printed + oracle).abs() < 1e-7);
        }
    }
}

/// Riemannian codimension-one foliations have vanishing limit value.
#[test]
fn riemannian_limit_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for name in ["flat-torus", "f1-surface", "s2xr"] {
        let sc = Scenario::builtin(name).unwrap();
        for _ in 0..20 {
            let pt = point_in(&sc, &mut rng);
            let (fp, _) = rotated_point(&sc, &pt, &mut rng);
            let st = Structure::new(&fp, &Jet::constant(pt.len(), 3, 1.0), FrameConvention::G).unwrap();
            let x = fp.frame().orthogonal(0);
            let u = unit(&mut rng, &fp.frame().tangents());
            let l = evaluate(FormulaId::LimitK, AS_PRINTED, &FormulaInputs::vectors(vec![x, u]), &st)
                .unwrap()
                .total_scalar();
            assert!(l.abs() < 1e-9, "{name}: {l}");
        }
    }
}

/// With f ≡ 1 the full-coefficient variant of the all-orthogonal component
/// matches the oracle on the Hopf family, where the printed one does not.
#[test]
fn identity_warp_all_orthogonal_component() {
    for name in ["round-S3-hopf", "berger", "hopf-cylinder"] {
        let sc = Scenario::builtin(name).unwrap().with_constant_warp(1.0).unwrap();
        let records = run_comparisons(&sc, &SamplePlan::new(name, 10, 4), &[FormulaId::RXYZW]);
        let worst = |variant: &str| {
            records
                .iter()
                .filter(|r| r.variant == variant)
                .filter_map(|r| r.rel_residual())
                .fold(0.0f64, f64::max)
        };
        assert!(worst("rxyzw-coef") < 1e-9, "{name}");
        assert!(worst(AS_PRINTED) > 1e-3, "{name}");
    }
}

#[test]
fn comparisons_do_not_depend_on_thread_count() {
    let sc = Scenario::builtin("hopf-cylinder").unwrap();
    let plan = SamplePlan::new(sc.name(), 6, 9);
    let a = run_comparisons(&sc, &plan, &FormulaId::ALL);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| run_comparisons(&sc, &plan, &FormulaId::ALL));
    assert_eq!(a, b);
    assert_eq!(plan.sample_points(&sc), plan.sample_points(&sc));
}

#[test]
fn negative_constants_print_through_negation() {
    let e = Expr::Neg(Box::new(Expr::Const(2.5)));
    assert_eq!(parse_expression(&e.to_string()).unwrap(), e);
}
