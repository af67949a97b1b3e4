//! Acceptance criteria, one line each. Exits non-zero if any criterion fails.

mod common;

use std::f64::consts::{FRAC_PI_2, TAU};
use std::time::Instant;

use foliage::expr::parse_expression;
use foliage::foliation::riemannian_test;
use foliage::formulas::{evaluate, FormulaId, FormulaInputs, FrameConvention, Structure, AS_PRINTED};
use foliage::harness::{
    emit_report, limit_study, run_comparisons, write_records_csv, ComparisonRecord, SamplePlan, Verdict,
};
use foliage::jet::{jet_eval, Jet};
use foliage::scenario::{builtin_names, Scenario};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::ThreadPoolBuilder;

struct Check {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Check);

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check { pass, detail: detail.into() }
}

fn scenarios() -> Vec<Scenario> {
    builtin_names().iter().map(|n| Scenario::builtin(n).unwrap()).collect()
}

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_vec(xs.to_vec())
}

fn oracle_self_consistency() -> Check {
    let start = Instant::now();
    let mut worst = (0.0f64, String::new());
    let mut count = 0;
    for sc in scenarios() {
        for pt in SamplePlan::new(sc.name(), 50, 1).sample_points(&sc) {
            let oracle = sc.warped().oracle_at(&pt).unwrap();
            let local = oracle.local();
            let r = local.curvature();
            for (label, x) in [
                ("compatibility", local.compatibility_residual()),
                ("torsion", local.torsion_residual()),
                ("symmetry", r.symmetry_residual()),
                ("bianchi", r.bianchi_residual()),
            ] {
                if x > worst.0 {
                    worst = (x, format!("{label} on {}", sc.name()));
                }
            }
            count += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst.0 < 1e-8 && secs < 60.0,
        format!("{count} points, worst residual {:.2e} ({}), {secs:.1} s", worst.0, worst.1),
    )
}

fn identity_warp() -> Check {
    let ids: Vec<FormulaId> = FormulaId::ALL.iter().copied().filter(|&id| id != FormulaId::LimitK).collect();
    let mut bad: Vec<String> = Vec::new();
    let mut worst_unwarped = 0.0f64;
    let mut evaluated = 0;
    for base in scenarios() {
        let sc = base.with_constant_warp(1.0).unwrap();
        for pt in SamplePlan::new(sc.name(), 10, 1).sample_points(&sc) {
            let warped = sc.warped().oracle_at(&pt).unwrap();
            let plain = sc.foliation().at(&pt).unwrap();
            let (a, b) = (warped.local().curvature(), plain.local().curvature());
            let n = a.dim();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            worst_unwarped = worst_unwarped.max((a.get(i, j, k, l) - b.get(i, j, k, l)).abs());
                        }
                    }
                }
            }
        }
        let plan = SamplePlan::new(sc.name(), 10, 1).with_frame(FrameConvention::Gf);
        let mut per: std::collections::BTreeMap<&str, f64> = Default::default();
        for r in run_comparisons(&sc, &plan, &ids).iter().filter(|r| r.variant == AS_PRINTED) {
            if let Some(x) = r.rel_residual() {
                evaluated += 1;
                let e = per.entry(r.formula.name()).or_default();
                *e = e.max(x);
            }
        }
        for (f, x) in per {
            if x >= 1e-9 {
                bad.push(format!("{}/{f} {x:.2e}", sc.name()));
            }
        }
    }
    let mut detail = format!("{evaluated} evaluations, g_1 vs g curvature {worst_unwarped:.1e}");
    if !bad.is_empty() {
        detail.push_str(&format!("; over 1e-9: {}", bad.join(", ")));
    }
    check(bad.is_empty() && worst_unwarped < 1e-9, detail)
}

fn connection_formulas() -> Check {
    let ids = [FormulaId::ConnXY, FormulaId::ConnUV, FormulaId::ConnXU, FormulaId::ConnUX];
    let mut pass = true;
    let mut worst = 0.0f64;
    for name in ["flat-torus", "sheared-torus", "f1-surface", "berger"] {
        let sc = Scenario::builtin(name).unwrap();
        let report = emit_report(&run_comparisons(&sc, &SamplePlan::new(name, 50, 1), &ids)).unwrap();
        for id in ids {
            let e = report.entry(name, id, AS_PRINTED).unwrap();
            worst = worst.max(e.max_residual);
            pass &= e.verdict == Verdict::Agrees;
        }
    }
    // f = 2 + sin y on the plane: ∇_U U = −f f' ∂y and ∇_X U = (f'/f) ∂x
    let sc = Scenario::builtin("f1-surface").unwrap();
    let mut hand = 0.0f64;
    for k in 0..12 {
        let y = TAU * k as f64 / 12.0;
        let pt = [0.7, y];
        let (f, df) = (2.0 + y.sin(), y.cos());
        let fp = sc.foliation().at(&pt).unwrap();
        let jet = jet_eval(sc.warp().expr(), sc.coords(), &pt, 3).unwrap();
        let st = Structure::new(&fp, &jet, FrameConvention::G).unwrap();
        let oracle = sc.warped().oracle_at(&pt).unwrap();
        let dx = vec![Jet::constant(2, 3, 1.0), Jet::zero(2, 3)];
        let (ex, ey) = (v(&[1.0, 0.0]), v(&[0.0, 1.0]));
        let uu = oracle.connection(&[1.0, 0.0], &dx);
        let xu = oracle.connection(&[0.0, 1.0], &dx);
        let fuu = evaluate(FormulaId::ConnUV, AS_PRINTED, &FormulaInputs::vectors(vec![ex.clone(), ex.clone()]), &st)
            .unwrap()
            .total();
        let fxu = evaluate(FormulaId::ConnXU, AS_PRINTED, &FormulaInputs::vectors(vec![ey, ex]), &st)
            .unwrap()
            .total();
        for (got, want) in [(&uu.as_slice().to_vec(), [0.0, -f * df]), (&fuu, [0.0, -f * df]), (&xu.as_slice().to_vec(), [df / f, 0.0]), (&fxu, [df / f, 0.0])] {
            hand = hand.max((got[0] - want[0]).abs()).max((got[1] - want[1]).abs());
        }
    }
    pass &= hand < 1e-9;
    check(pass, format!("max relative residual {worst:.2e}; surface hand values {hand:.1e}"))
}

fn closed_form_surface() -> Check {
    let sc = Scenario::builtin("f1-surface").unwrap();
    let (mut oracle_err, mut formula_err, mut trace_err) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..10 {
        for j in 0..10 {
            let pt = [TAU * i as f64 / 10.0, TAU * j as f64 / 10.0];
            let want = pt[1].sin() / (2.0 + pt[1].sin());
            let oracle = sc.warped().oracle_at(&pt).unwrap();
            let k = oracle.sectional(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
            let fp = sc.foliation().at(&pt).unwrap();
            let jet = jet_eval(sc.warp().expr(), sc.coords(), &pt, 3).unwrap();
            let st = Structure::new(&fp, &jet, FrameConvention::G).unwrap();
            let inputs = FormulaInputs::vectors(vec![v(&[0.0, 1.0]), v(&[1.0, 0.0])]);
            let kf = evaluate(FormulaId::KXU, AS_PRINTED, &inputs, &st).unwrap().total_scalar();
            oracle_err = oracle_err.max((k - want).abs());
            formula_err = formula_err.max((kf - want).abs());
            trace_err = trace_err.max((oracle.scalar() - 2.0 * k).abs());
        }
    }
    let top = sc.warped().oracle_at(&[0.0, FRAC_PI_2]).unwrap().sectional(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
    let at_top = (top - 1.0 / 3.0).abs();
    check(
        oracle_err < 1e-7 && formula_err < 1e-7 && trace_err < 1e-7 && at_top < 1e-7,
        format!(
            "100 points: oracle {oracle_err:.1e}, formula {formula_err:.1e}, s = 2K {trace_err:.1e}, value at pi/2 {top:.12}"
        ),
    )
}

fn berger_values() -> Check {
    let mut worst = 0.0f64;
    let mut round = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for eps in [0.25, 0.5, 1.0] {
        let sc = Scenario::builtin(&format!("berger:eps={eps}")).unwrap();
        for pt in SamplePlan::new(sc.name(), 10, 2).sample_points(&sc) {
            let fp = sc.foliation().at(&pt).unwrap();
            let oracle = sc.warped().oracle_at(&pt).unwrap();
            let fr = fp.frame();
            let (u, x0, x1) = (fr.tangent(0), fr.orthogonal(0), fr.orthogonal(1));
            let vert = [oracle.sectional(u.as_slice(), x0.as_slice()).unwrap(), oracle.sectional(u.as_slice(), x1.as_slice()).unwrap()];
            let horiz = oracle.sectional(x0.as_slice(), x1.as_slice()).unwrap();
            for k in vert {
                worst = worst.max((k - eps * eps).abs());
            }
            worst = worst.max((horiz - (4.0 - 3.0 * eps * eps)).abs());
            if eps == 1.0 {
                for _ in 0..5 {
                    let a: Vec<f64> = (0..3).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
                    let b: Vec<f64> = (0..3).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
                    round = round.max((oracle.sectional(&a, &b).unwrap() - 1.0).abs());
                }
            }
        }
    }
    check(
        worst < 1e-6 && round < 1e-6,
        format!("eps in {{0.25, 0.5, 1}}: max error {worst:.1e}; eps = 1 random planes {round:.1e}"),
    )
}

fn riemannian_equivalence() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for sc in scenarios() {
        let pts = SamplePlan::new(sc.name(), 50, 1).sample_points(&sc);
        let t = riemannian_test(sc.foliation(), &pts);
        let expected = sc.spec().expect.riemannian;
        let ok = t.criteria_agree() && expected.is_none_or(|e| e == t.riemannian());
        pass &= ok;
        parts.push(format!("{} lie {:.0e} S {:.0e}", sc.name(), t.lie_max, t.s_max));
    }
    check(pass, parts.join("; "))
}

fn limit_study_check() -> Check {
    let flat = Scenario::builtin("flat-torus").unwrap();
    let mut flat_worst = 0.0f64;
    for pt in SamplePlan::new(flat.name(), 5, 1).sample_points(&flat) {
        let s = limit_study(&flat, &pt, 8).unwrap();
        flat_worst = flat_worst.max(s.limit.abs());
        for r in &s.rows {
            flat_worst = flat_worst.max(r.oracle.abs());
        }
    }
    let sheared = Scenario::builtin("sheared-torus").unwrap();
    let s = limit_study(&sheared, &[0.0, 0.0], 8).unwrap();
    let b = s.limit.abs();
    let mut worst = 0.0f64;
    let mut flipped = 0.0f64;
    for r in &s.rows {
        let want = b / (r.n * r.n) as f64;
        worst = worst.max(((r.oracle - s.limit).abs() - want).abs());
        flipped = flipped.max(((r.oracle + s.limit).abs() - want).abs());
    }
    let rows: Vec<String> = s.rows.iter().map(|r| format!("{}:{:.6}", r.n, r.oracle)).collect();
    check(
        flat_worst < 1e-9 && worst < 1e-7,
        format!(
            "flat torus {flat_worst:.1e}; sheared torus L = {:.10}, oracle limit {:.10}, oracle rows [{}], \
             max deviation from |L|/n^2 {worst:.3e} (with L negated {flipped:.1e})",
            s.limit,
            s.oracle_limit,
            rows.join(" ")
        ),
    )
}

fn report_bytes(records: &[ComparisonRecord], scenario: &str) -> Vec<u8> {
    let report = emit_report(records).unwrap();
    let mut out = report.to_json(scenario).unwrap().into_bytes();
    write_records_csv(records, &mut out).unwrap();
    out
}

fn discrepancy_reporting() -> Check {
    let mut verdicts: std::collections::BTreeMap<FormulaId, Vec<Verdict>> = Default::default();
    let mut unlocalized = Vec::new();
    let mut identical = true;
    let (mut agree, mut disagree, mut inconclusive) = (0, 0, 0);
    let single = ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    for sc in scenarios() {
        let plan = SamplePlan::new(sc.name(), 20, 1);
        let records = run_comparisons(&sc, &plan, &FormulaId::ALL);
        let again = single.install(|| run_comparisons(&sc, &plan, &FormulaId::ALL));
        identical &= report_bytes(&records, sc.name()) == report_bytes(&again, sc.name());
        let report = emit_report(&records).unwrap();
        for e in &report.entries {
            match e.verdict {
                Verdict::Agrees => agree += 1,
                Verdict::Disagrees => disagree += 1,
                Verdict::Inconclusive => inconclusive += 1,
            }
            if e.variant == AS_PRINTED {
                verdicts.entry(e.formula).or_default().push(e.verdict);
            }
            if e.verdict == Verdict::Disagrees && e.dominant_term.is_none() {
                unlocalized.push(format!("{}/{}/{}", e.scenario, e.formula.name(), e.variant));
            }
        }
    }
    let undecided: Vec<&str> = FormulaId::ALL
        .iter()
        .filter(|id| !verdicts.get(id).is_some_and(|vs| vs.iter().any(|v| *v != Verdict::Inconclusive)))
        .map(|id| id.name())
        .collect();
    check(
        undecided.is_empty() && unlocalized.is_empty() && identical,
        format!(
            "{} formula ids with verdicts, {agree} AGREES, {disagree} DISAGREES, {inconclusive} INCONCLUSIVE; \
             undecided [{}]; unlocalized [{}]; byte-identical rerun {identical}",
            verdicts.len(),
            undecided.join(","),
            unlocalized.join(",")
        ),
    )
}

fn second_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let d = |h: f64| {
        let at = |si: f64, sj: f64| {
            let mut p = x.to_vec();
            p[i] += si * h;
            p[j] += sj * h;
            f(&p)
        };
        if i == j {
            (at(1.0, 0.0) - 2.0 * f(x) + at(-1.0, 0.0)) / (h * h)
        } else {
            (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
        }
    };
    let (d1, d2, d4) = (d(h), d(h / 2.0), d(h / 4.0));
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d4 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

fn expression_engine() -> Check {
    let mut worst = 0.0f64;
    let mut exprs = 0;
    for sc in scenarios() {
        let spec = sc.spec();
        let mut texts: Vec<String> = spec.metric.iter().flatten().cloned().collect();
        texts.push(spec.warp.clone());
        for pt in SamplePlan::new(sc.name(), 10, 3).sample_points(&sc) {
            for t in &texts {
                let e = parse_expression(t).unwrap();
                let f = |x: &[f64]| e.eval_at(sc.coords(), x).unwrap();
                let jet = jet_eval(&e, sc.coords(), &pt, 2).unwrap();
                let n = pt.len();
                for i in 0..n {
                    worst = worst.max(common::rel(jet.d(&[i]).unwrap(), common::richardson(&f, &pt, i, 1e-2)));
                    for j in i..n {
                        worst = worst.max(common::rel(jet.d(&[i, j]).unwrap(), second_difference(&f, &pt, i, j, 1e-2)));
                    }
                }
                exprs += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let e = common::random_expr(&mut rng, 5, &["x", "y", "eta"]);
        let printed = e.to_string();
        match parse_expression(&printed) {
            Ok(back) if back == e => {}
            _ => mismatches += 1,
        }
    }
    check(
        worst < 1e-6 && mismatches == 0,
        format!("{exprs} expression/point pairs, worst relative derivative error {worst:.1e}; {mismatches}/1000 round-trip mismatches"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle self-consistency", oracle_self_consistency),
        ("identity warp", identity_warp),
        ("connection formulas", connection_formulas),
        ("closed-form surface curvature", closed_form_surface),
        ("Berger values", berger_values),
        ("Lie derivative vs S criterion", riemannian_equivalence),
        ("constant-warp limit study", limit_study_check),
        ("discrepancy reporting", discrepancy_reporting),
        ("expression engine", expression_engine),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let c = run();
        if !c.pass {
            failed += 1;
        }
        println!("{} {}. {name}: {}", if c.pass { "PASS" } else { "FAIL" }, k + 1, c.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
