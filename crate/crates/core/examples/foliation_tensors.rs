//! Fundamental tensors of every built-in foliation and the two Riemannian
//! criteria (Lie derivative of g, vanishing of S). Norms are taken on
//! orthonormal frame pairs.

use foliage::foliation::riemannian_test;
use foliage::harness::SamplePlan;
use foliage::scenario::{builtin_names, Scenario};

fn main() {
    println!("{:<14} {:>10} {:>10} {:>10} {:>10} {:>10}  riemannian", "scenario", "max|T|", "max|S|", "max|A|", "|H|", "lie");
    for name in builtin_names() {
        let sc = Scenario::builtin(name).unwrap();
        let pts = SamplePlan::new(name, 30, 1).sample_points(&sc);
        let (mut t, mut s, mut a, mut h) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for pt in &pts {
            let fp = sc.foliation().at(pt).unwrap();
            let norm = |v: nalgebra::DVector<f64>| fp.local().norm(v.as_slice());
            let (us, xs) = (fp.frame().tangents(), fp.frame().orthogonals());
            for u in &us {
                for w in &us {
                    t = t.max(norm(fp.t(u.as_slice(), w.as_slice())));
                }
            }
            for x in &xs {
                for y in &xs {
                    s = s.max(norm(fp.s(x.as_slice(), y.as_slice())));
                    a = a.max(norm(fp.a(x.as_slice(), y.as_slice())));
                }
            }
            h = h.max(norm(fp.tensors().mean_tangent.clone()));
        }
        let test = riemannian_test(sc.foliation(), &pts);
        println!(
            "{name:<14} {t:>10.2e} {s:>10.2e} {a:>10.2e} {h:>10.2e} {:>10.2e}  {}{}",
            test.lie_max,
            test.riemannian(),
            if test.criteria_agree() { "" } else { " (criteria disagree)" }
        );
    }
}
