//! Berger spheres as constant warps of the Hopf foliation, against the
//! classical values ε², 4 − 3ε² and 8 − 2ε².

use foliage::scenario::Scenario;

fn main() {
    let pt = [0.0, 0.6, 1.0];
    println!("{:>6} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14}", "eps", "K(U,X)", "eps^2", "K(X,Y)", "4-3eps^2", "s", "8-2eps^2");
    for eps in [0.1, 0.25, 0.5, 0.75, 1.0, 1.5] {
        let sc = Scenario::builtin(&format!("berger:eps={eps}")).unwrap();
        let fp = sc.foliation().at(&pt).unwrap();
        let o = sc.warped().oracle_at(&pt).unwrap();
        let (u, x, y) = (fp.frame().tangent(0), fp.frame().orthogonal(0), fp.frame().orthogonal(1));
        let kv = o.sectional(u.as_slice(), x.as_slice()).unwrap();
        let kh = o.sectional(x.as_slice(), y.as_slice()).unwrap();
        let e2 = eps * eps;
        println!("{eps:>6} {kv:>14.10} {e2:>14.10} {kh:>14.10} {:>14.10} {:>14.10} {:>14.10}", 4.0 - 3.0 * e2, o.scalar(), 8.0 - 2.0 * e2);
    }
}
