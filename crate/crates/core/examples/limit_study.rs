//! Constant warps f_n = 1/n on a flat codimension-one scenario: the mixed
//! curvature per n next to the printed limit and the oracle limit.
//!
//! cargo run --example limit_study -- "sheared-torus:a=0.3" "x=0;y=0" 12

use foliage::harness::limit_study;
use foliage::scenario::Scenario;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let sc = Scenario::builtin(args.get(1).map_or("sheared-torus", String::as_str)).unwrap_or_else(|e| panic!("{e}"));
    let pt = sc.parse_point(args.get(2).map_or("x=0;y=0", String::as_str)).unwrap_or_else(|e| panic!("{e}"));
    let nmax = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(8);
    let s = limit_study(&sc, &pt, nmax).unwrap_or_else(|e| panic!("{e}"));
    println!("{} at {:?}: kappa {:.3e}, printed limit {:.12}, oracle limit {:.12}", s.scenario, s.point, s.kappa, s.limit, s.oracle_limit);
    println!("{:>4} {:>16} {:>16} {:>16}", "n", "oracle", "K_XU formula", "|oracle - L|");
    for r in &s.rows {
        println!("{:>4} {:>16.12} {:>16.12} {:>16.12}", r.n, r.oracle, r.formula, r.residual);
    }
}
