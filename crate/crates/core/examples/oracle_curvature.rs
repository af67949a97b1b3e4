//! Brute-force curvature of the warped metric at one point: sectional
//! curvature of every frame plane, Ricci along the frame, scalar.
//!
//! cargo run --example oracle_curvature -- round-S3-hopf "eta=0.7"

use foliage::scenario::Scenario;
use foliage::warp::oracle_curvatures;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let sc = Scenario::builtin(args.get(1).map_or("round-S3-hopf", String::as_str)).unwrap_or_else(|e| panic!("{e}"));
    let pt = sc.parse_point(args.get(2).map_or("", String::as_str)).unwrap_or_else(|e| panic!("{e}"));
    let fp = sc.foliation().at(&pt).unwrap_or_else(|e| panic!("{e}"));
    let frame: Vec<_> = (0..pt.len()).map(|k| fp.frame().vector(k)).collect();
    let oc = oracle_curvatures(sc.warped(), &pt, &frame).unwrap_or_else(|e| panic!("{e}"));
    println!("{} at {:?}, warp {}", sc.name(), pt, sc.spec().warp);
    for ((i, j), k) in &oc.planes {
        println!("  K(e{i}, e{j}) = {k:.12}");
    }
    for (i, r) in oc.ric_directions.iter().enumerate() {
        println!("  ric(e{i}) = {r:.12}");
    }
    println!("  scalar = {:.12}", oc.scalar);
}
