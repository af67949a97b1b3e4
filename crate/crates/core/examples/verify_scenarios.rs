//! Sweep every built-in scenario and print the verdict table.
//!
//! cargo run --release --example verify_scenarios -- [points] [seed] [g|gf] [warp]

use foliage::formulas::FormulaId;
use foliage::harness::{emit_report, run_comparisons, SamplePlan};
use foliage::scenario::{builtin_names, Scenario};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let points = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let frame = args.get(3).map_or("g", String::as_str).parse().expect("frame is g or gf");
    for name in builtin_names() {
        let mut sc = Scenario::builtin(name).expect("built-in scenarios are valid");
        if let Some(w) = args.get(4) {
            sc = sc.with_warp(w).expect("warp override must be basic");
        }
        let plan = SamplePlan::new(name, points, seed).with_frame(frame);
        let records = run_comparisons(&sc, &plan, &FormulaId::ALL);
        match emit_report(&records) {
            Ok(report) => print!("{}", report.summary()),
            Err(e) => println!("{name}: {e}"),
        }
    }
}
