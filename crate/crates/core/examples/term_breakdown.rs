//! One formula at one point with its labeled terms next to the oracle.
//!
//! cargo run --example term_breakdown -- sheared-torus K_XU

use foliage::formulas::{variants_for, FormulaId};
use foliage::harness::{run_comparisons, Outcome, SamplePlan};
use foliage::scenario::Scenario;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let sc = Scenario::builtin(args.get(1).map_or("sheared-torus", String::as_str)).unwrap_or_else(|e| panic!("{e}"));
    let id: FormulaId = args.get(2).map_or("K_XU", String::as_str).parse().unwrap_or_else(|e| panic!("{e}"));
    let records = run_comparisons(&sc, &SamplePlan::new(sc.name(), 1, 1), &[id]);
    println!("{} {} at {:?}; variants {:?}", sc.name(), id.display(), records[0].point, variants_for(id));
    for r in &records {
        match &r.outcome {
            Outcome::Evaluated { structural, oracle, rel_residual, breakdown, .. } => {
                println!("[{}] formula {:?} oracle {:?} residual {:.3e}", r.variant, structural, oracle, rel_residual);
                for t in &breakdown.terms {
                    println!("    {:<40} {:<16} {:?}", t.label, t.coefficient, t.value);
                }
            }
            Outcome::Skipped { reason } => println!("[{}] skipped: {reason}", r.variant),
        }
    }
}
