//! A scenario from TOML: validate it, run a short comparison and write the
//! report directory.
//!
//! cargo run --example config_scenario -- [out-dir]

use foliage::formulas::FormulaId;
use foliage::harness::{emit_report, run_comparisons, write_outputs, RunMeta, SamplePlan};
use foliage::scenario::{Scenario, ScenarioSpec};

// a surface of revolution foliated by parallels, warped along the meridian
const CONFIG: &str = r#"
name = "torus-of-revolution"
description = "torus of revolution, leaves are parallels"
p = 1
q = 1
coords = ["u", "v"]
metric = [["(2+cos(v))^2", "0"], ["1"]]
warp = "1+0.25*sin(v)"
domain = [["0", "2*pi"], ["0", "2*pi"]]
periodic = [true, true]

[expect]
riemannian = true
flat = false
codim1 = true
"#;

fn main() {
    let spec = ScenarioSpec::from_toml(CONFIG).unwrap_or_else(|e| panic!("{e}"));
    spec.validate().unwrap_or_else(|e| panic!("{e}"));
    let sc = Scenario::from_spec(spec).unwrap_or_else(|e| panic!("{e}"));
    let ids = [FormulaId::ConnUV, FormulaId::KXU, FormulaId::Scalar, FormulaId::LimitK];
    let plan = SamplePlan::new(sc.name(), 25, 3);
    let records = run_comparisons(&sc, &plan, &ids);
    let report = emit_report(&records).unwrap_or_else(|e| panic!("{e}"));
    print!("{}", report.summary());
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("foliage-config-example"));
    let meta = RunMeta {
        scenario: sc.name().to_string(),
        warp: sc.spec().warp.clone(),
        formulas: ids.to_vec(),
        plan,
    };
    write_outputs(&dir, &report, &records, &meta).unwrap_or_else(|e| panic!("{e}"));
    println!("wrote {}", dir.display());
}
