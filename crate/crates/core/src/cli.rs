//! Command-line front end. Exit codes: 0 completed, 1 usage or runtime
//! failure, 2 invalid scenario (or a limit study whose precondition fails),
//! 3 report contains DISAGREES (unless `--no-gate`).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::formulas::{variant_registry, FormulaId, FrameConvention, VariantKind};
use crate::harness::{
    curvature_table, emit_report, fmt_num, limit_study, run_comparisons, thread_pool, write_outputs,
    write_table_csv, RunMeta, SamplePlan, DEFAULT_MARGIN,
};
use crate::scenario::{builtin_scenarios, lookup, Scenario, ScenarioError, ScenarioSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SCENARIO: i32 = 2;
pub const EXIT_DISAGREES: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "foliage", version, about = "Structural curvature formulas of warped foliations against a metric oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
#[group(multiple = false)]
struct WarpOverride {
    /// replace the scenario warp by this expression
    #[arg(long, value_name = "EXPR")]
    warp: Option<String>,
    /// replace the scenario warp by a positive constant
    #[arg(long = "const", value_name = "E")]
    constant: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List built-in scenarios, formula ids and variants
    List {
        #[arg(value_parser = ["all", "scenarios", "formulas", "variants"], default_value = "all")]
        what: String,
    },
    /// Compare formulas against the oracle on sampled points
    Verify {
        /// built-in name (name:key=value,...) or a .toml config file
        #[arg(long)]
        scenario: String,
        /// comma-separated formula ids, or "all"
        #[arg(long, default_value = "all")]
        formulas: String,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// write report.json, records.csv and meta.txt here
        #[arg(long)]
        out: Option<PathBuf>,
        /// trace frame convention for tangent sums
        #[arg(long, default_value = "g", value_parser = ["g", "gf"])]
        frame: String,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[command(flatten)]
        warp: WarpOverride,
        /// exit 0 even when some verdict is DISAGREES
        #[arg(long)]
        no_gate: bool,
    },
    /// Constant-warp limit study f_n = 1/n at one point
    Limit {
        #[arg(long)]
        scenario: String,
        /// point as "x=...;y=..."; missing coordinates take the domain center
        #[arg(long, default_value = "")]
        point: String,
        #[arg(long, default_value_t = 8)]
        nmax: usize,
    },
    /// Oracle curvature on a grid, as CSV
    CurvatureTable {
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        warp: WarpOverride,
        /// grid points per coordinate
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        /// output file; standard output when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario config file
    CheckScenario { file: PathBuf },
}

/// Built-in query or config path.
fn load_spec(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    let path = Path::new(name);
    if name.ends_with(".toml") || path.is_file() {
        ScenarioSpec::from_file(path)
    } else {
        lookup(name)
    }
}

fn load_scenario(name: &str, warp: &WarpOverride) -> Result<Scenario, ScenarioError> {
    let sc = Scenario::from_spec(load_spec(name)?)?;
    match (&warp.warp, warp.constant) {
        (Some(w), _) => sc.with_warp(w),
        (None, Some(c)) => sc.with_constant_warp(c),
        (None, None) => Ok(sc),
    }
}

fn parse_formulas(text: &str) -> Result<Vec<FormulaId>, String> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(FormulaId::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let id: FormulaId = part.parse()?;
        if !out.contains(&id) {
            out.push(id);
        }
    }
    if out.is_empty() {
        return Err("no formulas selected".into());
    }
    Ok(out)
}

fn list(what: &str) {
    if what == "all" || what == "scenarios" {
        println!("scenarios:");
        for s in builtin_scenarios() {
            println!("  {:<14} p={} q={}  {}", s.name, s.p, s.q, s.description);
        }
    }
    if what == "all" || what == "formulas" {
        println!("formulas:");
        for id in FormulaId::ALL {
            println!("  {:<8} {}", id.name(), id.display());
        }
    }
    if what == "all" || what == "variants" {
        println!("variants:");
        for v in variant_registry() {
            let kind = match v.kind {
                VariantKind::Typographical => "reading",
                VariantKind::Curated => "curated",
            };
            let f = v.formula.map_or("*", |f| f.name());
            println!("  {:<20} {:<8} {:<8} {}", v.id, f, kind, v.deviation);
        }
    }
}

/// Run the command line; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::List { what } => {
            list(&what);
            EXIT_OK
        }
        Command::CheckScenario { file } => match ScenarioSpec::from_file(&file).and_then(|s| {
            s.validate()?;
            Ok(s)
        }) {
            Ok(s) => {
                println!("ok: {} (p={}, q={}, coords {})", s.name, s.p, s.q, s.coords.join(","));
                EXIT_OK
            }
            Err(e) => {
                eprintln!("{e}");
                EXIT_SCENARIO
            }
        },
        Command::Verify {
            scenario,
            formulas,
            points,
            seed,
            out,
            frame,
            margin,
            warp,
            no_gate,
        } => {
            let sc = match load_scenario(&scenario, &warp) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_SCENARIO;
                }
            };
            let ids = match parse_formulas(&formulas) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_USAGE;
                }
            };
            if points == 0 {
                eprintln!("--points must be positive");
                return EXIT_USAGE;
            }
            let frame: FrameConvention = frame.parse().expect("restricted by clap");
            let mut plan = SamplePlan::new(sc.name(), points, seed).with_frame(frame);
            plan.margin = margin;
            let pool = match thread_pool() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_USAGE;
                }
            };
            let records = pool.install(|| run_comparisons(&sc, &plan, &ids));
            let report = match emit_report(&records) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_USAGE;
                }
            };
            print!("{}", report.summary());
            if let Some(dir) = out {
                let meta = RunMeta {
                    scenario: sc.name().to_string(),
                    warp: sc.spec().warp.clone(),
                    formulas: ids,
                    plan,
                };
                if let Err(e) = write_outputs(&dir, &report, &records, &meta) {
                    eprintln!("{e}");
                    return EXIT_USAGE;
                }
            }
            if report.has_disagreement() && !no_gate {
                eprintln!("report contains DISAGREES verdicts");
                EXIT_DISAGREES
            } else {
                EXIT_OK
            }
        }
        Command::Limit { scenario, point, nmax } => {
            let sc = match load_scenario(&scenario, &WarpOverride { warp: None, constant: None }) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_SCENARIO;
                }
            };
            let pt = match sc.parse_point(&point) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_USAGE;
                }
            };
            match limit_study(&sc, &pt, nmax) {
                Ok(study) => {
                    println!(
                        "# scenario {} point {} kappa {} limit {} oracle_limit {}",
                        study.scenario,
                        study.point.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(";"),
                        fmt_num(study.kappa),
                        fmt_num(study.limit),
                        fmt_num(study.oracle_limit)
                    );
                    print!("{}", study.to_csv());
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("{e}");
                    EXIT_SCENARIO
                }
            }
        }
        Command::CurvatureTable {
            scenario,
            warp,
            grid,
            margin,
            out,
        } => {
            let sc = match load_scenario(&scenario, &warp) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_SCENARIO;
                }
            };
            if grid == 0 {
                eprintln!("--grid must be positive");
                return EXIT_USAGE;
            }
            let pool = match thread_pool() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_USAGE;
                }
            };
            let rows = match pool.install(|| curvature_table(&sc, grid, margin)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return EXIT_USAGE;
                }
            };
            let result = match out {
                Some(path) => std::fs::File::create(&path)
                    .map_err(crate::harness::HarnessError::from)
                    .and_then(|f| write_table_csv(&sc, &rows, std::io::BufWriter::new(f))),
                None => write_table_csv(&sc, &rows, std::io::stdout().lock()),
            };
            match result {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("{e}");
                    EXIT_USAGE
                }
            }
        }
    }
}
