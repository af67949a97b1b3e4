//! Formula-versus-oracle comparisons, the constant-warp limit study, and
//! report serialization.
//!
//! The oracle side only ever sees `g_f`, the point and the input vectors.
//! The structural side sees the unwarped foliation and the jet of `f`.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::value::RawValue;
use thiserror::Error;

use crate::foliation::FoliatedPoint;
use crate::formulas::{
    evaluate, variants_for, FormulaError, FormulaId, FormulaInputs, FrameConvention, Structure, TermBreakdown,
    AS_PRINTED,
};
use crate::geometry::{CoordVector, LocalMetric};
use crate::jet::{jet_eval, Jet, MAX_ORDER};
use crate::scenario::Scenario;
use crate::warp::{warp, Oracle, WarpFunction};

/// A record set AGREES when every relative residual is below this.
pub const AGREE_THRESHOLD: f64 = 1e-6;
/// A record set DISAGREES when its median relative residual reaches this.
pub const DISAGREE_THRESHOLD: f64 = 1e-3;
/// Default distance kept from non-periodic domain boundaries.
pub const DEFAULT_MARGIN: f64 = 0.05;
/// Squared constant warps used to extrapolate the oracle to `f → 0`.
const LIMIT_NODES: [f64; 3] = [1.0, 0.25, 0.0625];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no evaluable records")]
    NoEvaluableRecords,
    #[error("FOLIAGE_THREADS must be a positive integer, got '{0}'")]
    InvalidThreads(String),
    #[error("limit study rejected: {0}")]
    LimitRejected(String),
    #[error("{0}")]
    Evaluation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub scenario: String,
    pub points: usize,
    pub seed: u64,
    pub frame: FrameConvention,
    pub margin: f64,
}

impl SamplePlan {
    pub fn new(scenario: &str, points: usize, seed: u64) -> Self {
        SamplePlan {
            scenario: scenario.to_string(),
            points,
            seed,
            frame: FrameConvention::G,
            margin: DEFAULT_MARGIN,
        }
    }

    pub fn with_frame(mut self, frame: FrameConvention) -> Self {
        self.frame = frame;
        self
    }

    /// Uniform points in the domain box, from stream 0 of the seeded
    /// generator. Non-periodic coordinates keep `margin` from the boundary.
    pub fn sample_points(&self, sc: &Scenario) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.points)
            .map(|_| {
                sc.domain()
                    .iter()
                    .enumerate()
                    .map(|(i, &(lo, hi))| {
                        let (a, b) = if sc.periodic(i) {
                            (lo, hi)
                        } else {
                            (lo + self.margin, hi - self.margin)
                        };
                        a + (b - a) * rng.gen::<f64>()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Per-point generator for frame rotations and inputs.
fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Orthogonal matrix from the QR factor of a random square matrix.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

fn unit_combination(rng: &mut impl Rng, basis: &[CoordVector]) -> CoordVector {
    loop {
        let c: Vec<f64> = basis.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            let mut v = basis[0].clone() * (c[0] / norm);
            for (b, ci) in basis.iter().zip(&c).skip(1) {
                v += b * (ci / norm);
            }
            return v;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Evaluated {
        structural: Vec<f64>,
        oracle: Vec<f64>,
        abs_residual: f64,
        rel_residual: f64,
        breakdown: TermBreakdown,
    },
    Skipped {
        reason: String,
    },
}

/// One formula evaluation at one point, with everything needed to redo it.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub scenario: String,
    pub formula: FormulaId,
    pub variant: String,
    pub frame: FrameConvention,
    pub seed: u64,
    pub point_index: usize,
    pub point: Vec<f64>,
    pub inputs: Vec<Vec<f64>>,
    pub ab: Option<(f64, f64)>,
    pub outcome: Outcome,
}

impl ComparisonRecord {
    pub fn rel_residual(&self) -> Option<f64> {
        match &self.outcome {
            Outcome::Evaluated { rel_residual, .. } => Some(*rel_residual),
            Outcome::Skipped { .. } => None,
        }
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self.outcome, Outcome::Skipped { .. })
    }
}

/// `f` as a jet at the point.
fn warp_jet(sc: &Scenario, point: &[f64]) -> Result<Jet, String> {
    jet_eval(sc.warp().expr(), sc.coords(), point, MAX_ORDER).map_err(|e| e.to_string())
}

/// Inputs for one formula at one point; `None` with a reason when the
/// formula does not apply to this foliation.
fn draw_inputs(id: FormulaId, fp: &FoliatedPoint, rng: &mut ChaCha8Rng) -> Result<FormulaInputs, String> {
    let frame = fp.frame();
    let tangents = frame.tangents();
    let orths = frame.orthogonals();
    let (p, q) = (fp.p(), fp.q());
    let mut ab = None;
    let vectors = match id {
        FormulaId::KXY => {
            if q < 2 {
                return Err("needs two orthogonal directions (q = 1)".into());
            }
            vec![orths[0].clone(), orths[1].clone()]
        }
        FormulaId::KUV => {
            if p < 2 {
                return Err("leaf curvature undefined for one-dimensional leaves".into());
            }
            vec![tangents[0].clone(), tangents[1].clone()]
        }
        FormulaId::KXU | FormulaId::LimitK => {
            if id == FormulaId::LimitK && q != 1 {
                return Err(format!("requires codimension one, got q = {q}"));
            }
            vec![orths[0].clone(), tangents[0].clone()]
        }
        FormulaId::RicE => {
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            ab = Some((th.cos(), th.sin()));
            vec![unit_combination(rng, &tangents), unit_combination(rng, &orths)]
        }
        _ => id
            .slots()
            .iter()
            .map(|s| match s {
                crate::formulas::Slot::Tangent => unit_combination(rng, &tangents),
                crate::formulas::Slot::Orthogonal => unit_combination(rng, &orths),
            })
            .collect(),
    };
    Ok(FormulaInputs { vectors, ab })
}

/// Limit of the unnormalized mixed curvature `⟨R^c(X,U)U,X⟩` of constant
/// warps `c → 0`, extrapolated from `c² ∈ {1, 1/4, 1/16}`.
pub fn oracle_limit_value(sc: &Scenario, point: &[f64], x: &[f64], u: &[f64]) -> Result<f64, String> {
    let mut total = 0.0;
    for (k, &t) in LIMIT_NODES.iter().enumerate() {
        let mut w = 1.0;
        for (m, &s) in LIMIT_NODES.iter().enumerate() {
            if m != k {
                w *= s / (s - t);
            }
        }
        total += w * constant_warp_mixed(sc, point, t.sqrt(), x, u)?;
    }
    Ok(total)
}

/// `⟨R^c(X,U)U,X⟩_c` for the constant warp `c`, with `X`, `U` as given.
pub fn constant_warp_mixed(sc: &Scenario, point: &[f64], c: f64, x: &[f64], u: &[f64]) -> Result<f64, String> {
    let wm = warp(sc.foliation().metric(), sc.foliation().p(), &WarpFunction::constant(c));
    let oracle = wm.oracle_at(point).map_err(|e| e.to_string())?;
    Ok(oracle.curvature(x, u, u, x))
}

fn oracle_value(
    id: FormulaId,
    inputs: &FormulaInputs,
    oracle: &Oracle,
    st: &Structure,
    sc: &Scenario,
) -> Result<Vec<f64>, String> {
    let v: Vec<&[f64]> = inputs.vectors.iter().map(|x| x.as_slice()).collect();
    let scalar = |x: f64| Ok(vec![x]);
    match id {
        FormulaId::ConnXY | FormulaId::ConnUV | FormulaId::ConnXU | FormulaId::ConnUX => {
            let field = st.field_of(&inputs.vectors[1]);
            Ok(oracle.connection(v[0], &field).iter().copied().collect())
        }
        FormulaId::RXYZW
        | FormulaId::RXYZU
        | FormulaId::RXUYV
        | FormulaId::RUVXY
        | FormulaId::RUVPX
        | FormulaId::RUVPQ => scalar(oracle.curvature(v[0], v[1], v[2], v[3])),
        FormulaId::KXY | FormulaId::KXU | FormulaId::KUV => {
            oracle.sectional(v[0], v[1]).map(|k| vec![k]).map_err(|e| e.to_string())
        }
        FormulaId::RicUV | FormulaId::RicXY | FormulaId::RicXU => scalar(oracle.ricci(v[0], v[1])),
        FormulaId::RicE => {
            let (a, b) = inputs.ab.expect("drawn with weights");
            let e = &inputs.vectors[0] * (a / st.f()) + &inputs.vectors[1] * b;
            scalar(oracle.ric_direction(e.as_slice()))
        }
        FormulaId::Scalar => scalar(oracle.scalar()),
        FormulaId::LimitK => oracle_limit_value(sc, st.point().point(), v[0], v[1]).map(|x| vec![x]),
    }
}

fn residuals(structural: &[f64], oracle: &[f64], vector: bool, local: &LocalMetric) -> (f64, f64) {
    if vector {
        let d: Vec<f64> = structural.iter().zip(oracle).map(|(s, o)| s - o).collect();
        let abs = local.norm(&d);
        (abs, abs / local.norm(oracle).max(1.0))
    } else {
        let abs = (structural[0] - oracle[0]).abs();
        (abs, abs / oracle[0].abs().max(1.0))
    }
}

struct PointContext {
    fp: FoliatedPoint,
    jet: Jet,
    oracle: Oracle,
}

fn point_context(sc: &Scenario, point: &[f64], rng: &mut ChaCha8Rng) -> Result<PointContext, String> {
    let mut fp = sc.foliation().at(point).map_err(|e| e.to_string())?;
    let rt = random_orthogonal(rng, fp.p());
    let ro = random_orthogonal(rng, fp.q());
    let frame = fp.frame().rotated(&rt, &ro);
    fp.set_frame(frame);
    let jet = warp_jet(sc, point)?;
    let oracle = sc.warped().oracle_at(point).map_err(|e| e.to_string())?;
    Ok(PointContext { fp, jet, oracle })
}

fn records_at(
    sc: &Scenario,
    plan: &SamplePlan,
    formulas: &[FormulaId],
    index: usize,
    point: &[f64],
) -> Vec<ComparisonRecord> {
    let mut rng = point_rng(plan.seed, index);
    let base = |formula: FormulaId, variant: &str, inputs: &FormulaInputs, outcome: Outcome| ComparisonRecord {
        scenario: sc.name().to_string(),
        formula,
        variant: variant.to_string(),
        frame: plan.frame,
        seed: plan.seed,
        point_index: index,
        point: point.to_vec(),
        inputs: inputs.vectors.iter().map(|v| v.iter().copied().collect()).collect(),
        ab: inputs.ab,
        outcome,
    };
    let no_inputs = FormulaInputs::vectors(Vec::new());
    let skip_all = |reason: String, inputs: &FormulaInputs, id: FormulaId| -> Vec<ComparisonRecord> {
        variants_for(id)
            .into_iter()
            .map(|v| base(id, v, inputs, Outcome::Skipped { reason: reason.clone() }))
            .collect()
    };
    let ctx = match point_context(sc, point, &mut rng) {
        Ok(c) => c,
        Err(reason) => {
            return formulas
                .iter()
                .flat_map(|&id| skip_all(reason.clone(), &no_inputs, id))
                .collect()
        }
    };
    let st = match Structure::new(&ctx.fp, &ctx.jet, plan.frame) {
        Ok(s) => s,
        Err(e) => {
            return formulas
                .iter()
                .flat_map(|&id| skip_all(e.to_string(), &no_inputs, id))
                .collect()
        }
    };
    let mut out = Vec::new();
    for &id in formulas {
        let inputs = match draw_inputs(id, &ctx.fp, &mut rng) {
            Ok(i) => i,
            Err(reason) => {
                out.extend(skip_all(reason, &no_inputs, id));
                continue;
            }
        };
        // the limit precondition is checked before the oracle is asked
        if id == FormulaId::LimitK {
            if let Err(e @ FormulaError::Precondition { .. }) = evaluate(id, AS_PRINTED, &inputs, &st) {
                out.extend(skip_all(e.to_string(), &inputs, id));
                continue;
            }
        }
        let oracle = match oracle_value(id, &inputs, &ctx.oracle, &st, sc) {
            Ok(o) => o,
            Err(reason) => {
                out.extend(skip_all(reason, &inputs, id));
                continue;
            }
        };
        for variant in variants_for(id) {
            let outcome = match evaluate(id, variant, &inputs, &st) {
                Ok(b) => {
                    let structural = b.total();
                    let (abs_residual, rel_residual) =
                        residuals(&structural, &oracle, id.is_vector(), ctx.fp.local());
                    Outcome::Evaluated {
                        structural,
                        oracle: oracle.clone(),
                        abs_residual,
                        rel_residual,
                        breakdown: b,
                    }
                }
                Err(e) => Outcome::Skipped { reason: e.to_string() },
            };
            out.push(base(id, variant, &inputs, outcome));
        }
    }
    out
}

/// Evaluate every formula and variant at every sampled point. Points run in
/// parallel; the output order is (point, formula, variant) regardless.
pub fn run_comparisons(sc: &Scenario, plan: &SamplePlan, formulas: &[FormulaId]) -> Vec<ComparisonRecord> {
    let points = plan.sample_points(sc);
    points
        .par_iter()
        .enumerate()
        .map(|(k, pt)| records_at(sc, plan, formulas, k, pt))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Thread pool sized by `FOLIAGE_THREADS`, or rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("FOLIAGE_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => builder = builder.num_threads(n),
            _ => return Err(HarnessError::InvalidThreads(v)),
        }
    }
    builder
        .build()
        .map_err(|e| HarnessError::Evaluation(format!("thread pool: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Agrees,
    Disagrees,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Agrees => "AGREES",
            Verdict::Disagrees => "DISAGREES",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }

    /// Thresholds applied to a set of relative residuals.
    pub fn classify(residuals: &[f64]) -> Verdict {
        if residuals.is_empty() {
            return Verdict::Inconclusive;
        }
        let max = residuals.iter().cloned().fold(0.0, f64::max);
        if max < AGREE_THRESHOLD {
            Verdict::Agrees
        } else if median(residuals) >= DISAGREE_THRESHOLD {
            Verdict::Disagrees
        } else {
            Verdict::Inconclusive
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Aggregate for one (scenario, formula, variant).
#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub scenario: String,
    pub formula: FormulaId,
    pub variant: String,
    pub frame: FrameConvention,
    pub evaluated: usize,
    pub skipped: usize,
    pub max_residual: f64,
    pub median_residual: f64,
    pub worst_point_index: Option<usize>,
    pub worst_point: Vec<f64>,
    pub dominant_term: Option<String>,
    pub verdict: Verdict,
    pub applicable: bool,
    pub skip_reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub entries: Vec<ReportEntry>,
}

impl DiscrepancyReport {
    pub fn entry(&self, scenario: &str, formula: FormulaId, variant: &str) -> Option<&ReportEntry> {
        self.entries
            .iter()
            .find(|e| e.scenario == scenario && e.formula == formula && e.variant == variant)
    }

    pub fn has_disagreement(&self) -> bool {
        self.entries.iter().any(|e| e.verdict == Verdict::Disagrees)
    }

    pub fn scenarios(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.entries.iter().map(|e| e.scenario.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }
}

/// Term whose values best explain the residual `structural − oracle`
/// across the records, by squared correlation.
pub fn dominant_term(records: &[&ComparisonRecord]) -> Option<String> {
    let mut labels: Vec<String> = Vec::new();
    for r in records {
        if let Outcome::Evaluated { breakdown, .. } = &r.outcome {
            for t in &breakdown.terms {
                if !labels.contains(&t.label) {
                    labels.push(t.label.clone());
                }
            }
        }
    }
    let mut best: Option<(f64, &String)> = None;
    for label in &labels {
        let (mut rv, mut vv, mut rr) = (0.0, 0.0, 0.0);
        for r in records {
            if let Outcome::Evaluated {
                structural,
                oracle,
                breakdown,
                ..
            } = &r.outcome
            {
                let term = breakdown.term(label);
                for (k, (s, o)) in structural.iter().zip(oracle).enumerate() {
                    let res = s - o;
                    let v = term.map_or(0.0, |t| t.value[k]);
                    rv += res * v;
                    vv += v * v;
                    rr += res * res;
                }
            }
        }
        if vv > 0.0 && rr > 0.0 {
            let score = rv * rv / (vv * rr);
            if best.is_none_or(|(b, _)| score > b + 1e-12) {
                best = Some((score, label));
            }
        }
    }
    best.map(|(_, l)| l.clone())
}

fn variant_rank(formula: FormulaId, variant: &str) -> usize {
    variants_for(formula).iter().position(|v| *v == variant).unwrap_or(usize::MAX)
}

/// Deterministic aggregation in canonical (scenario, formula, variant) order.
pub fn emit_report(records: &[ComparisonRecord]) -> Result<DiscrepancyReport, HarnessError> {
    if records.iter().all(|r| r.is_skipped()) {
        return Err(HarnessError::NoEvaluableRecords);
    }
    let mut keys: Vec<(String, FormulaId, usize, String)> = records
        .iter()
        .map(|r| (r.scenario.clone(), r.formula, variant_rank(r.formula, &r.variant), r.variant.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    let mut entries = Vec::new();
    for (scenario, formula, _, variant) in keys {
        let mut group: Vec<&ComparisonRecord> = records
            .iter()
            .filter(|r| r.scenario == scenario && r.formula == formula && r.variant == variant)
            .collect();
        group.sort_by_key(|r| r.point_index);
        let evaluated: Vec<&ComparisonRecord> = group.iter().copied().filter(|r| !r.is_skipped()).collect();
        let residuals: Vec<f64> = evaluated.iter().filter_map(|r| r.rel_residual()).collect();
        let reasons: BTreeSet<String> = group
            .iter()
            .filter_map(|r| match &r.outcome {
                Outcome::Skipped { reason } => Some(reason.clone()),
                _ => None,
            })
            .collect();
        let verdict = Verdict::classify(&residuals);
        let mut worst: Option<&ComparisonRecord> = None;
        for r in &evaluated {
            if worst.is_none_or(|w| r.rel_residual() > w.rel_residual()) {
                worst = Some(r);
            }
        }
        entries.push(ReportEntry {
            scenario: scenario.clone(),
            formula,
            variant: variant.clone(),
            frame: group[0].frame,
            evaluated: evaluated.len(),
            skipped: group.len() - evaluated.len(),
            max_residual: residuals.iter().cloned().fold(0.0, f64::max),
            median_residual: if residuals.is_empty() { 0.0 } else { median(&residuals) },
            worst_point_index: worst.map(|w| w.point_index),
            worst_point: worst.map(|w| w.point.clone()).unwrap_or_default(),
            dominant_term: if verdict == Verdict::Agrees || evaluated.is_empty() {
                None
            } else {
                dominant_term(&evaluated)
            },
            verdict,
            applicable: !evaluated.is_empty(),
            skip_reasons: reasons.into_iter().collect(),
        });
    }
    Ok(DiscrepancyReport { entries })
}

/// Fixed 12-significant-digit rendering used in every artifact.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // no signed zeros in artifacts
        format!("{:.11e}", 0.0)
    } else if x.is_finite() {
        format!("{x:.11e}")
    } else {
        "null".to_string()
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(";")
}

struct Num(f64);

impl Serialize for Num {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(fmt_num(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Serialize)]
struct JsonThresholds {
    agree_max_below: Num,
    disagree_median_at_least: Num,
}

#[derive(Serialize)]
struct JsonEntry<'a> {
    formula: &'a str,
    variant: &'a str,
    frame: &'a str,
    verdict: &'a str,
    applicable: bool,
    evaluated: usize,
    skipped: usize,
    max_residual: Num,
    median_residual: Num,
    worst_point_index: Option<usize>,
    worst_point: Vec<Num>,
    dominant_term: Option<&'a str>,
    skip_reasons: &'a [String],
}

#[derive(Serialize)]
struct JsonScenario<'a> {
    format: &'static str,
    scenario: &'a str,
    thresholds: JsonThresholds,
    entries: Vec<JsonEntry<'a>>,
}

impl DiscrepancyReport {
    /// One JSON document for one scenario.
    pub fn to_json(&self, scenario: &str) -> Result<String, HarnessError> {
        let doc = JsonScenario {
            format: "foliage-report/1",
            scenario,
            thresholds: JsonThresholds {
                agree_max_below: Num(AGREE_THRESHOLD),
                disagree_median_at_least: Num(DISAGREE_THRESHOLD),
            },
            entries: self
                .entries
                .iter()
                .filter(|e| e.scenario == scenario)
                .map(|e| JsonEntry {
                    formula: e.formula.name(),
                    variant: &e.variant,
                    frame: e.frame.name(),
                    verdict: e.verdict.name(),
                    applicable: e.applicable,
                    evaluated: e.evaluated,
                    skipped: e.skipped,
                    max_residual: Num(e.max_residual),
                    median_residual: Num(e.median_residual),
                    worst_point_index: e.worst_point_index,
                    worst_point: e.worst_point.iter().map(|x| Num(*x)).collect(),
                    dominant_term: e.dominant_term.as_deref(),
                    skip_reasons: &e.skip_reasons,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    /// Plain-text table, one line per entry.
    pub fn summary(&self) -> String {
        let w = self.entries.iter().map(|e| e.scenario.len()).max().unwrap_or(0).max(16);
        let mut out = format!(
            "{:<w$} {:<8} {:<20} {:<13} {:>5} {:>5} {:>18} {:>18}  {}\n",
            "scenario", "formula", "variant", "verdict", "eval", "skip", "max", "median", "dominant"
        );
        for e in &self.entries {
            out.push_str(&format!(
                "{:<w$} {:<8} {:<20} {:<13} {:>5} {:>5} {:>18} {:>18}  {}\n",
                e.scenario,
                e.formula.name(),
                e.variant,
                e.verdict.name(),
                e.evaluated,
                e.skipped,
                fmt_num(e.max_residual),
                fmt_num(e.median_residual),
                e.dominant_term.as_deref().unwrap_or("-")
            ));
        }
        out
    }
}

pub const CSV_HEADER: [&str; 15] = [
    "scenario",
    "formula",
    "variant",
    "frame",
    "seed",
    "point_index",
    "point",
    "inputs",
    "ab",
    "status",
    "structural",
    "oracle",
    "abs_residual",
    "rel_residual",
    "breakdown",
];

/// One CSV row per record; vectors are `;`-separated, input vectors `|`-separated.
pub fn write_records_csv<W: Write>(records: &[ComparisonRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let inputs = r.inputs.iter().map(|v| fmt_list(v)).collect::<Vec<_>>().join("|");
        let ab = r.ab.map_or(String::new(), |(a, b)| fmt_list(&[a, b]));
        let seed = r.seed.to_string();
        let index = r.point_index.to_string();
        let point = fmt_list(&r.point);
        let head = [
            r.scenario.as_str(),
            r.formula.name(),
            r.variant.as_str(),
            r.frame.name(),
            seed.as_str(),
            index.as_str(),
            point.as_str(),
            inputs.as_str(),
            ab.as_str(),
        ];
        match &r.outcome {
            Outcome::Evaluated {
                structural,
                oracle,
                abs_residual,
                rel_residual,
                breakdown,
            } => {
                let terms = breakdown
                    .terms
                    .iter()
                    .map(|t| format!("{} [{}]={}", t.label, t.coefficient, fmt_list(&t.value)))
                    .collect::<Vec<_>>()
                    .join(" | ");
                let mut row: Vec<String> = head.iter().map(|s| s.to_string()).collect();
                row.extend([
                    "evaluated".to_string(),
                    fmt_list(structural),
                    fmt_list(oracle),
                    fmt_num(*abs_residual),
                    fmt_num(*rel_residual),
                    terms,
                ]);
                w.write_record(&row)?;
            }
            Outcome::Skipped { reason } => {
                let mut row: Vec<String> = head.iter().map(|s| s.to_string()).collect();
                row.extend([
                    format!("skipped: {reason}"),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Run metadata written to `meta.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub scenario: String,
    pub warp: String,
    pub formulas: Vec<FormulaId>,
    pub plan: SamplePlan,
}

impl RunMeta {
    pub fn render(&self) -> String {
        let names: Vec<&str> = self.formulas.iter().map(|f| f.name()).collect();
        format!(
            "foliage {}\nscenario {}\nwarp {}\nformulas {}\npoints {}\nseed {}\nframe {}\nmargin {}\nrng ChaCha8 seed_from_u64, point stream 0, per-point stream index+1\nagree_threshold max < {}\ndisagree_threshold median >= {}\nnumber_format %.11e\n",
            env!("CARGO_PKG_VERSION"),
            self.scenario,
            self.warp,
            names.join(","),
            self.plan.points,
            self.plan.seed,
            self.plan.frame.name(),
            fmt_num(self.plan.margin),
            fmt_num(AGREE_THRESHOLD),
            fmt_num(DISAGREE_THRESHOLD),
        )
    }
}

/// Write `report.json`, `records.csv` and `meta.txt` into `dir`.
pub fn write_outputs(
    dir: &Path,
    report: &DiscrepancyReport,
    records: &[ComparisonRecord],
    meta: &RunMeta,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json(&meta.scenario)?)?;
    let csv = std::fs::File::create(dir.join("records.csv"))?;
    write_records_csv(records, std::io::BufWriter::new(csv))?;
    std::fs::write(dir.join("meta.txt"), meta.render())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub n: usize,
    pub f: f64,
    /// `⟨R^{f_n}(X,U)U,X⟩_{f_n}` on the g-orthonormal pair
    pub oracle: f64,
    /// same, divided by `|U|²_{f_n}`
    pub oracle_normalized: f64,
    /// printed mixed-curvature formula at `f_n`
    pub formula: f64,
    pub limit: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitStudy {
    pub scenario: String,
    pub point: Vec<f64>,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub kappa: f64,
    pub limit: f64,
    /// extrapolated `f → 0` value of the oracle column
    pub oracle_limit: f64,
    pub rows: Vec<LimitRow>,
}

/// Constant warps `f_n = 1/n` at one point of a codimension-one scenario.
pub fn limit_study(sc: &Scenario, point: &[f64], n_max: usize) -> Result<LimitStudy, HarnessError> {
    let reject = |m: String| HarnessError::LimitRejected(m);
    let fol = sc.foliation();
    if fol.q() != 1 {
        return Err(reject(format!("requires codimension one, got q = {}", fol.q())));
    }
    let fp = fol.at(point).map_err(|e| reject(e.to_string()))?;
    let x = fp.frame().orthogonal(0);
    let u = fp.frame().tangent(0);
    let kappa = fp
        .local()
        .sectional(x.as_slice(), u.as_slice())
        .map_err(|e| reject(e.to_string()))?;
    let n = fp.local().dim();
    let st1 = Structure::new(&fp, &Jet::constant(n, MAX_ORDER, 1.0), FrameConvention::G).map_err(|e| reject(e.to_string()))?;
    let inputs = FormulaInputs::vectors(vec![x.clone(), u.clone()]);
    let limit = evaluate(FormulaId::LimitK, AS_PRINTED, &inputs, &st1)
        .map_err(|e| reject(e.to_string()))?
        .total_scalar();
    let oracle_limit = oracle_limit_value(sc, point, x.as_slice(), u.as_slice()).map_err(reject)?;
    let mut rows = Vec::new();
    for k in 1..=n_max {
        let f = 1.0 / k as f64;
        let oracle = constant_warp_mixed(sc, point, f, x.as_slice(), u.as_slice()).map_err(reject)?;
        let st = Structure::new(&fp, &Jet::constant(n, MAX_ORDER, f), FrameConvention::G).map_err(|e| reject(e.to_string()))?;
        let formula = evaluate(FormulaId::KXU, AS_PRINTED, &inputs, &st)
            .map_err(|e| reject(e.to_string()))?
            .total_scalar();
        rows.push(LimitRow {
            n: k,
            f,
            oracle,
            oracle_normalized: oracle / (f * f),
            formula,
            limit,
            residual: (oracle - limit).abs(),
        });
    }
    Ok(LimitStudy {
        scenario: sc.name().to_string(),
        point: point.to_vec(),
        x: x.iter().copied().collect(),
        u: u.iter().copied().collect(),
        kappa,
        limit,
        oracle_limit,
        rows,
    })
}

impl LimitStudy {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,f,oracle,oracle_normalized,formula,limit,residual\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n,
                fmt_num(r.f),
                fmt_num(r.oracle),
                fmt_num(r.oracle_normalized),
                fmt_num(r.formula),
                fmt_num(r.limit),
                fmt_num(r.residual)
            ));
        }
        s
    }
}

/// Oracle curvature on a grid: every plane of the adapted frame, the Ricci
/// value along every frame direction, and the scalar curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub point: Vec<f64>,
    pub f: f64,
    pub planes: Vec<f64>,
    pub ric: Vec<f64>,
    pub scalar: f64,
}

pub fn curvature_table(sc: &Scenario, grid: usize, margin: f64) -> Result<Vec<TableRow>, HarnessError> {
    let axes: Vec<Vec<f64>> = sc
        .domain()
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let (a, b) = if sc.periodic(i) { (lo, hi) } else { (lo + margin, hi - margin) };
            (0..grid)
                .map(|k| if grid == 1 { 0.5 * (a + b) } else if sc.periodic(i) { a + (b - a) * k as f64 / grid as f64 } else { a + (b - a) * k as f64 / (grid - 1) as f64 })
                .collect()
        })
        .collect();
    let n = axes.len();
    let total = grid.pow(n as u32);
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut k| {
            let mut pt = vec![0.0; n];
            for i in (0..n).rev() {
                pt[i] = axes[i][k % grid];
                k /= grid;
            }
            pt
        })
        .collect();
    points
        .par_iter()
        .map(|pt| {
            let fp = sc.foliation().at(pt).map_err(|e| HarnessError::Evaluation(e.to_string()))?;
            let frame: Vec<CoordVector> = (0..n).map(|k| fp.frame().vector(k)).collect();
            let oc = crate::warp::oracle_curvatures(sc.warped(), pt, &frame)
                .map_err(|e| HarnessError::Evaluation(e.to_string()))?;
            let f = sc
                .warp()
                .value_at(sc.coords(), pt)
                .map_err(|e| HarnessError::Evaluation(e.to_string()))?;
            Ok(TableRow {
                point: pt.clone(),
                f,
                planes: oc.planes.iter().map(|(_, k)| *k).collect(),
                ric: oc.ric_directions.iter().copied().collect(),
                scalar: oc.scalar,
            })
        })
        .collect()
}

pub fn write_table_csv<W: Write>(sc: &Scenario, rows: &[TableRow], out: W) -> Result<(), HarnessError> {
    let n = sc.coords().len();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = sc.coords().to_vec();
    header.push("f".into());
    for a in 0..n {
        for b in a + 1..n {
            header.push(format!("K_e{a}e{b}"));
        }
    }
    for a in 0..n {
        header.push(format!("ric_e{a}"));
    }
    header.push("scalar".into());
    w.write_record(&header)?;
    for r in rows {
        let mut row: Vec<String> = r.point.iter().map(|x| fmt_num(*x)).collect();
        row.push(fmt_num(r.f));
        row.extend(r.planes.iter().map(|x| fmt_num(*x)));
        row.extend(r.ric.iter().map(|x| fmt_num(*x)));
        row.push(fmt_num(r.scalar));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_thresholds() {
        assert_eq!(Verdict::classify(&[1e-10, 5e-7]), Verdict::Agrees);
        assert_eq!(Verdict::classify(&[2e-3, 5e-3, 1e-9]), Verdict::Disagrees);
        assert_eq!(Verdict::classify(&[1e-9, 1e-9, 2e-3]), Verdict::Inconclusive);
        assert_eq!(Verdict::classify(&[]), Verdict::Inconclusive);
    }

    #[test]
    fn numbers_have_twelve_digits() {
        assert_eq!(fmt_num(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_num(f64::NAN), "null");
    }

    #[test]
    fn plans_are_deterministic() {
        let sc = Scenario::builtin("s2xr").unwrap();
        let plan = SamplePlan::new("s2xr", 20, 9);
        let a = plan.sample_points(&sc);
        assert_eq!(a, plan.sample_points(&sc));
        assert!(a.iter().all(|p| p[0] >= 0.05 && p[0] <= std::f64::consts::PI - 0.05));
    }

    #[test]
    fn empty_report_is_error() {
        let rec = ComparisonRecord {
            scenario: "s".into(),
            formula: FormulaId::KUV,
            variant: AS_PRINTED.into(),
            frame: FrameConvention::G,
            seed: 0,
            point_index: 0,
            point: vec![0.0],
            inputs: vec![],
            ab: None,
            outcome: Outcome::Skipped { reason: "p = 1".into() },
        };
        assert_eq!(emit_report(&[rec]).unwrap_err().to_string(), "no evaluable records");
    }

    #[test]
    fn surface_connection_agrees() {
        let sc = Scenario::builtin("f1-surface").unwrap();
        let plan = SamplePlan::new("f1-surface", 12, 7);
        let formulas = [FormulaId::ConnXY, FormulaId::ConnUV, FormulaId::ConnXU, FormulaId::ConnUX];
        let recs = run_comparisons(&sc, &plan, &formulas);
        assert_eq!(recs.len(), 48);
        let rep = emit_report(&recs).unwrap();
        for id in formulas {
            assert_eq!(rep.entry("f1-surface", id, AS_PRINTED).unwrap().verdict, Verdict::Agrees);
        }
    }
}
