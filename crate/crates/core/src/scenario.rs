//! Scenario definitions: the built-in registry and the TOML config format.
//!
//! A config file looks like
//!
//! ```toml
//! name = "flat-torus"
//! p = 1
//! q = 1
//! coords = ["x", "y"]
//! metric = [["1", "0"], ["1"]]      # upper triangle, row i holds j = i..n
//! warp = "1.5+0.5*sin(y)"
//! domain = [["0", "2*pi"], ["0", "2*pi"]]
//! periodic = [true, true]
//!
//! [expect]
//! riemannian = true
//! flat = true
//! codim1 = true
//! ```
//!
//! The first `p` coordinates run along the leaves. All entries are
//! expression strings; domain bounds must be constant.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_with_coords, Expr, ParseError};
use crate::foliation::{Foliation, FoliationError};
use crate::geometry::{GeometryError, LocalMetric, MetricField};
use crate::warp::{warp, WarpError, WarpFunction, WarpedMetric};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario '{name}' (available: {})", available.join(", "))]
    Unknown { name: String, available: Vec<String> },
    #[error("scenario '{scenario}': unknown parameter '{param}'")]
    UnknownParameter { scenario: String, param: String },
    #[error("bad parameter '{0}': expected key=value with a numeric value")]
    BadParameter(String),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{field}: {source}")]
    Expression { field: String, source: ParseError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Expected properties; they only select which checks apply.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub riemannian: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codim1: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub p: usize,
    pub q: usize,
    pub coords: Vec<String>,
    pub metric: Vec<Vec<String>>,
    pub warp: String,
    pub domain: Vec<[String; 2]>,
    #[serde(default)]
    pub periodic: Vec<bool>,
    #[serde(default)]
    pub expect: Expectations,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string(self)?)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Parsed metric upper triangle.
    pub fn metric_exprs(&self) -> Result<Vec<Vec<Expr>>, ScenarioError> {
        self.metric
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(k, text)| {
                        let j = i + k;
                        let (a, b) = (&self.coords[i], self.coords.get(j).unwrap_or(&self.coords[i]));
                        parse_with_coords(text, &self.coords).map_err(|source| ScenarioError::Expression {
                            field: format!("metric[{a},{b}]"),
                            source,
                        })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn warp_expr(&self) -> Result<Expr, ScenarioError> {
        parse_with_coords(&self.warp, &self.coords).map_err(|source| ScenarioError::Expression {
            field: "warp".into(),
            source,
        })
    }

    /// Numeric domain box.
    pub fn domain_box(&self) -> Result<Vec<(f64, f64)>, ScenarioError> {
        let mut out = Vec::new();
        for (i, [lo, hi]) in self.domain.iter().enumerate() {
            let eval = |t: &str| -> Result<f64, ScenarioError> {
                let e = parse_with_coords(t, &[]).map_err(|source| ScenarioError::Expression {
                    field: format!("domain[{i}]"),
                    source,
                })?;
                e.eval(&|_| None).map_err(ScenarioError::Invalid)
            };
            let (a, b) = (eval(lo)?, eval(hi)?);
            if !(a < b) {
                return Err(ScenarioError::Invalid(format!(
                    "domain[{i}]: lower bound {a} not below upper bound {b}"
                )));
            }
            out.push((a, b));
        }
        Ok(out)
    }

    /// Parse and check every invariant without doing any numerics beyond
    /// one metric evaluation at the domain center.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.dim();
        if self.p == 0 || self.q == 0 || self.p + self.q != n {
            return Err(ScenarioError::Invalid(format!(
                "p = {}, q = {} do not split {} coordinates",
                self.p, self.q, n
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.coords {
            if c == "pi" || !seen.insert(c) {
                return Err(ScenarioError::Invalid(format!("invalid or repeated coordinate '{c}'")));
            }
        }
        if self.metric.len() != n || self.metric.iter().enumerate().any(|(i, r)| r.len() != n - i) {
            return Err(ScenarioError::Invalid(format!(
                "metric must list the upper triangle: row i has {n} - i entries"
            )));
        }
        if self.domain.len() != n {
            return Err(ScenarioError::Invalid(format!("domain needs {n} intervals")));
        }
        if !self.periodic.is_empty() && self.periodic.len() != n {
            return Err(ScenarioError::Invalid(format!("periodic needs {n} flags")));
        }
        WarpFunction::new(self.warp_expr()?, &self.coords, self.p)?;
        self.metric_exprs()?;
        let domain = self.domain_box()?;
        let center: Vec<f64> = domain.iter().map(|(a, b)| 0.5 * (a + b)).collect();
        let g = MetricField::from_upper(self.coords.clone(), self.metric_exprs()?)?;
        LocalMetric::at(&g, &center)?;
        Ok(())
    }
}

/// A validated scenario with its numeric objects.
#[derive(Debug, Clone)]
pub struct Scenario {
    spec: ScenarioSpec,
    foliation: Foliation,
    warp: WarpFunction,
    warped: WarpedMetric,
    domain: Vec<(f64, f64)>,
}

impl Scenario {
    pub fn from_spec(spec: ScenarioSpec) -> Result<Self, ScenarioError> {
        spec.validate()?;
        let g = MetricField::from_upper(spec.coords.clone(), spec.metric_exprs()?)?;
        let foliation = Foliation::new(g, spec.p)?;
        let warp_fn = WarpFunction::new(spec.warp_expr()?, &spec.coords, spec.p)?;
        let warped = warp(foliation.metric(), spec.p, &warp_fn);
        let domain = spec.domain_box()?;
        Ok(Scenario {
            spec,
            foliation,
            warp: warp_fn,
            warped,
            domain,
        })
    }

    /// Look up a built-in scenario (`name` or `name:key=value,...`).
    pub fn builtin(query: &str) -> Result<Self, ScenarioError> {
        Self::from_spec(lookup(query)?)
    }

    /// Same geometry with another warp expression.
    pub fn with_warp(&self, text: &str) -> Result<Self, ScenarioError> {
        let mut spec = self.spec.clone();
        spec.warp = text.to_string();
        Self::from_spec(spec)
    }

    pub fn with_constant_warp(&self, c: f64) -> Result<Self, ScenarioError> {
        if !(c > 0.0) {
            return Err(ScenarioError::Invalid(format!("constant warp must be positive, got {c}")));
        }
        self.with_warp(&format!("{c:?}"))
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn foliation(&self) -> &Foliation {
        &self.foliation
    }

    pub fn warp(&self) -> &WarpFunction {
        &self.warp
    }

    pub fn warped(&self) -> &WarpedMetric {
        &self.warped
    }

    pub fn coords(&self) -> &[String] {
        &self.spec.coords
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn periodic(&self, i: usize) -> bool {
        self.spec.periodic.get(i).copied().unwrap_or(false)
    }

    pub fn center(&self) -> Vec<f64> {
        self.domain.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Parse a point written `x=0.1;y=2`; missing coordinates default to
    /// the domain center.
    pub fn parse_point(&self, text: &str) -> Result<Vec<f64>, ScenarioError> {
        let mut pt = self.center();
        for part in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| ScenarioError::Invalid(format!("point component '{part}' is not name=value")))?;
            let idx = self
                .coords()
                .iter()
                .position(|c| c == k.trim())
                .ok_or_else(|| ScenarioError::Invalid(format!("unknown coordinate '{}' in point", k.trim())))?;
            let e = parse_with_coords(v.trim(), &[]).map_err(|source| ScenarioError::Expression {
                field: format!("point[{}]", k.trim()),
                source,
            })?;
            pt[idx] = e.eval(&|_| None).map_err(ScenarioError::Invalid)?;
        }
        Ok(pt)
    }
}

fn strings(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
}

fn interval(lo: &str, hi: &str) -> [String; 2] {
    [lo.to_string(), hi.to_string()]
}

fn expect(riemannian: bool, flat: bool, codim1: bool) -> Expectations {
    Expectations {
        riemannian: Some(riemannian),
        flat: Some(flat),
        codim1: Some(codim1),
    }
}

fn torus(name: &str, a: f64, warp: &str, description: &str) -> ScenarioSpec {
    let metric = if a == 0.0 {
        strings(&[&["1", "0"], &["1"]])
    } else {
        let g00 = format!("1+({a:?})^2*cos(x)^2");
        let g01 = format!("({a:?})*cos(x)");
        vec![vec![g00, g01], vec!["1".into()]]
    };
    ScenarioSpec {
        name: name.into(),
        description: description.into(),
        p: 1,
        q: 1,
        coords: vec!["x".into(), "y".into()],
        metric,
        warp: warp.into(),
        domain: vec![interval("0", "2*pi"), interval("0", "2*pi")],
        periodic: vec![true, true],
        expect: expect(a == 0.0, true, true),
    }
}

fn hopf(name: &str, warp: &str, description: &str) -> ScenarioSpec {
    ScenarioSpec {
        name: name.into(),
        description: description.into(),
        p: 1,
        q: 2,
        coords: vec!["t".into(), "eta".into(), "phi".into()],
        metric: strings(&[&["1", "0", "sin(eta)^2"], &["1", "0"], &["sin(eta)^2"]]),
        warp: warp.into(),
        domain: vec![interval("0", "2*pi"), interval("0", "pi/2"), interval("0", "2*pi")],
        periodic: vec![true, false, true],
        expect: expect(true, false, false),
    }
}

const NAMES: [&str; 7] = [
    "flat-torus",
    "sheared-torus",
    "f1-surface",
    "round-S3-hopf",
    "berger",
    "hopf-cylinder",
    "s2xr",
];

/// Default parameters of each parametrized scenario.
fn defaults(name: &str) -> BTreeMap<&'static str, f64> {
    match name {
        "sheared-torus" => BTreeMap::from([("a", 0.3)]),
        "berger" => BTreeMap::from([("eps", 0.5)]),
        _ => BTreeMap::new(),
    }
}

fn build(name: &str, params: &BTreeMap<&str, f64>) -> ScenarioSpec {
    match name {
        "flat-torus" => torus(name, 0.0, "1.5+0.5*sin(y)", "flat torus foliated by x-circles"),
        "sheared-torus" => torus(
            name,
            params["a"],
            "1.5+0.5*cos(y)",
            "flat torus with sheared chart; leaves are x-lines, not Riemannian",
        ),
        "f1-surface" => ScenarioSpec {
            name: name.into(),
            description: "plane foliated by horizontal lines, f = 2 + sin y".into(),
            p: 1,
            q: 1,
            coords: vec!["x".into(), "y".into()],
            metric: strings(&[&["1", "0"], &["1"]]),
            warp: "2+sin(y)".into(),
            domain: vec![interval("0", "2*pi"), interval("0", "2*pi")],
            periodic: vec![true, true],
            expect: expect(true, true, true),
        },
        "round-S3-hopf" => hopf(name, "1.2+0.3*cos(2*eta)", "unit 3-sphere in a Hopf-adapted chart"),
        "berger" => {
            let mut s = hopf(name, &format!("{:?}", params["eps"]), "Berger sphere: Hopf fibers scaled by eps");
            s.description = format!("Berger sphere: Hopf fibers scaled by eps = {:?}", params["eps"]);
            s
        }
        "hopf-cylinder" => ScenarioSpec {
            name: name.into(),
            description: "Hopf fibration times a circle with transversally varying length".into(),
            p: 2,
            q: 2,
            coords: vec!["t".into(), "s".into(), "eta".into(), "phi".into()],
            metric: strings(&[
                &["1", "0", "0", "sin(eta)^2"],
                &["(1+0.5*sin(eta)^2)^2", "0", "0"],
                &["1", "0"],
                &["sin(eta)^2"],
            ]),
            warp: "1.3+0.2*cos(2*eta)+0.1*sin(2*eta)*cos(phi)".into(),
            domain: vec![
                interval("0", "2*pi"),
                interval("0", "2*pi"),
                interval("0", "pi/2"),
                interval("0", "2*pi"),
            ],
            periodic: vec![true, true, false, true],
            expect: expect(true, false, false),
        },
        "s2xr" => ScenarioSpec {
            name: name.into(),
            description: "round 2-spheres times a line".into(),
            p: 2,
            q: 1,
            coords: vec!["th".into(), "ph".into(), "z".into()],
            metric: strings(&[&["1", "0", "0"], &["sin(th)^2", "0"], &["1"]]),
            warp: "1.5+0.5*sin(z)".into(),
            domain: vec![interval("0", "pi"), interval("0", "2*pi"), interval("0", "2*pi")],
            periodic: vec![false, true, true],
            expect: expect(true, false, true),
        },
        _ => unreachable!("checked by caller"),
    }
}

/// Every built-in scenario at its default parameters.
pub fn builtin_scenarios() -> Vec<ScenarioSpec> {
    NAMES.iter().map(|n| build(n, &defaults(n))).collect()
}

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

/// Resolve `name` or `name:key=value,key=value`.
pub fn lookup(query: &str) -> Result<ScenarioSpec, ScenarioError> {
    let (name, rest) = match query.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (query.trim(), ""),
    };
    let Some(&name) = NAMES.iter().find(|n| **n == name) else {
        return Err(ScenarioError::Unknown {
            name: name.to_string(),
            available: NAMES.iter().map(|s| s.to_string()).collect(),
        });
    };
    let mut params = defaults(name);
    for kv in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| ScenarioError::BadParameter(kv.into()))?;
        let value: f64 = v.trim().parse().map_err(|_| ScenarioError::BadParameter(kv.into()))?;
        let slot = params.get_mut(k.trim()).ok_or_else(|| ScenarioError::UnknownParameter {
            scenario: name.into(),
            param: k.trim().into(),
        })?;
        *slot = value;
    }
    Ok(build(name, &params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        let s = lookup("flat-torus").unwrap();
        assert_eq!((s.p, s.q), (1, 1));
        assert_eq!(s.metric, strings(&[&["1", "0"], &["1"]]));
        let sc = Scenario::from_spec(s).unwrap();
        assert!((sc.domain()[1].1 - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        let b = lookup("berger:eps=0.25").unwrap();
        assert_eq!(b.warp, "0.25");
        assert!(matches!(lookup("berger:a=1"), Err(ScenarioError::UnknownParameter { .. })));
        assert!(lookup("nope").unwrap_err().to_string().contains("hopf-cylinder"));
    }

    #[test]
    fn builtins_validate_and_round_trip() {
        for spec in builtin_scenarios() {
            spec.validate().unwrap();
            let text = spec.to_toml().unwrap();
            let back = ScenarioSpec::from_toml(&text).unwrap();
            assert_eq!(back, spec);
            assert_eq!(back.metric_exprs().unwrap(), spec.metric_exprs().unwrap());
        }
    }

    #[test]
    fn non_basic_warp_rejected() {
        let mut s = lookup("flat-torus").unwrap();
        s.warp = "1+0.1*sin(x)".into();
        assert_eq!(s.validate().unwrap_err().to_string(), "warp not basic: depends on x");
    }

    #[test]
    fn config_errors() {
        let mut s = lookup("f1-surface").unwrap();
        s.metric[0][0] = "1+w".into();
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("unknown identifier 'w'") && msg.contains("x, y"), "{msg}");
        let mut s = lookup("f1-surface").unwrap();
        s.p = 2;
        assert!(s.validate().is_err());
        assert!(ScenarioSpec::from_toml("name = 3").is_err());
    }

    #[test]
    fn point_syntax() {
        let sc = Scenario::builtin("flat-torus").unwrap();
        let pt = sc.parse_point("x=0; y=pi/2").unwrap();
        assert_eq!(pt, vec![0.0, std::f64::consts::FRAC_PI_2]);
        assert!(sc.parse_point("z=1").is_err());
    }
}
