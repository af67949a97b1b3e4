//! Warped metrics `g_f` and the brute-force curvature oracle on them.
//!
//! In an adapted chart write `G_TT`, `G_Tα`, `G_αβ` for the tangent, mixed and
//! transverse coordinate blocks of `g`. The tangent part of `∂_α` is
//! `Σ_ab (G_TT⁻¹)_ab G_bα ∂_a`, so
//!
//! * `g_f(∂_a, ∂_b) = f² g_ab`
//! * `g_f(∂_a, ∂_α) = f² g_aα`
//! * `g_f(∂_α, ∂_β) = g_αβ − (1 − f²) (G_αT G_TT⁻¹ G_Tβ)`
//!
//! Entries are assembled as expressions, so jets of `g_f` stay exact.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::Expr;
use crate::geometry::{CoordVector, GeometryError, LocalMetric, MetricField};
use crate::jet::Jet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WarpError {
    #[error("warp not basic: depends on {coordinate}")]
    NotBasic { coordinate: String },
    #[error("warp not positive: f = {value} at {point:?}")]
    NonPositive { value: f64, point: Vec<f64> },
    #[error("warp evaluation failed: {0}")]
    Eval(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A basic function: an expression in the transverse coordinates only.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpFunction {
    expr: Expr,
}

impl WarpFunction {
    /// Reject any expression that mentions one of the first `p` coordinates.
    pub fn new(expr: Expr, coords: &[String], p: usize) -> Result<Self, WarpError> {
        let vars = expr.variables();
        for c in &coords[..p] {
            if vars.contains(c) {
                return Err(WarpError::NotBasic {
                    coordinate: c.clone(),
                });
            }
        }
        if let Some(v) = vars.iter().find(|v| !coords.contains(v)) {
            return Err(WarpError::Eval(format!("unknown variable '{v}'")));
        }
        Ok(WarpFunction { expr })
    }

    pub fn constant(c: f64) -> Self {
        WarpFunction {
            expr: Expr::constant(c),
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.expr.constant_value()
    }

    pub fn value_at(&self, coords: &[String], point: &[f64]) -> Result<f64, WarpError> {
        let v = self.expr.eval_at(coords, point).map_err(WarpError::Eval)?;
        if !(v > 0.0) {
            return Err(WarpError::NonPositive {
                value: v,
                point: point.to_vec(),
            });
        }
        Ok(v)
    }
}

/// `g_f` together with the data it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedMetric {
    base: MetricField,
    warp: WarpFunction,
    p: usize,
    metric: MetricField,
}

/// Symbolic determinant by cofactor expansion along the first row.
fn determinant(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::Const(1.0),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = Expr::Const(0.0);
            for j in 0..n {
                let minor: Vec<Vec<Expr>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let term = m[0][j].clone() * determinant(&minor);
                acc = if j % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

/// Symbolic inverse via the adjugate.
fn inverse(m: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
    let n = m.len();
    let det = determinant(m);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    // (adj m)_ij = (−1)^{i+j} det(minor_ji)
                    let minor: Vec<Vec<Expr>> = (0..n)
                        .filter(|r| *r != j)
                        .map(|r| (0..n).filter(|c| *c != i).map(|c| m[r][c].clone()).collect())
                        .collect();
                    let cof = determinant(&minor);
                    let signed = if (i + j) % 2 == 0 { cof } else { -cof };
                    signed / det.clone()
                })
                .collect()
        })
        .collect()
}

/// Assemble `g_f` from `g` and a basic warp `f`; the first `p` chart
/// coordinates are tangent to the leaves.
pub fn warp(g: &MetricField, p: usize, f: &WarpFunction) -> WarpedMetric {
    let n = g.dim();
    let f2 = f.expr().clone().square();
    let one_minus = Expr::Const(1.0) - f2.clone();
    let tt: Vec<Vec<Expr>> = (0..p)
        .map(|a| (0..p).map(|b| g.entry(a, b).clone()).collect())
        .collect();
    let tt_inv = inverse(&tt);
    let mut upper = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n - i);
        for j in i..n {
            let e = if j < p || i < p {
                f2.clone() * g.entry(i, j).clone()
            } else {
                let mut corr = Expr::Const(0.0);
                for a in 0..p {
                    for b in 0..p {
                        corr = corr + g.entry(i, a).clone() * tt_inv[a][b].clone() * g.entry(b, j).clone();
                    }
                }
                g.entry(i, j).clone() - one_minus.clone() * corr
            };
            row.push(e);
        }
        upper.push(row);
    }
    let metric =
        MetricField::from_upper(g.coords().to_vec(), upper).expect("square by construction");
    WarpedMetric {
        base: g.clone(),
        warp: f.clone(),
        p,
        metric,
    }
}

impl WarpedMetric {
    pub fn base(&self) -> &MetricField {
        &self.base
    }

    pub fn warp_function(&self) -> &WarpFunction {
        &self.warp
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Oracle at a point: geometry of `g_f` only.
    pub fn oracle_at(&self, point: &[f64]) -> Result<Oracle, WarpError> {
        let f = self.warp.value_at(self.metric.coords(), point)?;
        Ok(Oracle {
            local: LocalMetric::at(&self.metric, point)?,
            f,
        })
    }
}

/// Curvature and connection of `g_f` at a point, computed from its
/// Christoffel symbols without reference to any structural formula.
#[derive(Debug, Clone)]
pub struct Oracle {
    local: LocalMetric,
    f: f64,
}

impl Oracle {
    pub fn local(&self) -> &LocalMetric {
        &self.local
    }

    /// Value of the warping function at the point.
    pub fn warp_value(&self) -> f64 {
        self.f
    }

    /// `∇^f_v w` for a vector field `w` given by component jets.
    pub fn connection(&self, v: &[f64], w: &[Jet]) -> CoordVector {
        self.local.nabla(v, w)
    }

    /// `⟨R^f(a,b)c,d⟩_f`.
    pub fn curvature(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        self.local.curvature_on(a, b, c, d)
    }

    /// Plane curvature, normalized with `g_f`.
    pub fn sectional(&self, v: &[f64], w: &[f64]) -> Result<f64, GeometryError> {
        self.local.sectional(v, w)
    }

    pub fn ricci(&self, e: &[f64], f: &[f64]) -> f64 {
        self.local.ricci_on(e, f)
    }

    /// `Ric^f(E,E)` for `E` rescaled to `g_f`-unit length.
    pub fn ric_direction(&self, e: &[f64]) -> f64 {
        self.local.ricci_on(e, e) / self.local.inner(e, e)
    }

    pub fn scalar(&self) -> f64 {
        self.local.scalar()
    }

    pub fn inner(&self, v: &[f64], w: &[f64]) -> f64 {
        self.local.inner(v, w)
    }
}

pub fn oracle_connection(
    wm: &WarpedMetric,
    point: &[f64],
    v: &[f64],
    w: &[Jet],
) -> Result<CoordVector, WarpError> {
    Ok(wm.oracle_at(point)?.connection(v, w))
}

/// Oracle quantities on a list of frame vectors `e_0..e_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCurvatures {
    /// `⟨R^f(e_a,e_b)e_c,e_d⟩_f`, indexed `((a n + b) n + c) n + d`
    pub riemann: Vec<f64>,
    /// normalized plane curvature for every pair `a < b`
    pub planes: Vec<((usize, usize), f64)>,
    /// `Ric^f(e_a, e_b)`
    pub ricci: DMatrix<f64>,
    /// `Ric^f` along each frame direction, after `g_f` normalization
    pub ric_directions: DVector<f64>,
    pub scalar: f64,
}

pub fn oracle_curvatures(
    wm: &WarpedMetric,
    point: &[f64],
    frame: &[CoordVector],
) -> Result<OracleCurvatures, WarpError> {
    let oracle = wm.oracle_at(point)?;
    let n = frame.len();
    let mut riemann = Vec::with_capacity(n * n * n * n);
    for a in frame {
        for b in frame {
            for c in frame {
                for d in frame {
                    riemann.push(oracle.curvature(a.as_slice(), b.as_slice(), c.as_slice(), d.as_slice()));
                }
            }
        }
    }
    let mut planes = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            planes.push(((a, b), oracle.sectional(frame[a].as_slice(), frame[b].as_slice())?));
        }
    }
    let ricci = DMatrix::from_fn(n, n, |a, b| oracle.ricci(frame[a].as_slice(), frame[b].as_slice()));
    let ric_directions = DVector::from_fn(n, |a, _| oracle.ric_direction(frame[a].as_slice()));
    Ok(OracleCurvatures {
        riemann,
        planes,
        ricci,
        ric_directions,
        scalar: oracle.scalar(),
    })
}
