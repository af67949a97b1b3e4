//! Structural formulas for the warped metric, transcribed term by term.
//!
//! Every evaluation returns a [`TermBreakdown`]; the oracle never enters
//! here. All inner products are taken with the unwarped metric `g`, and the
//! input vectors are whatever the caller supplies (normally g-orthonormal
//! frame combinations). Trace frames follow [`FrameConvention`].

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use thiserror::Error;

use crate::foliation::{FoliatedPoint, FoliationError};
use crate::geometry::{CoordVector, GradHess, LocalMetric};
use crate::jet::Jet;

type V = CoordVector;

/// Tolerance for slot-type and normalization checks on inputs.
pub const INPUT_TOL: f64 = 1e-9;
/// Limit-formula precondition on the unwarped mixed curvature.
pub const FLAT_PLANE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormulaId {
    ConnXY,
    ConnUV,
    ConnXU,
    ConnUX,
    RXYZW,
    RXYZU,
    RXUYV,
    RUVXY,
    RUVPX,
    RUVPQ,
    KXY,
    KXU,
    KUV,
    RicUV,
    RicXY,
    RicXU,
    RicE,
    Scalar,
    LimitK,
}

/// Slot type of a formula input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Tangent,
    Orthogonal,
}

use Slot::{Orthogonal as O, Tangent as T};

impl FormulaId {
    pub const ALL: [FormulaId; 19] = [
        FormulaId::ConnXY,
        FormulaId::ConnUV,
        FormulaId::ConnXU,
        FormulaId::ConnUX,
        FormulaId::RXYZW,
        FormulaId::RXYZU,
        FormulaId::RXUYV,
        FormulaId::RUVXY,
        FormulaId::RUVPX,
        FormulaId::RUVPQ,
        FormulaId::KXY,
        FormulaId::KXU,
        FormulaId::KUV,
        FormulaId::RicUV,
        FormulaId::RicXY,
        FormulaId::RicXU,
        FormulaId::RicE,
        FormulaId::Scalar,
        FormulaId::LimitK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulaId::ConnXY => "CONN_XY",
            FormulaId::ConnUV => "CONN_UV",
            FormulaId::ConnXU => "CONN_XU",
            FormulaId::ConnUX => "CONN_UX",
            FormulaId::RXYZW => "R_XYZW",
            FormulaId::RXYZU => "R_XYZU",
            FormulaId::RXUYV => "R_XUYV",
            FormulaId::RUVXY => "R_UVXY",
            FormulaId::RUVPX => "R_UVPX",
            FormulaId::RUVPQ => "R_UVPQ",
            FormulaId::KXY => "K_XY",
            FormulaId::KXU => "K_XU",
            FormulaId::KUV => "K_UV",
            FormulaId::RicUV => "RIC_UV",
            FormulaId::RicXY => "RIC_XY",
            FormulaId::RicXU => "RIC_XU",
            FormulaId::RicE => "RIC_E",
            FormulaId::Scalar => "SCALAR",
            FormulaId::LimitK => "LIMIT_K",
        }
    }

    /// Input slot types, in argument order.
    pub fn slots(self) -> &'static [Slot] {
        match self {
            FormulaId::ConnXY => &[O, O],
            FormulaId::ConnUV => &[T, T],
            FormulaId::ConnXU => &[O, T],
            FormulaId::ConnUX => &[T, O],
            FormulaId::RXYZW => &[O, O, O, O],
            FormulaId::RXYZU => &[O, O, O, T],
            FormulaId::RXUYV => &[O, T, O, T],
            FormulaId::RUVXY => &[T, T, O, O],
            FormulaId::RUVPX => &[T, T, T, O],
            FormulaId::RUVPQ => &[T, T, T, T],
            FormulaId::KXY => &[O, O],
            FormulaId::KXU => &[O, T],
            FormulaId::KUV => &[T, T],
            FormulaId::RicUV => &[T, T],
            FormulaId::RicXY => &[O, O],
            FormulaId::RicXU => &[O, T],
            FormulaId::RicE => &[T, O],
            FormulaId::Scalar => &[],
            FormulaId::LimitK => &[O, T],
        }
    }

    /// Connection formulas produce vectors; everything else a number.
    pub fn is_vector(self) -> bool {
        matches!(
            self,
            FormulaId::ConnXY | FormulaId::ConnUV | FormulaId::ConnXU | FormulaId::ConnUX
        )
    }

    /// The displayed formula in plain text.
    pub fn display(self) -> &'static str {
        match self {
            FormulaId::ConnXY => "∇^f_X Y = (∇_X Y)^⊥ + (1/f²)(∇_X Y)^⊤ − ((1−f²)/f²) A(X,Y)",
            FormulaId::ConnUV => "∇^f_U V = (∇_U V)^⊤ + f²(∇_U V)^⊥ − ½⟨U,V⟩∇f²",
            FormulaId::ConnXU => "∇^f_X U = ∇_X U + ½(Xf²/f²)U − (1−f²)A(X,U)",
            FormulaId::ConnUX => "∇^f_U X = ∇_U X + ½(Xf²/f²)U − (1−f²)A(X,U)",
            FormulaId::RXYZW => "⟨R^f(X,Y)Z,W⟩_f",
            FormulaId::RXYZU => "⟨R^f(X,Y)Z,U⟩_f",
            FormulaId::RXUYV => "⟨R^f(X,U)Y,V⟩_f",
            FormulaId::RUVXY => "⟨R^f(U,V)X,Y⟩_f",
            FormulaId::RUVPX => "⟨R^f(U,V)P,X⟩_f",
            FormulaId::RUVPQ => "⟨R^f(U,V)P,Q⟩_f",
            FormulaId::KXY => "κ^f(X,Y)",
            FormulaId::KXU => "κ^f(X,U)",
            FormulaId::KUV => "κ^f(U,V)",
            FormulaId::RicUV => "Ric^f(U,V)",
            FormulaId::RicXY => "Ric^f(X,Y)",
            FormulaId::RicXU => "Ric^f(X,U)",
            FormulaId::RicE => "ric^f(aU + bX)",
            FormulaId::Scalar => "s^f",
            FormulaId::LimitK => "lim κ^{f_n}(X,U) = −⟨(∇_U S)(X,X),U⟩ + ‖S(X,U)‖²",
        }
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FormulaId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let up = s.trim().to_ascii_uppercase();
        FormulaId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == up)
            .ok_or_else(|| {
                let names: Vec<&str> = FormulaId::ALL.iter().map(|i| i.name()).collect();
                format!("unknown formula '{s}' (valid: {})", names.join(", "))
            })
    }
}

/// Which orthonormal frame supplies the tangent trace vectors `U_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameConvention {
    /// `U_i` orthonormal for `g`
    G,
    /// `U_i` orthonormal for `g_f`, i.e. the g-orthonormal vectors divided by `f`
    Gf,
}

impl FrameConvention {
    pub fn name(self) -> &'static str {
        match self {
            FrameConvention::G => "g",
            FrameConvention::Gf => "gf",
        }
    }
}

impl FromStr for FrameConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "g" => Ok(FrameConvention::G),
            "gf" | "g_f" => Ok(FrameConvention::Gf),
            _ => Err(format!("unknown frame convention '{s}' (valid: g, gf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    /// a reading of an evidently misprinted symbol, applied in the as-printed path
    Typographical,
    /// an alternative formula evaluated alongside the as-printed one
    Curated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantInfo {
    pub id: &'static str,
    pub formula: Option<FormulaId>,
    pub kind: VariantKind,
    pub deviation: &'static str,
}

/// Identifier of the printed form of every formula.
pub const AS_PRINTED: &str = "as-printed";

static REGISTRY: [VariantInfo; 17] = [
    VariantInfo {
        id: "sum-ranges",
        formula: None,
        kind: VariantKind::Typographical,
        deviation: "trace sums written Σ_{i−1}^p and Σ_{i=1}{q} are read as Σ_{i=1}^p and Σ_{i=1}^q",
    },
    VariantInfo {
        id: "nabla-perp-sum",
        formula: Some(FormulaId::RicXY),
        kind: VariantKind::Typographical,
        deviation: "⟨S_Y^⊤,(∇_X^⊥)^⊤⟩ is computed as Σ_{i=1}^p ⟨S(Y,U_i),(∇_X U_i)^⊥⟩ (printed upper limit q)",
    },
    VariantInfo {
        id: "mean-perp",
        formula: None,
        kind: VariantKind::Typographical,
        deviation: "H^⊥ printed as Σ T(X_i,X_i), which vanishes identically; read as Σ S(X_j,X_j)",
    },
    VariantInfo {
        id: "uvpq-brackets",
        formula: Some(FormulaId::RUVPQ),
        kind: VariantKind::Typographical,
        deviation: "unclosed ⟨∇f, T(V,Q⟩ and ⟨T(U,P),T(V,Q⟩ closed after the second argument",
    },
    VariantInfo {
        id: "ric-e-parentheses",
        formula: Some(FormulaId::RicE),
        kind: VariantKind::Typographical,
        deviation: "2ab(Ric(X,U) + b²Ric(X,X) read as 2ab·Ric(X,U) + b²·Ric(X,X)",
    },
    VariantInfo {
        id: "s-top-perp-range",
        formula: Some(FormulaId::Scalar),
        kind: VariantKind::Typographical,
        deviation: "(s^⊤)^⊥ = Σ Ric^⊥(U_i,U_i) summed over the p tangent vectors (printed upper limit q)",
    },
    VariantInfo {
        id: "limit-subscript",
        formula: Some(FormulaId::LimitK),
        kind: VariantKind::Typographical,
        deviation: "(∇_S)(X,X) read as (∇_U S)(X,X)",
    },
    VariantInfo {
        id: "rxyzw-coef",
        formula: Some(FormulaId::RXYZW),
        kind: VariantKind::Curated,
        deviation: "second line ⟨A(X,W),A(Y,Z)⟩ − ⟨A(X,Z),A(Y,W)⟩ multiplied by (1−f²)",
    },
    VariantInfo {
        id: "rxyzu-antisym",
        formula: Some(FormulaId::RXYZU),
        kind: VariantKind::Curated,
        deviation: "−(Yf/f)⟨S(X,Z),U⟩ replaced by +(Yf/f)⟨S(X,Z),U⟩, restoring X↔Y antisymmetry",
    },
    VariantInfo {
        id: "rxuyv-s-sign",
        formula: Some(FormulaId::RXUYV),
        kind: VariantKind::Curated,
        deviation: "sign of −(1−f²)⟨S(Y,V),(∇_X U)^⊥⟩ reversed",
    },
    VariantInfo {
        id: "ric-uv-s-sign",
        formula: Some(FormulaId::RicUV),
        kind: VariantKind::Curated,
        deviation: "sign of (1−f²)⟨S^⊥U,S^⊥V⟩ reversed",
    },
    VariantInfo {
        id: "rtop-ambient",
        formula: Some(FormulaId::RUVPQ),
        kind: VariantKind::Curated,
        deviation: "R^⊤ taken as the ambient curvature on tangent vectors instead of the leaf curvature",
    },
    VariantInfo {
        id: "kappa-gf-normalized",
        formula: Some(FormulaId::KXU),
        kind: VariantKind::Curated,
        deviation: "printed value divided by |U|_f² = f² (true plane curvature for g-orthonormal inputs)",
    },
    VariantInfo {
        id: "kappa-gf-normalized",
        formula: Some(FormulaId::KUV),
        kind: VariantKind::Curated,
        deviation: "printed value divided by |U|_f²|V|_f² = f⁴",
    },
    VariantInfo {
        id: "kxu-rescaled",
        formula: Some(FormulaId::KXU),
        kind: VariantKind::Curated,
        deviation: "κ − h_f(X,X)/f + (2Xf/f)⟨T(U,U),X⟩ + ((1−f²)/f²)[⟨(∇_U S)(X,X),U⟩ − ‖S(X,U)‖²] − (1−f²)‖A(X,U)‖²",
    },
    VariantInfo {
        id: "scalar-trace",
        formula: Some(FormulaId::Scalar),
        kind: VariantKind::Curated,
        deviation: "s^f as Σ ric^f(E_i) over a g_f-orthonormal basis, using the ric^f(E) formula",
    },
    VariantInfo {
        id: "limit-sign",
        formula: Some(FormulaId::LimitK),
        kind: VariantKind::Curated,
        deviation: "opposite sign: +⟨(∇_U S)(X,X),U⟩ − ‖S(X,U)‖²",
    },
];

/// Fixed registry of typographical readings and curated alternatives.
pub fn variant_registry() -> &'static [VariantInfo] {
    &REGISTRY
}

/// Variant ids evaluated for a formula: the printed form first, then the
/// curated alternatives.
pub fn variants_for(id: FormulaId) -> Vec<&'static str> {
    let mut out = vec![AS_PRINTED];
    for v in REGISTRY.iter() {
        if v.kind == VariantKind::Curated && v.formula == Some(id) {
            out.push(v.id);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("{formula}: expected {expected} inputs, got {got}")]
    Arity {
        formula: FormulaId,
        expected: usize,
        got: usize,
    },
    #[error("{formula}: input {slot} must be {expected:?} to the foliation")]
    SlotMismatch {
        formula: FormulaId,
        slot: usize,
        expected: Slot,
    },
    #[error("{formula}: {reason}")]
    Usage { formula: FormulaId, reason: String },
    #[error("{formula}: {reason}")]
    Dimension { formula: FormulaId, reason: String },
    #[error("{formula}: precondition failed, unwarped κ(X,U) = {kappa:e}")]
    Precondition { formula: FormulaId, kappa: f64 },
    #[error("{formula}: unknown variant '{variant}'")]
    UnknownVariant { formula: FormulaId, variant: String },
    #[error("warp not positive at the point: f = {0}")]
    NonPositiveWarp(f64),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub label: String,
    pub coefficient: String,
    /// Term value with its coefficient applied; one entry for scalars,
    /// coordinate components for vectors.
    pub value: Vec<f64>,
}

/// Labeled terms of one formula evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TermBreakdown {
    pub terms: Vec<Term>,
}

impl TermBreakdown {
    fn scalar(&mut self, label: &str, coefficient: &str, value: f64) {
        self.terms.push(Term {
            label: label.to_string(),
            coefficient: coefficient.to_string(),
            value: vec![value],
        });
    }

    fn vector(&mut self, label: &str, coefficient: &str, value: V) {
        self.terms.push(Term {
            label: label.to_string(),
            coefficient: coefficient.to_string(),
            value: value.iter().copied().collect(),
        });
    }

    /// Component-wise sum of the term values.
    pub fn total(&self) -> Vec<f64> {
        let len = self.terms.first().map_or(1, |t| t.value.len());
        let mut out = vec![0.0; len];
        for t in &self.terms {
            for (o, v) in out.iter_mut().zip(&t.value) {
                *o += v;
            }
        }
        out
    }

    pub fn total_scalar(&self) -> f64 {
        self.total()[0]
    }

    pub fn total_vector(&self) -> V {
        DVector::from_vec(self.total())
    }

    pub fn term(&self, label: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.label == label)
    }

    fn scale_all(&mut self, s: f64, note: &str) {
        for t in &mut self.terms {
            for v in &mut t.value {
                *v *= s;
            }
            t.coefficient = format!("({}){note}", t.coefficient);
        }
    }
}

/// Everything the formulas draw on at one point: the unwarped foliation
/// structure, the warp value with its derivatives, and the trace frames.
pub struct Structure<'a> {
    fp: &'a FoliatedPoint,
    f: f64,
    df: GradHess,
    convention: FrameConvention,
    tangent: Vec<V>,
    orth: Vec<V>,
    leaf: Option<LocalMetric>,
    mean_t: V,
    mean_perp: V,
}

impl<'a> Structure<'a> {
    /// `warp` is the jet of the warping function at the point (order ≥ 2).
    pub fn new(fp: &'a FoliatedPoint, warp: &Jet, convention: FrameConvention) -> Result<Self, FormulaError> {
        let f = warp.value();
        if !(f > 0.0) {
            return Err(FormulaError::NonPositiveWarp(f));
        }
        let df = fp.local().grad_hess(warp);
        let scale = match convention {
            FrameConvention::G => 1.0,
            FrameConvention::Gf => 1.0 / f,
        };
        let tangent: Vec<V> = fp.frame().tangents().into_iter().map(|u| u * scale).collect();
        let orth = fp.frame().orthogonals();
        let leaf = if fp.p() >= 2 { Some(fp.leaf()?) } else { None };
        let n = fp.local().dim();
        let mut mean_t = DVector::zeros(n);
        for u in &tangent {
            mean_t += fp.t(u.as_slice(), u.as_slice());
        }
        let mut mean_perp = DVector::zeros(n);
        for x in &orth {
            mean_perp += fp.s(x.as_slice(), x.as_slice());
        }
        Ok(Structure {
            fp,
            f,
            df,
            convention,
            tangent,
            orth,
            leaf,
            mean_t,
            mean_perp,
        })
    }

    pub fn point(&self) -> &FoliatedPoint {
        self.fp
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn convention(&self) -> FrameConvention {
        self.convention
    }

    pub fn p(&self) -> usize {
        self.fp.p()
    }

    pub fn q(&self) -> usize {
        self.fp.q()
    }

    /// Gradient and Hessian of `f` with respect to `g`.
    pub fn warp_derivatives(&self) -> &GradHess {
        &self.df
    }

    /// Tangent trace frame in the chosen convention.
    pub fn trace_tangents(&self) -> &[V] {
        &self.tangent
    }

    pub fn trace_orthogonals(&self) -> &[V] {
        &self.orth
    }

    /// `H^F = Σ T(U_i,U_i)` over the trace frame.
    pub fn mean_tangent(&self) -> &V {
        &self.mean_t
    }

    /// `H^⊥ = Σ S(X_j,X_j)`.
    pub fn mean_orthogonal(&self) -> &V {
        &self.mean_perp
    }

    fn g(&self, a: &V, b: &V) -> f64 {
        self.fp.inner(a.as_slice(), b.as_slice())
    }

    fn t(&self, a: &V, b: &V) -> V {
        self.fp.t(a.as_slice(), b.as_slice())
    }

    fn s(&self, a: &V, b: &V) -> V {
        self.fp.s(a.as_slice(), b.as_slice())
    }

    fn a(&self, a: &V, b: &V) -> V {
        self.fp.a(a.as_slice(), b.as_slice())
    }

    fn ns(&self, e: &V, x: &V, y: &V) -> V {
        self.fp.nabla_s(e.as_slice()).apply(x.as_slice(), y.as_slice())
    }

    fn na(&self, e: &V, x: &V, y: &V) -> V {
        self.fp.nabla_a(e.as_slice()).apply(x.as_slice(), y.as_slice())
    }

    /// `⟨R(a,b)c,d⟩` of `g`.
    fn r(&self, a: &V, b: &V, c: &V, d: &V) -> f64 {
        self.fp.local().curvature_on(a.as_slice(), b.as_slice(), c.as_slice(), d.as_slice())
    }

    fn ric(&self, a: &V, b: &V) -> f64 {
        self.fp.local().ricci_on(a.as_slice(), b.as_slice())
    }

    fn xf(&self, x: &V) -> f64 {
        self.df.along(x.as_slice())
    }

    fn h(&self, x: &V, y: &V) -> f64 {
        self.df.h(x.as_slice(), y.as_slice())
    }

    fn hop(&self, u: &V) -> V {
        self.df.operator(u.as_slice())
    }

    fn grad(&self) -> &V {
        &self.df.gradient
    }

    fn grad2(&self) -> f64 {
        self.g(self.grad(), self.grad())
    }

    /// `Σ_j ⟨R(X_j,E)F,X_j⟩`.
    fn ric_perp(&self, e: &V, f: &V) -> f64 {
        self.orth.iter().map(|x| self.r(x, e, f, x)).sum()
    }

    /// `Σ_i ⟨R(U_i,E)F,U_i⟩` over the trace frame.
    fn ric_top(&self, e: &V, f: &V) -> f64 {
        self.tangent.iter().map(|u| self.r(u, e, f, u)).sum()
    }

    /// Leaf Ricci form; zero on one-dimensional leaves.
    fn ric_leaf(&self, u: &V, v: &V) -> f64 {
        let p = self.p();
        match &self.leaf {
            Some(l) => l.ricci_on(&u.as_slice()[..p], &v.as_slice()[..p]),
            None => 0.0,
        }
    }

    fn r_leaf(&self, a: &V, b: &V, c: &V, d: &V) -> f64 {
        let p = self.p();
        match &self.leaf {
            Some(l) => l.curvature_on(&a.as_slice()[..p], &b.as_slice()[..p], &c.as_slice()[..p], &d.as_slice()[..p]),
            None => 0.0,
        }
    }

    /// Jets of the field extending `v` with constant coefficients in the
    /// adapted frame.
    pub fn field_of(&self, v: &V) -> Vec<Jet> {
        let frame = self.fp.frame();
        let n = v.len();
        let mut out: Vec<Jet> = Vec::new();
        for k in 0..n {
            let c = self.g(v, &frame.vector(k));
            let field = frame.field(k);
            if out.is_empty() {
                out = field.iter().map(|j| j.scale(c)).collect();
            } else {
                for (o, j) in out.iter_mut().zip(field) {
                    *o += &j.scale(c);
                }
            }
        }
        out
    }

    /// `∇_e` of the frame extension of `v`, for `g`.
    pub fn nabla(&self, e: &V, v: &V) -> V {
        self.fp.local().nabla(e.as_slice(), &self.field_of(v))
    }

    /// `(∇_X U)^⊥` from the frame-field derivative.
    fn perp_nabla(&self, x: &V, u: &V) -> V {
        self.fp.orthogonal_part(self.nabla(x, u).as_slice())
    }

    fn top(&self, v: &V) -> V {
        self.fp.tangent_part(v.as_slice())
    }

    fn perp(&self, v: &V) -> V {
        self.fp.orthogonal_part(v.as_slice())
    }

    fn check_slots(&self, id: FormulaId, inputs: &[V]) -> Result<(), FormulaError> {
        let slots = id.slots();
        if inputs.len() != slots.len() {
            return Err(FormulaError::Arity {
                formula: id,
                expected: slots.len(),
                got: inputs.len(),
            });
        }
        for (k, (v, slot)) in inputs.iter().zip(slots).enumerate() {
            let scale = self.fp.local().norm(v.as_slice()).max(1.0);
            let off = match slot {
                Slot::Tangent => self.perp(v),
                Slot::Orthogonal => self.top(v),
            };
            if self.fp.local().norm(off.as_slice()) > INPUT_TOL * scale {
                return Err(FormulaError::SlotMismatch {
                    formula: id,
                    slot: k,
                    expected: *slot,
                });
            }
        }
        Ok(())
    }

    fn check_orthonormal(&self, id: FormulaId, a: &V, b: &V) -> Result<(), FormulaError> {
        let gram = [self.g(a, a) - 1.0, self.g(b, b) - 1.0, self.g(a, b)];
        if gram.iter().any(|e| e.abs() > INPUT_TOL) {
            return Err(FormulaError::Usage {
                formula: id,
                reason: "plane inputs must be g-orthonormal".into(),
            });
        }
        Ok(())
    }
}

/// Inputs to one formula evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FormulaInputs {
    pub vectors: Vec<V>,
    /// decomposition weights for `RIC_E`
    pub ab: Option<(f64, f64)>,
}

impl FormulaInputs {
    pub fn vectors(vectors: Vec<V>) -> Self {
        FormulaInputs { vectors, ab: None }
    }
}

/// Evaluate a formula in the given variant.
pub fn evaluate(
    id: FormulaId,
    variant: &str,
    inputs: &FormulaInputs,
    st: &Structure,
) -> Result<TermBreakdown, FormulaError> {
    if !variants_for(id).contains(&variant) {
        return Err(FormulaError::UnknownVariant {
            formula: id,
            variant: variant.into(),
        });
    }
    st.check_slots(id, &inputs.vectors)?;
    let v = &inputs.vectors;
    let out = match id {
        FormulaId::ConnXY | FormulaId::ConnUV | FormulaId::ConnXU | FormulaId::ConnUX => {
            conn_formula(id, &v[0], &v[1], st)
        }
        FormulaId::RXYZW
        | FormulaId::RXYZU
        | FormulaId::RXUYV
        | FormulaId::RUVXY
        | FormulaId::RUVPX
        | FormulaId::RUVPQ => curvature_component_formula(id, variant, v, st),
        FormulaId::KXY | FormulaId::KXU | FormulaId::KUV => kappa_formula(id, variant, &v[0], &v[1], st)?,
        FormulaId::RicUV | FormulaId::RicXY | FormulaId::RicXU => ricci_formula(id, variant, &v[0], &v[1], st),
        FormulaId::RicE => {
            let (a, b) = inputs.ab.ok_or_else(|| FormulaError::Usage {
                formula: id,
                reason: "missing (a, b) decomposition".into(),
            })?;
            ric_direction_formula(a, b, &v[0], &v[1], st)?
        }
        FormulaId::Scalar => match variant {
            AS_PRINTED => scalar_formula(st),
            _ => scalar_trace_formula(st)?,
        },
        FormulaId::LimitK => limit_formula(variant, &v[0], &v[1], st)?,
    };
    Ok(out)
}

/// The four connection formulas.
pub fn conn_formula(id: FormulaId, e1: &V, e2: &V, st: &Structure) -> TermBreakdown {
    let f = st.f;
    let f2 = f * f;
    let mut b = TermBreakdown::default();
    match id {
        FormulaId::ConnXY => {
            let (x, y) = (e1, e2);
            let n = st.nabla(x, y);
            b.vector("(∇_X Y)^⊥", "1", st.perp(&n));
            b.vector("(∇_X Y)^⊤", "1/f^2", st.top(&n) / f2);
            b.vector("A(X,Y)", "-(1-f^2)/f^2", st.a(x, y) * (-(1.0 - f2) / f2));
        }
        FormulaId::ConnUV => {
            let (u, v) = (e1, e2);
            let n = st.nabla(u, v);
            b.vector("(∇_U V)^⊤", "1", st.top(&n));
            b.vector("(∇_U V)^⊥", "f^2", st.perp(&n) * f2);
            b.vector("<U,V>∇f^2", "-1/2", st.grad() * (-0.5 * st.g(u, v) * 2.0 * f));
        }
        FormulaId::ConnXU => {
            let (x, u) = (e1, e2);
            b.vector("∇_X U", "1", st.nabla(x, u));
            b.vector("(Xf^2/f^2)U", "1/2", u * (0.5 * 2.0 * f * st.xf(x) / f2));
            b.vector("A(X,U)", "-(1-f^2)", st.a(x, u) * (-(1.0 - f2)));
        }
        FormulaId::ConnUX => {
            let (u, x) = (e1, e2);
            b.vector("∇_U X", "1", st.nabla(u, x));
            b.vector("(Xf^2/f^2)U", "1/2", u * (0.5 * 2.0 * f * st.xf(x) / f2));
            b.vector("A(X,U)", "-(1-f^2)", st.a(x, u) * (-(1.0 - f2)));
        }
        _ => unreachable!("not a connection formula"),
    }
    b
}

/// The six curvature-component formulas.
pub fn curvature_component_formula(id: FormulaId, variant: &str, v: &[V], st: &Structure) -> TermBreakdown {
    let f = st.f;
    let f2 = f * f;
    let c = 1.0 - f2;
    let mut b = TermBreakdown::default();
    match id {
        FormulaId::RXYZW => {
            let (x, y, z, w) = (&v[0], &v[1], &v[2], &v[3]);
            b.scalar("<R(X,Y)Z,W>", "1", st.r(x, y, z, w));
            b.scalar("<A(X,Y),A(Z,W)>", "-2(1-f^2)", -2.0 * c * st.g(&st.a(x, y), &st.a(z, w)));
            let (k, ks) = if variant == "rxyzw-coef" { (c, "(1-f^2)") } else { (1.0, "1") };
            b.scalar("<A(X,W),A(Y,Z)>", ks, k * st.g(&st.a(x, w), &st.a(y, z)));
            b.scalar(
                "<A(X,Z),A(Y,W)>",
                &format!("-{ks}"),
                -k * st.g(&st.a(x, z), &st.a(y, w)),
            );
            b.scalar("<S(X,W),S(Y,Z)>", "-(1-f^2)/f^2", -c / f2 * st.g(&st.s(x, w), &st.s(y, z)));
            b.scalar("<S(X,Z),S(Y,W)>", "(1-f^2)/f^2", c / f2 * st.g(&st.s(x, z), &st.s(y, w)));
        }
        FormulaId::RXYZU => {
            let (x, y, z, u) = (&v[0], &v[1], &v[2], &v[3]);
            let (xf, yf, zf) = (st.xf(x), st.xf(y), st.xf(z));
            b.scalar("<R(X,Y)Z,U>", "1", st.r(x, y, z, u));
            b.scalar("Xf<A(Y,Z),U>", "f", f * xf * st.g(&st.a(y, z), u));
            b.scalar("Yf<A(X,Z),U>", "-f", -f * yf * st.g(&st.a(x, z), u));
            b.scalar("Zf<A(X,Y),U>", "-2f", -2.0 * f * zf * st.g(&st.a(x, y), u));
            b.scalar("Xf<S(Y,Z),U>", "-1/f", -xf / f * st.g(&st.s(y, z), u));
            if variant == "rxyzu-antisym" {
                b.scalar("Yf<S(X,Z),U>", "1/f", yf / f * st.g(&st.s(x, z), u));
            } else {
                b.scalar("Yf<S(X,Z),U>", "-1/f", -yf / f * st.g(&st.s(x, z), u));
            }
            b.scalar("<(∇_X A)(Y,Z),U>", "-(1-f^2)", -c * st.g(&st.na(x, y, z), u));
            b.scalar("<(∇_Y A)(X,Z),U>", "-(1-f^2)", -c * st.g(&st.na(y, x, z), u));
            b.scalar("<A(X,Y),T(U,Z)>", "(1-f^2)", c * st.g(&st.a(x, y), &st.t(u, z)));
        }
        FormulaId::RXUYV => {
            let (x, u, y, w) = (&v[0], &v[1], &v[2], &v[3]);
            b.scalar("<R(X,U)Y,V>", "f^2", f2 * st.r(x, u, y, w));
            b.scalar("h_f(X,Y)<U,V>", "f", f * st.h(x, y) * st.g(u, w));
            b.scalar("Xf<T(U,V),Y>", "-f", -f * st.xf(x) * st.g(&st.t(u, w), y));
            b.scalar("Yf<T(U,V),X>", "-f", -f * st.xf(y) * st.g(&st.t(u, w), x));
            b.scalar("<A(X,V),A(Y,U)>", "f^2(1-f^2)", f2 * c * st.g(&st.a(x, w), &st.a(y, u)));
            b.scalar("<S(X,V),A(Y,U)>", "(1-f^2)", c * st.g(&st.s(x, w), &st.a(y, u)));
            let (k, ks) = if variant == "rxuyv-s-sign" { (c, "(1-f^2)") } else { (-c, "-(1-f^2)") };
            b.scalar("<S(Y,V),(∇_X U)^⊥>", ks, k * st.g(&st.s(y, w), &st.perp_nabla(x, u)));
            b.scalar("<(∇_U S)(X,Y),V>", "-(1-f^2)", -c * st.g(&st.ns(u, x, y), w));
        }
        FormulaId::RUVXY => {
            let (u, w, x, y) = (&v[0], &v[1], &v[2], &v[3]);
            b.scalar("<R(U,V)X,Y>", "f^2", f2 * st.r(u, w, x, y));
            b.scalar("<A(X,V),A(Y,U)>", "f^2(1-f^2)", f2 * c * st.g(&st.a(x, w), &st.a(y, u)));
            b.scalar("<A(Y,V),A(X,U)>", "-f^2(1-f^2)", -f2 * c * st.g(&st.a(y, w), &st.a(x, u)));
            b.scalar("<S(X,V),A(Y,U)>", "2(1-f^2)", 2.0 * c * st.g(&st.s(x, w), &st.a(y, u)));
            b.scalar("<S(Y,V),A(X,U)>", "-2(1-f^2)", -2.0 * c * st.g(&st.s(y, w), &st.a(x, u)));
        }
        FormulaId::RUVPX => {
            let (u, w, pp, x) = (&v[0], &v[1], &v[2], &v[3]);
            let agx = st.a(st.grad(), x);
            b.scalar("<R(U,V)P,X>", "f^2", f2 * st.r(u, w, pp, x));
            b.scalar("<A(X,U),T(V,P)>", "f^2(1-f^2)", f2 * c * st.g(&st.a(x, u), &st.t(w, pp)));
            b.scalar("<A(X,V),T(U,P)>", "-f^2(1-f^2)", -f2 * c * st.g(&st.a(x, w), &st.t(u, pp)));
            b.scalar("<V,P><A(∇f,X),U>", "-f(1-f^2)", -f * c * st.g(w, pp) * st.g(&agx, u));
            b.scalar("<U,P><A(∇f,X),V>", "f(1-f^2)", f * c * st.g(u, pp) * st.g(&agx, w));
            b.scalar("<U,P><H_f(V),X>", "f", f * st.g(u, pp) * st.g(&st.hop(w), x));
            b.scalar("<V,P><H_f(U),X>", "-f", -f * st.g(w, pp) * st.g(&st.hop(u), x));
        }
        FormulaId::RUVPQ => {
            let (u, w, pp, qq) = (&v[0], &v[1], &v[2], &v[3]);
            let gf = st.grad();
            let g2 = st.grad2();
            if variant == "rtop-ambient" {
                b.scalar("<R^T(U,V)P,Q>", "f^2", f2 * st.r(u, w, pp, qq));
            } else {
                b.scalar("<R^T(U,V)P,Q>", "f^2", f2 * st.r_leaf(u, w, pp, qq));
            }
            let f3 = f2 * f;
            let f4 = f2 * f2;
            b.scalar("<U,P><∇f,T(V,Q)>", "-f^3", -f3 * st.g(u, pp) * st.g(gf, &st.t(w, qq)));
            b.scalar("<V,Q><∇f,T(U,P)>", "-f^3", -f3 * st.g(w, qq) * st.g(gf, &st.t(u, pp)));
            b.scalar("<T(U,P),T(V,Q)>", "f^4", f4 * st.g(&st.t(u, pp), &st.t(w, qq)));
            b.scalar("<U,P><V,Q>|∇f|^2", "f^2", f2 * st.g(u, pp) * st.g(w, qq) * g2);
            b.scalar("<V,P><∇f,T(U,Q)>", "f^3", f3 * st.g(w, pp) * st.g(gf, &st.t(u, qq)));
            b.scalar("<U,Q><∇f,T(V,P)>", "f^3", f3 * st.g(u, qq) * st.g(gf, &st.t(w, pp)));
            b.scalar("<T(V,P),T(U,Q)>", "-f^4", -f4 * st.g(&st.t(w, pp), &st.t(u, qq)));
            b.scalar("<V,P><U,Q>|∇f|^2", "-f^2", -f2 * st.g(w, pp) * st.g(u, qq) * g2);
        }
        _ => unreachable!("not a curvature component formula"),
    }
    b
}

/// The three sectional-curvature formulas on a g-orthonormal pair.
pub fn kappa_formula(id: FormulaId, variant: &str, e1: &V, e2: &V, st: &Structure) -> Result<TermBreakdown, FormulaError> {
    st.check_orthonormal(id, e1, e2)?;
    let f = st.f;
    let f2 = f * f;
    let c = 1.0 - f2;
    let local = st.fp.local();
    let kappa = |a: &V, b: &V| local.sectional(a.as_slice(), b.as_slice()).map_err(FoliationError::from);
    let mut b = TermBreakdown::default();
    match id {
        FormulaId::KXY => {
            let (x, y) = (e1, e2);
            let axy = st.a(x, y);
            let sxy = st.s(x, y);
            b.scalar("κ(X,Y)", "1", kappa(x, y)?);
            b.scalar("|A(X,Y)|^2", "3(1-f^2)", 3.0 * c * st.g(&axy, &axy));
            b.scalar("|S(X,Y)|^2", "(1-f^2)/f^2", c / f2 * st.g(&sxy, &sxy));
            b.scalar("<S(X,X),S(Y,Y)>", "-(1-f^2)/f^2", -c / f2 * st.g(&st.s(x, x), &st.s(y, y)));
        }
        FormulaId::KXU => {
            let (x, u) = (e1, e2);
            let sxu = st.s(x, u);
            let axu = st.a(x, u);
            let bracket = st.g(&st.ns(u, x, x), u) - st.g(&sxu, &sxu);
            if variant == "kxu-rescaled" {
                b.scalar("κ(X,U)", "1", kappa(x, u)?);
                b.scalar("h_f(X,X)", "-1/f", -st.h(x, x) / f);
                b.scalar("Xf<T(U,U),X>", "2/f", 2.0 * st.xf(x) / f * st.g(&st.t(u, u), x));
                b.scalar("[<(∇_U S)(X,X),U> - |S(X,U)|^2]", "(1-f^2)/f^2", c / f2 * bracket);
                b.scalar("|A(X,U)|^2", "-(1-f^2)", -c * st.g(&axu, &axu));
            } else {
                b.scalar("κ(X,U)", "1", kappa(x, u)?);
                b.scalar("h_f(X,X)", "-1/f", -st.h(x, x) / f);
                b.scalar("Xf<T(U,U),X>", "2f", 2.0 * f * st.xf(x) * st.g(&st.t(u, u), x));
                b.scalar("[<(∇_U S)(X,X),U> - |S(X,U)|^2]", "-(1-f^2)", -c * bracket);
                b.scalar("|A(X,U)|^2", "-f^2(1-f^2)", -f2 * c * st.g(&axu, &axu));
                if variant == "kappa-gf-normalized" {
                    b.scale_all(1.0 / f2, "/f^2");
                }
            }
        }
        FormulaId::KUV => {
            let (u, w) = (e1, e2);
            let p = st.p();
            if p < 2 {
                return Err(FormulaError::Dimension {
                    formula: id,
                    reason: "leaf curvature undefined for one-dimensional leaves".into(),
                });
            }
            let leaf = st.leaf.as_ref().expect("p ≥ 2 has a leaf metric");
            let khat = leaf
                .sectional(&u.as_slice()[..p], &w.as_slice()[..p])
                .map_err(FoliationError::from)?;
            let tuv = st.t(u, w);
            let f4 = f2 * f2;
            b.scalar("κ̂(U,V)", "1/f^2", khat / f2);
            b.scalar("|∇f|^2", "-1/f^2", -st.grad2() / f2);
            b.scalar("<T(U,U),T(V,V)>", "-f^4", -f4 * st.g(&st.t(u, u), &st.t(w, w)));
            b.scalar("|T(U,V)|^2", "f^4", f4 * st.g(&tuv, &tuv));
            b.scalar("<∇f,T(V,V)>", "f", f * st.g(st.grad(), &st.t(w, w)));
            b.scalar("<∇f,T(U,U)>", "f", f * st.g(st.grad(), &st.t(u, u)));
            if variant == "kappa-gf-normalized" {
                b.scale_all(1.0 / f4, "/f^4");
            }
        }
        _ => unreachable!("not a sectional curvature formula"),
    }
    Ok(b)
}

impl Structure<'_> {
    /// `Σ_i ⟨T(U_i,U),T(U_i,V)⟩`
    fn t_top(&self, u: &V, w: &V) -> f64 {
        self.tangent.iter().map(|ui| self.g(&self.t(ui, u), &self.t(ui, w))).sum()
    }

    /// `Σ_j ⟨A(X_j,E),A(X_j,F)⟩`
    fn a_perp(&self, e: &V, w: &V) -> f64 {
        self.orth.iter().map(|xj| self.g(&self.a(xj, e), &self.a(xj, w))).sum()
    }

    /// `Σ_j ⟨S(X_j,U),S(X_j,V)⟩`
    fn s_perp(&self, u: &V, w: &V) -> f64 {
        self.orth.iter().map(|xj| self.g(&self.s(xj, u), &self.s(xj, w))).sum()
    }

    /// `Σ_j ⟨(∇_U S)(X_j,X_j),V⟩`
    fn tr_perp_ns(&self, u: &V, w: &V) -> f64 {
        let ns = self.fp.nabla_s(u.as_slice());
        self.orth
            .iter()
            .map(|xj| self.g(&ns.apply(xj.as_slice(), xj.as_slice()), w))
            .sum()
    }

    /// `Σ_j h_f(X_j,X_j)`
    fn tr_perp_h(&self) -> f64 {
        self.orth.iter().map(|xj| self.h(xj, xj)).sum()
    }

    /// `Σ_i ⟨A(X,U_i),A(Y,U_i)⟩`
    fn a_top(&self, x: &V, y: &V) -> f64 {
        self.tangent.iter().map(|ui| self.g(&self.a(x, ui), &self.a(y, ui))).sum()
    }

    /// `Σ_i ⟨S(X,U_i),A(Y,U_i)⟩`
    fn s_top_a_top(&self, x: &V, y: &V) -> f64 {
        self.tangent.iter().map(|ui| self.g(&self.s(x, ui), &self.a(y, ui))).sum()
    }

    /// `Σ_i ⟨(∇_{U_i} S)(X,Y),U_i⟩`
    fn tr_top_ns(&self, x: &V, y: &V) -> f64 {
        self.tangent.iter().map(|ui| self.g(&self.ns(ui, x, y), ui)).sum()
    }

    /// `Σ_i ⟨S(Y,U_i),(∇_X U_i)^⊥⟩`
    fn s_top_nabla_perp(&self, y: &V, x: &V) -> f64 {
        self.tangent
            .iter()
            .map(|ui| self.g(&self.s(y, ui), &self.perp_nabla(x, ui)))
            .sum()
    }

    /// `Σ_j ⟨S(X,X_j),S(Y,X_j)⟩`
    fn s_perp_x(&self, x: &V, y: &V) -> f64 {
        self.orth.iter().map(|xj| self.g(&self.s(x, xj), &self.s(y, xj))).sum()
    }

    /// `Σ_i ⟨A(X,U_i),T(U,U_i)⟩`
    fn a_top_t_top(&self, x: &V, u: &V) -> f64 {
        self.tangent.iter().map(|ui| self.g(&self.a(x, ui), &self.t(u, ui))).sum()
    }

    /// `Σ_j ⟨(∇_{X_j} A)(X,X_j) − (∇_X A)(X_j,X_j), U⟩`
    fn tr_perp_na(&self, x: &V, u: &V) -> f64 {
        let nax = self.fp.nabla_a(x.as_slice());
        self.orth
            .iter()
            .map(|xj| {
                let first = self.na(xj, x, xj);
                let second = nax.apply(xj.as_slice(), xj.as_slice());
                self.g(&(first - second), u)
            })
            .sum()
    }

    fn ric_uv_terms(&self, b: &mut TermBreakdown, u: &V, w: &V, flip_s: bool) {
        let f = self.f;
        let f2 = f * f;
        let c = 1.0 - f2;
        let p = self.p() as f64;
        let hf = &self.mean_t;
        let uv = self.g(u, w);
        b.scalar("Ric^F(U,V)", "1", self.ric_leaf(u, w));
        b.scalar("Ric^⊥(U,V)", "f^2", f2 * self.ric_perp(u, w));
        b.scalar("<H^F,T(U,V)>", "-f^2", -f2 * self.g(hf, &self.t(u, w)));
        b.scalar("<U,V><H^F,∇f>", "f", f * uv * self.g(hf, self.grad()));
        b.scalar("<U,V>|∇f|^2", "-(p-1)", -(p - 1.0) * uv * self.grad2());
        b.scalar("<T(U,V),∇f>", "pf", p * f * self.g(&self.t(u, w), self.grad()));
        b.scalar("<T^T U,T^T V>", "f^2", f2 * self.t_top(u, w));
        b.scalar("<A^⊥U,A^⊥V>", "-f^2(1-f^2)", -f2 * c * self.a_perp(u, w));
        if flip_s {
            b.scalar("<S^⊥U,S^⊥V>", "-(1-f^2)", -c * self.s_perp(u, w));
        } else {
            b.scalar("<S^⊥U,S^⊥V>", "(1-f^2)", c * self.s_perp(u, w));
        }
        b.scalar("tr^⊥<(∇_U S)(.,.),V>", "(1-f^2)", c * self.tr_perp_ns(u, w));
        b.scalar("<U,V>tr^⊥h_f", "-f", -f * uv * self.tr_perp_h());
    }

    fn ric_xy_terms(&self, b: &mut TermBreakdown, x: &V, y: &V) {
        let f = self.f;
        let f2 = f * f;
        let c = 1.0 - f2;
        let p = self.p() as f64;
        let hf = &self.mean_t;
        b.scalar("Ric^⊥(X,Y)", "1", self.ric_perp(x, y));
        b.scalar("Ric^T(X,Y)", "1", self.ric_top(x, y));
        b.scalar("<A_X^T,A_Y^T>", "-(1-f^2)", -c * self.a_top(x, y));
        b.scalar("<A^⊥X,A^⊥Y>", "3(1-f^2)", 3.0 * c * self.a_perp(x, y));
        b.scalar("Xf<H^F,Y>", "1/f", self.xf(x) / f * self.g(hf, y));
        b.scalar("Yf<H^F,X>", "1/f", self.xf(y) / f * self.g(hf, x));
        b.scalar("h_f(X,Y)", "-p/f", -p * self.h(x, y) / f);
        b.scalar("<H^⊥,S(X,Y)>", "(1-f^2)/f^2", c / f2 * self.g(&self.mean_perp, &self.s(x, y)));
        let k = -c / f2;
        b.scalar("<S_X^T,A_Y^T>", "-(1-f^2)/f^2", k * self.s_top_a_top(x, y));
        b.scalar("tr^T<(∇.S)(X,Y),.>", "(1-f^2)/f^2", -k * self.tr_top_ns(x, y));
        b.scalar("<S_Y^T,(∇_X^⊥)^T>", "(1-f^2)/f^2", -k * self.s_top_nabla_perp(y, x));
        b.scalar("<S_X^⊥,S_Y^⊥>", "(1-f^2)/f^2", -k * self.s_perp_x(x, y));
    }

    fn ric_xu_terms(&self, b: &mut TermBreakdown, x: &V, u: &V) {
        let f = self.f;
        let f2 = f * f;
        let c = 1.0 - f2;
        let p = self.p() as f64;
        let gf = self.grad();
        b.scalar("Ric^⊥(X,U)", "1", self.ric_perp(x, u));
        b.scalar("Ric^T(X,U)", "1", self.ric_top(x, u));
        b.scalar("<A(∇f,X),U>", "3f", 3.0 * f * self.g(&self.a(gf, x), u));
        b.scalar("<A(∇f,U),X>", "(p-1)(1-f^2)/f", (p - 1.0) * c / f * self.g(&self.a(gf, u), x));
        b.scalar("h_f(U,X)", "-(p-1)/f", -(p - 1.0) / f * self.h(u, x));
        b.scalar("<A_X^T,T_U^T>", "(1-f^2)", c * self.a_top_t_top(x, u));
        b.scalar("<A(U,X),H^F>", "(1-f^2)", c * self.g(&self.a(u, x), &self.mean_t));
        b.scalar("<S(X,∇f),U>", "1/f", self.g(&self.s(x, gf), u) / f);
        b.scalar("tr^⊥<(∇.A)(X,.) - (∇_X A)(.,.),U>", "(1-f^2)", c * self.tr_perp_na(x, u));
        b.scalar("Xf<H^⊥,U>", "-1/f", -self.xf(x) / f * self.g(&self.mean_perp, u));
    }
}

/// Ricci components for tangent, orthogonal and mixed pairs.
pub fn ricci_formula(id: FormulaId, variant: &str, e1: &V, e2: &V, st: &Structure) -> TermBreakdown {
    let mut b = TermBreakdown::default();
    match id {
        FormulaId::RicUV => st.ric_uv_terms(&mut b, e1, e2, variant == "ric-uv-s-sign"),
        FormulaId::RicXY => st.ric_xy_terms(&mut b, e1, e2),
        FormulaId::RicXU => st.ric_xu_terms(&mut b, e1, e2),
        _ => unreachable!("not a Ricci formula"),
    }
    b
}

/// `ric^f(E)` for `E = aU + bX`; `u` is supplied g-unit and rescaled to
/// `|U|_f = 1` here, `x` is g-unit.
pub fn ric_direction_formula(a: f64, bw: f64, u: &V, x: &V, st: &Structure) -> Result<TermBreakdown, FormulaError> {
    let id = FormulaId::RicE;
    if (a * a + bw * bw - 1.0).abs() > INPUT_TOL
        || (st.g(u, u) - 1.0).abs() > INPUT_TOL
        || (st.g(x, x) - 1.0).abs() > INPUT_TOL
    {
        return Err(FormulaError::Usage {
            formula: id,
            reason: "requires a² + b² = 1 and unit U, X".into(),
        });
    }
    let f = st.f;
    let f2 = f * f;
    let c = 1.0 - f2;
    let p = st.p() as f64;
    let uf = u / f;
    let u = &uf;
    let hf = &st.mean_t;
    let gf = st.grad();
    let (a2, ab2, b2) = (a * a, 2.0 * a * bw, bw * bw);
    let mut b = TermBreakdown::default();

    b.scalar("Ric^F(U,U)", "a^2", a2 * st.ric_leaf(u, u));
    b.scalar("Ric^⊥(U,U)", "a^2 f^2", a2 * f2 * st.ric_perp(u, u));
    b.scalar("Ric(X,U)", "2ab", ab2 * st.ric(x, u));
    b.scalar("Ric(X,X)", "b^2", b2 * st.ric(x, x));

    b.scalar("<H^F,T(U,U)>", "-a^2 f^2", -a2 * f2 * st.g(hf, &st.t(u, u)));
    b.scalar("<H^F,∇f>", "a^2/f", a2 / f * st.g(hf, gf));
    b.scalar("|∇f|^2", "-a^2(p-1)/f^2", -a2 * (p - 1.0) * st.grad2() / f2);
    b.scalar("<T(U,U),∇f>", "a^2 pf", a2 * p * f * st.g(&st.t(u, u), gf));
    b.scalar("|T^T U|^2", "a^2 f^2", a2 * f2 * st.t_top(u, u));
    b.scalar("|A^⊥U|^2", "-a^2 f^2(1-f^2)", -a2 * f2 * c * st.a_perp(u, u));
    b.scalar("|S^⊥U|^2", "a^2(1-f^2)", a2 * c * st.s_perp(u, u));
    b.scalar("tr^⊥<(∇_U S)(.,.),U>", "a^2(1-f^2)", a2 * c * st.tr_perp_ns(u, u));
    b.scalar("tr^⊥h_f", "-a^2/f", -a2 * st.tr_perp_h() / f);

    b.scalar("<A(∇f,X),U>", "2ab 3f", ab2 * 3.0 * f * st.g(&st.a(gf, x), u));
    b.scalar("<A(∇f,U),X>", "2ab(p-1)(1-f^2)/f", ab2 * (p - 1.0) * c / f * st.g(&st.a(gf, u), x));
    b.scalar("h_f(U,X)", "-2ab(p-1)/f", -ab2 * (p - 1.0) / f * st.h(u, x));
    b.scalar("<A_X^T,T_U^T>", "2ab(1-f^2)", ab2 * c * st.a_top_t_top(x, u));
    b.scalar("<A(U,X),H^F>", "2ab(1-f^2)", ab2 * c * st.g(&st.a(u, x), hf));
    b.scalar("<S(X,∇f),U>", "2ab/f", ab2 / f * st.g(&st.s(x, gf), u));
    b.scalar("tr^⊥<(∇.A)(X,.) - (∇_X A)(.,.),U>", "2ab(1-f^2)", ab2 * c * st.tr_perp_na(x, u));
    b.scalar("Xf<H^⊥,U>", "-2ab/f", -ab2 * st.xf(x) / f * st.g(&st.mean_perp, u));

    b.scalar("|A_X^T|^2", "-b^2(1-f^2)", -b2 * c * st.a_top(x, x));
    b.scalar("|A^⊥X|^2", "b^2 3(1-f^2)", b2 * 3.0 * c * st.a_perp(x, x));
    b.scalar("Xf<H^F,X>", "b^2 2/f", b2 * 2.0 * st.xf(x) / f * st.g(hf, x));
    b.scalar("h_f(X,X)", "-b^2 p/f", -b2 * p * st.h(x, x) / f);
    b.scalar("<H^⊥,S(X,X)>", "b^2(1-f^2)/f^2", b2 * c / f2 * st.g(&st.mean_perp, &st.s(x, x)));
    let k = -b2 * c / f2;
    b.scalar("<S_X^T,A_X^T>", "-b^2(1-f^2)/f^2", k * st.s_top_a_top(x, x));
    b.scalar("tr^T<(∇.S)(X,X),.>", "b^2(1-f^2)/f^2", -k * st.tr_top_ns(x, x));
    b.scalar("<S_X^T,(∇_X^⊥)^T>", "b^2(1-f^2)/f^2", -k * st.s_top_nabla_perp(x, x));
    b.scalar("<S_X^⊥,S_X^⊥>", "b^2(1-f^2)/f^2", -k * st.s_perp_x(x, x));
    Ok(b)
}

/// Scalar curvature as displayed, duplicated terms included.
pub fn scalar_formula(st: &Structure) -> TermBreakdown {
    let f = st.f;
    let f2 = f * f;
    let c = 1.0 - f2;
    let p = st.p() as f64;
    let hf = &st.mean_t;
    let gf = st.grad();
    let hfg = st.g(hf, gf);
    let mut b = TermBreakdown::default();
    let s_leaf: f64 = st.tangent.iter().map(|u| st.ric_leaf(u, u)).sum();
    let s_top_perp: f64 = st.tangent.iter().map(|u| st.ric_perp(u, u)).sum();
    let s_perp: f64 = st.orth.iter().map(|x| st.ric(x, x)).sum();
    b.scalar("s^F", "1", s_leaf);
    b.scalar("(s^T)^⊥", "f^2", f2 * s_top_perp);
    b.scalar("s^⊥", "1", s_perp);
    b.scalar("|H^F|^2", "-f^2", -f2 * st.g(hf, hf));
    b.scalar("<H^F,∇f>", "p/f", p / f * hfg);
    b.scalar("|∇f|^2", "-p(p-1)/f^2", -p * (p - 1.0) * st.grad2() / f2);
    b.scalar("<H^F,∇f> (second)", "pf", p * f * hfg);
    let sum_u = |g: &dyn Fn(&V) -> f64| st.tangent.iter().map(g).sum::<f64>();
    b.scalar("Σ|T^T U_j|^2", "f^2", f2 * sum_u(&|u| st.t_top(u, u)));
    b.scalar("Σ|A^⊥U_j|^2", "-f^2(1-f^2)", -f2 * c * sum_u(&|u| st.a_perp(u, u)));
    b.scalar("Σ|S^⊥U_j|^2", "(1-f^2)", c * sum_u(&|u| st.s_perp(u, u)));
    b.scalar("Σtr^⊥<(∇_{U_j}S)(.,.),U_j>", "(1-f^2)", c * sum_u(&|u| st.tr_perp_ns(u, u)));
    b.scalar("tr^⊥h_f", "-p/f", -p * st.tr_perp_h() / f);
    let sum_x = |g: &dyn Fn(&V) -> f64| st.orth.iter().map(g).sum::<f64>();
    b.scalar("Σ|A_{X_i}^T|^2", "-(1-f^2)", -c * sum_x(&|x| st.a_top(x, x)));
    b.scalar("Σ|A^⊥X_i|^2", "-3(1-f^2)", -3.0 * c * sum_x(&|x| st.a_perp(x, x)));
    b.scalar("<H^F,∇f> (third)", "2/f", 2.0 / f * hfg);
    b.scalar("tr^⊥h_f (second)", "-p/f", -p * st.tr_perp_h() / f);
    b.scalar("<H^⊥,H^⊥>", "(1-f^2)/f^2", c / f2 * st.g(&st.mean_perp, &st.mean_perp));
    let k = -c / f2;
    b.scalar("Σ<S_{X_i}^T,A_{X_i}^T>", "-(1-f^2)/f^2", k * sum_x(&|x| st.s_top_a_top(x, x)));
    b.scalar("Σtr^T<(∇.S)(X_i,X_i),.>", "(1-f^2)/f^2", -k * sum_x(&|x| st.tr_top_ns(x, x)));
    b.scalar("Σ<S_{X_i}^T,(∇_{X_i}^⊥)^T>", "(1-f^2)/f^2", -k * sum_x(&|x| st.s_top_nabla_perp(x, x)));
    b.scalar("Σ<S_{X_i}^⊥,S_{X_i}^⊥>", "(1-f^2)/f^2", -k * sum_x(&|x| st.s_perp_x(x, x)));
    b
}

/// `Σ ric^f(E_i)` over `E_i ∈ {U_i/f, X_j}` via the direction formula.
pub fn scalar_trace_formula(st: &Structure) -> Result<TermBreakdown, FormulaError> {
    let mut b = TermBreakdown::default();
    let frame = st.fp.frame();
    for i in 0..st.p() {
        let u = frame.tangent(i);
        let x = frame.orthogonal(0);
        let r = ric_direction_formula(1.0, 0.0, &u, &x, st)?.total_scalar();
        b.scalar(&format!("ric^f(U_{})", i + 1), "1", r);
    }
    for j in 0..st.q() {
        let x = frame.orthogonal(j);
        let u = frame.tangent(0);
        let r = ric_direction_formula(0.0, 1.0, &u, &x, st)?.total_scalar();
        b.scalar(&format!("ric^f(X_{})", j + 1), "1", r);
    }
    Ok(b)
}

/// Limit of `κ^{f_n}(X,U)` for constant warps `f_n → 0`; requires `q = 1`
/// and `κ(X,U) = 0`.
pub fn limit_formula(variant: &str, x: &V, u: &V, st: &Structure) -> Result<TermBreakdown, FormulaError> {
    let id = FormulaId::LimitK;
    if st.q() != 1 {
        return Err(FormulaError::Dimension {
            formula: id,
            reason: format!("requires codimension one, got q = {}", st.q()),
        });
    }
    st.check_orthonormal(id, x, u)?;
    let kappa = st
        .fp
        .local()
        .sectional(x.as_slice(), u.as_slice())
        .map_err(FoliationError::from)?;
    if kappa.abs() > FLAT_PLANE_TOL {
        return Err(FormulaError::Precondition { formula: id, kappa });
    }
    let sxu = st.s(x, u);
    let sign = if variant == "limit-sign" { -1.0 } else { 1.0 };
    let mut b = TermBreakdown::default();
    let (c1, c2) = if sign > 0.0 { ("-1", "1") } else { ("1", "-1") };
    b.scalar("<(∇_U S)(X,X),U>", c1, -sign * st.g(&st.ns(u, x, x), u));
    b.scalar("|S(X,U)|^2", c2, sign * st.g(&sxu, &sxu));
    Ok(b)
}
