//! Foliations in adapted charts: leaves are the level sets of the last `q`
//! coordinates, so `∂_1..∂_p` span the tangent distribution.
//!
//! The tensors are built from the tangent projector `P` and its covariant
//! derivative. For `U, V` tangent and `X, Y` orthogonal:
//!
//! * `T(U,V) = ½ Q[(∇_U P)V + (∇_V P)U]`
//! * `S(X,Y) = −½ P[(∇_X P)Y + (∇_Y P)X]`
//! * `A(X,Y) = −½ P[(∇_X P)Y − (∇_Y P)X]`
//!
//! with mixed slots fixed by `⟨S(X,U),Y⟩ = −⟨S(X,Y),U⟩`,
//! `⟨A(X,U),Y⟩ = −⟨A(X,Y),U⟩`, `⟨T(U,X),V⟩ = −⟨T(U,V),X⟩` and zero in the
//! remaining slots. Each tensor is then a smooth (1,2)-tensor field on the
//! whole tangent space, and is carried as component jets.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{CoordVector, GeometryError, LocalMetric, MetricField};
use crate::jet::{Jet, MAX_ORDER};

/// Tolerance used for both sides of the Riemannian-foliation test.
pub const RIEMANNIAN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FoliationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid split p={p}, q={q}: both must be at least 1")]
    InvalidSplit { p: usize, q: usize },
    #[error("leaf curvature undefined for one-dimensional leaves")]
    OneDimensionalLeaves,
    #[error("frame construction degenerate at vector {index}")]
    DegenerateFrame { index: usize },
}

/// A metric together with the split `n = p + q` of an adapted chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Foliation {
    metric: MetricField,
    p: usize,
}

impl Foliation {
    pub fn new(metric: MetricField, p: usize) -> Result<Self, FoliationError> {
        let n = metric.dim();
        if p == 0 || p >= n {
            return Err(FoliationError::InvalidSplit {
                p,
                q: n.saturating_sub(p),
            });
        }
        Ok(Foliation { metric, p })
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.metric.dim() - self.p
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// All foliation structure at `point`.
    pub fn at(&self, point: &[f64]) -> Result<FoliatedPoint, FoliationError> {
        FoliatedPoint::new(self, point)
    }
}

/// g-orthonormal frame fields `U_1..U_p, X_1..X_q` around a point, as jets of
/// their coordinate components.
#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    p: usize,
    fields: Vec<Vec<Jet>>,
}

impl AdaptedFrame {
    /// Gram–Schmidt on `∂_1..∂_n` in order; the first `p` fields span the
    /// leaf, the rest are orthogonal to it.
    pub fn gram_schmidt(local: &LocalMetric, p: usize) -> Result<Self, FoliationError> {
        let n = local.dim();
        let nvars = local.nvars();
        let mut fields: Vec<Vec<Jet>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut v: Vec<Jet> = (0..n)
                .map(|c| Jet::constant(nvars, MAX_ORDER, if c == k { 1.0 } else { 0.0 }))
                .collect();
            for prev in &fields {
                let c = local.inner_jets(&v, prev);
                for (vc, pc) in v.iter_mut().zip(prev) {
                    *vc = &*vc - &(&c * pc);
                }
            }
            let norm2 = local.inner_jets(&v, &v);
            if !(norm2.value() > 1e-20) {
                return Err(FoliationError::DegenerateFrame { index: k });
            }
            let inv = norm2
                .sqrt()
                .and_then(|s| s.recip())
                .map_err(|_| FoliationError::DegenerateFrame { index: k })?;
            fields.push(v.iter().map(|c| c * &inv).collect());
        }
        Ok(AdaptedFrame { p, fields })
    }

    /// Apply constant orthogonal matrices to the tangent and orthogonal
    /// blocks: new `U_i = Σ_a r[(i,a)] U_a`.
    pub fn rotated(&self, tangent: &DMatrix<f64>, orthogonal: &DMatrix<f64>) -> AdaptedFrame {
        let p = self.p;
        let q = self.fields.len() - p;
        assert_eq!(tangent.shape(), (p, p));
        assert_eq!(orthogonal.shape(), (q, q));
        let mix = |rows: &DMatrix<f64>, offset: usize, count: usize| -> Vec<Vec<Jet>> {
            (0..count)
                .map(|i| {
                    let n = self.fields[0].len();
                    (0..n)
                        .map(|c| {
                            let mut acc = self.fields[offset][c].scale(rows[(i, 0)]);
                            for a in 1..count {
                                acc += &self.fields[offset + a][c].scale(rows[(i, a)]);
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        };
        let mut fields = mix(tangent, 0, p);
        fields.extend(mix(orthogonal, p, q));
        AdaptedFrame { p, fields }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.fields.len() - self.p
    }

    /// Component jets of frame field `k` (tangent fields first).
    pub fn field(&self, k: usize) -> &[Jet] {
        &self.fields[k]
    }

    pub fn vector(&self, k: usize) -> CoordVector {
        DVector::from_iterator(self.fields[k].len(), self.fields[k].iter().map(Jet::value))
    }

    pub fn tangent(&self, i: usize) -> CoordVector {
        self.vector(i)
    }

    pub fn orthogonal(&self, j: usize) -> CoordVector {
        self.vector(self.p + j)
    }

    pub fn tangents(&self) -> Vec<CoordVector> {
        (0..self.p).map(|i| self.tangent(i)).collect()
    }

    pub fn orthogonals(&self) -> Vec<CoordVector> {
        (0..self.q()).map(|j| self.orthogonal(j)).collect()
    }
}

/// Pointwise (1,2)-tensor: `t(∂_i,∂_j) = Σ_k data[k][i][j] ∂_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorValue {
    n: usize,
    data: Vec<f64>,
}

impl TensorValue {
    pub fn zeros(n: usize) -> Self {
        TensorValue {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn component(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn apply(&self, e: &[f64], f: &[f64]) -> CoordVector {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let mut acc = 0.0;
            for i in 0..n {
                if e[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    acc += self.component(k, i, j) * e[i] * f[j];
                }
            }
            acc
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// (1,2)-tensor field carried as component jets around a point.
#[derive(Debug, Clone)]
struct TensorField {
    n: usize,
    data: Vec<Jet>,
}

impl TensorField {
    fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> Jet) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    data.push(f(k, i, j));
                }
            }
        }
        TensorField { n, data }
    }

    fn get(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.data[(k * self.n + i) * self.n + j]
    }

    fn value(&self) -> TensorValue {
        TensorValue {
            n: self.n,
            data: self.data.iter().map(Jet::value).collect(),
        }
    }

    /// `(∇_e t)^k_ij = e^m (∂_m t^k_ij + Γ^k_mr t^r_ij − Γ^r_mi t^k_rj − Γ^r_mj t^k_ir)`.
    fn covariant(&self, local: &LocalMetric, e: &[f64]) -> TensorValue {
        let n = self.n;
        let mut data = vec![0.0; n * n * n];
        let t = |k: usize, i: usize, j: usize| self.get(k, i, j).value();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for (m, &em) in e.iter().enumerate() {
                        if em == 0.0 {
                            continue;
                        }
                        let mut v = self.get(k, i, j).d(&[m]).unwrap_or(0.0);
                        for r in 0..n {
                            v += local.christoffel(k, m, r) * t(r, i, j)
                                - local.christoffel(r, m, i) * t(k, r, j)
                                - local.christoffel(r, m, j) * t(k, i, r);
                        }
                        acc += em * v;
                    }
                    data[(k * n + i) * n + j] = acc;
                }
            }
        }
        TensorValue { n, data }
    }
}

/// Pointwise values of `T`, `S`, `A` and the mean curvature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FoliationTensors {
    pub t: TensorValue,
    pub s: TensorValue,
    pub a: TensorValue,
    /// `H^F = Σ_i T(U_i,U_i)`
    pub mean_tangent: CoordVector,
    /// `H^⊥ = Σ_j S(X_j,X_j)`
    pub mean_orthogonal: CoordVector,
    /// Antisymmetric orthogonal part of `∇` on tangent pairs; zero because
    /// the leaves are integral manifolds.
    pub frobenius: TensorValue,
}

/// Foliation structure at one point: metric data, adapted frame, tensor
/// fields and leaf geometry.
#[derive(Debug, Clone)]
pub struct FoliatedPoint {
    point: Vec<f64>,
    p: usize,
    local: LocalMetric,
    frame: AdaptedFrame,
    projector: DMatrix<f64>,
    t: TensorField,
    s: TensorField,
    a: TensorField,
    tensors: FoliationTensors,
}

impl FoliatedPoint {
    pub fn new(fol: &Foliation, point: &[f64]) -> Result<Self, FoliationError> {
        let local = LocalMetric::at(fol.metric(), point)?;
        Self::from_local(local, point, fol.p())
    }

    pub fn from_local(local: LocalMetric, point: &[f64], p: usize) -> Result<Self, FoliationError> {
        let n = local.dim();
        if p == 0 || p >= n {
            return Err(FoliationError::InvalidSplit { p, q: n - p.min(n) });
        }
        let nvars = local.nvars();
        let frame = AdaptedFrame::gram_schmidt(&local, p)?;
        let g = local.metric_jets();
        let ginv = local.inverse_jets();
        let idx = |a: usize, b: usize| a * n + b;

        // P^k_l = Σ_a U_a^k (U_a)_l
        let lowered: Vec<Vec<Jet>> = (0..p)
            .map(|a| {
                let u = frame.field(a);
                (0..n)
                    .map(|l| {
                        let mut acc = Jet::zero(nvars, MAX_ORDER);
                        for m in 0..n {
                            acc += &(g.get(l, m) * &u[m]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let mut proj: Vec<Jet> = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                let mut acc = Jet::zero(nvars, MAX_ORDER);
                for (a, low) in lowered.iter().enumerate() {
                    acc += &(&frame.field(a)[k] * &low[l]);
                }
                proj.push(acc);
            }
        }
        let comp: Vec<Jet> = (0..n * n)
            .map(|kl| {
                let delta = if kl / n == kl % n { 1.0 } else { 0.0 };
                (-&proj[kl]).add_scalar(delta)
            })
            .collect();

        // (∇_m P)^k_l
        let gam = |k: usize, i: usize, j: usize| local.gamma_jet(k, i, j);
        let dp: Vec<Vec<Jet>> = (0..n)
            .map(|m| {
                (0..n * n)
                    .map(|kl| {
                        let (k, l) = (kl / n, kl % n);
                        let mut acc = proj[kl].derivative(m);
                        for r in 0..n {
                            acc += &(gam(k, m, r) * &proj[idx(r, l)]);
                            acc = &acc - &(gam(r, m, l) * &proj[idx(k, r)]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();

        // w[r][i][j] = (∇_{B∂_i} P)(C∂_j) for projectors B, C
        let sandwich = |b: &[Jet], c: &[Jet]| -> Vec<Jet> {
            let order = 2;
            let mut v = vec![Jet::zero(nvars, order); n * n * n];
            for m in 0..n {
                for r in 0..n {
                    for j in 0..n {
                        let mut acc = Jet::zero(nvars, order);
                        for l in 0..n {
                            acc += &(&dp[m][idx(r, l)] * &c[idx(l, j)]);
                        }
                        v[(m * n + r) * n + j] = acc;
                    }
                }
            }
            let mut w = vec![Jet::zero(nvars, order); n * n * n];
            for r in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = Jet::zero(nvars, order);
                        for m in 0..n {
                            acc += &(&b[idx(m, i)] * &v[(m * n + r) * n + j]);
                        }
                        w[(r * n + i) * n + j] = acc;
                    }
                }
            }
            w
        };
        let w_perp = sandwich(&comp, &comp);
        let w_tan = sandwich(&proj, &proj);
        let w = |w: &Vec<Jet>, r: usize, i: usize, j: usize| w[(r * n + i) * n + j].clone();
        // project the (anti)symmetrized sandwich with `onto` and scale
        let assemble = |onto: &[Jet], src: &Vec<Jet>, sign: f64, factor: f64| -> TensorField {
            TensorField::from_fn(n, |k, i, j| {
                let mut acc = Jet::zero(nvars, 2);
                for r in 0..n {
                    let sym = &w(src, r, i, j) + &w(src, r, j, i).scale(sign);
                    acc += &(&onto[idx(k, r)] * &sym);
                }
                acc.scale(factor)
            })
        };
        let s0 = assemble(&proj, &w_perp, 1.0, -0.5);
        let a0 = assemble(&proj, &w_perp, -1.0, -0.5);
        let t0 = assemble(&comp, &w_tan, 1.0, 0.5);
        let frob = assemble(&comp, &w_tan, -1.0, 0.5);

        // mixed slots: m^k_ij = −g^{kw} Σ_{l,r} g_rl t^r_iw B^l_j
        let mixed = |t: &TensorField, b: &[Jet]| -> TensorField {
            let mut flat = vec![Jet::zero(nvars, 2); n * n * n];
            for l in 0..n {
                for i in 0..n {
                    for wv in 0..n {
                        let mut acc = Jet::zero(nvars, 2);
                        for r in 0..n {
                            acc += &(g.get(r, l) * t.get(r, i, wv));
                        }
                        flat[(l * n + i) * n + wv] = acc;
                    }
                }
            }
            let mut y = vec![Jet::zero(nvars, 2); n * n * n];
            for i in 0..n {
                for wv in 0..n {
                    for j in 0..n {
                        let mut acc = Jet::zero(nvars, 2);
                        for l in 0..n {
                            acc += &(&flat[(l * n + i) * n + wv] * &b[idx(l, j)]);
                        }
                        y[(i * n + wv) * n + j] = acc;
                    }
                }
            }
            TensorField::from_fn(n, |k, i, j| {
                let mut acc = Jet::zero(nvars, 2);
                for wv in 0..n {
                    acc += &(ginv.get(k, wv) * &y[(i * n + wv) * n + j]);
                }
                acc.scale(-1.0)
            })
        };
        let sum = |x: &TensorField, y: &TensorField| TensorField {
            n,
            data: x.data.iter().zip(&y.data).map(|(a, b)| a + b).collect(),
        };
        let s = sum(&s0, &mixed(&s0, &proj));
        let a = sum(&a0, &mixed(&a0, &proj));
        let t = sum(&t0, &mixed(&t0, &comp));

        let projector = DMatrix::from_fn(n, n, |k, l| proj[idx(k, l)].value());
        let tv = t.value();
        let sv = s.value();
        let mut mean_tangent = DVector::zeros(n);
        for i in 0..p {
            let u = frame.tangent(i);
            mean_tangent += tv.apply(u.as_slice(), u.as_slice());
        }
        let mut mean_orthogonal = DVector::zeros(n);
        for j in 0..n - p {
            let x = frame.orthogonal(j);
            mean_orthogonal += sv.apply(x.as_slice(), x.as_slice());
        }
        let tensors = FoliationTensors {
            t: tv,
            s: sv,
            a: a.value(),
            mean_tangent,
            mean_orthogonal,
            frobenius: frob.value(),
        };
        Ok(FoliatedPoint {
            point: point.to_vec(),
            p,
            local,
            frame,
            projector,
            t,
            s,
            a,
            tensors,
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.local.dim() - self.p
    }

    pub fn local(&self) -> &LocalMetric {
        &self.local
    }

    pub fn frame(&self) -> &AdaptedFrame {
        &self.frame
    }

    /// Replace the frame by a rotated copy; tensors are frame independent.
    pub fn set_frame(&mut self, frame: AdaptedFrame) {
        self.frame = frame;
    }

    pub fn tensors(&self) -> &FoliationTensors {
        &self.tensors
    }

    pub fn tangent_part(&self, v: &[f64]) -> CoordVector {
        &self.projector * DVector::from_column_slice(v)
    }

    pub fn orthogonal_part(&self, v: &[f64]) -> CoordVector {
        DVector::from_column_slice(v) - self.tangent_part(v)
    }

    pub fn t(&self, e: &[f64], f: &[f64]) -> CoordVector {
        self.tensors.t.apply(e, f)
    }

    pub fn s(&self, e: &[f64], f: &[f64]) -> CoordVector {
        self.tensors.s.apply(e, f)
    }

    pub fn a(&self, e: &[f64], f: &[f64]) -> CoordVector {
        self.tensors.a.apply(e, f)
    }

    /// `∇_e S` as a pointwise tensor.
    pub fn nabla_s(&self, e: &[f64]) -> TensorValue {
        self.s.covariant(&self.local, e)
    }

    pub fn nabla_a(&self, e: &[f64]) -> TensorValue {
        self.a.covariant(&self.local, e)
    }

    pub fn nabla_t(&self, e: &[f64]) -> TensorValue {
        self.t.covariant(&self.local, e)
    }

    /// `∇_e` of frame field `k`.
    pub fn nabla_frame(&self, e: &[f64], k: usize) -> CoordVector {
        self.local.nabla(e, self.frame.field(k))
    }

    pub fn inner(&self, v: &[f64], w: &[f64]) -> f64 {
        self.local.inner(v, w)
    }

    /// Induced metric on the leaf coordinate slice.
    pub fn leaf(&self) -> Result<LocalMetric, FoliationError> {
        if self.p < 2 {
            return Err(FoliationError::OneDimensionalLeaves);
        }
        Ok(LocalMetric::from_jets(self.local.metric_jets().block(self.p))?)
    }

    /// Intrinsic sectional curvature `κ̂(U,V)` of the leaf.
    pub fn leaf_curvature(&self, u: &[f64], v: &[f64]) -> Result<f64, FoliationError> {
        let leaf = self.leaf()?;
        Ok(leaf.sectional(&u[..self.p], &v[..self.p])?)
    }

    /// Leaf Ricci form `Ric^F(U,V)`.
    pub fn leaf_ricci(&self, u: &[f64], v: &[f64]) -> Result<f64, FoliationError> {
        let leaf = self.leaf()?;
        Ok(leaf.ricci_on(&u[..self.p], &v[..self.p]))
    }

    /// Largest `|(L_U g)(X_a,X_b)|` over tangent frame fields `U` and
    /// orthogonal frame vectors, computed from coordinate derivatives only.
    pub fn lie_violation(&self) -> f64 {
        let n = self.local.dim();
        let g = self.local.metric_jets();
        let mut worst: f64 = 0.0;
        for i in 0..self.p {
            let u = self.frame.field(i);
            let lie = DMatrix::from_fn(n, n, |r, c| {
                let mut v = 0.0;
                for k in 0..n {
                    v += u[k].value() * g.get(r, c).d(&[k]).unwrap_or(0.0)
                        + g.get(k, c).value() * u[k].d(&[r]).unwrap_or(0.0)
                        + g.get(r, k).value() * u[k].d(&[c]).unwrap_or(0.0);
                }
                v
            });
            for a in 0..self.q() {
                for b in 0..self.q() {
                    let xa = self.frame.orthogonal(a);
                    let xb = self.frame.orthogonal(b);
                    worst = worst.max((xa.transpose() * &lie * xb)[(0, 0)].abs());
                }
            }
        }
        worst
    }

    /// Largest `‖S(X_a,X_b)‖` over orthogonal frame pairs.
    pub fn s_norm(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.q() {
            for b in 0..self.q() {
                let v = self.s(self.frame.orthogonal(a).as_slice(), self.frame.orthogonal(b).as_slice());
                worst = worst.max(self.local.norm(v.as_slice()));
            }
        }
        worst
    }
}

pub fn adapted_frame(fol: &Foliation, point: &[f64]) -> Result<AdaptedFrame, FoliationError> {
    let local = LocalMetric::at(fol.metric(), point)?;
    AdaptedFrame::gram_schmidt(&local, fol.p())
}

pub fn fundamental_tensors(fol: &Foliation, point: &[f64]) -> Result<FoliationTensors, FoliationError> {
    Ok(fol.at(point)?.tensors)
}

pub fn nabla_s(fol: &Foliation, point: &[f64], direction: &[f64]) -> Result<TensorValue, FoliationError> {
    Ok(fol.at(point)?.nabla_s(direction))
}

pub fn nabla_a(fol: &Foliation, point: &[f64], direction: &[f64]) -> Result<TensorValue, FoliationError> {
    Ok(fol.at(point)?.nabla_a(direction))
}

pub fn leaf_curvature(fol: &Foliation, point: &[f64], u: &[f64], v: &[f64]) -> Result<f64, FoliationError> {
    fol.at(point)?.leaf_curvature(u, v)
}

/// Outcome of evaluating both sides of the Riemannian-foliation criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannianTest {
    pub lie_max: f64,
    pub s_max: f64,
    pub tolerance: f64,
}

impl RiemannianTest {
    pub fn lie_says_riemannian(&self) -> bool {
        self.lie_max < self.tolerance
    }

    pub fn s_says_riemannian(&self) -> bool {
        self.s_max < self.tolerance
    }

    pub fn riemannian(&self) -> bool {
        self.lie_says_riemannian() && self.s_says_riemannian()
    }

    pub fn criteria_agree(&self) -> bool {
        self.lie_says_riemannian() == self.s_says_riemannian()
    }
}

/// Evaluate `max |L_U g(X,Y)|` and `max ‖S‖` over the sample points. Points
/// whose structure cannot be evaluated are skipped.
pub fn riemannian_test(fol: &Foliation, points: &[Vec<f64>]) -> RiemannianTest {
    let mut out = RiemannianTest {
        lie_max: 0.0,
        s_max: 0.0,
        tolerance: RIEMANNIAN_TOL,
    };
    for pt in points {
        if let Ok(fp) = fol.at(pt) {
            out.lie_max = out.lie_max.max(fp.lie_violation());
            out.s_max = out.s_max.max(fp.s_norm());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn metric(cs: &[&str], upper: &[&[&str]]) -> MetricField {
        MetricField::from_upper(
            cs.iter().map(|s| s.to_string()).collect(),
            upper
                .iter()
                .map(|row| row.iter().map(|t| parse_expression(t).unwrap()).collect())
                .collect(),
        )
        .unwrap()
    }

    fn sheared(a: f64) -> Foliation {
        let g11 = format!("1+{a}^2*cos(x)^2");
        let g12 = format!("{a}*cos(x)");
        Foliation::new(metric(&["x", "y"], &[&[&g11, &g12], &["1"]]), 1).unwrap()
    }

    fn hopf() -> Foliation {
        Foliation::new(
            metric(
                &["t", "eta", "phi"],
                &[&["1", "0", "sin(eta)^2"], &["1", "0"], &["sin(eta)^2"]],
            ),
            1,
        )
        .unwrap()
    }

    #[test]
    fn euclidean_frame_is_coordinate_basis() {
        let fol = Foliation::new(MetricField::euclidean(vec!["a".into(), "b".into(), "c".into()]), 2).unwrap();
        let frame = adapted_frame(&fol, &[0.1, 0.2, 0.3]).unwrap();
        for k in 0..3 {
            let v = frame.vector(k);
            for c in 0..3 {
                assert_eq!(v[c], if c == k { 1.0 } else { 0.0 });
            }
        }
        let ts = fundamental_tensors(&fol, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(ts.t.max_abs() + ts.s.max_abs() + ts.a.max_abs(), 0.0);
    }

    #[test]
    fn diagonal_metric_normalizes() {
        let fol = Foliation::new(metric(&["x", "y"], &[&["(2+sin(y))^2", "0"], &["1"]]), 1).unwrap();
        let frame = adapted_frame(&fol, &[0.0, 0.5]).unwrap();
        let f = 2.0 + 0.5f64.sin();
        assert!((frame.tangent(0)[0] - 1.0 / f).abs() < 1e-15);
        assert_eq!(frame.tangent(0)[1], 0.0);
        assert!((frame.orthogonal(0)[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sheared_frame_at_origin() {
        let fol = sheared(0.3);
        let fp = fol.at(&[0.0, 0.0]).unwrap();
        let u = fp.frame().tangent(0);
        let x = fp.frame().orthogonal(0);
        // in Cartesian terms U ∝ ∂x + 0.3 ∂y, which is the adapted ∂x
        assert!((u[0] - 1.0 / 1.09f64.sqrt()).abs() < 1e-14 && u[1] == 0.0);
        assert!(fp.inner(u.as_slice(), x.as_slice()).abs() < 1e-14);
        assert!((fp.inner(x.as_slice(), x.as_slice()) - 1.0).abs() < 1e-14);
        assert!(fp.tensors().a.max_abs() < 1e-12);
        let ts = fol.at(&[1.0, 0.0]).unwrap();
        assert!(ts.s_norm() > 0.01);
    }

    #[test]
    fn hopf_tensors() {
        let fol = hopf();
        let fp = fol.at(&[0.3, 0.7, 1.1]).unwrap();
        let ts = fp.tensors();
        assert!(ts.t.max_abs() < 1e-12);
        assert!(ts.s.max_abs() < 1e-12);
        let u = fp.frame().tangent(0);
        for j in 0..2 {
            let x = fp.frame().orthogonal(j);
            let axu = fp.a(x.as_slice(), u.as_slice());
            assert!((fp.local().norm(axu.as_slice()) - 1.0).abs() < 1e-12);
        }
        let x0 = fp.frame().orthogonal(0);
        let x1 = fp.frame().orthogonal(1);
        let axy = fp.a(x0.as_slice(), x1.as_slice());
        let ayx = fp.a(x1.as_slice(), x0.as_slice());
        assert!((&axy + &ayx).abs().max() < 1e-12);
        assert!(fp.orthogonal_part(axy.as_slice()).abs().max() < 1e-12);
        let rt = riemannian_test(&fol, &[vec![0.3, 0.7, 1.1], vec![1.0, 1.2, 0.1]]);
        assert!(rt.riemannian() && rt.criteria_agree());
    }

    #[test]
    fn sheared_torus_is_not_riemannian() {
        let fol = sheared(0.3);
        let pts: Vec<Vec<f64>> = (0..5).map(|k| vec![0.4 + k as f64, 0.2]).collect();
        let rt = riemannian_test(&fol, &pts);
        assert!(rt.lie_max > 1e-3 && rt.s_max > 1e-3);
        assert!(rt.criteria_agree());
        // L_U g(X,X) = −2⟨U,S(X,X)⟩
        let fp = fol.at(&[1.0, 0.2]).unwrap();
        assert!((fp.lie_violation() - 2.0 * fp.s_norm()).abs() < 1e-12);
    }

    #[test]
    fn frobenius_for_leaves() {
        let fol = Foliation::new(
            metric(
                &["t", "s", "eta", "phi"],
                &[
                    &["1", "0", "0", "sin(eta)^2"],
                    &["(1+0.5*sin(eta)^2)^2", "0", "0"],
                    &["1", "0"],
                    &["sin(eta)^2"],
                ],
            ),
            2,
        )
        .unwrap();
        let fp = fol.at(&[0.1, 0.2, 0.9, 0.4]).unwrap();
        assert!(fp.tensors().frobenius.max_abs() < 1e-12);
        assert!(fp.tensors().t.max_abs() > 0.01);
        assert!(fp.leaf_curvature(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_leaves_have_no_curvature() {
        let fol = sheared(0.0);
        let err = leaf_curvature(&fol, &[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]).unwrap_err();
        assert_eq!(err.to_string(), "leaf curvature undefined for one-dimensional leaves");
    }

    #[test]
    fn round_leaves_of_product() {
        let fol = Foliation::new(
            metric(&["th", "ph", "z"], &[&["1", "0", "0"], &["sin(th)^2", "0"], &["1"]]),
            2,
        )
        .unwrap();
        let k = leaf_curvature(&fol, &[1.0, 0.0, 0.3], &[1.0, 0.0, 0.0], &[0.2, 1.0, 0.0]).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perp_derivative_of_tangent_field_is_s_plus_a() {
        let fol = sheared(0.3);
        let fp = fol.at(&[0.7, 0.1]).unwrap();
        let x = fp.frame().orthogonal(0);
        let u = fp.frame().tangent(0);
        let lhs = fp.orthogonal_part(fp.nabla_frame(x.as_slice(), 0).as_slice());
        let rhs = fp.s(x.as_slice(), u.as_slice()) + fp.a(x.as_slice(), u.as_slice());
        assert!((lhs - rhs).abs().max() < 1e-12);
    }

    #[test]
    fn sheared_limit_bracket_matches_symbolic_value() {
        // ⟨(∇_U S)(X,X),U⟩ − ‖S(X,U)‖² from an independent symbolic computation
        let fol = sheared(0.3);
        for (pt, want) in [([0.0, 0.0], -0.0757511993939904), ([1.0, 0.4], 0.0309131388828761)] {
            let fp = fol.at(&pt).unwrap();
            let u = fp.frame().tangent(0);
            let x = fp.frame().orthogonal(0);
            let ns = fp.nabla_s(u.as_slice()).apply(x.as_slice(), x.as_slice());
            let sxu = fp.s(x.as_slice(), u.as_slice());
            let b = fp.inner(ns.as_slice(), u.as_slice()) - fp.inner(sxu.as_slice(), sxu.as_slice());
            if pt[0] == 0.0 {
                assert!((b - want).abs() < 1e-12, "{b}");
            } else {
                assert!((fp.inner(ns.as_slice(), u.as_slice()) - want).abs() < 1e-12, "{b}");
            }
        }
    }
}
