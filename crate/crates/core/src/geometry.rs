//! Chart-level Riemannian geometry driven by jets.
//!
//! Sign conventions: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z` and the
//! lowered tensor is `R_ijkl = ⟨R(∂_i,∂_j)∂_k, ∂_l⟩`, so that
//! `⟨R(v,w)w,v⟩ > 0` on the round sphere.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::expr::Expr;
use crate::jet::{jet_eval, EvalError, Jet, MAX_ORDER};

pub type CoordVector = DVector<f64>;

/// Condition number above which a metric is reported singular.
pub const MAX_CONDITION: f64 = 1e10;
/// Smallest admissible metric eigenvalue.
pub const MIN_EIGENVALUE: f64 = 1e-10;
/// Minimum Gram determinant for a sectional-curvature plane.
pub const MIN_PLANE_GRAM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("metric not positive definite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("metric singular: condition number {condition:e} exceeds {MAX_CONDITION:e}")]
    Singular { condition: f64 },
    #[error("degenerate plane: Gram determinant {gram:e}")]
    DegeneratePlane { gram: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Symmetric metric given by scalar-field expressions in a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    coords: Vec<String>,
    entries: Vec<Expr>,
}

impl MetricField {
    /// Build from the upper triangle: `upper[i]` holds entries `j = i..n`.
    pub fn from_upper(coords: Vec<String>, upper: Vec<Vec<Expr>>) -> Result<Self, GeometryError> {
        let n = coords.len();
        if upper.len() != n {
            return Err(GeometryError::Dimension {
                expected: n,
                got: upper.len(),
            });
        }
        let mut entries = vec![Expr::Const(0.0); n * n];
        for (i, row) in upper.into_iter().enumerate() {
            if row.len() != n - i {
                return Err(GeometryError::Dimension {
                    expected: n - i,
                    got: row.len(),
                });
            }
            for (off, e) in row.into_iter().enumerate() {
                let j = i + off;
                entries[i * n + j] = e.clone();
                entries[j * n + i] = e;
            }
        }
        Ok(MetricField { coords, entries })
    }

    /// Constant identity metric.
    pub fn euclidean(coords: Vec<String>) -> Self {
        let n = coords.len();
        let upper = (0..n)
            .map(|i| {
                (i..n)
                    .map(|j| Expr::Const(if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        MetricField::from_upper(coords, upper).expect("square by construction")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.dim() + j]
    }

    pub fn jets(&self, point: &[f64], order: usize) -> Result<JetMatrix, GeometryError> {
        let n = self.dim();
        if point.len() != n {
            return Err(GeometryError::Dimension {
                expected: n,
                got: point.len(),
            });
        }
        let mut data: Vec<Jet> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                if j < i {
                    let mirrored = data[j * n + i].clone();
                    data.push(mirrored);
                } else {
                    data.push(jet_eval(self.entry(i, j), &self.coords, point, order)?);
                }
            }
        }
        Ok(JetMatrix { rows: n, data })
    }
}

/// Square matrix of jets, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JetMatrix {
    rows: usize,
    data: Vec<Jet>,
}

impl JetMatrix {
    pub fn from_fn(rows: usize, mut f: impl FnMut(usize, usize) -> Jet) -> Self {
        let mut data = Vec::with_capacity(rows * rows);
        for i in 0..rows {
            for j in 0..rows {
                data.push(f(i, j));
            }
        }
        JetMatrix { rows, data }
    }

    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.data[i * self.rows + j]
    }

    pub fn value(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.rows, |i, j| self.get(i, j).value())
    }

    /// Leading `m × m` block.
    pub fn block(&self, m: usize) -> JetMatrix {
        JetMatrix::from_fn(m, |i, j| self.get(i, j).clone())
    }

    fn mul(&self, other: &JetMatrix) -> JetMatrix {
        let n = self.rows;
        JetMatrix::from_fn(n, |i, j| {
            let mut acc = self.get(i, 0) * other.get(0, j);
            for k in 1..n {
                acc += &(self.get(i, k) * other.get(k, j));
            }
            acc
        })
    }

    fn mul_const_left(m: &DMatrix<f64>, other: &JetMatrix) -> JetMatrix {
        let n = other.rows;
        JetMatrix::from_fn(n, |i, j| {
            let mut acc = other.get(0, j).scale(m[(i, 0)]);
            for k in 1..n {
                acc += &other.get(k, j).scale(m[(i, k)]);
            }
            acc
        })
    }
}

/// Eigenvalue check and SPD inverse of a symmetric value matrix.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if !(min > MIN_EIGENVALUE) {
        return Err(GeometryError::NotPositiveDefinite { min_eigenvalue: min });
    }
    let condition = max / min;
    if condition > MAX_CONDITION {
        return Err(GeometryError::Singular { condition });
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or(GeometryError::NotPositiveDefinite { min_eigenvalue: min })?;
    Ok(chol.inverse())
}

/// Jet of the inverse matrix via the truncated Neumann series about the
/// value: `(G0 + Δ)^-1 = Σ_k (−G0^-1 Δ)^k G0^-1`.
pub fn invert_jets(g: &JetMatrix) -> Result<JetMatrix, GeometryError> {
    let n = g.dim();
    let g0 = g.value();
    let g0_inv = spd_inverse(&g0)?;
    let nvars = g.get(0, 0).nvars();
    let order = g.data.iter().map(Jet::order).min().unwrap_or(0);
    let delta = JetMatrix::from_fn(n, |i, j| g.get(i, j).add_scalar(-g0[(i, j)]).truncate(order));
    let step = JetMatrix::mul_const_left(&(-&g0_inv), &delta);
    let base = JetMatrix::from_fn(n, |i, j| Jet::constant(nvars, order, g0_inv[(i, j)]));
    let mut term = base.clone();
    let mut sum = base;
    for _ in 0..order {
        term = step.mul(&term);
        sum = JetMatrix::from_fn(n, |i, j| sum.get(i, j) + term.get(i, j));
    }
    Ok(sum)
}

/// Lowered curvature tensor values `R_ijkl` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureValue {
    n: usize,
    data: Vec<f64>,
}

impl CurvatureValue {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }

    /// `⟨R(a,b)c,d⟩` for coordinate vectors.
    pub fn apply(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if b[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    if c[k] == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        acc += self.get(i, j, k, l) * a[i] * b[j] * c[k] * d[l];
                    }
                }
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest violation of `R_ijkl = −R_jikl = −R_ijlk = R_klij`, relative
    /// to `max(1, max|R|)`.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.get(i, j, k, l);
                        worst = worst
                            .max((r + self.get(j, i, k, l)).abs())
                            .max((r + self.get(i, j, l, k)).abs())
                            .max((r - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        worst / self.max_abs().max(1.0)
    }

    /// Largest violation of `R_ijkl + R_jkil + R_kijl = 0`, relative.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let s = self.get(i, j, k, l) + self.get(j, k, i, l) + self.get(k, i, j, l);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst / self.max_abs().max(1.0)
    }
}

/// Gradient and Hessian of a scalar field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradHess {
    /// `df` components `∂_i f`
    pub differential: CoordVector,
    /// `∇f = g^{ij} ∂_j f`
    pub gradient: CoordVector,
    /// lowered Hessian `h_ij = ∂_i∂_j f − Γ^k_ij ∂_k f`
    pub hessian: DMatrix<f64>,
    ginv: DMatrix<f64>,
}

impl GradHess {
    /// Directional derivative `Ef`.
    pub fn along(&self, e: &[f64]) -> f64 {
        self.differential.iter().zip(e).map(|(d, v)| d * v).sum()
    }

    /// `h_f(X,Y) = ⟨∇_X ∇f, Y⟩`.
    pub fn h(&self, x: &[f64], y: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let yv = DVector::from_column_slice(y);
        (xv.transpose() * &self.hessian * yv)[(0, 0)]
    }

    /// `H_f(U) = ∇_U ∇f` as a vector.
    pub fn operator(&self, u: &[f64]) -> CoordVector {
        &self.ginv * (&self.hessian * DVector::from_column_slice(u))
    }
}

/// Everything derived from a metric at a single point: jets of `g` and
/// `g⁻¹`, Christoffel symbols (as jets) and the curvature tensor.
///
/// The metric may be a leading block of a larger chart (leaf slices): the
/// jets then live over all chart variables while indices range over the
/// block.
#[derive(Debug, Clone)]
pub struct LocalMetric {
    dim: usize,
    nvars: usize,
    g: JetMatrix,
    ginv: JetMatrix,
    gamma: Vec<Jet>,
    riemann: CurvatureValue,
}

impl LocalMetric {
    pub fn at(metric: &MetricField, point: &[f64]) -> Result<Self, GeometryError> {
        Self::from_jets(metric.jets(point, MAX_ORDER)?)
    }

    pub fn from_jets(g: JetMatrix) -> Result<Self, GeometryError> {
        let dim = g.dim();
        let nvars = g.get(0, 0).nvars();
        let ginv = invert_jets(&g)?;
        // dg[l][i][j] = ∂_l g_ij
        let dg: Vec<Jet> = (0..dim)
            .flat_map(|l| {
                let g = &g;
                (0..dim * dim).map(move |ij| g.data[ij].derivative(l))
            })
            .collect();
        let dgi = |l: usize, i: usize, j: usize| &dg[(l * dim + i) * dim + j];
        let mut gamma: Vec<Jet> = Vec::with_capacity(dim * dim * dim);
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    if j < i {
                        let mirrored: Jet = gamma[(k * dim + j) * dim + i].clone();
                        gamma.push(mirrored);
                        continue;
                    }
                    let mut acc = Jet::zero(nvars, dgi(0, 0, 0).order());
                    for l in 0..dim {
                        let koszul = &(dgi(i, j, l) + dgi(j, i, l)) - dgi(l, i, j);
                        acc += &(ginv.get(k, l) * &koszul);
                    }
                    gamma.push(acc.scale(0.5));
                }
            }
        }
        let riemann = lowered_curvature(dim, &g, &gamma);
        Ok(LocalMetric {
            dim,
            nvars,
            g,
            ginv,
            gamma,
            riemann,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn metric_jets(&self) -> &JetMatrix {
        &self.g
    }

    pub fn inverse_jets(&self) -> &JetMatrix {
        &self.ginv
    }

    pub fn g(&self) -> DMatrix<f64> {
        self.g.value()
    }

    pub fn g_inv(&self) -> DMatrix<f64> {
        self.ginv.value()
    }

    pub fn inner(&self, v: &[f64], w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.g.get(i, j).value() * v[i] * w[j];
            }
        }
        acc
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Inner product of vector-field jets, as a jet.
    pub fn inner_jets(&self, v: &[Jet], w: &[Jet]) -> Jet {
        let mut acc = Jet::zero(self.nvars, MAX_ORDER);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += &(&(self.g.get(i, j) * &v[i]) * &w[j]);
            }
        }
        acc
    }

    /// Lower an index: `g v`.
    pub fn lower(&self, v: &[f64]) -> CoordVector {
        self.g() * DVector::from_column_slice(v)
    }

    /// Raise an index: `g⁻¹ ω`.
    pub fn raise(&self, w: &[f64]) -> CoordVector {
        self.g_inv() * DVector::from_column_slice(w)
    }

    pub fn gamma_jet(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[(k * self.dim + i) * self.dim + j]
    }

    /// Christoffel symbol value `Γ^k_ij`.
    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma_jet(k, i, j).value()
    }

    pub fn curvature(&self) -> &CurvatureValue {
        &self.riemann
    }

    /// `⟨R(a,b)c,d⟩`.
    pub fn curvature_on(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        self.riemann.apply(a, b, c, d)
    }

    /// Sectional curvature of the plane spanned by `v, w`.
    pub fn sectional(&self, v: &[f64], w: &[f64]) -> Result<f64, GeometryError> {
        let vv = self.inner(v, v);
        let ww = self.inner(w, w);
        let vw = self.inner(v, w);
        let gram = vv * ww - vw * vw;
        let scale = (vv * ww).max(f64::MIN_POSITIVE);
        if !(gram > MIN_PLANE_GRAM * scale.max(1.0)) {
            return Err(GeometryError::DegeneratePlane { gram });
        }
        Ok(self.curvature_on(v, w, w, v) / gram)
    }

    /// Coordinate components `Ric_jk = g^{il} R_ijkl`.
    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.dim;
        let ginv = self.g_inv();
        DMatrix::from_fn(n, n, |j, k| {
            let mut acc = 0.0;
            for i in 0..n {
                for l in 0..n {
                    acc += ginv[(i, l)] * self.riemann.get(i, j, k, l);
                }
            }
            acc
        })
    }

    pub fn ricci_on(&self, e: &[f64], f: &[f64]) -> f64 {
        let e = DVector::from_column_slice(e);
        let f = DVector::from_column_slice(f);
        (e.transpose() * self.ricci() * f)[(0, 0)]
    }

    pub fn scalar(&self) -> f64 {
        let ginv = self.g_inv();
        let ric = self.ricci();
        ginv.component_mul(&ric).sum()
    }

    /// Covariant derivative of a vector field (given as jets) along `dir`.
    pub fn nabla(&self, dir: &[f64], field: &[Jet]) -> CoordVector {
        let n = self.dim;
        DVector::from_fn(n, |k, _| {
            let mut acc = 0.0;
            for i in 0..n {
                if dir[i] == 0.0 {
                    continue;
                }
                let mut t = field[k].d(&[i]).unwrap_or(0.0);
                for j in 0..n {
                    t += self.christoffel(k, i, j) * field[j].value();
                }
                acc += dir[i] * t;
            }
            acc
        })
    }

    /// Gradient and Hessian of a scalar field jet (order ≥ 2).
    pub fn grad_hess(&self, f: &Jet) -> GradHess {
        let n = self.dim;
        let differential = DVector::from_fn(n, |i, _| f.d(&[i]).unwrap_or(0.0));
        let ginv = self.g_inv();
        let gradient = &ginv * &differential;
        let hessian = DMatrix::from_fn(n, n, |i, j| {
            let mut h = f.d(&[i, j]).unwrap_or(0.0);
            for k in 0..n {
                h -= self.christoffel(k, i, j) * differential[k];
            }
            h
        });
        GradHess {
            differential,
            gradient,
            hessian,
            ginv,
        }
    }

    /// Largest `|Γ^k_ij − Γ^k_ji|`.
    pub fn torsion_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((self.christoffel(k, i, j) - self.christoffel(k, j, i)).abs());
                }
            }
        }
        worst
    }

    /// Largest `|∂_k g_ij − Γ^l_ki g_lj − Γ^l_kj g_il|`.
    pub fn compatibility_residual(&self) -> f64 {
        let n = self.dim;
        let g = self.g();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = self.g.get(i, j).d(&[k]).unwrap_or(0.0);
                    for l in 0..n {
                        r -= self.christoffel(l, k, i) * g[(l, j)] + self.christoffel(l, k, j) * g[(i, l)];
                    }
                    worst = worst.max(r.abs());
                }
            }
        }
        worst
    }
}

fn lowered_curvature(dim: usize, g: &JetMatrix, gamma: &[Jet]) -> CurvatureValue {
    let n = dim;
    let gam = |k: usize, i: usize, j: usize| &gamma[(k * n + i) * n + j];
    // R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
    let mut up = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = gam(l, j, k).d(&[i]).unwrap_or(0.0) - gam(l, i, k).d(&[j]).unwrap_or(0.0);
                    for m in 0..n {
                        r += gam(l, i, m).value() * gam(m, j, k).value()
                            - gam(l, j, m).value() * gam(m, i, k).value();
                    }
                    up[((l * n + i) * n + j) * n + k] = r;
                }
            }
        }
    }
    let gv = g.value();
    let mut data = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc += gv[(l, m)] * up[((m * n + i) * n + j) * n + k];
                    }
                    data[((i * n + j) * n + k) * n + l] = acc;
                }
            }
        }
    }
    CurvatureValue { n, data }
}

/// Christoffel symbols `Γ^k_ij` at a point, indexed `[k][i][j]`.
pub fn christoffel(g: &MetricField, point: &[f64]) -> Result<Vec<Vec<Vec<f64>>>, GeometryError> {
    let local = LocalMetric::at(g, point)?;
    let n = local.dim();
    Ok((0..n)
        .map(|k| (0..n).map(|i| (0..n).map(|j| local.christoffel(k, i, j)).collect()).collect())
        .collect())
}

pub fn curvature(g: &MetricField, point: &[f64]) -> Result<CurvatureValue, GeometryError> {
    Ok(LocalMetric::at(g, point)?.riemann)
}

pub fn sectional(g: &MetricField, point: &[f64], v: &[f64], w: &[f64]) -> Result<f64, GeometryError> {
    LocalMetric::at(g, point)?.sectional(v, w)
}

pub fn ricci(g: &MetricField, point: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
    Ok(LocalMetric::at(g, point)?.ricci())
}

pub fn scalar_curv(g: &MetricField, point: &[f64]) -> Result<f64, GeometryError> {
    Ok(LocalMetric::at(g, point)?.scalar())
}

pub fn grad_hess(g: &MetricField, f: &Expr, point: &[f64]) -> Result<GradHess, GeometryError> {
    let local = LocalMetric::at(g, point)?;
    let fj = jet_eval(f, g.coords(), point, MAX_ORDER)?;
    Ok(local.grad_hess(&fj))
}
