//! Truncated multivariate Taylor expansions ("jets").
//!
//! A jet of order `k` in `n` variables stores the Taylor coefficients
//! `c_α = ∂^α f / α!` for every multi-index `|α| ≤ k`. Coefficients are laid
//! out by total degree, so a jet of lower order is a prefix of one of higher
//! order over the same variables. Arithmetic on jets of different orders
//! truncates to the lower one.

use std::ops;
use std::sync::OnceLock;

use thiserror::Error;

use crate::expr::{Expr, Func};

/// Highest supported expansion order.
pub const MAX_ORDER: usize = 3;
/// Highest supported number of chart coordinates.
pub const MAX_VARS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("cannot evaluate '{subexpr}': {reason}")]
pub struct EvalError {
    pub subexpr: String,
    pub reason: String,
}

struct Layout {
    /// multi-indices in graded order, up to MAX_ORDER
    indices: Vec<[u8; MAX_VARS]>,
    /// number of coefficients for order 0..=MAX_ORDER
    len_by_order: [usize; MAX_ORDER + 1],
    /// (a, b, a+b) for deg(a)+deg(b) ≤ MAX_ORDER, sorted by total degree
    products: Vec<(u16, u16, u16)>,
    /// products.len() prefix for each order
    products_by_order: [usize; MAX_ORDER + 1],
    /// shift[var][idx] = index of idx + e_var (usize::MAX if beyond MAX_ORDER)
    shift: Vec<Vec<usize>>,
}

fn build_layout(n: usize) -> Layout {
    let mut indices: Vec<[u8; MAX_VARS]> = Vec::new();
    let mut len_by_order = [0; MAX_ORDER + 1];
    for deg in 0..=MAX_ORDER {
        let mut current = [0u8; MAX_VARS];
        push_degree(n, 0, deg, &mut current, &mut indices);
        len_by_order[deg] = indices.len();
    }
    let degree = |m: &[u8; MAX_VARS]| m.iter().map(|&d| d as usize).sum::<usize>();
    let find = |m: &[u8; MAX_VARS]| indices.iter().position(|x| x == m);

    let mut products = Vec::new();
    for (a, ma) in indices.iter().enumerate() {
        for (b, mb) in indices.iter().enumerate() {
            if degree(ma) + degree(mb) <= MAX_ORDER {
                let mut sum = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    sum[v] = ma[v] + mb[v];
                }
                let c = find(&sum).expect("sum index present");
                products.push((a as u16, b as u16, c as u16));
            }
        }
    }
    products.sort_by_key(|&(a, b, _)| degree(&indices[a as usize]) + degree(&indices[b as usize]));
    let mut products_by_order = [0; MAX_ORDER + 1];
    for (k, slot) in products_by_order.iter_mut().enumerate() {
        *slot = products
            .iter()
            .filter(|&&(a, b, _)| degree(&indices[a as usize]) + degree(&indices[b as usize]) <= k)
            .count();
    }

    let shift = (0..n)
        .map(|v| {
            indices
                .iter()
                .map(|m| {
                    let mut up = *m;
                    up[v] += 1;
                    find(&up).unwrap_or(usize::MAX)
                })
                .collect()
        })
        .collect();

    Layout {
        indices,
        len_by_order,
        products,
        products_by_order,
        shift,
    }
}

fn push_degree(
    n: usize,
    var: usize,
    remaining: usize,
    current: &mut [u8; MAX_VARS],
    out: &mut Vec<[u8; MAX_VARS]>,
) {
    if var + 1 == n || n == 0 {
        if n > 0 {
            current[var] = remaining as u8;
            out.push(*current);
            current[var] = 0;
        } else if remaining == 0 {
            out.push(*current);
        }
        return;
    }
    for d in (0..=remaining).rev() {
        current[var] = d as u8;
        push_degree(n, var + 1, remaining - d, current, out);
    }
    current[var] = 0;
}

fn layout(n: usize) -> &'static Layout {
    static LAYOUTS: OnceLock<Vec<Layout>> = OnceLock::new();
    assert!(n <= MAX_VARS, "at most {MAX_VARS} variables supported");
    &LAYOUTS.get_or_init(|| (0..=MAX_VARS).map(build_layout).collect())[n]
}

/// Truncated Taylor expansion of a scalar about a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    nvars: usize,
    order: usize,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Jet {
        assert!(order <= MAX_ORDER);
        let mut coeffs = vec![0.0; layout(nvars).len_by_order[order]];
        coeffs[0] = value;
        Jet {
            nvars,
            order,
            coeffs,
        }
    }

    pub fn zero(nvars: usize, order: usize) -> Jet {
        Jet::constant(nvars, order, 0.0)
    }

    /// The coordinate function `x_var` expanded about `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Jet {
        let mut j = Jet::constant(nvars, order, value);
        if order >= 1 {
            j.coeffs[1 + var] = 1.0;
        }
        j
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw Taylor coefficients in graded order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Partial derivative `∂^α f` at the expansion point, where `alpha`
    /// lists differentiation counts per variable. Returns `None` if `|α|`
    /// exceeds the jet order.
    pub fn partial(&self, alpha: &[usize]) -> Option<f64> {
        let lay = layout(self.nvars);
        let mut key = [0u8; MAX_VARS];
        let mut fact = 1.0;
        for (v, &d) in alpha.iter().enumerate() {
            key[v] = d as u8;
            fact *= (1..=d).product::<usize>() as f64;
        }
        let idx = lay.indices[..self.coeffs.len()]
            .iter()
            .position(|m| *m == key)?;
        Some(self.coeffs[idx] * fact)
    }

    /// Derivative with respect to listed variables, e.g. `[0, 1]` for `∂x∂y`.
    pub fn d(&self, vars: &[usize]) -> Option<f64> {
        let mut alpha = vec![0; self.nvars];
        for &v in vars {
            alpha[v] += 1;
        }
        self.partial(&alpha)
    }

    /// Jet of `∂f/∂x_var`, one order lower.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let lay = layout(self.nvars);
        let len = lay.len_by_order[self.order - 1];
        let coeffs = (0..len)
            .map(|i| {
                let up = lay.shift[var][i];
                (lay.indices[i][var] as f64 + 1.0) * self.coeffs[up]
            })
            .collect();
        Jet {
            nvars: self.nvars,
            order: self.order - 1,
            coeffs,
        }
    }

    /// Truncate to a lower order.
    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            nvars: self.nvars,
            order,
            coeffs: self.coeffs[..layout(self.nvars).len_by_order[order]].to_vec(),
        }
    }

    fn binary_order(&self, other: &Jet) -> usize {
        assert_eq!(self.nvars, other.nvars, "jets over different charts");
        self.order.min(other.order)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            nvars: self.nvars,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Compose with a univariate function given its derivatives at the
    /// current value: `derivs[k] = φ^(k)(u0)`.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut result = Jet::constant(self.nvars, self.order, derivs[0]);
        let mut power = Jet::constant(self.nvars, self.order, 1.0);
        let mut factorial = 1.0;
        for (k, &dk) in derivs.iter().enumerate().skip(1).take(self.order) {
            power = &power * &delta;
            factorial *= k as f64;
            if dk != 0.0 {
                result = &result + &power.scale(dk / factorial);
            }
        }
        result
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s])
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e, e, e, e])
    }

    pub fn ln(&self) -> Result<Jet, String> {
        let u = self.value();
        if !(u > 0.0) {
            return Err(format!("logarithm of non-positive value {u}"));
        }
        Ok(self.compose(&[u.ln(), 1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u)]))
    }

    pub fn sqrt(&self) -> Result<Jet, String> {
        let u = self.value();
        if u < 0.0 || (u == 0.0 && self.order > 0) {
            return Err(format!("square root of non-positive value {u}"));
        }
        self.powf(0.5)
    }

    pub fn recip(&self) -> Result<Jet, String> {
        let u = self.value();
        if u == 0.0 {
            return Err("division by zero".to_string());
        }
        let r = 1.0 / u;
        Ok(self.compose(&[r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]))
    }

    /// `self^c` for a real exponent; integer exponents allow negative bases.
    pub fn powf(&self, c: f64) -> Result<Jet, String> {
        let u = self.value();
        let integer = c.fract() == 0.0;
        if !integer && u <= 0.0 && !(u == 0.0 && self.order == 0 && c > 0.0) {
            return Err(format!("non-integer power {c} of non-positive value {u}"));
        }
        if u == 0.0 && c < 0.0 {
            return Err(format!("negative power {c} of zero"));
        }
        if integer && c >= 0.0 && c <= MAX_ORDER as f64 + 1.0 {
            // exact repeated product: avoids 0^(c-k) issues at u = 0
            let mut out = Jet::constant(self.nvars, self.order, 1.0);
            for _ in 0..(c as usize) {
                out = &out * self;
            }
            return Ok(out);
        }
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut falling = 1.0;
        for (k, slot) in derivs.iter_mut().enumerate() {
            let p = c - k as f64;
            *slot = falling * if integer { u.powi(p as i32) } else { u.powf(p) };
            falling *= p;
        }
        Ok(self.compose(&derivs))
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, String> {
        Ok(self * &other.recip()?)
    }
}

impl<'a> ops::Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let order = self.binary_order(rhs);
        let len = layout(self.nvars).len_by_order[order];
        Jet {
            nvars: self.nvars,
            order,
            coeffs: (0..len).map(|i| self.coeffs[i] + rhs.coeffs[i]).collect(),
        }
    }
}

impl<'a> ops::Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let order = self.binary_order(rhs);
        let len = layout(self.nvars).len_by_order[order];
        Jet {
            nvars: self.nvars,
            order,
            coeffs: (0..len).map(|i| self.coeffs[i] - rhs.coeffs[i]).collect(),
        }
    }
}

impl<'a> ops::Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let order = self.binary_order(rhs);
        let lay = layout(self.nvars);
        let mut coeffs = vec![0.0; lay.len_by_order[order]];
        for &(a, b, c) in &lay.products[..lay.products_by_order[order]] {
            coeffs[c as usize] += self.coeffs[a as usize] * rhs.coeffs[b as usize];
        }
        Jet {
            nvars: self.nvars,
            order,
            coeffs,
        }
    }
}

impl ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($($trait:ident $method:ident),*) => {$(
        impl ops::$trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet { ops::$trait::$method(&self, &rhs) }
        }
        impl<'a> ops::$trait<&'a Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &'a Jet) -> Jet { ops::$trait::$method(&self, rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl ops::AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = &*self + rhs;
    }
}

/// Evaluate an expression as a jet at `point`, with variables bound to the
/// chart coordinates `coords` (positionally).
pub fn jet_eval(
    expr: &Expr,
    coords: &[String],
    point: &[f64],
    order: usize,
) -> Result<Jet, EvalError> {
    if order > MAX_ORDER {
        return Err(EvalError {
            subexpr: expr.to_string(),
            reason: format!("order {order} exceeds maximum {MAX_ORDER}"),
        });
    }
    let n = coords.len();
    let fail = |e: &Expr, reason: String| EvalError {
        subexpr: e.to_string(),
        reason,
    };
    fn go(
        e: &Expr,
        coords: &[String],
        point: &[f64],
        n: usize,
        order: usize,
        fail: &dyn Fn(&Expr, String) -> EvalError,
    ) -> Result<Jet, EvalError> {
        let rec = |x: &Expr| go(x, coords, point, n, order, fail);
        Ok(match e {
            Expr::Const(c) => Jet::constant(n, order, *c),
            Expr::Var(name) => {
                let idx = coords
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| fail(e, format!("unknown variable '{name}'")))?;
                Jet::variable(n, order, idx, point[idx])
            }
            Expr::Neg(a) => -&rec(a)?,
            Expr::Add(a, b) => rec(a)? + rec(b)?,
            Expr::Sub(a, b) => rec(a)? - rec(b)?,
            Expr::Mul(a, b) => rec(a)? * rec(b)?,
            Expr::Div(a, b) => {
                let num = rec(a)?;
                let den = rec(b)?;
                num.try_div(&den).map_err(|r| fail(e, r))?
            }
            Expr::Pow(a, b) => {
                let base = rec(a)?;
                match b.constant_value() {
                    Some(c) => base.powf(c).map_err(|r| fail(e, r))?,
                    None => {
                        let exponent = rec(b)?;
                        let log = base.ln().map_err(|r| fail(e, r))?;
                        (exponent * log).exp()
                    }
                }
            }
            Expr::Func(f, a) => {
                let arg = rec(a)?;
                match f {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Exp => arg.exp(),
                    Func::Log => arg.ln().map_err(|r| fail(e, r))?,
                    Func::Sqrt => arg.sqrt().map_err(|r| fail(e, r))?,
                }
            }
        })
    }
    let out = go(expr, coords, point, n, order, &fail)?;
    if out.coeffs.iter().any(|c| !c.is_finite()) {
        return Err(fail(expr, "non-finite result".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use std::f64::consts::FRAC_PI_2;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn layout_sizes_are_binomial() {
        for n in 1..=4 {
            let lay = layout(n);
            let binom = |k: usize| (1..=k).fold(1usize, |acc, i| acc * (n + i) / i);
            for k in 0..=MAX_ORDER {
                assert_eq!(lay.len_by_order[k], binom(k));
            }
        }
    }

    #[test]
    fn product_polynomial() {
        let xy = names(&["x", "y"]);
        let j = jet_eval(&parse_expression("x*y").unwrap(), &xy, &[2.0, 3.0], 2).unwrap();
        assert_eq!(j.value(), 6.0);
        assert_eq!(j.d(&[0]), Some(3.0));
        assert_eq!(j.d(&[1]), Some(2.0));
        assert_eq!(j.d(&[0, 1]), Some(1.0));
        assert_eq!(j.d(&[0, 0]), Some(0.0));
        assert_eq!(j.d(&[0, 0, 0]), None);
    }

    #[test]
    fn sine_at_quarter_turn() {
        let xy = names(&["x", "y"]);
        let j = jet_eval(&parse_expression("sin(y)").unwrap(), &xy, &[0.0, FRAC_PI_2], 2).unwrap();
        assert!((j.value() - 1.0).abs() < 1e-15);
        assert!(j.d(&[1]).unwrap().abs() < 1e-15);
        assert!((j.d(&[1, 1]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn third_order_of_squared_warp() {
        // h = 4 + 4 sin y + sin^2 y, h''' = -4 cos y - 4 sin 2y
        let xy = names(&["x", "y"]);
        let j = jet_eval(&parse_expression("(2+sin(y))^2").unwrap(), &xy, &[0.0, 0.0], 3).unwrap();
        assert!((j.value() - 4.0).abs() < 1e-14);
        assert!((j.d(&[1]).unwrap() - 4.0).abs() < 1e-14);
        assert!((j.d(&[1, 1]).unwrap() - 2.0).abs() < 1e-14);
        assert!((j.d(&[1, 1, 1]).unwrap() + 4.0).abs() < 1e-13);
    }

    #[test]
    fn polynomials_are_exact_to_order() {
        let xyz = names(&["x", "y", "z"]);
        let e = parse_expression("x^3 - 2*x*y*z + z^2*y").unwrap();
        let j = jet_eval(&e, &xyz, &[1.5, -0.5, 2.0], 3).unwrap();
        assert_eq!(j.d(&[0, 0, 0]), Some(6.0));
        assert_eq!(j.d(&[0, 1, 2]), Some(-2.0));
        assert_eq!(j.d(&[1, 2, 2]), Some(2.0));
        assert_eq!(j.d(&[2, 2]), Some(2.0 * -0.5));
    }

    #[test]
    fn derivative_jet_shifts_coefficients() {
        let xy = names(&["x", "y"]);
        let e = parse_expression("exp(x)*cos(y)").unwrap();
        let j = jet_eval(&e, &xy, &[0.3, 0.7], 3).unwrap();
        let dy = j.derivative(1);
        assert_eq!(dy.order(), 2);
        assert!((dy.value() - j.d(&[1]).unwrap()).abs() < 1e-15);
        assert!((dy.d(&[0, 1]).unwrap() - j.d(&[0, 1, 1]).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn domain_violations_name_the_subexpression() {
        let xy = names(&["x", "y"]);
        let err = jet_eval(&parse_expression("1+log(x-2)").unwrap(), &xy, &[1.0, 0.0], 2).unwrap_err();
        assert_eq!(err.subexpr, "log(x-2)");
        let err = jet_eval(&parse_expression("sqrt(-x)").unwrap(), &xy, &[1.0, 0.0], 1).unwrap_err();
        assert_eq!(err.subexpr, "sqrt(-x)");
        let err = jet_eval(&parse_expression("1/(x-1)").unwrap(), &xy, &[1.0, 0.0], 1).unwrap_err();
        assert_eq!(err.subexpr, "1/(x-1)");
    }

    #[test]
    fn integer_powers_of_negative_bases() {
        let x = names(&["x"]);
        let j = jet_eval(&parse_expression("x^-2").unwrap(), &x, &[-2.0], 2).unwrap();
        assert!((j.value() - 0.25).abs() < 1e-15);
        assert!((j.d(&[0]).unwrap() - 0.25).abs() < 1e-15); // -2 x^-3
        assert!((j.d(&[0, 0]).unwrap() - 6.0 / 16.0).abs() < 1e-15);
        let j = jet_eval(&parse_expression("x^(1/2)").unwrap(), &x, &[4.0], 1).unwrap();
        assert!((j.d(&[0]).unwrap() - 0.25).abs() < 1e-15);
    }
}
