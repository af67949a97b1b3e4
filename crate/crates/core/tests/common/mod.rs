#![allow(dead_code)]

use foliage::expr::{Expr, Func};
use rand::Rng;

/// Random expression tree over `vars`; constants are non-negative so the
/// printed form parses back to the same tree.
pub fn random_expr(rng: &mut impl Rng, depth: usize, vars: &[&str]) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.5) {
            Expr::Var(vars[rng.gen_range(0..vars.len())].to_string())
        } else {
            let c: f64 = match rng.gen_range(0..3) {
                0 => rng.gen_range(0..10) as f64,
                1 => rng.gen_range(0.0..5.0),
                _ => rng.gen_range(1e-6..1e6),
            };
            Expr::Const(c)
        };
    }
    let sub = |rng: &mut _| Box::new(random_expr(rng, depth - 1, vars));
    match rng.gen_range(0..8) {
        0 => Expr::Neg(sub(rng)),
        1 => Expr::Add(sub(rng), sub(rng)),
        2 => Expr::Sub(sub(rng), sub(rng)),
        3 => Expr::Mul(sub(rng), sub(rng)),
        4 => Expr::Div(sub(rng), sub(rng)),
        5 => Expr::Pow(sub(rng), sub(rng)),
        _ => Expr::Func(Func::ALL[rng.gen_range(0..Func::ALL.len())], sub(rng)),
    }
}

/// Smooth, everywhere-defined expression for derivative checks.
pub fn smooth_expr(rng: &mut impl Rng, depth: usize, vars: &[&str]) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.6) {
            Expr::Var(vars[rng.gen_range(0..vars.len())].to_string())
        } else {
            Expr::Const(rng.gen_range(0.0..2.0))
        };
    }
    let sub = |rng: &mut _| Box::new(smooth_expr(rng, depth - 1, vars));
    match rng.gen_range(0..6) {
        0 => Expr::Add(sub(rng), sub(rng)),
        1 => Expr::Sub(sub(rng), sub(rng)),
        2 => Expr::Mul(sub(rng), sub(rng)),
        3 => Expr::Func(Func::Sin, sub(rng)),
        4 => Expr::Func(Func::Cos, sub(rng)),
        _ => Expr::Div(sub(rng), Box::new(Expr::Add(Box::new(Expr::Const(2.0)), Box::new(Expr::Func(Func::Sin, sub(rng)))))),
    }
}

/// Richardson-extrapolated central difference of `f` along `dir`.
pub fn richardson(f: &dyn Fn(&[f64]) -> f64, x: &[f64], dir: usize, h: f64) -> f64 {
    let d = |h: f64| {
        let mut a = x.to_vec();
        let mut b = x.to_vec();
        a[dir] += h;
        b[dir] -= h;
        (f(&a) - f(&b)) / (2.0 * h)
    };
    let (d1, d2, d4) = (d(h), d(h / 2.0), d(h / 4.0));
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d4 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
