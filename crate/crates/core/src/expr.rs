//! Scalar-field expressions over chart coordinates.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | ident | func '(' expr ')' | '(' expr ')'
//! func  := sin | cos | exp | log | sqrt
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)` and `2^-1` is `2^(-1)`. The identifier `pi` is the constant.
//! Numeric literals are non-negative; a leading minus is always a `Neg` node.

use std::collections::BTreeSet;
use std::fmt;
use std::ops;

use thiserror::Error;

/// Elementary functions understood by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

/// Expression tree. Constants are finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}; valid coordinates: {}", valid.join(", "))]
    UnknownIdentifier {
        name: String,
        offset: usize,
        valid: Vec<String>,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

/// Parse an expression, accepting any identifier as a variable.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    Parser::new(text, None).parse()
}

/// Parse an expression whose variables must be among `coords`.
pub fn parse_with_coords(text: &str, coords: &[String]) -> Result<Expr, ParseError> {
    Parser::new(text, Some(coords)).parse()
}

impl Expr {
    /// Constant node; negative values become `Neg(Const(|c|))`.
    pub fn constant(c: f64) -> Expr {
        assert!(c.is_finite(), "expression constants must be finite");
        if c < 0.0 {
            Expr::Neg(Box::new(Expr::Const(-c)))
        } else {
            // normalizes -0.0
            Expr::Const(c.abs())
        }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Box::new(arg))
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        match (&self, &exponent) {
            (_, Expr::Const(e)) if *e == 1.0 => self,
            (_, Expr::Const(e)) if *e == 0.0 => Expr::Const(1.0),
            (Expr::Const(b), Expr::Const(e)) if (b.powf(*e)).is_finite() => {
                Expr::constant(b.powf(*e))
            }
            _ => Expr::Pow(Box::new(self), Box::new(exponent)),
        }
    }

    pub fn square(self) -> Expr {
        self.pow(Expr::Const(2.0))
    }

    /// Value if the expression contains no variables.
    pub fn constant_value(&self) -> Option<f64> {
        if self.variables().is_empty() {
            self.eval(&|_| None).ok()
        } else {
            None
        }
    }

    /// Names of all variables referenced.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Func(_, a) => a.collect_vars(out),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Plain floating-point evaluation; `lookup` resolves variable names.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, String> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => lookup(v).ok_or_else(|| format!("unbound variable '{v}'"))?,
            Expr::Neg(a) => -a.eval(lookup)?,
            Expr::Add(a, b) => a.eval(lookup)? + b.eval(lookup)?,
            Expr::Sub(a, b) => a.eval(lookup)? - b.eval(lookup)?,
            Expr::Mul(a, b) => a.eval(lookup)? * b.eval(lookup)?,
            Expr::Div(a, b) => a.eval(lookup)? / b.eval(lookup)?,
            Expr::Pow(a, b) => {
                let base = a.eval(lookup)?;
                let e = b.eval(lookup)?;
                if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                    base.powi(e as i32)
                } else {
                    base.powf(e)
                }
            }
            Expr::Func(f, a) => f.apply(a.eval(lookup)?),
        })
    }

    /// Evaluate with coordinates bound positionally.
    pub fn eval_at(&self, coords: &[String], point: &[f64]) -> Result<f64, String> {
        self.eval(&|name| coords.iter().position(|c| c == name).map(|i| point[i]))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::Var(_) | Expr::Func(..) => 5,
        }
    }

    fn write_prec(&self, out: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            out.write_str("(")?;
        }
        match self {
            Expr::Const(c) => write!(out, "{c}")?,
            Expr::Var(v) => out.write_str(v)?,
            Expr::Neg(a) => {
                out.write_str("-")?;
                a.write_prec(out, 3)?;
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_prec(out, 1)?;
                out.write_str(if matches!(self, Expr::Add(..)) { "+" } else { "-" })?;
                b.write_prec(out, 2)?;
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write_prec(out, 2)?;
                out.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.write_prec(out, 3)?;
            }
            Expr::Pow(a, b) => {
                a.write_prec(out, 5)?;
                out.write_str("^")?;
                b.write_prec(out, 3)?;
            }
            Expr::Func(f, a) => {
                out.write_str(f.name())?;
                out.write_str("(")?;
                a.write_prec(out, 0)?;
                out.write_str(")")?;
            }
        }
        if wrap {
            out.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

// Builder arithmetic with light constant folding; used to assemble warped
// metric entries.
impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (&self, &rhs) {
            (Expr::Const(a), _) if *a == 0.0 => rhs,
            (_, Expr::Const(b)) if *b == 0.0 => self,
            (Expr::Const(a), Expr::Const(b)) => Expr::constant(a + b),
            _ => Expr::Add(Box::new(self), Box::new(rhs)),
        }
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (&self, &rhs) {
            (_, Expr::Const(b)) if *b == 0.0 => self,
            (Expr::Const(a), Expr::Const(b)) => Expr::constant(a - b),
            (Expr::Const(a), _) if *a == 0.0 => -rhs,
            _ => Expr::Sub(Box::new(self), Box::new(rhs)),
        }
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (&self, &rhs) {
            (Expr::Const(a), _) | (_, Expr::Const(a)) if *a == 0.0 => Expr::Const(0.0),
            (Expr::Const(a), _) if *a == 1.0 => rhs,
            (_, Expr::Const(b)) if *b == 1.0 => self,
            (Expr::Const(a), Expr::Const(b)) => Expr::constant(a * b),
            _ => Expr::Mul(Box::new(self), Box::new(rhs)),
        }
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (&self, &rhs) {
            (Expr::Const(a), _) if *a == 0.0 => Expr::Const(0.0),
            (_, Expr::Const(b)) if *b == 1.0 => self,
            (Expr::Const(a), Expr::Const(b)) if *b != 0.0 => Expr::constant(a / b),
            _ => Expr::Div(Box::new(self), Box::new(rhs)),
        }
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(0.0) => Expr::Const(0.0),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    coords: Option<&'a [String]>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, coords: Option<&'a [String]>) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            coords,
        }
    }

    fn parse(mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.pos >= self.bytes.len() {
            return Err(self.error("empty expression"));
        }
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.bytes.len() {
            return Err(self.error(format!("unexpected '{}'", self.peek_char())));
        }
        Ok(e)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn peek_char(&self) -> char {
        self.src[self.pos..].chars().next().unwrap_or('\0')
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.bytes.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let Some(&c) = self.bytes.get(self.pos) else {
            return Err(self.error("unexpected end of input"));
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(e);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < self.bytes.len()
                && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let name = &self.src[start..self.pos];
            if let Some(f) = Func::from_name(name) {
                if !self.eat(b'(') {
                    return Err(self.error(format!("expected '(' after '{name}'")));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                return Ok(Expr::Func(f, Box::new(arg)));
            }
            if name == "pi" {
                return Ok(Expr::Const(std::f64::consts::PI));
            }
            if let Some(coords) = self.coords {
                if !coords.iter().any(|c| c == name) {
                    return Err(ParseError::UnknownIdentifier {
                        name: name.to_string(),
                        offset: start,
                        valid: coords.to_vec(),
                    });
                }
            }
            return Ok(Expr::Var(name.to_string()));
        }
        Err(self.error(format!("unexpected '{}'", self.peek_char())))
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.bytes.len() && p.bytes[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Const(v)),
            _ => Err(ParseError::Syntax {
                offset: start,
                message: format!("invalid number '{text}'"),
            }),
        }
    }
}
