//! User expressions over `x1..xn`.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term (("+"|"-") term)* ;
//! term   := factor (("*"|"/") factor)* ;
//! factor := "-" factor | base ("^" INTEGER)? ;
//! base   := NUMBER | VAR | "(" expr ")" | FUNC "(" expr ("," expr)* ")" ;
//! VAR    := "x" DIGIT+ ;   FUNC := "abs"|"max"|"min"|"sqrt"|"norm" ;
//! ```
//!
//! Unary minus is accepted in `factor` and binds looser than `^`, so `-x1^2`
//! is `-(x1^2)`. Exponents may carry a leading minus sign.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative width of the band around a branch switch of `abs`/`max`/`min`/
/// `norm` that is treated as the nonsmooth locus.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Func {
    Abs,
    Max,
    Min,
    Sqrt,
    Norm,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "abs" => Func::Abs,
            "max" => Func::Max,
            "min" => Func::Min,
            "sqrt" => Func::Sqrt,
            "norm" => Func::Norm,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Max => "max",
            Func::Min => "min",
            Func::Sqrt => "sqrt",
            Func::Norm => "norm",
        }
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            Func::Abs | Func::Sqrt => n == 1,
            Func::Max | Func::Min => n >= 2,
            Func::Norm => n >= 1,
        }
    }

    fn arity_text(self) -> &'static str {
        match self {
            Func::Abs | Func::Sqrt => "exactly 1",
            Func::Max | Func::Min => "at least 2",
            Func::Norm => "at least 1",
        }
    }
}

/// Expression tree. Variables are zero-based (`Var(0)` prints as `x1`).
/// Parsed constants are always non-negative; negation is an explicit node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Vec<Expr>),
}

/// Construct that may break local Lipschitz continuity. Flagged, not rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzWarning {
    pub position: usize,
    pub message: String,
}

/// A parsed expression together with its declared dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Expr,
    dim: usize,
    warnings: Vec<LipschitzWarning>,
}

impl Expression {
    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn warnings(&self) -> &[LipschitzWarning] {
        &self.warnings
    }

    /// True when the expression contains no flagged construct.
    pub fn is_lipschitz_clean(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut tie = false;
        eval_value(&self.root, x, &mut tie)
    }

    /// Value and gradient by forward-mode differentiation of the tree.
    /// On a tie the first branch is taken (`abs` uses `+1` at zero).
    pub fn eval_with_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let d = eval_dual(&self.root, x, self.dim)?;
        Ok((d.v, d.g))
    }

    /// True when some `abs`/`max`/`min`/`norm`/`sqrt` argument sits on (or
    /// within `TIE_TOL` of) a branch switch at `x`.
    pub fn at_tie(&self, x: &[f64]) -> bool {
        let mut tie = false;
        // Domain errors are not ties; the caller sees them on evaluation.
        let _ = eval_value(&self.root, x, &mut tie);
        tie
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "(-{a})")
            }
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => {
                write_atom(f, a)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    // Every compound form other than a power already prints its own parens.
    match e {
        Expr::Pow(..) => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

// ---------------------------------------------------------------------------
// Tokenizer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(i64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    j += 1;
                }
                let mut is_int = true;
                if j < bytes.len() && bytes[j] == b'.' {
                    is_int = false;
                    j += 1;
                    while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && (bytes[k] as char).is_ascii_digit() {
                        is_int = false;
                        while k < bytes.len() && (bytes[k] as char).is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let lit = &text[i..j];
                i = j;
                let value: f64 = lit.parse().map_err(|_| Error::Syntax {
                    position: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                let tok = match (is_int, lit.parse::<i64>()) {
                    (true, Ok(n)) => Tok::Int(n),
                    _ => Tok::Num(value),
                };
                out.push((tok, start));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                let mut j = i;
                while j < bytes.len() && (bytes[j] as char).is_ascii_alphanumeric() {
                    j += 1;
                }
                let ident = text[i..j].to_string();
                i = j;
                out.push((Tok::Ident(ident), start));
                continue;
            }
            other => {
                return Err(Error::Syntax {
                    position: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    dim: usize,
    warnings: Vec<LipschitzWarning>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(Error::Syntax {
                position: self.pos(),
                message: format!("expected {what}, found {}", describe(self.peek())),
            })
        }
    }

    fn warn(&mut self, position: usize, message: impl Into<String>) {
        self.warnings.push(LipschitzWarning {
            position,
            message: message.into(),
        });
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    let (_, at) = self.bump();
                    self.warn(at, "division: not Lipschitz near a zero denominator");
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let sign_at = self.pos();
            let negative = if *self.peek() == Tok::Minus {
                self.bump();
                true
            } else {
                false
            };
            let (tok, at) = self.bump();
            let n = match tok {
                Tok::Int(n) => n,
                other => {
                    return Err(Error::Syntax {
                        position: at,
                        message: format!("expected integer exponent, found {}", describe(&other)),
                    })
                }
            };
            let n = if negative { -n } else { n };
            let n = i32::try_from(n).map_err(|_| Error::Syntax {
                position: at,
                message: "exponent out of range".into(),
            })?;
            if n < 0 {
                self.warn(sign_at, "negative power: not Lipschitz near zero");
            }
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Int(n) => Ok(Expr::Num(n as f64)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    if !func.arity_ok(args.len()) {
                        return Err(Error::Arity {
                            name,
                            position: at,
                            expected: func.arity_text().into(),
                            found: args.len(),
                        });
                    }
                    if func == Func::Sqrt {
                        self.warn(at, "sqrt: not Lipschitz where its argument vanishes");
                    }
                    Ok(Expr::Call(func, args))
                } else if let Some(idx) = var_index(&name, self.dim) {
                    Ok(Expr::Var(idx))
                } else {
                    Err(Error::UnknownIdentifier { name, position: at })
                }
            }
            other => Err(Error::Syntax {
                position: at,
                message: format!("unexpected {}", describe(&other)),
            }),
        }
    }
}

fn var_index(name: &str, dim: usize) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let k: usize = digits.parse().ok()?;
    (1..=dim).contains(&k).then(|| k - 1)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Int(n) => format!("number {n}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parses `text` as a function of `x1..x{dim}`.
pub fn parse_expression(text: &str, dim: usize) -> Result<Expression> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
        dim,
        warnings: Vec::new(),
    };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(Error::Syntax {
            position: p.pos(),
            message: format!("unexpected {} after expression", describe(p.peek())),
        });
    }
    Ok(Expression {
        root,
        dim,
        warnings: p.warnings,
    })
}

// ---------------------------------------------------------------------------
// Evaluation

fn tie_band(scale: f64) -> f64 {
    TIE_TOL * (1.0 + scale.abs())
}

fn eval_value(e: &Expr, x: &[f64], tie: &mut bool) -> Result<f64> {
    Ok(match e {
        Expr::Num(v) => *v,
        Expr::Var(i) => x[*i],
        Expr::Neg(a) => -eval_value(a, x, tie)?,
        Expr::Add(a, b) => eval_value(a, x, tie)? + eval_value(b, x, tie)?,
        Expr::Sub(a, b) => eval_value(a, x, tie)? - eval_value(b, x, tie)?,
        Expr::Mul(a, b) => eval_value(a, x, tie)? * eval_value(b, x, tie)?,
        Expr::Div(a, b) => {
            let num = eval_value(a, x, tie)?;
            let den = eval_value(b, x, tie)?;
            if den == 0.0 {
                return Err(Error::Domain("division by zero".into()));
            }
            num / den
        }
        Expr::Pow(a, n) => {
            let base = eval_value(a, x, tie)?;
            if *n < 0 && base == 0.0 {
                return Err(Error::Domain("negative power of zero".into()));
            }
            base.powi(*n)
        }
        Expr::Call(func, args) => {
            let vals = args
                .iter()
                .map(|a| eval_value(a, x, tie))
                .collect::<Result<Vec<_>>>()?;
            match func {
                Func::Abs => {
                    if vals[0].abs() <= tie_band(0.0) {
                        *tie = true;
                    }
                    vals[0].abs()
                }
                Func::Sqrt => {
                    if vals[0] < 0.0 {
                        return Err(Error::Domain(format!("sqrt of negative value {}", vals[0])));
                    }
                    if vals[0] <= tie_band(0.0) {
                        *tie = true;
                    }
                    vals[0].sqrt()
                }
                Func::Norm => {
                    let n = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if n <= tie_band(0.0) {
                        *tie = true;
                    }
                    n
                }
                Func::Max | Func::Min => {
                    let sign = if *func == Func::Max { 1.0 } else { -1.0 };
                    let (best, second) = top_two(vals.iter().map(|v| sign * v));
                    if best - second <= tie_band(best) {
                        *tie = true;
                    }
                    sign * best
                }
            }
        }
    })
}

/// Largest and second-largest of a non-empty sequence of at least two values.
fn top_two(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut best = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for v in vals {
        if v > best {
            second = best;
            best = v;
        } else if v > second {
            second = v;
        }
    }
    (best, second)
}

struct Dual {
    v: f64,
    g: Vec<f64>,
}

fn eval_dual(e: &Expr, x: &[f64], dim: usize) -> Result<Dual> {
    Ok(match e {
        Expr::Num(v) => Dual {
            v: *v,
            g: vec![0.0; dim],
        },
        Expr::Var(i) => {
            let mut g = vec![0.0; dim];
            g[*i] = 1.0;
            Dual { v: x[*i], g }
        }
        Expr::Neg(a) => {
            let a = eval_dual(a, x, dim)?;
            Dual {
                v: -a.v,
                g: a.g.iter().map(|d| -d).collect(),
            }
        }
        Expr::Add(a, b) => {
            let (a, b) = (eval_dual(a, x, dim)?, eval_dual(b, x, dim)?);
            Dual {
                v: a.v + b.v,
                g: a.g.iter().zip(&b.g).map(|(p, q)| p + q).collect(),
            }
        }
        Expr::Sub(a, b) => {
            let (a, b) = (eval_dual(a, x, dim)?, eval_dual(b, x, dim)?);
            Dual {
                v: a.v - b.v,
                g: a.g.iter().zip(&b.g).map(|(p, q)| p - q).collect(),
            }
        }
        Expr::Mul(a, b) => {
            let (a, b) = (eval_dual(a, x, dim)?, eval_dual(b, x, dim)?);
            Dual {
                v: a.v * b.v,
                g: a.g.iter().zip(&b.g).map(|(p, q)| p * b.v + a.v * q).collect(),
            }
        }
        Expr::Div(a, b) => {
            let (a, b) = (eval_dual(a, x, dim)?, eval_dual(b, x, dim)?);
            if b.v == 0.0 {
                return Err(Error::Domain("division by zero".into()));
            }
            let inv = 1.0 / b.v;
            Dual {
                v: a.v * inv,
                g: a.g
                    .iter()
                    .zip(&b.g)
                    .map(|(p, q)| (p * b.v - a.v * q) * inv * inv)
                    .collect(),
            }
        }
        Expr::Pow(a, n) => {
            let a = eval_dual(a, x, dim)?;
            if *n < 0 && a.v == 0.0 {
                return Err(Error::Domain("negative power of zero".into()));
            }
            let d = if *n == 0 {
                0.0
            } else {
                *n as f64 * a.v.powi(n - 1)
            };
            Dual {
                v: a.v.powi(*n),
                g: a.g.iter().map(|p| p * d).collect(),
            }
        }
        Expr::Call(func, args) => {
            let vals = args
                .iter()
                .map(|a| eval_dual(a, x, dim))
                .collect::<Result<Vec<_>>>()?;
            match func {
                Func::Abs => {
                    let a = &vals[0];
                    let s = if a.v < 0.0 { -1.0 } else { 1.0 };
                    Dual {
                        v: a.v.abs(),
                        g: a.g.iter().map(|p| s * p).collect(),
                    }
                }
                Func::Sqrt => {
                    let a = &vals[0];
                    if a.v < 0.0 {
                        return Err(Error::Domain(format!("sqrt of negative value {}", a.v)));
                    }
                    if a.v == 0.0 {
                        return Err(Error::Domain("sqrt has no derivative at zero".into()));
                    }
                    let r = a.v.sqrt();
                    Dual {
                        v: r,
                        g: a.g.iter().map(|p| 0.5 * p / r).collect(),
                    }
                }
                Func::Norm => {
                    let n = vals.iter().map(|d| d.v * d.v).sum::<f64>().sqrt();
                    let mut g = vec![0.0; dim];
                    if n > 0.0 {
                        for d in &vals {
                            for (gk, pk) in g.iter_mut().zip(&d.g) {
                                *gk += d.v * pk / n;
                            }
                        }
                    }
                    Dual { v: n, g }
                }
                Func::Max | Func::Min => {
                    let pick = vals
                        .iter()
                        .enumerate()
                        .fold(0, |best, (i, d)| {
                            let better = if *func == Func::Max {
                                d.v > vals[best].v
                            } else {
                                d.v < vals[best].v
                            };
                            if better {
                                i
                            } else {
                                best
                            }
                        });
                    let d = &vals[pick];
                    Dual {
                        v: d.v,
                        g: d.g.clone(),
                    }
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sum_of_squares() {
        let e = parse_expression("x1^2 + x2^2", 2).unwrap();
        assert_eq!(
            e.root(),
            &Expr::Add(
                Box::new(Expr::Pow(Box::new(Expr::Var(0)), 2)),
                Box::new(Expr::Pow(Box::new(Expr::Var(1)), 2)),
            )
        );
        assert!(e.is_lipschitz_clean());
    }

    #[test]
    fn parses_single_abs() {
        let e = parse_expression("abs(x1^2 - 1) + x2^2", 2).unwrap();
        fn count_abs(e: &Expr) -> usize {
            match e {
                Expr::Call(Func::Abs, args) => 1 + args.iter().map(count_abs).sum::<usize>(),
                Expr::Call(_, args) => args.iter().map(count_abs).sum(),
                Expr::Neg(a) | Expr::Pow(a, _) => count_abs(a),
                Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                    count_abs(a) + count_abs(b)
                }
                _ => 0,
            }
        }
        assert_eq!(count_abs(e.root()), 1);
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn parses_broughton() {
        let e = parse_expression("x1 + x1^2 * x2", 2).unwrap();
        assert_eq!(
            e.root(),
            &Expr::Add(
                Box::new(Expr::Var(0)),
                Box::new(Expr::Mul(
                    Box::new(Expr::Pow(Box::new(Expr::Var(0)), 2)),
                    Box::new(Expr::Var(1)),
                )),
            )
        );
        let (v, g) = e.eval_with_gradient(&[1.0, 1.0]).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(g, vec![3.0, 1.0]);
    }

    #[test]
    fn syntax_error_reports_position() {
        match parse_expression("x1 + * x2", 2) {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 5),
            other => panic!("unexpected {other:?}"),
        }
        match parse_expression("(x1 + x2", 2) {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifiers() {
        assert!(matches!(
            parse_expression("x3 + x1", 2),
            Err(Error::UnknownIdentifier { position: 0, .. })
        ));
        assert!(matches!(
            parse_expression("x0", 2),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse_expression("sin(x1)", 1),
            Err(Error::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn arity_mismatch() {
        assert!(matches!(
            parse_expression("abs(x1, x2)", 2),
            Err(Error::Arity { found: 2, .. })
        ));
        assert!(matches!(
            parse_expression("max(x1)", 2),
            Err(Error::Arity { found: 1, .. })
        ));
    }

    #[test]
    fn non_lipschitz_constructs_are_flagged() {
        let e = parse_expression("sqrt(x1^2 + x2^2)", 2).unwrap();
        assert_eq!(e.warnings().len(), 1);
        let e = parse_expression("1 / x1 + x2^-2", 2).unwrap();
        assert_eq!(e.warnings().len(), 2);
        assert!(matches!(e.eval(&[0.0, 1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse_expression("-x1^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
    }

    #[test]
    fn ties_detected() {
        let e = parse_expression("max(x1, x2) + abs(x1 - 1)", 2).unwrap();
        assert!(e.at_tie(&[0.5, 0.5]));
        assert!(e.at_tie(&[1.0, 0.0]));
        assert!(!e.at_tie(&[0.5, 0.2]));
    }

    #[test]
    fn printing_round_trips() {
        for text in [
            "x1^2 + x2^2",
            "abs(x1^2 - 1) + x2^2",
            "-x1^2 * (x2 - 0.125) / 3",
            "max(x1, min(x2, 2.5e-3), norm(x1, x2))^3",
            "(x1^2)^3 - -x2",
        ] {
            let e = parse_expression(text, 2).unwrap();
            let again = parse_expression(&e.to_string(), 2).unwrap();
            assert_eq!(e.root(), again.root(), "{text} -> {e}");
        }
    }
}
