//! Prefix-notation scalar expressions over `(x, y)`.
//!
//! ```text
//! expr := (+ expr expr ...) | (* expr expr ...) | (pow expr p/q)
//!       | (x k) | (y k) | (const r)
//! ```
//!
//! Indices `k` are 1-based. Exponents are rationals `p/q` or integers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{JetBundle, JetVars, ScalarField};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Expr {
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, Rational),
    X(usize),
    Y(usize),
    Const(f64),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if let Some(t) = p.tokens.get(p.pos) {
            return Err(t.error("trailing input after expression"));
        }
        Ok(e)
    }

    /// Largest 1-based variable index used (0 if none).
    pub fn max_index(&self) -> usize {
        match self {
            Expr::Add(v) | Expr::Mul(v) => v.iter().map(Expr::max_index).max().unwrap_or(0),
            Expr::Pow(e, _) => e.max_index(),
            Expr::X(k) | Expr::Y(k) => *k,
            Expr::Const(_) => 0,
        }
    }

    pub fn uses_y(&self) -> bool {
        match self {
            Expr::Add(v) | Expr::Mul(v) => v.iter().any(Expr::uses_y),
            Expr::Pow(e, _) => e.uses_y(),
            Expr::Y(_) => true,
            Expr::X(_) | Expr::Const(_) => false,
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        let k = self.max_index();
        if k > n {
            return Err(Error::Expression(format!("variable index {k} exceeds dimension {n} in {self}")));
        }
        Ok(())
    }

    pub fn eval<T: Scalar>(&self, vars: &JetVars<T>) -> Result<JetBundle<T>> {
        match self {
            Expr::Add(terms) => {
                let mut acc = vars.constant(0.0);
                for t in terms {
                    acc = acc.add(&t.eval(vars)?);
                }
                Ok(acc)
            }
            Expr::Mul(terms) => {
                let mut acc = vars.constant(1.0);
                for t in terms {
                    acc = acc.mul(&t.eval(vars)?);
                }
                Ok(acc)
            }
            Expr::Pow(base, r) => base.eval(vars)?.powf(r.value()),
            Expr::X(k) => index(&vars.x, *k).cloned(),
            Expr::Y(k) => index(&vars.y, *k).cloned(),
            Expr::Const(c) => Ok(vars.constant(*c)),
        }
    }

    /// Plain value at a point.
    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let vars = JetVars::seed(x, y, crate::jet::JetOrder::Y1);
        Ok(self.eval(&vars)?.value)
    }
}

fn index<T: Scalar>(v: &[JetBundle<T>], k: usize) -> Result<&JetBundle<T>> {
    if k == 0 || k > v.len() {
        return Err(Error::Expression(format!("variable index {k} out of range 1..={}", v.len())));
    }
    Ok(&v[k - 1])
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Add(v) | Expr::Mul(v) => {
                write!(f, "({}", if matches!(self, Expr::Add(_)) { "+" } else { "*" })?;
                for e in v {
                    write!(f, " {e}")?;
                }
                write!(f, ")")
            }
            Expr::Pow(e, r) => write!(f, "(pow {e} {r})"),
            Expr::X(k) => write!(f, "(x {k})"),
            Expr::Y(k) => write!(f, "(y {k})"),
            Expr::Const(c) => write!(f, "(const {c:?})"),
        }
    }
}

impl TryFrom<String> for Expr {
    type Error = Error;
    fn try_from(s: String) -> Result<Expr> {
        Expr::parse(&s)
    }
}

impl From<Expr> for String {
    fn from(e: Expr) -> String {
        e.to_string()
    }
}

/// An expression together with the dimension it lives in.
#[derive(Clone, Debug)]
pub struct ExprField {
    pub expr: Expr,
    pub n: usize,
}

impl ExprField {
    pub fn new(expr: Expr, n: usize) -> Result<Self> {
        expr.check_dim(n)?;
        Ok(ExprField { expr, n })
    }
}

impl ScalarField for ExprField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval<T: Scalar>(&self, vars: &JetVars<T>) -> Result<JetBundle<T>> {
        self.expr.eval(vars)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

impl Token {
    fn error(&self, msg: &str) -> Error {
        Error::Expression(format!("line {}, column {}: {msg}", self.line, self.col))
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        if c == '(' || c == ')' {
            chars.next();
            col += 1;
            out.push(Token { tok: if c == '(' { Tok::Open } else { Tok::Close }, line: l0, col: c0 });
        } else if c.is_whitespace() {
            chars.next();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        } else {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || c == '(' || c == ')' {
                    break;
                }
                s.push(c);
                chars.next();
                col += 1;
            }
            out.push(Token { tok: Tok::Atom(s), line: l0, col: c0 });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn next(&mut self) -> Result<Token> {
        let t = self.tokens.get(self.pos).cloned().ok_or_else(|| {
            let (line, col) = self.tokens.last().map(|t| (t.line, t.col)).unwrap_or((1, 1));
            Error::Expression(format!("line {line}, column {col}: unexpected end of expression"))
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn peek_close(&self) -> bool {
        matches!(self.tokens.get(self.pos), Some(Token { tok: Tok::Close, .. }))
    }

    fn atom(&mut self) -> Result<(String, Token)> {
        let t = self.next()?;
        match &t.tok {
            Tok::Atom(s) => Ok((s.clone(), t)),
            _ => Err(t.error("expected an atom")),
        }
    }

    fn close(&mut self) -> Result<()> {
        let t = self.next()?;
        if t.tok != Tok::Close {
            return Err(t.error("expected ')'"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        let open = self.next()?;
        if open.tok != Tok::Open {
            return Err(open.error("expected '('"));
        }
        let (head, ht) = self.atom()?;
        let e = match head.as_str() {
            "+" | "*" => {
                let mut args = Vec::new();
                while !self.peek_close() {
                    args.push(self.expr()?);
                }
                if args.is_empty() {
                    return Err(ht.error("operator needs at least one argument"));
                }
                if head == "+" {
                    Expr::Add(args)
                } else {
                    Expr::Mul(args)
                }
            }
            "pow" => {
                let base = self.expr()?;
                let (r, rt) = self.atom()?;
                Expr::Pow(Box::new(base), parse_rational(&r).map_err(|m| rt.error(&m))?)
            }
            "x" | "y" => {
                let (k, kt) = self.atom()?;
                let k: usize = k.parse().map_err(|_| kt.error("index must be a positive integer"))?;
                if k == 0 {
                    return Err(kt.error("indices are 1-based"));
                }
                if head == "x" {
                    Expr::X(k)
                } else {
                    Expr::Y(k)
                }
            }
            "const" => {
                let (v, vt) = self.atom()?;
                let v: f64 = v.parse().map_err(|_| vt.error("invalid number"))?;
                if !v.is_finite() {
                    return Err(vt.error("constant must be finite"));
                }
                Expr::Const(v)
            }
            other => return Err(ht.error(&format!("unknown operator '{other}'"))),
        };
        self.close()?;
        Ok(e)
    }
}

fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    let bad = || format!("exponent '{s}' is not a rational p/q");
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.parse::<i64>().map_err(|_| bad())?, q.parse::<i64>().map_err(|_| bad())?),
        None => (s.parse::<i64>().map_err(|_| bad())?, 1),
    };
    if den <= 0 {
        return Err(format!("exponent '{s}' needs a positive denominator"));
    }
    Ok(Rational { num, den })
}
