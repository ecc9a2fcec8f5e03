//! Surface syntax for Weyl-algebra expressions.
//!
//! ```text
//! expr   := term {("+" | "-") term}
//! term   := factor {"*" factor}
//! factor := "-" factor | base ["^" uint]
//! base   := complex-literal | "u" uint | "v" uint | "hbar"
//!         | "(" expr ")" | "exp_*(" expr ")"
//! ```
//!
//! Every `*` is the star product of the active ordering. Complex literals
//! are `a`, `bi`, `i` and `a+bi`; a real literal followed by `+`/`-` and an
//! imaginary literal is read as one complex number.

use std::fmt;

use crate::error::{Error, Result};
use crate::gaussian::{
    left_divide, star_gausspoly_gauss, star_gausspoly_poly, GaussPoly, GaussianElement, Side,
};
use crate::linalg::{self, CMatrix, C64, I, ZERO};
use crate::poly::{star_poly, OrderingK, Params, PolyC};
use crate::star_exponential::star_exp_quadratic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    U,
    V,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Scalar(C64),
    Hbar,
    /// Generator with 1-based index.
    Gen(GenKind, usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Star(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    StarExp(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, imag: bool },
    Gen(GenKind, usize),
    Hbar,
    ExpStar,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn parse_err(pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse { pos, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let digits = |mut j: usize| {
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        j
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut j = digits(i);
                if j < bytes.len() && bytes[j] == b'.' {
                    j = digits(j + 1);
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    let end = digits(k);
                    if end > k {
                        j = end;
                    }
                }
                let value: f64 = text[i..j]
                    .parse()
                    .map_err(|_| parse_err(start, format!("bad number '{}'", &text[i..j])))?;
                let imag = j < bytes.len() && bytes[j] == b'i';
                if imag {
                    j += 1;
                }
                i = j;
                out.push((start, Tok::Num { value, imag }));
                continue;
            }
            b'u' | b'v' if i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() => {
                let j = digits(i + 1);
                let index = text[i + 1..j]
                    .parse()
                    .map_err(|_| parse_err(start + 1, "generator index too large"))?;
                let kind = if c == b'u' { GenKind::U } else { GenKind::V };
                i = j;
                out.push((start, Tok::Gen(kind, index)));
                continue;
            }
            _ if text[i..].starts_with("exp_*") => {
                i += 5;
                out.push((start, Tok::ExpStar));
                continue;
            }
            _ if text[i..].starts_with("hbar") => {
                i += 4;
                out.push((start, Tok::Hbar));
                continue;
            }
            b'i' => Tok::Num { value: 1.0, imag: true },
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(parse_err(start, format!("unexpected character '{ch}'")));
            }
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    p: &'a Params,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let at = self.offset();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            _ => Err(parse_err(at, format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            let minus = match self.peek() {
                Some(Tok::Plus) => false,
                Some(Tok::Minus) => true,
                _ => return Ok(acc),
            };
            self.bump();
            let rhs = self.term()?;
            acc = match (&acc, &rhs) {
                (Expr::Scalar(a), Expr::Scalar(b)) if a.im == 0.0 && b.re == 0.0 && b.im != 0.0 => {
                    Expr::Scalar(if minus { a - b } else { a + b })
                }
                _ if minus => Expr::Sub(Box::new(acc), Box::new(rhs)),
                _ => Expr::Add(Box::new(acc), Box::new(rhs)),
            };
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.bump();
            let rhs = self.factor()?;
            acc = Expr::Star(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(match self.factor()? {
                Expr::Scalar(c) => Expr::Scalar(-c),
                inner => Expr::Neg(Box::new(inner)),
            });
        }
        let base = self.base()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        match self.bump() {
            Some(Tok::Num { value, imag: false }) if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 => {
                Ok(Expr::Pow(Box::new(base), value as u32))
            }
            _ => Err(parse_err(at, "expected a non-negative integer exponent")),
        }
    }

    fn base(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Num { value, imag }) => Ok(Expr::Scalar(if imag { C64::new(0.0, value) } else { C64::new(value, 0.0) })),
            Some(Tok::Hbar) => Ok(Expr::Hbar),
            Some(Tok::Gen(kind, index)) => {
                if index == 0 || index > self.p.m {
                    return Err(Error::IndexOutOfRange { index, m: self.p.m });
                }
                Ok(Expr::Gen(kind, index))
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some(Tok::ExpStar) => {
                self.expect(Tok::LParen, "'(' after exp_*")?;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                match degree_bound(&inner) {
                    Some(d) if d <= 2 => Ok(Expr::StarExp(Box::new(inner))),
                    Some(d) => Err(Error::NonQuadraticExponent(format!("degree {d}"))),
                    None => Err(Error::NonQuadraticExponent("nested exp_*".into())),
                }
            }
            _ => Err(parse_err(at, "expected a literal, generator, hbar, '(' or exp_*(")),
        }
    }
}

/// Upper bound for the polynomial degree; `None` for non-polynomial input.
fn degree_bound(e: &Expr) -> Option<u64> {
    Some(match e {
        Expr::Scalar(_) | Expr::Hbar => 0,
        Expr::Gen(..) => 1,
        Expr::Add(a, b) | Expr::Sub(a, b) => degree_bound(a)?.max(degree_bound(b)?),
        Expr::Neg(a) => degree_bound(a)?,
        Expr::Star(a, b) => degree_bound(a)? + degree_bound(b)?,
        Expr::Pow(a, n) => degree_bound(a)?.saturating_mul(*n as u64),
        Expr::StarExp(_) => return None,
    })
}

/// Parses `text` for `p.m` pairs of generators.
pub fn parse_expr(text: &str, p: &Params) -> Result<Expr> {
    let toks = lex(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        end: text.len(),
        p,
    };
    let e = parser.expr()?;
    if parser.pos < parser.toks.len() {
        return Err(parse_err(parser.offset(), "unexpected trailing input"));
    }
    Ok(e)
}

fn fmt_scalar(c: C64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let (re, im) = (c.re, c.im);
    match () {
        _ if im == 0.0 => write!(f, "{re}"),
        _ if re == 0.0 => write!(f, "{im}i"),
        _ if im < 0.0 => write!(f, "({re}-{}i)", -im),
        _ => write!(f, "({re}+{im}i)"),
    }
}

impl Expr {
    /// Binding strength: sums 1, products 2, unary minus 3, powers 4, atoms 5.
    fn level(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Star(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Scalar(c) if c.re.is_sign_negative() || (c.re == 0.0 && c.im < 0.0) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_at(&self, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level() < min {
            write!(f, "(")?;
            self.fmt_at(0, f)?;
            return write!(f, ")");
        }
        match self {
            Expr::Scalar(c) => fmt_scalar(*c, f),
            Expr::Hbar => write!(f, "hbar"),
            Expr::Gen(GenKind::U, i) => write!(f, "u{i}"),
            Expr::Gen(GenKind::V, i) => write!(f, "v{i}"),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let op = if matches!(self, Expr::Add(..)) { "+" } else { "-" };
                a.fmt_at(1, f)?;
                write!(f, " {op} ")?;
                b.fmt_at(2, f)
            }
            Expr::Star(a, b) => {
                a.fmt_at(2, f)?;
                write!(f, " * ")?;
                b.fmt_at(3, f)
            }
            Expr::Neg(a) => {
                // "-" applied to a bare literal would fold into the literal.
                write!(f, "-")?;
                let min = if matches!(**a, Expr::Scalar(_)) { 6 } else { 3 };
                a.fmt_at(min, f)
            }
            Expr::Pow(a, n) => {
                a.fmt_at(5, f)?;
                write!(f, "^{n}")
            }
            Expr::StarExp(a) => {
                write!(f, "exp_*(")?;
                a.fmt_at(0, f)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(0, f)
    }
}

/// Result of evaluating an expression: a polynomial, or a polynomial times
/// a Gaussian (only defined up to sign).
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Poly(PolyC),
    Gauss(GaussPoly),
}

impl Value {
    pub fn two_valued(&self) -> bool {
        matches!(self, Value::Gauss(_))
    }
}

fn star_values(a: Value, b: Value, ord: &OrderingK, p: &Params) -> Result<Value> {
    Ok(match (a, b) {
        (Value::Poly(x), Value::Poly(y)) => Value::Poly(star_poly(&x, &y, ord, p)?),
        (Value::Poly(x), Value::Gauss(g)) => Value::Gauss(star_gausspoly_poly(&g, &x, ord, p, Side::Left)?),
        (Value::Gauss(g), Value::Poly(y)) => Value::Gauss(star_gausspoly_poly(&g, &y, ord, p, Side::Right)?),
        (Value::Gauss(f), Value::Gauss(g)) => {
            // (p F) * (q G) = ((p F) * r) * G with r * G = q G.
            let r = left_divide(&g.prefactor, &g.core, ord, p)?;
            let fr = star_gausspoly_poly(&f, &r, ord, p, Side::Right)?;
            Value::Gauss(star_gausspoly_gauss(&fr, &g.core, ord, p)?)
        }
    })
}

fn combine(a: Value, b: Value, sign: f64) -> Result<Value> {
    match (a, b) {
        (Value::Poly(x), Value::Poly(y)) => Ok(Value::Poly(x.add(&y.scale(C64::from(sign))))),
        (Value::Gauss(x), Value::Gauss(y)) if x.core.q() == y.core.q() => {
            let sum = x
                .scaled_prefactor()
                .add(&y.scaled_prefactor().scale(C64::from(sign)));
            if sum.is_zero() {
                return Ok(Value::Poly(sum));
            }
            let core = GaussianElement::new(C64::from(1.0), x.core.q().clone())?;
            Ok(Value::Gauss(GaussPoly::new(sum, core)?))
        }
        _ => Err(Error::Invalid("sum leaves the class of polynomials times one Gaussian".into())),
    }
}

/// Splits a polynomial of degree at most 2 into `(A, c)` with
/// `f = A[z] + c`; linear terms are rejected.
pub fn split_quadratic(f: &PolyC) -> Result<(CMatrix, C64)> {
    let n = f.nvars();
    let mut a = CMatrix::zeros(n, n);
    let mut c = ZERO;
    let tol = 1e-14 * f.max_coeff().max(1.0);
    for (e, &v) in f.terms() {
        let idx: Vec<usize> = e.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize)).collect();
        match idx.as_slice() {
            [] => c += v,
            [_] if v.norm() <= tol => {}
            [_] => return Err(Error::NonQuadraticExponent("linear terms are not supported".into())),
            [i, j] if i == j => a[(*i, *i)] += v,
            [i, j] => {
                a[(*i, *j)] += v / 2.0;
                a[(*j, *i)] += v / 2.0;
            }
            _ => return Err(Error::NonQuadraticExponent(format!("degree {}", idx.len()))),
        }
    }
    Ok((a, c))
}

/// `exp_*(f)` for `f = A[z] + c` in the ordering `ord`: the abstract element
/// is `A_* + c - (i hbar / 2) Tr(K A)`, so the value is
/// `e^{c - (i hbar/2) Tr(K A)} exp_*(A_*)`.
pub fn star_exp_of_poly(f: &PolyC, ord: &OrderingK, p: &Params) -> Result<GaussianElement> {
    let (a, c) = split_quadratic(f)?;
    let shift = c - I * (p.hbar / 2.0) * linalg::trace(&(ord.k() * &a));
    let e = star_exp_quadratic(&a, ord, p, C64::from(1.0))?.element.into_representative();
    let g = e.g() * shift.exp();
    GaussianElement::new(g, e.q().clone())
}

/// Evaluates a parsed expression with star products in `ord`.
pub fn eval(e: &Expr, ord: &OrderingK, p: &Params) -> Result<Value> {
    let n = p.dim();
    Ok(match e {
        Expr::Scalar(c) => Value::Poly(PolyC::constant(n, *c)),
        Expr::Hbar => Value::Poly(PolyC::constant(n, C64::from(p.hbar))),
        Expr::Gen(kind, i) => {
            if *i == 0 || *i > p.m {
                return Err(Error::IndexOutOfRange { index: *i, m: p.m });
            }
            let idx = match kind {
                GenKind::U => i - 1,
                GenKind::V => p.m + i - 1,
            };
            Value::Poly(PolyC::generator(n, idx))
        }
        Expr::Add(a, b) => combine(eval(a, ord, p)?, eval(b, ord, p)?, 1.0)?,
        Expr::Sub(a, b) => combine(eval(a, ord, p)?, eval(b, ord, p)?, -1.0)?,
        Expr::Neg(a) => match eval(a, ord, p)? {
            Value::Poly(x) => Value::Poly(x.scale(C64::from(-1.0))),
            Value::Gauss(g) => Value::Gauss(GaussPoly::new(g.prefactor.scale(C64::from(-1.0)), g.core)?),
        },
        Expr::Star(a, b) => star_values(eval(a, ord, p)?, eval(b, ord, p)?, ord, p)?,
        Expr::Pow(a, k) => {
            let base = eval(a, ord, p)?;
            let mut acc = Value::Poly(PolyC::one(n));
            for _ in 0..*k {
                acc = star_values(acc, base.clone(), ord, p)?;
            }
            acc
        }
        Expr::StarExp(a) => match eval(a, ord, p)? {
            Value::Poly(f) => Value::Gauss(GaussPoly::from_gaussian(star_exp_of_poly(&f, ord, p)?)),
            Value::Gauss(_) => return Err(Error::NonQuadraticExponent("nested exp_*".into())),
        },
    })
}

/// Parses and evaluates in one go.
pub fn evaluate_str(text: &str, ord: &OrderingK, p: &Params) -> Result<Value> {
    eval(&parse_expr(text, p)?, ord, p)
}
