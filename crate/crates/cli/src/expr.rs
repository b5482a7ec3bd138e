//! Polynomial expressions for problem input.
//!
//! ```text
//! expr   := sign? term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' uint)?
//! base   := number | ident | '(' expr ')'
//! ```
//!
//! There is no implicit multiplication: `2x` is an error, `2*x` is not.

use std::fmt::Write;

use sosforge_core::{Error, PPoly, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum PolyExpr {
    Const(f64),
    Var(String),
    Sum(Vec<PolyExpr>),
    Neg(Box<PolyExpr>),
    Product(Vec<PolyExpr>),
    Power(Box<PolyExpr>, u32),
}

impl PolyExpr {
    pub fn lower(&self) -> Result<PPoly> {
        Ok(match self {
            PolyExpr::Const(c) => PPoly::scalar(*c),
            PolyExpr::Var(v) => PPoly::var(v),
            PolyExpr::Neg(e) => e.lower()?.neg(),
            PolyExpr::Power(e, k) => e.lower()?.pow(*k)?,
            PolyExpr::Sum(es) => {
                let mut acc = PPoly::scalar(0.0);
                for e in es {
                    acc = acc.add(&e.lower()?)?;
                }
                acc
            }
            PolyExpr::Product(es) => {
                let mut acc = PPoly::scalar(1.0);
                for e in es {
                    acc = acc.mul(&e.lower()?)?;
                }
                acc
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Tok<'a> {
    Num(&'a str),
    Ident(&'a str),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    End,
}

fn err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset, message: message.into() }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok<'_>)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                out.push((start, Tok::Num(&src[start..i])));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(&src[start..i])));
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(err(i, format!("unexpected character {ch:?}")));
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> (usize, Tok<'a>) {
        self.toks[self.pos]
    }

    fn bump(&mut self) -> (usize, Tok<'a>) {
        let t = self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<PolyExpr> {
        let mut terms = Vec::new();
        let first = match self.peek().1 {
            Tok::Minus => {
                self.bump();
                PolyExpr::Neg(Box::new(self.term()?))
            }
            Tok::Plus => {
                self.bump();
                self.term()?
            }
            _ => self.term()?,
        };
        terms.push(first);
        loop {
            match self.peek().1 {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(PolyExpr::Neg(Box::new(self.term()?)));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { PolyExpr::Sum(terms) })
    }

    fn term(&mut self) -> Result<PolyExpr> {
        let mut factors = vec![self.factor()?];
        while self.peek().1 == Tok::Star {
            self.bump();
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { PolyExpr::Product(factors) })
    }

    fn factor(&mut self) -> Result<PolyExpr> {
        let base = self.base()?;
        if self.peek().1 != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        match self.bump() {
            (_, Tok::Num(s)) if s.bytes().all(|b| b.is_ascii_digit()) => {
                let (off, _) = self.toks[self.pos - 1];
                let k: u32 = s.parse().map_err(|_| err(off, format!("exponent {s} is too large")))?;
                Ok(PolyExpr::Power(Box::new(base), k))
            }
            (off, Tok::Num(s)) => Err(err(off, format!("exponent {s} is not a nonnegative integer"))),
            (off, Tok::Minus) => Err(err(off, "negative exponent")),
            (off, t) => Err(err(off, format!("expected an exponent, found {}", describe(t)))),
        }
    }

    fn base(&mut self) -> Result<PolyExpr> {
        match self.bump() {
            (off, Tok::Num(s)) => {
                let v: f64 = s.parse().map_err(|_| err(off, format!("malformed number {s}")))?;
                Ok(PolyExpr::Const(v))
            }
            (_, Tok::Ident(s)) => Ok(PolyExpr::Var(s.to_string())),
            (_, Tok::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    (_, Tok::RParen) => Ok(e),
                    (off, t) => Err(err(off, format!("expected ')', found {}", describe(t)))),
                }
            }
            (off, t) => Err(err(off, format!("expected a number, variable or '(', found {}", describe(t)))),
        }
    }
}

fn describe(t: Tok<'_>) -> String {
    match t {
        Tok::Num(s) => format!("number {s}"),
        Tok::Ident(s) => format!("identifier {s}"),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Caret => "'^'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::End => "end of input".into(),
    }
}

pub fn parse_expr(text: &str) -> Result<PolyExpr> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let e = p.expr()?;
    match p.peek() {
        (_, Tok::End) => Ok(e),
        (off, t) => Err(err(off, format!("unexpected {}", describe(t)))),
    }
}

/// Parses and lowers to a compressed scalar polynomial.
pub fn parse_poly(text: &str) -> Result<PPoly> {
    Ok(parse_expr(text)?.lower()?.compress())
}

fn format_coeff(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Canonical text of a scalar polynomial, terms in basis order.
pub fn print_poly(p: &PPoly) -> Result<String> {
    if p.matdim() != (1, 1) {
        return Err(Error::Dimension("only scalar polynomials can be printed as expressions".into()));
    }
    let d = p.as_dpoly();
    let basis = d.basis();
    let vars = d.ivars();
    let mut out = String::new();
    for (coef, _, k) in d.entry_terms(0, 0) {
        if coef == 0.0 {
            continue;
        }
        let mono: Vec<String> = basis
            .row(k)
            .iter()
            .map(|(v, e)| if e == 1 { vars.name(v).to_string() } else { format!("{}^{e}", vars.name(v)) })
            .collect();
        let mag = format_coeff(coef.abs());
        let body = match (mono.is_empty(), coef.abs() == 1.0) {
            (true, _) => mag,
            (false, true) => mono.join("*"),
            (false, false) => format!("{mag}*{}", mono.join("*")),
        };
        match (out.is_empty(), coef < 0.0) {
            (true, true) => write!(out, "-{body}"),
            (true, false) => write!(out, "{body}"),
            (false, true) => write!(out, " - {body}"),
            (false, false) => write!(out, " + {body}"),
        }
        .expect("writing to a string");
    }
    if out.is_empty() {
        out.push('0');
    }
    Ok(out)
}
