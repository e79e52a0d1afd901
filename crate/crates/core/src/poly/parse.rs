//! Text grammar for polynomials.
//!
//! ```text
//! expr    := ['+'|'-'] term (('+'|'-') term)*
//! term    := factor (['*'] factor | '/' factor)*
//! factor  := ('+'|'-') factor | primary ['^' integer]
//! primary := number | 'x' digits | 'u' digits | '(' expr ')'
//! ```
//!
//! Juxtaposition multiplies, so `1 x1^2 u2` and `3*x1*u2` are both accepted.
//! Division is only allowed by a nonzero constant.

use super::{Monomial, Polynomial, Var};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Var(Var),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

fn line_col(src: &[u8], pos: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for &c in &src[..pos.min(src.len())] {
        if c == b'\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn err_at(src: &[u8], pos: usize, message: impl Into<String>) -> Error {
    let (line, column) = line_col(src, pos);
    Error::Parse { line, column, message: message.into() }
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        loop {
            let t = lx.next()?;
            let end = t.0 == Tok::End;
            out.push(t);
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c == b'x' || c == b'u' {
            self.pos += 1;
            let ds = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if ds == self.pos {
                return Err(err_at(self.src, start, format!("expected digits after `{}`", c as char)));
            }
            let label: u32 = std::str::from_utf8(&self.src[ds..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| err_at(self.src, ds, "variable label out of range"))?;
            if c == b'x' && label == 0 {
                return Err(err_at(self.src, start, "decision variables are numbered from x1"));
            }
            let v = if c == b'x' { Var::x(label) } else { Var::u(label) };
            return Ok((Tok::Var(v), start));
        }
        if c.is_ascii_digit() || c == b'.' {
            let s = self.src;
            let mut p = self.pos;
            while p < s.len() && (s[p].is_ascii_digit() || s[p] == b'.') {
                p += 1;
            }
            if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
                let mut q = p + 1;
                if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                    q += 1;
                }
                if q < s.len() && s[q].is_ascii_digit() {
                    while q < s.len() && s[q].is_ascii_digit() {
                        q += 1;
                    }
                    p = q;
                }
            }
            let text = std::str::from_utf8(&s[start..p]).unwrap();
            let v: f64 = text
                .parse()
                .map_err(|_| err_at(s, start, format!("malformed number `{text}`")))?;
            self.pos = p;
            return Ok((Tok::Num(v), start));
        }
        Err(err_at(self.src, start, format!("unexpected character `{}`", c as char)))
    }
}

struct Parser<'a> {
    src: &'a [u8],
    toks: Vec<(Tok, usize)>,
    i: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> usize {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if t != Tok::End {
            self.i += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = match self.peek() {
            Tok::Minus => {
                self.bump();
                -&self.term()?
            }
            Tok::Plus => {
                self.bump();
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = &acc * &self.factor()?;
                }
                Tok::Slash => {
                    self.bump();
                    let at = self.pos();
                    let d = self.factor()?;
                    if d.degree() > 0 {
                        return Err(err_at(self.src, at, "division is only allowed by a constant"));
                    }
                    let c = d.coeff(&Monomial::one());
                    if c == 0.0 {
                        return Err(err_at(self.src, at, "division by zero"));
                    }
                    acc = acc.scale(1.0 / c);
                }
                Tok::Num(_) | Tok::Var(_) | Tok::LParen => {
                    acc = &acc * &self.factor()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                return Ok(-&self.factor()?);
            }
            Tok::Plus => {
                self.bump();
                return self.factor();
            }
            _ => {}
        }
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let at = self.pos();
            match self.bump() {
                Tok::Num(e) if e >= 0.0 && e.fract() == 0.0 && e <= 255.0 => Ok(base.pow(e as u32)),
                _ => Err(err_at(self.src, at, "exponent must be a nonnegative integer")),
            }
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Polynomial> {
        let at = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Polynomial::constant(v)),
            Tok::Var(v) => Ok(Polynomial::var(v)),
            Tok::LParen => {
                let e = self.expr()?;
                let close = self.pos();
                if self.bump() != Tok::RParen {
                    return Err(err_at(self.src, close, "expected `)`"));
                }
                Ok(e)
            }
            Tok::End => Err(err_at(self.src, at, "unexpected end of input")),
            t => Err(err_at(self.src, at, format!("unexpected token {t:?}"))),
        }
    }
}

/// Parse a polynomial in the variables `x1, x2, ...` and `u0, u1, ...`.
pub fn parse_polynomial(src: &str) -> Result<Polynomial> {
    let toks = Lexer::tokens(src)?;
    let mut p = Parser { src: src.as_bytes(), toks, i: 0 };
    let out = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(err_at(p.src, p.pos(), "trailing input"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_style_terms() {
        let p = parse_polynomial("-0.25 + 1 x1^2 u2").unwrap();
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.to_string(), "-0.25 + 1 x1^2 u2");
    }

    #[test]
    fn products_powers_and_division() {
        let a = parse_polynomial("(x1 - u1)^2 / 2").unwrap();
        let b = parse_polynomial("0.5 x1^2 - x1*u1 + 0.5*u1^2").unwrap();
        assert!(a.max_coeff_diff(&b) < 1e-15);
        let c = parse_polynomial("1/120 u1^5").unwrap();
        assert!((c.max_abs_coeff() - 1.0 / 120.0).abs() < 1e-18);
    }

    #[test]
    fn scientific_notation() {
        let p = parse_polynomial("1e4 - 2.5E-3 x1").unwrap();
        assert_eq!(p.max_abs_coeff(), 1e4);
    }

    #[test]
    fn error_positions() {
        match parse_polynomial("x1 +\n  y2") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(parse_polynomial("x1 / x2").is_err());
        assert!(parse_polynomial("(x1").is_err());
        assert!(parse_polynomial("x0").is_err());
        assert!(parse_polynomial("x1^1.5").is_err());
    }
}
