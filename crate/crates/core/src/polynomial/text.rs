//! Plain-text polynomial format.
//!
//! ```text
//! polynomial := "0" | term (("+" | "-") term)*
//! term       := ["-"] factor ("*" factor)*
//! factor     := number | "x" index ["^" power]
//! vector     := "[" polynomial ("," polynomial)* "]"
//! matrix     := "[" vector ("," vector)* "]"        (row-major)
//! ```
//!
//! Variables are named `x1 .. xn` (one-based). The printer writes every term
//! as `coeff*x1^a1*x2^a2` with the shortest decimal that round-trips the
//! coefficient, so `parse(print(p)) == p` exactly. The parser also accepts
//! implicit unit coefficients (`x1^2`, `-x2`) and repeated factors.

use super::{Exponent, PolyMatrix, Polynomial};
use crate::{Error, Result};

pub fn format_polynomial(p: &Polynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (e, c)) in p.terms().enumerate() {
        if i == 0 {
            if c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if c < 0.0 { " - " } else { " + " });
        }
        out.push_str(&format!("{:?}", c.abs()));
        if !e.is_constant() {
            out.push('*');
            out.push_str(&e.to_string());
        }
    }
    out
}

pub fn format_vector(v: &[Polynomial]) -> String {
    let items: Vec<String> = v.iter().map(format_polynomial).collect();
    format!("[{}]", items.join(", "))
}

pub fn format_matrix(m: &PolyMatrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|r| {
            let row: Vec<Polynomial> = (0..m.cols()).map(|c| m.entry(r, c)).collect();
            format_vector(&row)
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn parse_polynomial(s: &str, nvars: usize) -> Result<Polynomial> {
    let mut parser = Parser::new(s, nvars)?;
    let p = parser.polynomial()?;
    parser.finish()?;
    Ok(p)
}

pub fn parse_vector(s: &str, nvars: usize) -> Result<Vec<Polynomial>> {
    let mut parser = Parser::new(s, nvars)?;
    let v = parser.vector()?;
    parser.finish()?;
    Ok(v)
}

pub fn parse_matrix(s: &str, nvars: usize) -> Result<PolyMatrix> {
    let mut parser = Parser::new(s, nvars)?;
    parser.expect(&Token::Open)?;
    let mut rows = vec![parser.vector()?];
    while parser.peek() == Some(&Token::Comma) {
        parser.pos += 1;
        rows.push(parser.vector()?);
    }
    parser.expect(&Token::Close)?;
    parser.finish()?;
    PolyMatrix::from_entries(&rows)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    Open,
    Close,
    Comma,
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let bytes = s.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        match ch {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => push(&mut tokens, &mut i, Token::Plus),
            b'-' => push(&mut tokens, &mut i, Token::Minus),
            b'*' => push(&mut tokens, &mut i, Token::Star),
            b'^' => push(&mut tokens, &mut i, Token::Caret),
            b'[' => push(&mut tokens, &mut i, Token::Open),
            b']' => push(&mut tokens, &mut i, Token::Close),
            b',' => push(&mut tokens, &mut i, Token::Comma),
            b'x' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let idx: usize = s[start..j]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad variable name at byte {i}")))?;
                if idx == 0 {
                    return Err(Error::Parse("variables are numbered from x1".into()));
                }
                tokens.push(Token::Var(idx - 1));
                i = j;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    j += 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let v: f64 = s[start..j]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number {:?}", &s[start..j])))?;
                tokens.push(Token::Number(v));
                i = j;
            }
            _ => {
                return Err(Error::Parse(format!(
                    "unexpected character {:?} at byte {i}",
                    ch as char
                )))
            }
        }
    }
    Ok(tokens)
}

fn push(tokens: &mut Vec<Token>, i: &mut usize, t: Token) {
    tokens.push(t);
    *i += 1;
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    nvars: usize,
}

impl Parser {
    fn new(s: &str, nvars: usize) -> Result<Self> {
        Ok(Self {
            tokens: tokenize(s)?,
            pos: 0,
            nvars,
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: &Token) -> Result<()> {
        match self.next() {
            Some(ref got) if got == t => Ok(()),
            got => Err(Error::Parse(format!("expected {t:?}, found {got:?}"))),
        }
    }

    fn finish(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(Error::Parse(format!("trailing input starting at {t:?}"))),
        }
    }

    fn vector(&mut self) -> Result<Vec<Polynomial>> {
        self.expect(&Token::Open)?;
        let mut items = vec![self.polynomial()?];
        while self.peek() == Some(&Token::Comma) {
            self.pos += 1;
            items.push(self.polynomial()?);
        }
        self.expect(&Token::Close)?;
        Ok(items)
    }

    fn polynomial(&mut self) -> Result<Polynomial> {
        let mut p = Polynomial::zero(self.nvars);
        let mut sign = match self.peek() {
            Some(Token::Minus) => {
                self.pos += 1;
                -1.0
            }
            Some(Token::Plus) => {
                self.pos += 1;
                1.0
            }
            _ => 1.0,
        };
        loop {
            let (e, c) = self.term()?;
            p.add_term(e, sign * c);
            sign = match self.peek() {
                Some(Token::Plus) => 1.0,
                Some(Token::Minus) => -1.0,
                _ => break,
            };
            self.pos += 1;
        }
        Ok(p)
    }

    fn term(&mut self) -> Result<(Exponent, f64)> {
        let mut coeff = 1.0;
        let mut powers = vec![0u32; self.nvars];
        loop {
            match self.next() {
                Some(Token::Number(v)) => coeff *= v,
                Some(Token::Var(idx)) => {
                    if idx >= self.nvars {
                        return Err(Error::Parse(format!(
                            "variable x{} outside the {} declared variables",
                            idx + 1,
                            self.nvars
                        )));
                    }
                    let mut power = 1;
                    if self.peek() == Some(&Token::Caret) {
                        self.pos += 1;
                        match self.next() {
                            Some(Token::Number(v)) if v >= 0.0 && v.fract() == 0.0 => {
                                power = v as u32
                            }
                            t => return Err(Error::Parse(format!("bad exponent {t:?}"))),
                        }
                    }
                    powers[idx] += power;
                }
                t => return Err(Error::Parse(format!("expected a factor, found {t:?}"))),
            }
            if self.peek() == Some(&Token::Star) {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok((Exponent::new(powers), coeff))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::basis;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn prints_terms_in_basis_order() {
        let p = parse_polynomial("x2^2 - 1.5*x1 + 3", 2).unwrap();
        assert_eq!(format_polynomial(&p), "3.0 - 1.5*x1 + 1.0*x2^2");
    }

    #[test]
    fn zero_and_negative_leading_term() {
        assert_eq!(format_polynomial(&Polynomial::zero(2)), "0");
        assert!(parse_polynomial("0", 2).unwrap().is_zero());
        let p = parse_polynomial("-x1", 2).unwrap();
        assert_eq!(format_polynomial(&p), "-1.0*x1");
    }

    #[test]
    fn scientific_coefficients() {
        let p = parse_polynomial("1e-5*x1 - 2.5E+3*x1*x2", 2).unwrap();
        assert_eq!(p.coeff(&Exponent::new(vec![1, 0])), 1e-5);
        assert_eq!(p.coeff(&Exponent::new(vec![1, 1])), -2500.0);
    }

    #[test]
    fn rejects_unknown_variable() {
        assert!(parse_polynomial("x3", 2).is_err());
        assert!(parse_polynomial("x0", 2).is_err());
        assert!(parse_polynomial("2 *", 2).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let m = parse_matrix(
            "[[-1 + x1 - 1.5*x1^2 - 0.75*x2^2, 0.25 - x1^2 - 0.5*x2^2], [0, 0]]",
            2,
        )
        .unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert!(m.row_is_zero(1));
        let text = format_matrix(&m);
        assert_eq!(parse_matrix(&text, 2).unwrap(), m);
    }

    proptest! {
        #[test]
        fn polynomial_round_trip(coeffs in prop::collection::vec(
            prop_oneof![Just(0.0), -1e6f64..1e6, -1e-8f64..1e-8], 10)) {
            let b = basis(3, 2);
            let p = Polynomial::from_terms(3, b.iter().cloned().zip(coeffs));
            let text = format_polynomial(&p);
            prop_assert_eq!(parse_polynomial(&text, 3).unwrap(), p);
        }

        #[test]
        fn matrix_round_trip_random(vals in prop::collection::vec(-100.0f64..100.0, 12)) {
            let b = basis(2, 1);
            let coeffs: Vec<DMatrix<f64>> = vals.chunks(4)
                .map(|c| DMatrix::from_row_slice(2, 2, c)).collect();
            let m = PolyMatrix::from_coefficients(&b, &coeffs).unwrap();
            prop_assert_eq!(parse_matrix(&format_matrix(&m), 2).unwrap(), m);
        }
    }
}
