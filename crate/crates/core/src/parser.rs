//! Text format for phases: integer and rational literals, `x`, `y`, `+ - * ^`
//! and parentheses. Exponents are nonnegative integer literals.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::coeff::{Coefficient, Rational};
use crate::series::BiSeries;

const MAX_EXPONENT: u32 = 256;
const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub offset: usize,
    pub message: String,
    pub token: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.token.is_empty() {
            write!(f, "at byte {}: {}", self.offset, self.message)
        } else {
            write!(f, "at byte {} ('{}'): {}", self.offset, self.token, self.message)
        }
    }
}

impl std::error::Error for ParseDiagnostic {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    X,
    Y,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
    text: String,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &src[start..i];
                out.push(Token {
                    tok: Tok::Num(text.parse().expect("digits")),
                    offset: start,
                    text: text.to_string(),
                });
                continue;
            }
            b'x' => Tok::X,
            b'y' => Tok::Y,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseDiagnostic {
                    offset: start,
                    message: "unexpected character".into(),
                    token: ch.to_string(),
                });
            }
        };
        i += 1;
        out.push(Token { tok, offset: start, text: src[start..i].to_string() });
    }
    out.push(Token { tok: Tok::End, offset: src.len(), text: String::new() });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, t: &Token, msg: &str) -> ParseDiagnostic {
        ParseDiagnostic { offset: t.offset, message: msg.into(), token: t.text.clone() }
    }

    fn expr(&mut self) -> Result<BiSeries, ParseDiagnostic> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let t = self.peek().clone();
            return Err(self.err(&t, "expression nested too deeply"));
        }
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn term(&mut self) -> Result<BiSeries, ParseDiagnostic> {
        let mut acc = self.unary()?;
        while self.peek().tok == Tok::Star {
            self.bump();
            acc = acc.mul(&self.unary()?);
        }
        match self.peek().tok {
            Tok::X | Tok::Y | Tok::Num(_) | Tok::LParen => {
                let t = self.peek().clone();
                Err(self.err(&t, "implicit multiplication is not allowed; use '*'"))
            }
            _ => Ok(acc),
        }
    }

    fn unary(&mut self) -> Result<BiSeries, ParseDiagnostic> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            self.depth += 1;
            if self.depth > MAX_DEPTH {
                let t = self.peek().clone();
                return Err(self.err(&t, "expression nested too deeply"));
            }
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(inner.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<BiSeries, ParseDiagnostic> {
        let base = self.atom()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let e = self.exponent()?;
        Ok(base.pow(e))
    }

    // exponent := INT ('^' exponent)?, right-associative
    fn exponent(&mut self) -> Result<u32, ParseDiagnostic> {
        let t = self.bump();
        let n = match &t.tok {
            Tok::Num(n) => n.clone(),
            Tok::Minus => return Err(self.err(&t, "negative exponents are not allowed")),
            _ => return Err(self.err(&t, "exponent must be a nonnegative integer literal")),
        };
        if self.peek().tok == Tok::Slash {
            let s = self.peek().clone();
            return Err(self.err(&s, "fractional exponents are not allowed"));
        }
        let mut e = n;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let inner = self.exponent()?;
            e = num_traits::pow(e, inner as usize);
        }
        match e.to_u32() {
            Some(v) if v <= MAX_EXPONENT => Ok(v),
            _ => Err(self.err(&t, "exponent too large")),
        }
    }

    fn atom(&mut self) -> Result<BiSeries, ParseDiagnostic> {
        let t = self.bump();
        match &t.tok {
            Tok::Num(n) => {
                let mut value = Rational::from_integer(n.clone());
                if self.peek().tok == Tok::Slash {
                    self.bump();
                    let d = self.bump();
                    match &d.tok {
                        Tok::Num(den) if !den.is_zero() => {
                            value = Rational::new(n.clone(), den.clone());
                        }
                        Tok::Num(_) => return Err(self.err(&d, "zero denominator")),
                        _ => {
                            return Err(self.err(
                                &d,
                                "'/' only forms rational literals such as 3/2",
                            ))
                        }
                    }
                }
                Ok(BiSeries::constant(Coefficient::Exact(value)))
            }
            Tok::X => Ok(BiSeries::x()),
            Tok::Y => Ok(BiSeries::y()),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return Err(self.err(&close, "expected ')'"));
                }
                Ok(inner)
            }
            Tok::End => Err(self.err(&t, "unexpected end of input")),
            _ => Err(self.err(&t, "expected a number, x, y or '('")),
        }
    }
}

pub fn parse_phase(text: &str) -> Result<BiSeries, ParseDiagnostic> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, depth: 0 };
    let s = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        return Err(p.err(&t, "unexpected token"));
    }
    Ok(s)
}

pub fn print_phase(p: &BiSeries) -> String {
    p.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::int;

    #[test]
    fn figure_one_phase() {
        let s = parse_phase("x^5*y - x^3*y^2 + x^2*y^4").unwrap();
        let support: Vec<_> = s.support();
        assert_eq!(support, vec![(int(2), int(4)), (int(3), int(2)), (int(5), int(1))]);
    }

    #[test]
    fn binomial_square() {
        let s = parse_phase("(y - x)^2").unwrap();
        assert_eq!(s.to_string(), "y^2 - 2*x*y + x^2");
    }

    #[test]
    fn negative_exponent_points_at_exponent() {
        let e = parse_phase("x^-1").unwrap_err();
        assert_eq!(e.offset, 2);
        assert_eq!(e.token, "-");
    }

    #[test]
    fn rejections() {
        assert!(parse_phase("2x").is_err());
        assert!(parse_phase("x^(1/2)").is_err());
        assert!(parse_phase("x^1/2").is_err());
        assert!(parse_phase("x/y").is_err());
        assert!(parse_phase("").is_err());
        assert!(parse_phase("(x").is_err());
        assert!(parse_phase("x)").is_err());
        assert!(parse_phase("3/0").is_err());
        assert!(parse_phase("z").is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(parse_phase("-x^2").unwrap(), BiSeries::mono(-1, 2, 0));
        assert_eq!(parse_phase("x^2^3").unwrap(), BiSeries::mono(1, 8, 0));
        assert_eq!(parse_phase("2*-x").unwrap(), BiSeries::mono(-2, 1, 0));
        assert_eq!(parse_phase("1 - x - y").unwrap().to_string(), "1 - y - x");
        assert_eq!(parse_phase("3/2*x").unwrap().to_string(), "3/2*x");
    }

    #[test]
    fn print_examples() {
        assert_eq!(print_phase(&BiSeries::zero()), "0");
        assert_eq!(print_phase(&BiSeries::mono(1, 1, 1)), "x*y");
    }
}
